#include "afcmem/qutrit.hpp"

#include <cmath>

namespace afcmem {

namespace {

const Complex kI(0.0, 1.0);

Vector9 vectorize(const Matrix3& m) {
  return Eigen::Map<const Vector9>(m.data());
}

}  // namespace

// ---------------------------------------------------------------------------
// QutritKet
// ---------------------------------------------------------------------------

QutritKet::QutritKet(const Vector3& amplitudes) : amp_(amplitudes) {
  const double norm_sq = amp_.squaredNorm();
  if (std::abs(norm_sq - 1.0) > kKetNormTol) {
    throw ValidationError("QutritKet: amplitudes not normalized (|psi|^2 = " +
                          std::to_string(norm_sq) + ")");
  }
}

QutritKet QutritKet::normalized(const Vector3& amplitudes) {
  const double norm = amplitudes.norm();
  if (norm == 0.0) throw ValidationError("QutritKet: zero vector");
  QutritKet ket{Vector3(amplitudes / norm)};
  return ket;
}

namespace kets {

QutritKet l() { return QutritKet(Vector3(1, 0, 0)); }
QutritKet g() { return QutritKet(Vector3(0, 1, 0)); }
QutritKet r() { return QutritKet(Vector3(0, 0, 1)); }

QutritKet psi1() {
  return QutritKet::normalized(Vector3(1, 1, 1));
}

QutritKet psi2() {
  return QutritKet::normalized(Vector3(1, 1, Complex(0, -1)));
}

}  // namespace kets

// ---------------------------------------------------------------------------
// DensityMatrix
// ---------------------------------------------------------------------------

DensityMatrix DensityMatrix::from_matrix(const Matrix3& m) {
  const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (herm > kHermitianTol) {
    throw ValidationError("DensityMatrix: not Hermitian (residual " +
                          std::to_string(herm) + ")");
  }
  const double trace_err = std::abs(m.trace() - Complex(1.0));
  if (trace_err > kTraceTol) {
    throw ValidationError("DensityMatrix: trace != 1 (error " +
                          std::to_string(trace_err) + ")");
  }
  Eigen::SelfAdjointEigenSolver<Matrix3> eig(m, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < kEigenvalueFloor) {
    throw ValidationError("DensityMatrix: negative eigenvalue " +
                          std::to_string(eig.eigenvalues().minCoeff()));
  }
  return DensityMatrix(Matrix3((m + m.adjoint()) / 2.0));
}

DensityMatrix DensityMatrix::closest_valid(const Matrix3& m) {
  Matrix3 h = (m + m.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix3> eig(h);
  Eigen::Vector3d vals = eig.eigenvalues().cwiseMax(0.0);
  const double total = vals.sum();
  if (total <= 0.0) {
    throw ValidationError("DensityMatrix: matrix has no positive part");
  }
  vals /= total;
  Matrix3 rebuilt = eig.eigenvectors() * vals.asDiagonal() *
                    eig.eigenvectors().adjoint();
  rebuilt = (rebuilt + rebuilt.adjoint()) / 2.0;
  rebuilt /= rebuilt.trace().real();
  return DensityMatrix(rebuilt);
}

DensityMatrix DensityMatrix::maximally_mixed() {
  return DensityMatrix(Matrix3(Matrix3::Identity() / 3.0));
}

Eigen::Vector3d DensityMatrix::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Matrix3> eig(m_, Eigen::EigenvaluesOnly);
  return eig.eigenvalues();
}

DensityMatrix ket_to_density(const QutritKet& psi) {
  const Vector3& a = psi.amplitudes();
  Matrix3 outer = a * a.adjoint();
  return DensityMatrix::from_matrix(outer);
}

double state_fidelity(const DensityMatrix& rho_in, const DensityMatrix& rho_out) {
  Eigen::SelfAdjointEigenSolver<Matrix3> eig_out(rho_out.matrix());
  Eigen::Vector3d vals = eig_out.eigenvalues().cwiseMax(0.0);
  Matrix3 sqrt_out = eig_out.eigenvectors() *
                     vals.cwiseSqrt().asDiagonal() *
                     eig_out.eigenvectors().adjoint();
  Matrix3 inner = sqrt_out * rho_in.matrix() * sqrt_out;
  inner = (inner + inner.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix3> eig_inner(inner, Eigen::EigenvaluesOnly);
  double root_sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    root_sum += std::sqrt(std::max(0.0, eig_inner.eigenvalues()[i]));
  }
  return root_sum * root_sum;
}

DensityMatrix depolarize(const DensityMatrix& rho, double p) {
  if (p < 0.0 || p > 1.0) {
    throw ValidationError("depolarize: p must lie in [0, 1]");
  }
  Matrix3 mixed = (1.0 - p) * rho.matrix() + p * Matrix3::Identity() / 3.0;
  return DensityMatrix::from_matrix(mixed);
}

// ---------------------------------------------------------------------------
// LambdaBasis
// ---------------------------------------------------------------------------

LambdaBasis::LambdaBasis() {
  const double s3 = 1.0 / std::sqrt(3.0);
  Matrix3 m;

  ops_[0] = Matrix3::Identity();

  m.setZero();
  m(0, 1) = 1;
  m(1, 0) = 1;
  ops_[1] = m;

  m.setZero();
  m(0, 1) = -kI;
  m(1, 0) = kI;
  ops_[2] = m;

  m.setZero();
  m(0, 0) = 1;
  m(1, 1) = -1;
  ops_[3] = m;

  m.setZero();
  m(0, 2) = 1;
  m(2, 0) = 1;
  ops_[4] = m;

  m.setZero();
  m(0, 2) = -kI;
  m(2, 0) = kI;
  ops_[5] = m;

  m.setZero();
  m(1, 2) = 1;
  m(2, 1) = 1;
  ops_[6] = m;

  m.setZero();
  m(1, 2) = -kI;
  m(2, 1) = kI;
  ops_[7] = m;

  m.setZero();
  m(0, 0) = s3;
  m(1, 1) = s3;
  m(2, 2) = -2.0 * s3;
  ops_[8] = m;

  Matrix9 columns;
  for (int i = 0; i < 9; ++i) {
    norms_sq_[i] = (ops_[i].adjoint() * ops_[i]).trace().real();
    columns.col(i) = vectorize(ops_[i]);
  }
  solver_.compute(columns);
}

const LambdaBasis& LambdaBasis::instance() {
  static const LambdaBasis basis;
  return basis;
}

Vector9 LambdaBasis::expand(const Matrix3& m) const {
  return solver_.solve(vectorize(m));
}

Matrix3 LambdaBasis::recombine(const Vector9& coefficients) const {
  Matrix3 result = Matrix3::Zero();
  for (int i = 0; i < 9; ++i) result += coefficients[i] * ops_[i];
  return result;
}

// ---------------------------------------------------------------------------
// ProcessMatrix
// ---------------------------------------------------------------------------

Matrix3 channel_tp_operator(const Matrix9& chi) {
  const LambdaBasis& basis = LambdaBasis::instance();
  Matrix3 sum = Matrix3::Zero();
  for (int m = 0; m < 9; ++m) {
    for (int n = 0; n < 9; ++n) {
      if (chi(m, n) == Complex(0.0)) continue;
      sum += chi(m, n) * (basis.op(n).adjoint() * basis.op(m));
    }
  }
  return sum;
}

ProcessMatrix ProcessMatrix::from_matrix(const Matrix9& chi) {
  const double herm = (chi - chi.adjoint()).cwiseAbs().maxCoeff();
  if (herm > kChiHermitianTol) {
    throw ChannelError("ProcessMatrix: not Hermitian (residual " +
                       std::to_string(herm) + ")");
  }
  Eigen::SelfAdjointEigenSolver<Matrix9> eig(chi, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < kChiEigenvalueFloor) {
    throw ChannelError("ProcessMatrix: negative eigenvalue " +
                       std::to_string(eig.eigenvalues().minCoeff()));
  }
  const double tp = (channel_tp_operator(chi) - Matrix3::Identity())
                        .cwiseAbs()
                        .maxCoeff();
  if (tp > kChiTraceTol) {
    throw ChannelError("ProcessMatrix: trace preservation violated (residual " +
                       std::to_string(tp) + ")");
  }
  return ProcessMatrix(Matrix9((chi + chi.adjoint()) / 2.0));
}

ProcessMatrix ProcessMatrix::identity() {
  Matrix9 chi = Matrix9::Zero();
  chi(0, 0) = 1.0;
  return ProcessMatrix(chi);
}

ProcessMatrix ProcessMatrix::from_unitary(const Matrix3& u) {
  const double unitarity =
      (u.adjoint() * u - Matrix3::Identity()).cwiseAbs().maxCoeff();
  if (unitarity > 1e-10) {
    throw ValidationError("ProcessMatrix: matrix is not unitary (residual " +
                          std::to_string(unitarity) + ")");
  }
  Vector9 c = lambda_expand(u);
  Matrix9 chi = c * c.adjoint();
  return from_matrix(chi);
}

ProcessMatrix ProcessMatrix::depolarizing(double p) {
  if (p < 0.0 || p > 1.0) {
    throw ValidationError("ProcessMatrix: depolarizing p must lie in [0, 1]");
  }
  // I/3 output = sum_i lambda_i rho lambda_i / Tr(lambda_i^2) scaled by 1/3.
  Matrix9 chi = Matrix9::Zero();
  const LambdaBasis& basis = LambdaBasis::instance();
  for (int i = 0; i < 9; ++i) {
    chi(i, i) = p / (3.0 * basis.norm_squared(i));
  }
  chi(0, 0) += 1.0 - p;
  return from_matrix(chi);
}

DensityMatrix apply_channel(const ProcessMatrix& chi, const DensityMatrix& rho) {
  const double tp = (channel_tp_operator(chi.chi()) - Matrix3::Identity())
                        .cwiseAbs()
                        .maxCoeff();
  if (tp > kChannelTpTol) {
    throw ChannelError("apply_channel: trace preservation violated (residual " +
                       std::to_string(tp) + ")");
  }
  const LambdaBasis& basis = LambdaBasis::instance();
  Matrix3 out = Matrix3::Zero();
  for (int m = 0; m < 9; ++m) {
    Matrix3 left = basis.op(m) * rho.matrix();
    for (int n = 0; n < 9; ++n) {
      const Complex w = chi.chi()(m, n);
      if (w == Complex(0.0)) continue;
      out += w * (left * basis.op(n).adjoint());
    }
  }
  return DensityMatrix::closest_valid(out);
}

double process_fidelity(const ProcessMatrix& chi, const Matrix3& target_unitary) {
  const double unitarity =
      (target_unitary.adjoint() * target_unitary - Matrix3::Identity())
          .cwiseAbs()
          .maxCoeff();
  if (unitarity > 1e-10) {
    throw ValidationError("process_fidelity: target is not unitary (residual " +
                          std::to_string(unitarity) + ")");
  }
  const LambdaBasis& basis = LambdaBasis::instance();

  // Rescale both chi matrices into the orthonormalized basis
  // lambda_i / sqrt(Tr lambda_i^2); the overlap formula assumes equal-norm
  // basis elements.
  Eigen::Matrix<double, 9, 1> scale;
  for (int i = 0; i < 9; ++i) scale[i] = std::sqrt(basis.norm_squared(i));

  Vector9 u = lambda_expand(target_unitary);
  Vector9 u_scaled = u.cwiseProduct(scale.cast<Complex>());
  Matrix9 chi_target = u_scaled * u_scaled.adjoint();

  Matrix9 chi_scaled = chi.chi();
  for (int m = 0; m < 9; ++m) {
    for (int n = 0; n < 9; ++n) {
      chi_scaled(m, n) *= scale[m] * scale[n];
    }
  }

  const double overlap = (chi_target * chi_scaled).trace().real();
  const double denom = chi_target.trace().real() * chi_scaled.trace().real();
  if (denom <= 0.0) {
    throw ValidationError("process_fidelity: chi has nonpositive trace");
  }
  return overlap / denom;
}

}  // namespace afcmem
