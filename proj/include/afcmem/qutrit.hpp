#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>

#include "afcmem/errors.hpp"

// Exact linear algebra for qutrit states, the nine-operator expansion basis,
// chi-matrix channels and fidelities. Basis ordering is (|L>, |G>, |R>) in
// every vector and matrix; states are treated as rays (density matrices), so
// global phase never enters.

namespace afcmem {

using Complex = std::complex<double>;
using Matrix3 = Eigen::Matrix3cd;
using Vector3 = Eigen::Vector3cd;
using Matrix9 = Eigen::Matrix<Complex, 9, 9>;
using Vector9 = Eigen::Matrix<Complex, 9, 1>;

inline constexpr double kKetNormTol = 1e-12;
inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kTraceTol = 1e-12;
inline constexpr double kEigenvalueFloor = -1e-10;
inline constexpr double kChiHermitianTol = 1e-10;
inline constexpr double kChiEigenvalueFloor = -1e-8;
inline constexpr double kChiTraceTol = 1e-8;
inline constexpr double kChannelTpTol = 1e-6;

// Pure qutrit state. Construction checks normalization to kKetNormTol.
class QutritKet {
 public:
  explicit QutritKet(const Vector3& amplitudes);

  // Rescales an arbitrary nonzero vector to unit norm.
  static QutritKet normalized(const Vector3& amplitudes);

  const Vector3& amplitudes() const { return amp_; }

  // <this|other>
  Complex overlap(const QutritKet& other) const {
    return amp_.dot(other.amp_);
  }

 private:
  Vector3 amp_;
};

namespace kets {
QutritKet l();
QutritKet g();
QutritKet r();
// (|L> + |G> + |R>)/sqrt(3)
QutritKet psi1();
// (|L> + |G> - i|R>)/sqrt(3)
QutritKet psi2();
}  // namespace kets

// Hermitian, unit-trace, positive-semidefinite 3x3 matrix.
class DensityMatrix {
 public:
  // Validates Hermiticity (1e-12), trace (1e-12) and eigenvalues (>= -1e-10).
  static DensityMatrix from_matrix(const Matrix3& m);

  // Hermitizes, clamps negative eigenvalues to zero and renormalizes the
  // trace. Used to absorb the numerical dust of reconstruction pipelines.
  static DensityMatrix closest_valid(const Matrix3& m);

  static DensityMatrix maximally_mixed();

  const Matrix3& matrix() const { return m_; }
  Eigen::Vector3d eigenvalues() const;

 private:
  explicit DensityMatrix(const Matrix3& m) : m_(m) {}
  Matrix3 m_;
};

DensityMatrix ket_to_density(const QutritKet& psi);

// Uhlmann fidelity Tr(sqrt(sqrt(rho_out) rho_in sqrt(rho_out)))^2.
// Symmetric, in [0, 1], equals |<psi|phi>|^2 on pure states. Matrix square
// roots go through Hermitian eigendecompositions; eigenvalues above the
// -1e-10 floor are clamped to zero.
double state_fidelity(const DensityMatrix& rho_in, const DensityMatrix& rho_out);

// (1-p) rho + p I/3.
DensityMatrix depolarize(const DensityMatrix& rho, double p);

// The nine expansion operators. lambda_1 is the identity; lambda_2..lambda_8
// are the off-diagonal/diagonal Hermitian generators and lambda_9 =
// diag(1,1,-2)/sqrt(3). They are pairwise trace-orthogonal but carry unequal
// norms (Tr lambda_1^2 = 3, Tr lambda_i^2 = 2 otherwise), so expansion solves
// the 9x9 linear system instead of assuming an orthonormal basis.
class LambdaBasis {
 public:
  static const LambdaBasis& instance();

  // index 0..8 addresses lambda_1..lambda_9.
  const Matrix3& op(int index) const { return ops_.at(index); }
  double norm_squared(int index) const { return norms_sq_.at(index); }

  // Coefficients c with m = sum_i c_i lambda_i (always solvable: the nine
  // operators span all complex 3x3 matrices).
  Vector9 expand(const Matrix3& m) const;
  Matrix3 recombine(const Vector9& coefficients) const;

 private:
  LambdaBasis();
  std::array<Matrix3, 9> ops_;
  std::array<double, 9> norms_sq_;
  Eigen::PartialPivLU<Matrix9> solver_;
};

inline Vector9 lambda_expand(const Matrix3& m) {
  return LambdaBasis::instance().expand(m);
}
inline Matrix3 lambda_recombine(const Vector9& c) {
  return LambdaBasis::instance().recombine(c);
}

// sum_{mn} chi_{mn} lambda_n^dag lambda_m; equals the identity for a
// trace-preserving channel.
Matrix3 channel_tp_operator(const Matrix9& chi);

// Quantum channel rho -> sum_{mn} chi_{mn} lambda_m rho lambda_n^dag.
class ProcessMatrix {
 public:
  // Validates Hermiticity (1e-10), positivity (eigenvalues >= -1e-8) and
  // trace preservation (residual <= 1e-8).
  static ProcessMatrix from_matrix(const Matrix9& chi);

  static ProcessMatrix identity();
  static ProcessMatrix from_unitary(const Matrix3& u);
  // (1-p) identity + p fully-depolarizing, p in [0, 1].
  static ProcessMatrix depolarizing(double p);

  const Matrix9& chi() const { return chi_; }

 private:
  explicit ProcessMatrix(const Matrix9& chi) : chi_(chi) {}
  Matrix9 chi_;
};

// Applies the channel. Throws ChannelError if the trace-preservation
// residual exceeds 1e-6.
DensityMatrix apply_channel(const ProcessMatrix& chi, const DensityMatrix& rho);

// Overlap fidelity Tr(chi_target chi) / (Tr chi_target Tr chi), computed in
// the trace-orthonormalized operator basis; 1 iff chi matches the target
// channel, and for the identity target it reduces to the normalized weight on
// the identity component. Throws ValidationError for a non-unitary target.
double process_fidelity(const ProcessMatrix& chi, const Matrix3& target_unitary);

}  // namespace afcmem
