#include "afcmem/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "afcmem/csv.hpp"
#include "afcmem/rng.hpp"

namespace afcmem {

namespace {

constexpr double kProbabilityFloor = 1e-15;

Vector9 vectorize(const Matrix3& m) {
  return Eigen::Map<const Vector9>(m.data());
}

void require_informationally_complete(const std::array<Matrix3, 9>& projectors) {
  Matrix9 stacked;
  for (int i = 0; i < 9; ++i) stacked.row(i) = vectorize(projectors[i]).transpose();
  Eigen::JacobiSVD<Matrix9> svd(stacked);
  const double ratio =
      svd.singularValues().minCoeff() / svd.singularValues().maxCoeff();
  if (ratio < 1e-10) {
    throw ValidationError(
        "TomographySettings: projectors are linearly dependent; the set is "
        "not informationally complete");
  }
}

// Counts pooled per setting; multiple records for one setting add up.
struct PooledCounts {
  std::array<double, 9> counts{};
  double total = 0.0;
};

PooledCounts pool(const std::vector<CountRecord>& records) {
  PooledCounts pooled;
  std::array<bool, 9> seen{};
  for (const auto& record : records) {
    if (record.setting_index < 0 || record.setting_index >= 9) {
      throw ValidationError("CountRecord: setting_index out of range");
    }
    if (record.counts < 0) {
      throw ValidationError("CountRecord: negative counts");
    }
    pooled.counts[record.setting_index] += static_cast<double>(record.counts);
    seen[record.setting_index] = true;
  }
  for (int i = 0; i < 9; ++i) {
    if (!seen[i]) {
      throw ReconstructionError(
          "reconstruct_state: no record for setting " + std::to_string(i));
    }
  }
  pooled.total = std::accumulate(pooled.counts.begin(), pooled.counts.end(), 0.0);
  if (pooled.total <= 0.0) {
    throw ReconstructionError("reconstruct_state: all counts are zero");
  }
  return pooled;
}

// Shared transform per settings object: G = sum Pi_i, its +-1/2 powers and
// the transformed projector set (which does sum to the identity).
struct MleTransform {
  Matrix3 g_sqrt;
  Matrix3 g_inv_sqrt;
  std::array<Matrix3, 9> povm;
};

MleTransform make_transform(const TomographySettings& settings) {
  Matrix3 g = Matrix3::Zero();
  for (const auto& projector : settings.projectors) g += projector;
  Eigen::SelfAdjointEigenSolver<Matrix3> eig(g);
  if (eig.eigenvalues().minCoeff() <= 0.0) {
    throw ValidationError("TomographySettings: projector sum is singular");
  }
  Eigen::Vector3d root = eig.eigenvalues().cwiseSqrt();
  MleTransform t;
  t.g_sqrt = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().adjoint();
  t.g_inv_sqrt = eig.eigenvectors() * root.cwiseInverse().asDiagonal() *
                 eig.eigenvectors().adjoint();
  for (int i = 0; i < 9; ++i) {
    Matrix3 p = t.g_inv_sqrt * settings.projectors[i] * t.g_inv_sqrt;
    t.povm[i] = (p + p.adjoint()) / 2.0;
  }
  return t;
}

TomographyResult run_mle(const std::array<double, 9>& counts, double total,
                         const TomographySettings& settings,
                         const MleOptions& options) {
  const MleTransform transform = make_transform(settings);

  Matrix3 rho = options.start.value_or(Matrix3(Matrix3::Identity() / 3.0));
  Matrix3 sigma = transform.g_sqrt * rho * transform.g_sqrt;
  sigma /= sigma.trace().real();

  auto back_transform = [&](const Matrix3& s) {
    Matrix3 r = transform.g_inv_sqrt * s * transform.g_inv_sqrt;
    r = (r + r.adjoint()) / 2.0;
    return Matrix3(r / r.trace().real());
  };

  auto log_likelihood = [&](const Matrix3& s) {
    double ll = 0.0;
    for (int i = 0; i < 9; ++i) {
      if (counts[i] <= 0.0) continue;
      const double p = std::max(kProbabilityFloor,
                                (s * transform.povm[i]).trace().real());
      ll += counts[i] * std::log(p);
    }
    return ll;
  };

  TomographyResult result{DensityMatrix::maximally_mixed(),
                          log_likelihood(sigma),
                          std::numeric_limits<double>::quiet_NaN(),
                          false,
                          true,
                          0};
  Matrix3 rho_prev = back_transform(sigma);
  double ll_prev = result.log_likelihood;

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    Matrix3 r_op = Matrix3::Zero();
    for (int i = 0; i < 9; ++i) {
      if (counts[i] <= 0.0) continue;
      const double p = std::max(kProbabilityFloor,
                                (sigma * transform.povm[i]).trace().real());
      r_op += (counts[i] / (total * p)) * transform.povm[i];
    }
    Matrix3 next = r_op * sigma * r_op;
    next = (next + next.adjoint()) / 2.0;
    const double trace = next.trace().real();
    if (!(trace > 0.0)) {
      throw ReconstructionError("reconstruct_state: iteration collapsed");
    }
    sigma = next / trace;

    if (options.check_monotonic) {
      const double ll = log_likelihood(sigma);
      if (ll + 1e-9 * (1.0 + std::abs(ll)) < ll_prev) {
        result.monotone_likelihood = false;
      }
      ll_prev = ll;
    }

    Matrix3 rho_now = back_transform(sigma);
    const double delta = (rho_now - rho_prev).cwiseAbs().maxCoeff();
    rho_prev = rho_now;
    result.iterations = iter;
    if (delta < options.tolerance) {
      result.converged = true;
      break;
    }
  }

  result.rho_hat = DensityMatrix::closest_valid(rho_prev);
  result.log_likelihood = log_likelihood(sigma);
  return result;
}

}  // namespace

// ---------------------------------------------------------------------------
// Settings
// ---------------------------------------------------------------------------

TomographySettings TomographySettings::from_states(
    const std::array<QutritKet, 9>& states) {
  TomographySettings settings{states, {}};
  for (int i = 0; i < 9; ++i) {
    const Vector3& a = states[i].amplitudes();
    settings.projectors[i] = a * a.adjoint();
  }
  require_informationally_complete(settings.projectors);
  return settings;
}

const TomographySettings& TomographySettings::standard() {
  static const TomographySettings settings = [] {
    const Complex i(0.0, 1.0);
    const std::array<QutritKet, 9> states = {
        kets::l(),
        kets::g(),
        kets::r(),
        QutritKet::normalized(Vector3(1, 1, 0)),
        QutritKet::normalized(Vector3(0, 1, 1)),
        QutritKet::normalized(Vector3(i, 1, 0)),
        QutritKet::normalized(Vector3(0, 1, -i)),
        QutritKet::normalized(Vector3(1, 0, 1)),
        QutritKet::normalized(Vector3(1, 0, -i)),
    };
    return from_states(states);
  }();
  return settings;
}

// ---------------------------------------------------------------------------
// Count simulation
// ---------------------------------------------------------------------------

std::vector<CountRecord> simulate_counts(const DensityMatrix& rho,
                                         const TomographySettings& settings,
                                         long long exposure, double noise_rate,
                                         std::uint64_t seed, double eta_detect) {
  if (exposure < 1) throw ValidationError("simulate_counts: exposure must be >= 1");
  if (noise_rate < 0.0) throw ValidationError("simulate_counts: negative noise rate");
  if (eta_detect < 0.0 || eta_detect > 1.0) {
    throw ValidationError("simulate_counts: eta_detect must lie in [0, 1]");
  }
  std::vector<CountRecord> records;
  records.reserve(9);
  for (int i = 0; i < 9; ++i) {
    const double p =
        std::max(0.0, (rho.matrix() * settings.projectors[i]).trace().real());
    const double mean =
        static_cast<double>(exposure) * (p * eta_detect + noise_rate);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    records.push_back({i, rng.next_poisson(mean), exposure});
  }
  return records;
}

// ---------------------------------------------------------------------------
// State reconstruction
// ---------------------------------------------------------------------------

TomographyResult reconstruct_state(const std::vector<CountRecord>& records,
                                   const TomographySettings& settings,
                                   const MleOptions& options) {
  const PooledCounts pooled = pool(records);
  return run_mle(pooled.counts, pooled.total, settings, options);
}

TomographyResult reconstruct_state_from_frequencies(
    const std::array<double, 9>& weights, const TomographySettings& settings,
    const MleOptions& options) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ValidationError("reconstruct_state: negative weight");
    total += w;
  }
  if (total <= 0.0) {
    throw ReconstructionError("reconstruct_state: all weights are zero");
  }
  return run_mle(weights, total, settings, options);
}

// ---------------------------------------------------------------------------
// Process reconstruction
// ---------------------------------------------------------------------------

namespace {

// Hermitian 9x9 <-> real 81-vector (9 diagonal, 36 upper re, 36 upper im).
Eigen::VectorXd chi_to_real(const Matrix9& chi) {
  Eigen::VectorXd x(81);
  int k = 0;
  for (int i = 0; i < 9; ++i) x[k++] = chi(i, i).real();
  for (int i = 0; i < 9; ++i) {
    for (int j = i + 1; j < 9; ++j) x[k++] = chi(i, j).real();
  }
  for (int i = 0; i < 9; ++i) {
    for (int j = i + 1; j < 9; ++j) x[k++] = chi(i, j).imag();
  }
  return x;
}

Matrix9 real_to_chi(const Eigen::VectorXd& x) {
  Matrix9 chi = Matrix9::Zero();
  int k = 0;
  for (int i = 0; i < 9; ++i) chi(i, i) = x[k++];
  for (int i = 0; i < 9; ++i) {
    for (int j = i + 1; j < 9; ++j) {
      chi(i, j) += x[k];
      chi(j, i) += x[k];
      ++k;
    }
  }
  for (int i = 0; i < 9; ++i) {
    for (int j = i + 1; j < 9; ++j) {
      chi(i, j) += Complex(0.0, x[k]);
      chi(j, i) -= Complex(0.0, x[k]);
      ++k;
    }
  }
  return chi;
}

Eigen::VectorXd herm3_to_real(const Matrix3& m) {
  Eigen::VectorXd y(9);
  y << m(0, 0).real(), m(1, 1).real(), m(2, 2).real(), m(0, 1).real(),
      m(0, 2).real(), m(1, 2).real(), m(0, 1).imag(), m(0, 2).imag(),
      m(1, 2).imag();
  return y;
}

// Precomputed affine projection onto the trace-preservation subspace
// { chi Hermitian : sum chi_mn lambda_n^dag lambda_m = I }.
struct TpProjector {
  Eigen::MatrixXd t;           // 9 x 81
  Eigen::MatrixXd pseudo;      // 81 x 9, T^T (T T^T)^-1
  Eigen::VectorXd target;      // image of the identity constraint

  TpProjector() {
    t.resize(9, 81);
    for (int k = 0; k < 81; ++k) {
      Eigen::VectorXd unit = Eigen::VectorXd::Zero(81);
      unit[k] = 1.0;
      t.col(k) = herm3_to_real(channel_tp_operator(real_to_chi(unit)));
    }
    Eigen::MatrixXd gram = t * t.transpose();
    pseudo = t.transpose() * gram.inverse();
    target = herm3_to_real(Matrix3::Identity());
  }

  Eigen::VectorXd project(const Eigen::VectorXd& x) const {
    return x - pseudo * (t * x - target);
  }
};

Matrix9 project_psd(const Matrix9& chi, double* min_eigenvalue) {
  Eigen::SelfAdjointEigenSolver<Matrix9> eig(chi);
  *min_eigenvalue = eig.eigenvalues().minCoeff();
  Eigen::Matrix<double, 9, 1> clamped = eig.eigenvalues().cwiseMax(0.0);
  Matrix9 rebuilt = eig.eigenvectors() * clamped.asDiagonal() *
                    eig.eigenvectors().adjoint();
  return (rebuilt + rebuilt.adjoint()) / 2.0;
}

}  // namespace

ProcessMatrix reconstruct_process(const std::array<DensityMatrix, 9>& inputs,
                                  const std::array<DensityMatrix, 9>& outputs,
                                  int max_rounds, double residual_tol) {
  // The nine inputs must span operator space or the linear system is
  // underdetermined.
  {
    Matrix9 stacked;
    for (int j = 0; j < 9; ++j) {
      stacked.row(j) = vectorize(inputs[j].matrix()).transpose();
    }
    Eigen::JacobiSVD<Matrix9> svd(stacked);
    const double ratio =
        svd.singularValues().minCoeff() / svd.singularValues().maxCoeff();
    if (ratio < 1e-10) {
      throw ReconstructionError(
          "reconstruct_process: input states are linearly dependent");
    }
  }

  const LambdaBasis& basis = LambdaBasis::instance();
  Eigen::Matrix<Complex, 81, 81> a;
  Eigen::Matrix<Complex, 81, 1> b;
  for (int j = 0; j < 9; ++j) {
    for (int m = 0; m < 9; ++m) {
      Matrix3 left = basis.op(m) * inputs[j].matrix();
      for (int n = 0; n < 9; ++n) {
        Matrix3 term = left * basis.op(n).adjoint();
        a.block<9, 1>(9 * j, 9 * m + n) = vectorize(term);
      }
    }
    b.segment<9>(9 * j) = vectorize(outputs[j].matrix());
  }
  Eigen::Matrix<Complex, 81, 1> solution = a.colPivHouseholderQr().solve(b);

  Matrix9 chi;
  for (int m = 0; m < 9; ++m) {
    for (int n = 0; n < 9; ++n) chi(m, n) = solution[9 * m + n];
  }
  chi = (chi + chi.adjoint()) / 2.0;

  static const TpProjector tp;
  double min_eig = 0.0;
  double tp_residual = 0.0;
  for (int round = 0; round < max_rounds; ++round) {
    chi = project_psd(chi, &min_eig);
    chi = real_to_chi(tp.project(chi_to_real(chi)));
    tp_residual = (channel_tp_operator(chi) - Matrix3::Identity())
                      .cwiseAbs()
                      .maxCoeff();
    Eigen::SelfAdjointEigenSolver<Matrix9> eig(chi, Eigen::EigenvaluesOnly);
    min_eig = eig.eigenvalues().minCoeff();
    if (min_eig >= -residual_tol && tp_residual <= residual_tol) break;
  }
  if (min_eig < -residual_tol || tp_residual > residual_tol) {
    throw ReconstructionError(
        "reconstruct_process: CP/TP projection did not converge (min "
        "eigenvalue " +
        std::to_string(min_eig) + ", TP residual " +
        std::to_string(tp_residual) + ")");
  }
  return ProcessMatrix::from_matrix(chi);
}

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

namespace {

std::vector<CountRecord> resample_records(const std::vector<CountRecord>& records,
                                          std::uint64_t resample_seed) {
  std::vector<CountRecord> resampled;
  resampled.reserve(records.size());
  for (const auto& record : records) {
    // Keyed on the setting index, not the vector position, so record order
    // cannot change the result.
    Rng rng(derive_seed(resample_seed,
                        static_cast<std::uint64_t>(record.setting_index)));
    CountRecord draw = record;
    draw.counts = rng.next_poisson(static_cast<double>(record.counts));
    resampled.push_back(draw);
  }
  return resampled;
}

double standard_deviation(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0));
}

}  // namespace

double bootstrap_error(
    const std::vector<CountRecord>& records, const TomographySettings& settings,
    int resamples, std::uint64_t seed,
    const std::function<double(const DensityMatrix&)>& figure_of_merit) {
  if (resamples < 100) {
    throw ValidationError("bootstrap_error: need at least 100 resamples");
  }
  const TomographyResult point = reconstruct_state(records, settings);
  MleOptions warm;
  warm.start = point.rho_hat.matrix();

  std::vector<double> values;
  values.reserve(resamples);
  for (int r = 0; r < resamples; ++r) {
    const auto resampled =
        resample_records(records, derive_seed(seed, static_cast<std::uint64_t>(r)));
    const TomographyResult result = reconstruct_state(resampled, settings, warm);
    values.push_back(figure_of_merit(result.rho_hat));
  }
  return standard_deviation(values);
}

double bootstrap_state_fidelity_error(const std::vector<CountRecord>& records,
                                      const TomographySettings& settings,
                                      int resamples, std::uint64_t seed,
                                      const DensityMatrix& reference) {
  return bootstrap_error(records, settings, resamples, seed,
                         [&](const DensityMatrix& rho) {
                           return state_fidelity(reference, rho);
                         });
}

double bootstrap_process_fidelity_error(
    const std::array<std::vector<CountRecord>, 9>& input_records,
    const std::array<std::vector<CountRecord>, 9>& output_records,
    const TomographySettings& settings, int resamples, std::uint64_t seed,
    const Matrix3& target_unitary) {
  if (resamples < 100) {
    throw ValidationError("bootstrap_error: need at least 100 resamples");
  }

  std::array<MleOptions, 9> warm_in;
  std::array<MleOptions, 9> warm_out;
  for (int j = 0; j < 9; ++j) {
    warm_in[j].start =
        reconstruct_state(input_records[j], settings).rho_hat.matrix();
    warm_out[j].start =
        reconstruct_state(output_records[j], settings).rho_hat.matrix();
  }

  std::vector<double> values;
  values.reserve(resamples);
  for (int r = 0; r < resamples; ++r) {
    const std::uint64_t in_seed =
        derive_seed(derive_seed(seed, "bootstrap-in"), static_cast<std::uint64_t>(r));
    const std::uint64_t out_seed =
        derive_seed(derive_seed(seed, "bootstrap-out"), static_cast<std::uint64_t>(r));
    std::array<DensityMatrix, 9> in{
        DensityMatrix::maximally_mixed(), DensityMatrix::maximally_mixed(),
        DensityMatrix::maximally_mixed(), DensityMatrix::maximally_mixed(),
        DensityMatrix::maximally_mixed(), DensityMatrix::maximally_mixed(),
        DensityMatrix::maximally_mixed(), DensityMatrix::maximally_mixed(),
        DensityMatrix::maximally_mixed()};
    std::array<DensityMatrix, 9> out = in;
    for (int j = 0; j < 9; ++j) {
      in[j] = reconstruct_state(
                  resample_records(input_records[j],
                                   derive_seed(in_seed, static_cast<std::uint64_t>(j))),
                  settings, warm_in[j])
                  .rho_hat;
      out[j] = reconstruct_state(
                   resample_records(
                       output_records[j],
                       derive_seed(out_seed, static_cast<std::uint64_t>(j))),
                   settings, warm_out[j])
                   .rho_hat;
    }
    values.push_back(process_fidelity(reconstruct_process(in, out), target_unitary));
  }
  return standard_deviation(values);
}

bool classical_bound_check(double fidelity) {
  if (fidelity < 0.0 || fidelity > 1.0) {
    throw ValidationError("classical_bound_check: fidelity outside [0, 1]");
  }
  return fidelity > kClassicalFidelityBound;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

void write_count_records_csv(const std::string& path,
                             const std::vector<CountRecord>& records) {
  csv::Table table;
  table.header = {"setting_index", "counts", "exposure"};
  for (const auto& record : records) {
    table.rows.push_back({static_cast<double>(record.setting_index),
                          static_cast<double>(record.counts),
                          static_cast<double>(record.exposure)});
  }
  csv::write(path, table);
}

std::vector<CountRecord> read_count_records_csv(const std::string& path) {
  const csv::Table table = csv::read(path);
  if (table.header != std::vector<std::string>{"setting_index", "counts", "exposure"}) {
    throw ParseError("count records csv: unexpected header in " + path);
  }
  std::vector<CountRecord> records;
  for (const auto& row : table.rows) {
    if (row.size() != 3) {
      throw ParseError("count records csv: expected 3 columns in " + path);
    }
    records.push_back({static_cast<int>(row[0]),
                       static_cast<long long>(row[1]),
                       static_cast<long long>(row[2])});
  }
  return records;
}

}  // namespace afcmem
