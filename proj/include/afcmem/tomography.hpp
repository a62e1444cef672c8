#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "afcmem/qutrit.hpp"

// Projective photon-counting tomography: Born-rule count simulation,
// maximum-likelihood state reconstruction, least-squares + projected process
// reconstruction and bootstrap error bars. Each projector is measured in its
// own exposure window, so counts are independent Poisson variables rather
// than one multinomial draw.

namespace afcmem {

// Average memory fidelity achievable by any measure-and-resend strategy;
// quantum storage is certified only above this value.
inline constexpr double kClassicalFidelityBound = 0.831;

struct TomographySettings {
  std::array<QutritKet, 9> states;
  std::array<Matrix3, 9> projectors;

  // The nine-measurement set: the three basis states plus six two-state
  // superpositions |L>, |G>, |R>, (|L>+|G>)/s2, (|R>+|G>)/s2, (i|L>+|G>)/s2,
  // (-i|R>+|G>)/s2, (|L>+|R>)/s2, (|L>-i|R>)/s2.
  static const TomographySettings& standard();

  // Builds projectors from arbitrary states; throws ValidationError unless
  // the projectors are linearly independent as operators (informationally
  // complete).
  static TomographySettings from_states(const std::array<QutritKet, 9>& states);
};

struct CountRecord {
  int setting_index = 0;    // 0..8
  long long counts = 0;     // photon detections in this setting's window
  long long exposure = 0;   // trials in the window
};

struct TomographyResult {
  DensityMatrix rho_hat;
  double log_likelihood = 0.0;
  // One standard deviation of the fidelity under count statistics; NaN until
  // a bootstrap fills it in.
  double std_error_fidelity;
  bool converged = false;
  bool monotone_likelihood = true;
  int iterations = 0;
};

struct MleOptions {
  int max_iterations = 10000;
  double tolerance = 1e-10;          // max-entry change between iterates
  bool check_monotonic = false;      // track likelihood monotonicity
  std::optional<Matrix3> start;      // warm start (defaults to I/3)
};

// Born-rule sampling: counts_i ~ Poisson(exposure * (Tr(rho Pi_i) *
// eta_detect + noise_rate)). Deterministic given the seed.
std::vector<CountRecord> simulate_counts(const DensityMatrix& rho,
                                         const TomographySettings& settings,
                                         long long exposure, double noise_rate,
                                         std::uint64_t seed,
                                         double eta_detect = 1.0);

// Maximum-likelihood reconstruction via the iterated R rho R fixed point.
// The raw projectors do not sum to the identity, so the iteration runs on the
// G^(-1/2)-transformed projector set (G = sum_i Pi_i), which restores the
// fixed-point property; iterates are mapped back after each step. Stops when
// the max-entry change drops below the tolerance or at the iteration cap
// (the best iterate is then returned with converged = false).
TomographyResult reconstruct_state(const std::vector<CountRecord>& records,
                                   const TomographySettings& settings,
                                   const MleOptions& options = {});

// Infinite-exposure limit: reconstruct directly from exact per-setting
// probabilities (or any fixed nonnegative weights).
TomographyResult reconstruct_state_from_frequencies(
    const std::array<double, 9>& weights, const TomographySettings& settings,
    const MleOptions& options = {});

// Least-squares solve of output_j = sum_{mn} chi_{mn} lambda_m input_j
// lambda_n^dag over all nine state pairs, followed by alternating projections
// between the PSD cone and the trace-preservation subspace (at most
// max_rounds, stopping once both residuals are below residual_tol). Throws
// ReconstructionError when the inputs do not span operator space.
ProcessMatrix reconstruct_process(const std::array<DensityMatrix, 9>& inputs,
                                  const std::array<DensityMatrix, 9>& outputs,
                                  int max_rounds = 1000,
                                  double residual_tol = 1e-8);

// Standard deviation of an arbitrary figure of merit over Poisson-resampled
// count sets. Resample randomness is keyed on (resample index, setting
// index), so the result is independent of record ordering; resamples are
// independent and the reduction is order-free.
double bootstrap_error(
    const std::vector<CountRecord>& records, const TomographySettings& settings,
    int resamples, std::uint64_t seed,
    const std::function<double(const DensityMatrix&)>& figure_of_merit);

// Convenience: bootstrap std of state_fidelity(rho_hat*, reference).
double bootstrap_state_fidelity_error(const std::vector<CountRecord>& records,
                                      const TomographySettings& settings,
                                      int resamples, std::uint64_t seed,
                                      const DensityMatrix& reference);

// Bootstrap std of the process fidelity to a target unitary: resamples all
// eighteen count sets, reconstructs every state pair and the chi matrix per
// resample.
double bootstrap_process_fidelity_error(
    const std::array<std::vector<CountRecord>, 9>& input_records,
    const std::array<std::vector<CountRecord>, 9>& output_records,
    const TomographySettings& settings, int resamples, std::uint64_t seed,
    const Matrix3& target_unitary);

// Strictly above the measure-and-resend bound.
bool classical_bound_check(double fidelity);

// CSV with columns setting_index, counts, exposure.
void write_count_records_csv(const std::string& path,
                             const std::vector<CountRecord>& records);
std::vector<CountRecord> read_count_records_csv(const std::string& path);

}  // namespace afcmem
