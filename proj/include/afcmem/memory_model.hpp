#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "afcmem/errors.hpp"

// Spectral comb structure, storage timing, per-mode efficiency and
// photon-count statistics of the spin-wave memory. Frequencies are in Hz,
// times in microseconds.

namespace afcmem {

// Periodic absorption structure: square teeth of width delta/finesse at
// spacing delta, depth peak_od over background_od, covering bandwidth_hz
// around center_offset_hz.
struct AfcComb {
  double delta_hz = 200e3;
  double bandwidth_hz = 2e6;
  double center_offset_hz = 0.0;
  double finesse = 10.0;
  double peak_od = 4.0;
  double background_od = 0.2;

  void validate() const;
  int tooth_count() const;                   // floor(bandwidth / delta)
  double tooth_width_hz() const { return delta_hz / finesse; }
  double echo_delay_us() const { return 1e6 / delta_hz; }
  // Integrated depth of the teeth above background (od * Hz); goes to zero
  // in the infinite-finesse limit.
  double tooth_area_od_hz() const;
};

struct MemoryCalibration {
  double eta_sw = 0.0551;          // spin-wave storage efficiency
  double mu = 1.12;                // mean photons per input pulse
  double noise_rate = 0.0;         // unconditional noise per detection window
  double detection_window_us = 1.0;
  double eta_detect = 1.0;         // end-to-end detection efficiency

  void validate() const;
};

// Absorption, echo and on-demand retrieval times for one storage cycle.
// t_echo - t_in = 1/delta; t_out = t_in + 1/delta + (t_control_up -
// t_control_down); the first control pulse precedes the echo emission.
struct StorageTimeline {
  double t_in_us = 0.0;
  double t_echo_us = 0.0;
  double t_control_down_us = 0.0;
  double t_control_up_us = 0.0;
  double t_out_us = 0.0;

  double spin_time_us() const { return t_control_up_us - t_control_down_us; }
  void validate() const;
};

struct TimeWindow {
  double start_us = 0.0;
  double end_us = 0.0;
  double duration_us() const { return end_us - start_us; }
};

struct CountHistogram {
  double t_start_us = 0.0;
  double bin_width_us = 0.1;
  std::vector<long long> counts;
  long long trials = 0;

  double bin_start_us(std::size_t i) const { return t_start_us + bin_width_us * i; }
  double t_end_us() const { return bin_start_us(counts.size()); }
  long long window_sum(const TimeWindow& window) const;
  // Bin-wise addition; bin layout must match.
  void add(const CountHistogram& other);
  void write_csv(const std::string& path) const;
};

// Preparation parameters for the hole-burnt spectral structure: a wide
// transparent pit with one or more combs inside it.
struct PreparationParams {
  double pit_width_hz = 16e6;
  double pit_center_hz = 0.0;
  double outside_od = 6.0;          // unburnt line depth outside the pit
  double resolution_hz = 10e3;      // sample spacing; must be <= delta/20
  std::vector<AfcComb> combs;
};

struct AbsorptionProfile {
  double f_start_hz = 0.0;
  double resolution_hz = 0.0;
  std::vector<double> od;

  double frequency_hz(std::size_t i) const { return f_start_hz + resolution_hz * i; }
  // Maximal runs of samples at >= threshold, for counting comb teeth.
  int count_peaks(double threshold) const;
};

// Samples optical depth versus detuning. Throws ValidationError when the
// resolution is coarser than delta/20 or a comb does not fit inside the pit.
AbsorptionProfile build_spectral_structure(const PreparationParams& prep);

// First-order echo response: |normalized Fourier component of the comb
// absorption at the given delay|^2. With a calibration override set, returns
// the configured efficiency regardless of the profile (the default for
// reproduction runs; measured tooth depths are not available to compute the
// efficiency from first principles).
double echo_efficiency(const AfcComb& comb, double at_time_us,
                       std::optional<double> calibration_override = {});

// Arg-max of echo_efficiency over a uniform delay scan.
double find_echo_delay_us(const AfcComb& comb, double t_min_us, double t_max_us,
                          int steps);

// Throws ScheduleError for invalid timing (delta <= 0, negative spin time).
StorageTimeline storage_timeline(double delta_hz, double t_spin_us,
                                 double t_in_us = 0.0);

// Echo counts Poisson(trials * mu * eta_sw * eta_detect) in the output
// window, homogeneous Poisson noise floor everywhere. Deterministic given
// the seed.
CountHistogram simulate_detection(const MemoryCalibration& cal,
                                  const StorageTimeline& timeline,
                                  long long trials, std::uint64_t seed,
                                  double bin_width_us = 0.1);

// Direct-detection reference trace of the input pulse (no storage): counts
// Poisson(trials * mu * eta_detect) in the input window plus the noise floor.
CountHistogram simulate_input_reference(const MemoryCalibration& cal,
                                        double t_in_us, double t_end_us,
                                        long long trials, std::uint64_t seed,
                                        double bin_width_us = 0.1);

// Ratio of window-summed counts; windows must have equal duration and lie
// within the histogram. Returns +infinity when the noise window is empty.
double snr(const CountHistogram& hist, const TimeWindow& signal_window,
           const TimeWindow& noise_window);

// floor(bandwidth / spacing): the number of modes the comb can hold.
int temporal_capacity(const AfcComb& comb);

// Calibration from a flat JSON object; unknown keys are rejected. Schema:
// {"eta_sw", "mu", "noise_rate", "detection_window_us", "eta_detect"}.
MemoryCalibration load_calibration(const std::string& path);

}  // namespace afcmem
