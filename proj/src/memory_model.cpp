#include "afcmem/memory_model.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "afcmem/csv.hpp"
#include "afcmem/rng.hpp"

namespace afcmem {

namespace {
constexpr double kPi = 3.14159265358979323846;

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }
}  // namespace

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

void AfcComb::validate() const {
  if (delta_hz <= 0.0) throw ValidationError("AfcComb: delta must be positive");
  if (bandwidth_hz < delta_hz) {
    throw ValidationError("AfcComb: bandwidth must be at least one tooth spacing");
  }
  if (finesse <= 1.0) throw ValidationError("AfcComb: finesse must exceed 1");
  if (peak_od < 0.0 || background_od < 0.0) {
    throw ValidationError("AfcComb: optical depths must be nonnegative");
  }
}

int AfcComb::tooth_count() const {
  return static_cast<int>(std::floor(bandwidth_hz / delta_hz + 1e-9));
}

double AfcComb::tooth_area_od_hz() const {
  return tooth_count() * tooth_width_hz() * (peak_od - background_od);
}

void MemoryCalibration::validate() const {
  auto fraction = [](double v, const char* name) {
    if (v < 0.0 || v > 1.0) {
      throw ValidationError(std::string("MemoryCalibration: ") + name +
                            " must lie in [0, 1]");
    }
  };
  fraction(eta_sw, "eta_sw");
  fraction(eta_detect, "eta_detect");
  if (mu < 0.0) throw ValidationError("MemoryCalibration: mu must be nonnegative");
  if (noise_rate < 0.0) {
    throw ValidationError("MemoryCalibration: noise_rate must be nonnegative");
  }
  if (detection_window_us <= 0.0) {
    throw ValidationError("MemoryCalibration: detection window must be positive");
  }
}

void StorageTimeline::validate() const {
  const double echo_delay = t_echo_us - t_in_us;
  if (echo_delay <= 0.0) {
    throw ScheduleError("StorageTimeline: echo must follow absorption");
  }
  if (t_control_down_us <= t_in_us || t_control_down_us >= t_echo_us) {
    throw ScheduleError(
        "StorageTimeline: first control pulse must fall between absorption "
        "and echo emission");
  }
  if (t_control_up_us < t_control_down_us) {
    throw ScheduleError("StorageTimeline: control pulses out of order");
  }
  const double expected_out = t_in_us + echo_delay + spin_time_us();
  if (std::abs(t_out_us - expected_out) > 1e-9) {
    throw ScheduleError("StorageTimeline: retrieval time inconsistent with "
                        "echo delay plus spin-wave time");
  }
}

long long CountHistogram::window_sum(const TimeWindow& window) const {
  if (window.duration_us() <= 0.0) {
    throw ValidationError("CountHistogram: zero-length window");
  }
  if (window.start_us < t_start_us - 1e-9 ||
      window.end_us > t_end_us() + 1e-9) {
    throw ValidationError("CountHistogram: window outside histogram range");
  }
  long long sum = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double center = bin_start_us(i) + bin_width_us / 2.0;
    if (center >= window.start_us && center < window.end_us) sum += counts[i];
  }
  return sum;
}

void CountHistogram::add(const CountHistogram& other) {
  if (counts.size() != other.counts.size() ||
      std::abs(t_start_us - other.t_start_us) > 1e-9 ||
      std::abs(bin_width_us - other.bin_width_us) > 1e-12) {
    throw ValidationError("CountHistogram: bin layout mismatch");
  }
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  trials += other.trials;
}

void CountHistogram::write_csv(const std::string& path) const {
  csv::Table table;
  table.header = {"bin_start_us", "bin_end_us", "counts"};
  for (std::size_t i = 0; i < counts.size(); ++i) {
    table.rows.push_back({bin_start_us(i), bin_start_us(i + 1),
                          static_cast<double>(counts[i])});
  }
  csv::write(path, table);
}

// ---------------------------------------------------------------------------
// Spectral structure
// ---------------------------------------------------------------------------

int AbsorptionProfile::count_peaks(double threshold) const {
  int peaks = 0;
  bool inside = false;
  for (double value : od) {
    if (value >= threshold && !inside) {
      ++peaks;
      inside = true;
    } else if (value < threshold) {
      inside = false;
    }
  }
  return peaks;
}

namespace {

// Square-tooth comb evaluated pointwise.
double comb_od_at(const AfcComb& comb, double f_hz) {
  const double offset = f_hz - comb.center_offset_hz;
  if (std::abs(offset) > comb.bandwidth_hz / 2.0) return 0.0;
  const int n = comb.tooth_count();
  const double half_width = comb.tooth_width_hz() / 2.0;
  for (int k = 0; k < n; ++k) {
    const double center = (k - (n - 1) / 2.0) * comb.delta_hz;
    if (std::abs(offset - center) <= half_width) return comb.peak_od;
  }
  return comb.background_od;
}

}  // namespace

AbsorptionProfile build_spectral_structure(const PreparationParams& prep) {
  if (prep.pit_width_hz <= 0.0) {
    throw ValidationError("build_spectral_structure: pit width must be positive");
  }
  if (prep.combs.empty()) {
    throw ValidationError("build_spectral_structure: no comb features");
  }
  double min_delta = std::numeric_limits<double>::infinity();
  for (const auto& comb : prep.combs) {
    comb.validate();
    min_delta = std::min(min_delta, comb.delta_hz);
    const double lo = comb.center_offset_hz - comb.bandwidth_hz / 2.0;
    const double hi = comb.center_offset_hz + comb.bandwidth_hz / 2.0;
    if (lo < prep.pit_center_hz - prep.pit_width_hz / 2.0 ||
        hi > prep.pit_center_hz + prep.pit_width_hz / 2.0) {
      throw ValidationError(
          "build_spectral_structure: comb feature does not fit inside the "
          "transparent pit");
    }
  }
  if (prep.resolution_hz <= 0.0 || prep.resolution_hz > min_delta / 20.0) {
    throw ValidationError(
        "build_spectral_structure: sampling resolution must be at most "
        "delta/20");
  }

  const double margin = 2e6;
  const double f_lo = prep.pit_center_hz - prep.pit_width_hz / 2.0 - margin;
  const double f_hi = prep.pit_center_hz + prep.pit_width_hz / 2.0 + margin;
  const std::size_t samples =
      static_cast<std::size_t>(std::ceil((f_hi - f_lo) / prep.resolution_hz)) + 1;

  AbsorptionProfile profile;
  profile.f_start_hz = f_lo;
  profile.resolution_hz = prep.resolution_hz;
  profile.od.resize(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const double f = profile.frequency_hz(i);
    if (std::abs(f - prep.pit_center_hz) > prep.pit_width_hz / 2.0) {
      profile.od[i] = prep.outside_od;
      continue;
    }
    double od = 0.0;
    for (const auto& comb : prep.combs) od = std::max(od, comb_od_at(comb, f));
    profile.od[i] = od;
  }
  return profile;
}

// ---------------------------------------------------------------------------
// Echo response
// ---------------------------------------------------------------------------

double echo_efficiency(const AfcComb& comb, double at_time_us,
                       std::optional<double> calibration_override) {
  if (calibration_override) return *calibration_override;
  comb.validate();

  // Exact Fourier component of the square-tooth profile at delay t: the
  // background block over the full bandwidth plus the tooth excess, each an
  // analytic sinc, with the teeth carrying the Dirichlet comb factor.
  const double t_s = at_time_us * 1e-6;
  const int n = comb.tooth_count();
  const double w = comb.tooth_width_hz();
  const double excess = comb.peak_od - comb.background_od;

  std::complex<double> comb_factor(0.0, 0.0);
  for (int k = 0; k < n; ++k) {
    const double center = (k - (n - 1) / 2.0) * comb.delta_hz;
    comb_factor += std::polar(1.0, 2.0 * kPi * center * t_s);
  }
  const double tooth_weight = excess * w;
  const double background_weight = comb.background_od * comb.bandwidth_hz;
  const std::complex<double> response =
      tooth_weight * sinc(kPi * w * t_s) * comb_factor +
      background_weight * sinc(kPi * comb.bandwidth_hz * t_s);
  const double norm = tooth_weight * n + background_weight;
  if (norm <= 0.0) return 0.0;
  const double amplitude = std::abs(response) / norm;
  return amplitude * amplitude;
}

double find_echo_delay_us(const AfcComb& comb, double t_min_us, double t_max_us,
                          int steps) {
  if (steps < 2 || t_max_us <= t_min_us) {
    throw ValidationError("find_echo_delay_us: bad scan range");
  }
  double best_t = t_min_us;
  double best_value = -1.0;
  for (int i = 0; i <= steps; ++i) {
    const double t = t_min_us + (t_max_us - t_min_us) * i / steps;
    const double value = echo_efficiency(comb, t);
    if (value > best_value) {
      best_value = value;
      best_t = t;
    }
  }
  return best_t;
}

// ---------------------------------------------------------------------------
// Timing
// ---------------------------------------------------------------------------

StorageTimeline storage_timeline(double delta_hz, double t_spin_us,
                                 double t_in_us) {
  if (delta_hz <= 0.0) throw ScheduleError("storage_timeline: delta must be positive");
  if (t_spin_us < 0.0) {
    throw ScheduleError("storage_timeline: spin-wave storage time must be "
                        "nonnegative");
  }
  const double echo_delay_us = 1e6 / delta_hz;
  StorageTimeline timeline;
  timeline.t_in_us = t_in_us;
  timeline.t_echo_us = t_in_us + echo_delay_us;
  timeline.t_control_down_us = t_in_us + echo_delay_us / 2.0;
  timeline.t_control_up_us = timeline.t_control_down_us + t_spin_us;
  timeline.t_out_us = t_in_us + echo_delay_us + t_spin_us;
  timeline.validate();
  return timeline;
}

// ---------------------------------------------------------------------------
// Detection Monte Carlo
// ---------------------------------------------------------------------------

namespace {

CountHistogram empty_histogram(double t_end_us, long long trials,
                               double bin_width_us) {
  CountHistogram hist;
  hist.t_start_us = 0.0;
  hist.bin_width_us = bin_width_us;
  hist.trials = trials;
  const std::size_t bins =
      static_cast<std::size_t>(std::ceil(t_end_us / bin_width_us));
  hist.counts.assign(bins, 0);
  return hist;
}

// Poisson noise floor plus a pulse of the given total mean spread uniformly
// over [start, start + duration).
void fill_histogram(CountHistogram& hist, double noise_mean_per_window,
                    double window_us, double pulse_mean, double pulse_start_us,
                    double pulse_duration_us, Rng& rng) {
  const double noise_per_bin =
      noise_mean_per_window * hist.bin_width_us / window_us;
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    double mean = noise_per_bin;
    const double bin_lo = hist.bin_start_us(i);
    const double bin_hi = bin_lo + hist.bin_width_us;
    const double overlap =
        std::max(0.0, std::min(bin_hi, pulse_start_us + pulse_duration_us) -
                          std::max(bin_lo, pulse_start_us));
    if (overlap > 0.0) mean += pulse_mean * overlap / pulse_duration_us;
    hist.counts[i] += rng.next_poisson(mean);
  }
}

}  // namespace

CountHistogram simulate_detection(const MemoryCalibration& cal,
                                  const StorageTimeline& timeline,
                                  long long trials, std::uint64_t seed,
                                  double bin_width_us) {
  cal.validate();
  timeline.validate();
  if (trials < 1) throw ValidationError("simulate_detection: trials must be >= 1");

  const double t_end = timeline.t_out_us + 4.0 * cal.detection_window_us;
  CountHistogram hist = empty_histogram(t_end, trials, bin_width_us);
  Rng rng(derive_seed(seed, "detection"));
  const double signal_mean =
      static_cast<double>(trials) * cal.mu * cal.eta_sw * cal.eta_detect;
  fill_histogram(hist, static_cast<double>(trials) * cal.noise_rate,
                 cal.detection_window_us, signal_mean, timeline.t_out_us,
                 cal.detection_window_us, rng);
  return hist;
}

CountHistogram simulate_input_reference(const MemoryCalibration& cal,
                                        double t_in_us, double t_end_us,
                                        long long trials, std::uint64_t seed,
                                        double bin_width_us) {
  cal.validate();
  if (trials < 1) throw ValidationError("simulate_input_reference: trials must be >= 1");
  CountHistogram hist = empty_histogram(t_end_us, trials, bin_width_us);
  Rng rng(derive_seed(seed, "input-reference"));
  const double signal_mean =
      static_cast<double>(trials) * cal.mu * cal.eta_detect;
  fill_histogram(hist, static_cast<double>(trials) * cal.noise_rate,
                 cal.detection_window_us, signal_mean, t_in_us,
                 cal.detection_window_us, rng);
  return hist;
}

double snr(const CountHistogram& hist, const TimeWindow& signal_window,
           const TimeWindow& noise_window) {
  if (signal_window.duration_us() <= 0.0 || noise_window.duration_us() <= 0.0) {
    throw ValidationError("snr: zero-length window");
  }
  if (std::abs(signal_window.duration_us() - noise_window.duration_us()) >
      1e-9) {
    throw ValidationError("snr: windows must have equal duration");
  }
  const long long signal = hist.window_sum(signal_window);
  const long long noise = hist.window_sum(noise_window);
  if (noise == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(signal) / static_cast<double>(noise);
}

int temporal_capacity(const AfcComb& comb) {
  comb.validate();
  return comb.tooth_count();
}

// ---------------------------------------------------------------------------
// Calibration file
// ---------------------------------------------------------------------------

MemoryCalibration load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_calibration: cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("load_calibration: " + path + ": " + e.what());
  }
  if (!doc.is_object()) {
    throw ParseError("load_calibration: " + path + ": expected an object");
  }
  MemoryCalibration cal;
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_number()) {
      throw ParseError("load_calibration: " + path + ": field '" + key +
                       "' must be a number");
    }
    const double v = value.get<double>();
    if (key == "eta_sw") cal.eta_sw = v;
    else if (key == "mu") cal.mu = v;
    else if (key == "noise_rate") cal.noise_rate = v;
    else if (key == "detection_window_us") cal.detection_window_us = v;
    else if (key == "eta_detect") cal.eta_detect = v;
    else throw ParseError("load_calibration: " + path + ": unknown field '" + key + "'");
  }
  cal.validate();
  return cal;
}

}  // namespace afcmem
