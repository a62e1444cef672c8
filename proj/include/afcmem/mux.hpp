#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "afcmem/memory_model.hpp"
#include "afcmem/qutrit.hpp"

// Multiplexed (f, t, s) mode addressing, multimode storage with crosstalk,
// and compilation/execution of real-time mode-conversion schedules.

namespace afcmem {

// Address of one multiplexed channel. f and t are 1-based grid indices.
// s = 0 means the spatial degree of freedom carries the qutrit payload;
// s >= 1 is a 1-based spatial path index (paths 1..3 of the three-path
// configuration inject |L>, |R>, |G> respectively).
struct ModeId {
  int f = 1;
  int t = 1;
  int s = 0;

  auto operator<=>(const ModeId&) const = default;
};

std::string mode_label(const ModeId& mode);

// OAM state injected on spatial path s (1 -> |L>, 2 -> |R>, 3 -> |G>).
QutritKet spatial_path_state(int s);

// Cartesian product of the index ranges, f-major then t then s; size is
// exactly nf*nt*ns. When ns == 1 the spatial index is the payload marker 0.
std::vector<ModeId> mode_grid(int nf, int nt, int ns);

struct ChannelPayload {
  ModeId mode;
  // Spatial qutrit state; empty for classical marker channels.
  std::optional<DensityMatrix> state;
  double mean_photons = 1.0;
};

// One conversion instruction per input channel.
struct Retime {
  int t_to = 1;
};
struct FrequencyShift {
  int f_to = 1;
};
struct Split {
  int t_a = 1;
  int t_b = 2;
  double ratio_a = 0.5;
  double ratio_b = 0.5;
  double phase = 0.0;  // relative phase between the two outputs
};
struct Drop {};
using ConversionOp = std::variant<Retime, FrequencyShift, Split, Drop>;

struct PlannedOp {
  ModeId mode;
  ConversionOp op;
  // Marks that this op's output slot may be shared with another channel.
  bool allow_merge = false;
  int source_line = -1;
};

struct TimingParams {
  double delta_hz = 200e3;
  double slot_pitch_us = 2.0;     // temporal slot spacing (config parameter)
  double gate_width_us = 1.0;     // must not exceed the slot pitch
  // First output slot; defaults to last absorption + echo delay so every
  // slot is reachable by a nonnegative spin-wave time.
  std::optional<double> output_base_us;
  int nf = 2;
  int nt = 2;
  double channel_spacing_hz = 80e6;

  double echo_delay_us() const { return 1e6 / delta_hz; }
  double absorb_time_us(int t_index) const {
    return (t_index - 1) * slot_pitch_us;
  }
};

struct GateWindow {
  TimeWindow window;
  ModeId target;
  double ratio = 1.0;   // readout fraction routed through this gate
  double phase = 0.0;
  bool merged = false;  // output shares its retrieval time or slot
  int source_line = -1;
};

struct ChannelSchedule {
  ModeId input;
  double absorb_us = 0.0;
  double control_down_us = 0.0;
  double control_up_us = 0.0;
  double shift_hz = 0.0;
  std::vector<GateWindow> gates;
  int source_line = -1;
};

// Validated conversion schedule. Construction via plan_conversion (or the
// checked constructor) guarantees:
//   - every control pulse precedes its channel's echo emission;
//   - output gate windows are pairwise non-overlapping unless merged;
//   - frequency shifts are channel-spacing multiples mapping grid onto grid.
class PulseTimeline {
 public:
  PulseTimeline(std::vector<ChannelSchedule> channels, TimingParams timing);

  const std::vector<ChannelSchedule>& channels() const { return channels_; }
  const TimingParams& timing() const { return timing_; }
  std::size_t output_count() const;

  // Re-checks every invariant from the raw data; throws PlanError.
  void validate() const;

 private:
  std::vector<ChannelSchedule> channels_;
  TimingParams timing_;
};

// Compiles ops into a pulse timeline. Inputs without an op pass through
// (identity retiming to their own slot). Fails loudly on unknown modes,
// duplicate ops, out-of-grid targets, infeasible recall times, and slot
// collisions (unless every colliding op allows merging).
PulseTimeline plan_conversion(const std::vector<ModeId>& inputs,
                              const std::vector<PlannedOp>& ops,
                              const TimingParams& timing);

// ---------------------------------------------------------------------------
// Multimode storage with crosstalk
// ---------------------------------------------------------------------------

// Leakage fraction per degree-of-freedom pair; the leakage between two modes
// is the product over the DOFs in which they differ.
struct CrosstalkLeak {
  double spectral = 0.0;
  double temporal = 0.0;
  double spatial = 0.0;
};

struct CrosstalkMatrix {
  std::vector<ModeId> modes;
  std::vector<std::vector<long long>> counts;  // [input][output]

  void write_csv(const std::string& path) const;
};

// Default per-comb spin-wave efficiencies (first and second comb).
inline const std::vector<double> kDefaultEtaSwPerComb = {0.0505, 0.0513};

// Stores every input in its own channel and measures the full input x output
// count matrix. Diagonal: Poisson(trials * mu * eta_sw(f) * eta_detect);
// off-diagonal: Poisson(trials * (noise_rate + leak * mu * eta_sw *
// eta_detect)).
CrosstalkMatrix run_multiplexed(
    const std::vector<ChannelPayload>& inputs, const MemoryCalibration& cal,
    const CrosstalkLeak& leak, long long trials, std::uint64_t seed,
    const std::vector<double>& eta_sw_per_f = kDefaultEtaSwPerComb);

// min over rows of diagonal / max off-diagonal. Rows whose off-diagonal
// maximum is zero contribute +infinity.
double crosstalk_min(const CrosstalkMatrix& m);

// ---------------------------------------------------------------------------
// Conversion execution
// ---------------------------------------------------------------------------

struct ExecutionCalibration {
  MemoryCalibration base;
  std::vector<double> eta_sw_per_f = kDefaultEtaSwPerComb;
  double conversion_efficiency = 1.0;  // gate/shifter throughput
  double depolarizing_p = 0.0;         // storage channel imperfection

  double eta_sw_for(int f) const;
};

struct SplitMeta {
  ModeId partner;
  double relative_phase = 0.0;
  double ratio = 1.0;
};

struct OutputChannel {
  ChannelPayload payload;  // mode = output slot; state after the channel
  ModeId source;
  long long counts = 0;
  double ratio = 1.0;
  std::optional<SplitMeta> split;
};

struct ExecutionResult {
  std::vector<OutputChannel> outputs;
  CountHistogram histogram;
};

// Runs the compiled timeline: every gate window yields an output channel
// whose state is the input state through the configured channel noise
// (identical when depolarizing_p = 0), with Poisson counts at the retrieval
// time and the homogeneous noise floor everywhere.
ExecutionResult execute_conversion(const std::vector<ChannelPayload>& payloads,
                                   const PulseTimeline& plan,
                                   const ExecutionCalibration& cal,
                                   long long trials, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Per-channel fidelity reporting
// ---------------------------------------------------------------------------

struct TomographyRunParams {
  long long exposure = 50000;
  double noise_rate = 0.0;
  int resamples = 200;
  std::uint64_t seed = 1;
};

struct ChannelFidelityRow {
  ModeId mode;
  ModeId source;
  double fidelity = 0.0;
  double std_error = 0.0;
  long long total_counts = 0;
};

// One row per output channel: tomography of the retrieved state against the
// source channel's input state, with bootstrap error bars. The per-window
// detection efficiency folds in the storage/conversion losses and the
// readout ratio, so low-count outputs carry visibly larger noise bias.
std::vector<ChannelFidelityRow> channel_fidelity_report(
    const std::vector<OutputChannel>& outputs,
    const std::vector<ChannelPayload>& inputs, const ExecutionCalibration& cal,
    const TomographyRunParams& params);

}  // namespace afcmem
