#include "afcmem/mux.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "afcmem/csv.hpp"
#include "afcmem/rng.hpp"
#include "afcmem/tomography.hpp"

namespace afcmem {

// ---------------------------------------------------------------------------
// Modes
// ---------------------------------------------------------------------------

std::string mode_label(const ModeId& mode) {
  std::string label = "f" + std::to_string(mode.f) + "t" + std::to_string(mode.t);
  if (mode.s >= 1) label += "s" + std::to_string(mode.s);
  return label;
}

QutritKet spatial_path_state(int s) {
  switch (s) {
    case 1: return kets::l();
    case 2: return kets::r();
    case 3: return kets::g();
    default:
      throw ValidationError("spatial_path_state: no OAM state for path " +
                            std::to_string(s));
  }
}

std::vector<ModeId> mode_grid(int nf, int nt, int ns) {
  if (nf < 1 || nt < 1 || ns < 1) {
    throw ValidationError("mode_grid: all dimensions must be at least 1");
  }
  std::vector<ModeId> modes;
  modes.reserve(static_cast<std::size_t>(nf) * nt * ns);
  for (int f = 1; f <= nf; ++f) {
    for (int t = 1; t <= nt; ++t) {
      for (int s = 1; s <= ns; ++s) {
        modes.push_back({f, t, ns == 1 ? 0 : s});
      }
    }
  }
  return modes;
}

// ---------------------------------------------------------------------------
// Timeline validation
// ---------------------------------------------------------------------------

namespace {

bool windows_overlap(const TimeWindow& a, const TimeWindow& b) {
  return a.start_us < b.end_us - 1e-9 && b.start_us < a.end_us - 1e-9;
}

std::string line_suffix(int line) {
  return line >= 0 ? " (line " + std::to_string(line) + ")" : "";
}

}  // namespace

PulseTimeline::PulseTimeline(std::vector<ChannelSchedule> channels,
                             TimingParams timing)
    : channels_(std::move(channels)), timing_(timing) {
  validate();
}

std::size_t PulseTimeline::output_count() const {
  std::size_t n = 0;
  for (const auto& channel : channels_) n += channel.gates.size();
  return n;
}

void PulseTimeline::validate() const {
  if (timing_.delta_hz <= 0.0) {
    throw PlanError("timeline: comb spacing must be positive");
  }
  if (timing_.gate_width_us <= 0.0 ||
      timing_.gate_width_us > timing_.slot_pitch_us + 1e-9) {
    throw PlanError("timeline: gate width must be positive and at most the "
                    "slot pitch");
  }
  const double echo = timing_.echo_delay_us();

  std::set<ModeId> seen_inputs;
  for (const auto& channel : channels_) {
    if (!seen_inputs.insert(channel.input).second) {
      throw PlanError("timeline: duplicate channel " + mode_label(channel.input),
                      channel.source_line);
    }
    // Control pulses bracket the spin-wave interval and the first one must
    // land before the echo would emerge.
    if (channel.control_down_us <= channel.absorb_us) {
      throw PlanError("timeline: control pulse before absorption on " +
                          mode_label(channel.input) +
                          line_suffix(channel.source_line),
                      channel.source_line);
    }
    if (channel.control_down_us >= channel.absorb_us + echo) {
      throw PlanError("timeline: control pulse after echo emission on " +
                          mode_label(channel.input) +
                          line_suffix(channel.source_line),
                      channel.source_line);
    }
    if (channel.control_up_us < channel.control_down_us) {
      throw PlanError("timeline: control pulses out of order on " +
                          mode_label(channel.input) +
                          line_suffix(channel.source_line),
                      channel.source_line);
    }
    const double shift_steps = channel.shift_hz / timing_.channel_spacing_hz;
    if (std::abs(shift_steps - std::round(shift_steps)) > 1e-9) {
      throw PlanError("timeline: frequency shift is not a channel-spacing "
                      "multiple on " + mode_label(channel.input),
                      channel.source_line);
    }
    double ratio_total = 0.0;
    for (const auto& gate : channel.gates) {
      if (gate.target.f < 1 || gate.target.f > timing_.nf || gate.target.t < 1 ||
          gate.target.t > timing_.nt) {
        throw PlanError("timeline: gate target " + mode_label(gate.target) +
                            " outside the grid" + line_suffix(gate.source_line),
                        gate.source_line);
      }
      const double expected_shift =
          (gate.target.f - channel.input.f) * timing_.channel_spacing_hz;
      if (std::abs(expected_shift - channel.shift_hz) > 1e-6) {
        throw PlanError("timeline: gate frequency inconsistent with shifter "
                        "setting on " + mode_label(channel.input),
                        gate.source_line);
      }
      if (gate.ratio <= 0.0 || gate.ratio > 1.0) {
        throw PlanError("timeline: gate ratio outside (0, 1] on " +
                            mode_label(channel.input),
                        gate.source_line);
      }
      ratio_total += gate.ratio;
      if (gate.window.duration_us() <= 0.0) {
        throw PlanError("timeline: empty gate window on " +
                            mode_label(channel.input),
                        gate.source_line);
      }
      if (gate.window.start_us < channel.control_up_us - 1e-9) {
        throw PlanError("timeline: gate opens before the retrieval control "
                        "pulse on " + mode_label(channel.input),
                        gate.source_line);
      }
    }
    if (ratio_total > 1.0 + 1e-9) {
      throw PlanError("timeline: readout ratios exceed unity on " +
                          mode_label(channel.input),
                      channel.source_line);
    }
  }

  // Output slots must be unique and gate windows disjoint unless merged.
  struct GateRef {
    const ChannelSchedule* channel;
    const GateWindow* gate;
  };
  std::vector<GateRef> gates;
  for (const auto& channel : channels_) {
    for (const auto& gate : channel.gates) gates.push_back({&channel, &gate});
  }
  for (std::size_t i = 0; i < gates.size(); ++i) {
    for (std::size_t j = i + 1; j < gates.size(); ++j) {
      const auto& a = gates[i];
      const auto& b = gates[j];
      const bool same_slot = a.gate->target.f == b.gate->target.f &&
                             a.gate->target.t == b.gate->target.t;
      if (same_slot && !(a.gate->merged && b.gate->merged)) {
        throw PlanError(
            "timeline: collision, two outputs assigned to slot " +
                mode_label({a.gate->target.f, b.gate->target.t, 0}) +
                " without merge" + line_suffix(a.gate->source_line) +
                line_suffix(b.gate->source_line),
            b.gate->source_line);
      }
      if (windows_overlap(a.gate->window, b.gate->window) &&
          !(a.gate->merged && b.gate->merged)) {
        throw PlanError("timeline: overlapping gate windows without merge" +
                            line_suffix(a.gate->source_line) +
                            line_suffix(b.gate->source_line),
                        b.gate->source_line);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Planning
// ---------------------------------------------------------------------------

namespace {

struct PendingGate {
  int t_slot;
  int f_out;
  double ratio;
  double phase;
};

}  // namespace

PulseTimeline plan_conversion(const std::vector<ModeId>& inputs,
                              const std::vector<PlannedOp>& ops,
                              const TimingParams& timing) {
  if (inputs.empty()) throw PlanError("plan: no input modes");
  std::set<ModeId> input_set;
  for (const auto& mode : inputs) {
    if (mode.f < 1 || mode.f > timing.nf || mode.t < 1 || mode.t > timing.nt) {
      throw PlanError("plan: input mode " + mode_label(mode) +
                      " outside the grid");
    }
    if (!input_set.insert(mode).second) {
      throw PlanError("plan: duplicate input mode " + mode_label(mode));
    }
  }

  std::map<ModeId, PlannedOp> op_by_mode;
  for (const auto& planned : ops) {
    if (!input_set.contains(planned.mode)) {
      throw PlanError("plan: op references unknown mode " +
                          mode_label(planned.mode) +
                          line_suffix(planned.source_line),
                      planned.source_line);
    }
    if (!op_by_mode.emplace(planned.mode, planned).second) {
      throw PlanError("plan: more than one op for mode " +
                          mode_label(planned.mode) +
                          line_suffix(planned.source_line),
                      planned.source_line);
    }
  }

  const double echo = timing.echo_delay_us();
  double last_absorb = 0.0;
  for (const auto& mode : inputs) {
    last_absorb = std::max(last_absorb, timing.absorb_time_us(mode.t));
  }
  const double out_base = timing.output_base_us.value_or(last_absorb + echo);

  std::vector<ChannelSchedule> channels;
  for (const auto& mode : inputs) {
    const auto it = op_by_mode.find(mode);
    const PlannedOp planned =
        it != op_by_mode.end() ? it->second : PlannedOp{mode, Retime{mode.t}};
    const int line = planned.source_line;

    ChannelSchedule channel;
    channel.input = mode;
    channel.source_line = line;
    channel.absorb_us = timing.absorb_time_us(mode.t);
    channel.control_down_us = channel.absorb_us + echo / 2.0;
    channel.shift_hz = 0.0;

    std::vector<PendingGate> pending;
    if (const auto* retime = std::get_if<Retime>(&planned.op)) {
      pending.push_back({retime->t_to, mode.f, 1.0, 0.0});
    } else if (const auto* shift = std::get_if<FrequencyShift>(&planned.op)) {
      if (shift->f_to < 1 || shift->f_to > timing.nf) {
        throw PlanError("plan: shift target f" + std::to_string(shift->f_to) +
                            " outside the grid" + line_suffix(line),
                        line);
      }
      channel.shift_hz =
          (shift->f_to - mode.f) * timing.channel_spacing_hz;
      pending.push_back({mode.t, shift->f_to, 1.0, 0.0});
    } else if (const auto* split = std::get_if<Split>(&planned.op)) {
      if (split->t_a == split->t_b) {
        throw PlanError("plan: split targets must be distinct slots" +
                            line_suffix(line),
                        line);
      }
      if (split->ratio_a <= 0.0 || split->ratio_a >= 1.0 ||
          split->ratio_b <= 0.0 || split->ratio_b >= 1.0 ||
          split->ratio_a + split->ratio_b > 1.0 + 1e-12) {
        throw PlanError("plan: split ratios must lie in (0, 1) and sum to at "
                        "most 1" + line_suffix(line),
                        line);
      }
      pending.push_back({split->t_a, mode.f, split->ratio_a, 0.0});
      pending.push_back({split->t_b, mode.f, split->ratio_b, split->phase});
    }
    // Drop leaves no gates; the window stays closed.
    if (std::holds_alternative<Drop>(planned.op)) {
      channel.control_up_us = channel.control_down_us;
    }

    double earliest_out = std::numeric_limits<double>::infinity();
    for (const auto& gate : pending) {
      if (gate.t_slot < 1 || gate.t_slot > timing.nt) {
        throw PlanError("plan: target slot t" + std::to_string(gate.t_slot) +
                            " outside the grid" + line_suffix(line),
                        line);
      }
      const double t_out = out_base + (gate.t_slot - 1) * timing.slot_pitch_us;
      const double spin = t_out - channel.absorb_us - echo;
      if (spin < -1e-9) {
        throw PlanError("plan: requested recall at " + std::to_string(t_out) +
                            " us is earlier than control-pulse feasibility "
                            "for " + mode_label(mode) + line_suffix(line),
                        line);
      }
      earliest_out = std::min(earliest_out, t_out);
      GateWindow window;
      window.window = {t_out, t_out + timing.gate_width_us};
      window.target = {gate.f_out, gate.t_slot, mode.s};
      window.ratio = gate.ratio;
      window.phase = gate.phase;
      window.merged = planned.allow_merge;
      window.source_line = line;
      channel.gates.push_back(window);
    }
    if (!channel.gates.empty()) {
      channel.control_up_us = earliest_out - echo / 2.0;
    }
    channels.push_back(std::move(channel));
  }

  // Same output slot from two channels: require explicit merges. Identical
  // retrieval times on different frequencies are the multiplexer case and
  // merge automatically.
  struct SlotUse {
    int channel_index;
    int gate_index;
    int line;
  };
  std::map<std::pair<int, int>, std::vector<SlotUse>> by_slot;
  for (int c = 0; c < static_cast<int>(channels.size()); ++c) {
    for (int g = 0; g < static_cast<int>(channels[c].gates.size()); ++g) {
      const auto& gate = channels[c].gates[g];
      by_slot[{gate.target.f, gate.target.t}].push_back(
          {c, g, gate.source_line});
    }
  }
  for (const auto& [slot, uses] : by_slot) {
    if (uses.size() < 2) continue;
    bool all_merge = true;
    for (const auto& use : uses) {
      all_merge &= channels[use.channel_index].gates[use.gate_index].merged;
    }
    if (!all_merge) {
      std::string lines;
      for (const auto& use : uses) lines += line_suffix(use.line);
      throw PlanError("plan: collision, slot f" + std::to_string(slot.first) +
                          "t" + std::to_string(slot.second) +
                          " assigned to multiple outputs without merge" + lines,
                      uses.back().line);
    }
  }
  std::map<int, std::vector<SlotUse>> by_time_slot;
  for (int c = 0; c < static_cast<int>(channels.size()); ++c) {
    for (int g = 0; g < static_cast<int>(channels[c].gates.size()); ++g) {
      by_time_slot[channels[c].gates[g].target.t].push_back({c, g, -1});
    }
  }
  for (const auto& [slot, uses] : by_time_slot) {
    if (uses.size() < 2) continue;
    for (const auto& use : uses) {
      channels[use.channel_index].gates[use.gate_index].merged = true;
    }
  }

  return PulseTimeline(std::move(channels), timing);
}

// ---------------------------------------------------------------------------
// Crosstalk
// ---------------------------------------------------------------------------

void CrosstalkMatrix::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("crosstalk csv: cannot open for writing: " + path);
  out << "input_mode";
  for (const auto& mode : modes) out << ',' << mode_label(mode);
  out << '\n';
  for (std::size_t i = 0; i < modes.size(); ++i) {
    out << mode_label(modes[i]);
    for (long long value : counts[i]) out << ',' << value;
    out << '\n';
  }
  if (!out) throw IoError("crosstalk csv: write failed: " + path);
}

CrosstalkMatrix run_multiplexed(const std::vector<ChannelPayload>& inputs,
                                const MemoryCalibration& cal,
                                const CrosstalkLeak& leak, long long trials,
                                std::uint64_t seed,
                                const std::vector<double>& eta_sw_per_f) {
  cal.validate();
  if (trials < 1) throw ValidationError("run_multiplexed: trials must be >= 1");
  for (double value : {leak.spectral, leak.temporal, leak.spatial}) {
    if (value < 0.0 || value >= 1.0) {
      throw ValidationError("run_multiplexed: leak fractions must lie in [0, 1)");
    }
  }
  std::set<ModeId> seen;
  for (const auto& input : inputs) {
    if (!seen.insert(input.mode).second) {
      throw ValidationError("run_multiplexed: duplicate input mode " +
                            mode_label(input.mode));
    }
  }

  auto eta_sw = [&](int f) {
    if (f >= 1 && f <= static_cast<int>(eta_sw_per_f.size())) {
      return eta_sw_per_f[f - 1];
    }
    return cal.eta_sw;
  };

  const std::size_t n = inputs.size();
  CrosstalkMatrix matrix;
  matrix.modes.reserve(n);
  for (const auto& input : inputs) matrix.modes.push_back(input.mode);
  matrix.counts.assign(n, std::vector<long long>(n, 0));

  for (std::size_t i = 0; i < n; ++i) {
    const auto& in_mode = inputs[i].mode;
    const double signal = static_cast<double>(trials) * inputs[i].mean_photons *
                          eta_sw(in_mode.f) * cal.eta_detect;
    for (std::size_t j = 0; j < n; ++j) {
      Rng rng(derive_seed(derive_seed(seed, static_cast<std::uint64_t>(i)),
                          static_cast<std::uint64_t>(j)));
      double mean;
      if (i == j) {
        mean = signal;
      } else {
        const auto& out_mode = inputs[j].mode;
        double leak_fraction = 1.0;
        if (out_mode.f != in_mode.f) leak_fraction *= leak.spectral;
        if (out_mode.t != in_mode.t) leak_fraction *= leak.temporal;
        if (out_mode.s != in_mode.s) leak_fraction *= leak.spatial;
        mean = static_cast<double>(trials) * cal.noise_rate +
               signal * leak_fraction;
      }
      matrix.counts[i][j] = rng.next_poisson(mean);
    }
  }
  return matrix;
}

double crosstalk_min(const CrosstalkMatrix& m) {
  if (m.modes.empty()) throw ValidationError("crosstalk_min: empty matrix");
  double minimum = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m.modes.size(); ++i) {
    long long max_off = 0;
    for (std::size_t j = 0; j < m.modes.size(); ++j) {
      if (i != j) max_off = std::max(max_off, m.counts[i][j]);
    }
    const long long diagonal = m.counts[i][i];
    if (diagonal == 0) return 0.0;
    if (max_off == 0) continue;  // infinite row; cannot lower the minimum
    minimum = std::min(minimum,
                       static_cast<double>(diagonal) / static_cast<double>(max_off));
  }
  return minimum;
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

double ExecutionCalibration::eta_sw_for(int f) const {
  if (f >= 1 && f <= static_cast<int>(eta_sw_per_f.size())) {
    return eta_sw_per_f[f - 1];
  }
  return base.eta_sw;
}

ExecutionResult execute_conversion(const std::vector<ChannelPayload>& payloads,
                                   const PulseTimeline& plan,
                                   const ExecutionCalibration& cal,
                                   long long trials, std::uint64_t seed) {
  cal.base.validate();
  if (cal.conversion_efficiency < 0.0 || cal.conversion_efficiency > 1.0) {
    throw ValidationError("execute_conversion: conversion efficiency outside [0, 1]");
  }
  if (cal.depolarizing_p < 0.0 || cal.depolarizing_p > 1.0) {
    throw ValidationError("execute_conversion: depolarizing_p outside [0, 1]");
  }
  if (trials < 1) throw ValidationError("execute_conversion: trials must be >= 1");

  std::map<ModeId, const ChannelPayload*> payload_by_mode;
  for (const auto& payload : payloads) {
    if (!payload_by_mode.emplace(payload.mode, &payload).second) {
      throw ValidationError("execute_conversion: duplicate payload mode " +
                            mode_label(payload.mode));
    }
  }
  if (payload_by_mode.size() != plan.channels().size()) {
    throw ValidationError(
        "execute_conversion: payload modes do not match the planned channels");
  }
  for (const auto& channel : plan.channels()) {
    if (!payload_by_mode.contains(channel.input)) {
      throw ValidationError("execute_conversion: no payload for planned mode " +
                            mode_label(channel.input));
    }
  }

  double t_end = 0.0;
  for (const auto& channel : plan.channels()) {
    for (const auto& gate : channel.gates) {
      t_end = std::max(t_end, gate.window.end_us);
    }
  }
  t_end += 3.0 * cal.base.detection_window_us;

  ExecutionResult result;
  result.histogram.t_start_us = 0.0;
  result.histogram.bin_width_us = 0.1;
  result.histogram.trials = trials;
  result.histogram.counts.assign(
      static_cast<std::size_t>(std::ceil(t_end / 0.1)), 0);

  // Homogeneous noise floor.
  {
    Rng rng(derive_seed(seed, "noise-floor"));
    const double noise_per_bin = static_cast<double>(trials) *
                                 cal.base.noise_rate *
                                 result.histogram.bin_width_us /
                                 cal.base.detection_window_us;
    for (auto& bin : result.histogram.counts) {
      bin += rng.next_poisson(noise_per_bin);
    }
  }

  for (const auto& channel : plan.channels()) {
    const ChannelPayload& input = *payload_by_mode.at(channel.input);
    const double efficiency = cal.eta_sw_for(channel.input.f) *
                              cal.base.eta_detect * cal.conversion_efficiency;
    for (std::size_t g = 0; g < channel.gates.size(); ++g) {
      const GateWindow& gate = channel.gates[g];
      Rng rng(derive_seed(seed, mode_label(channel.input) + ">" +
                                    mode_label(gate.target) + "#" +
                                    std::to_string(g)));
      const double mean =
          static_cast<double>(trials) * input.mean_photons * gate.ratio * efficiency;

      OutputChannel out;
      out.source = channel.input;
      out.ratio = gate.ratio;
      out.payload.mode = gate.target;
      out.payload.state =
          input.state ? std::optional<DensityMatrix>(
                            depolarize(*input.state, cal.depolarizing_p))
                      : std::nullopt;

      // Spread the retrieval over the bins covered by the gate window.
      long long total = 0;
      const auto& hist = result.histogram;
      for (std::size_t b = 0; b < hist.counts.size(); ++b) {
        const double lo = hist.bin_start_us(b);
        const double hi = lo + hist.bin_width_us;
        const double overlap = std::max(
            0.0, std::min(hi, gate.window.end_us) -
                     std::max(lo, gate.window.start_us));
        if (overlap <= 0.0) continue;
        const long long draw =
            rng.next_poisson(mean * overlap / gate.window.duration_us());
        result.histogram.counts[b] += draw;
        total += draw;
      }
      out.counts = total;
      out.payload.mean_photons =
          cal.base.eta_detect > 0.0
              ? static_cast<double>(total) /
                    (static_cast<double>(trials) * cal.base.eta_detect)
              : 0.0;

      // Split outputs reference each other and carry the relative phase.
      if (channel.gates.size() == 2) {
        const GateWindow& other = channel.gates[1 - g];
        out.split = SplitMeta{other.target, channel.gates[1].phase, gate.ratio};
      }
      result.outputs.push_back(std::move(out));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Fidelity report
// ---------------------------------------------------------------------------

std::vector<ChannelFidelityRow> channel_fidelity_report(
    const std::vector<OutputChannel>& outputs,
    const std::vector<ChannelPayload>& inputs, const ExecutionCalibration& cal,
    const TomographyRunParams& params) {
  if (outputs.empty()) {
    throw ValidationError("channel_fidelity_report: no output channels");
  }
  std::map<ModeId, const ChannelPayload*> input_by_mode;
  for (const auto& input : inputs) input_by_mode[input.mode] = &input;

  const TomographySettings& settings = TomographySettings::standard();
  std::vector<ChannelFidelityRow> rows;
  for (const auto& output : outputs) {
    const auto it = input_by_mode.find(output.source);
    if (it == input_by_mode.end() || !it->second->state) {
      throw ValidationError("channel_fidelity_report: missing input state for " +
                            mode_label(output.source));
    }
    if (!output.payload.state) {
      throw ValidationError("channel_fidelity_report: missing counts/state on " +
                            mode_label(output.payload.mode));
    }
    const DensityMatrix& reference = *it->second->state;
    const double eta_window = cal.eta_sw_for(output.source.f) *
                              cal.base.eta_detect * cal.conversion_efficiency *
                              output.ratio;
    const std::uint64_t channel_seed =
        derive_seed(params.seed, mode_label(output.payload.mode) + "<" +
                                     mode_label(output.source));
    const auto records = simulate_counts(
        *output.payload.state, settings, params.exposure, params.noise_rate,
        channel_seed, eta_window * it->second->mean_photons);

    ChannelFidelityRow row;
    row.mode = output.payload.mode;
    row.source = output.source;
    for (const auto& record : records) row.total_counts += record.counts;
    const TomographyResult result = reconstruct_state(records, settings);
    row.fidelity = state_fidelity(reference, result.rho_hat);
    row.std_error = bootstrap_state_fidelity_error(
        records, settings, params.resamples, derive_seed(channel_seed, "boot"),
        reference);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace afcmem
