#include "afcmem/schedule.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace afcmem {

namespace {

[[noreturn]] void fail(const std::string& origin, int line, const std::string& what) {
  throw ParseError(origin + ":" + std::to_string(line) + ": " + what);
}

bool parse_index(const std::string& token, char prefix, int& value) {
  if (token.size() < 2 || token[0] != prefix) return false;
  for (std::size_t i = 1; i < token.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(token[i]))) return false;
  }
  value = std::stoi(token.substr(1));
  return true;
}

// f<i>t<j>[s<k>]
bool parse_mode(const std::string& token, ModeId& mode) {
  std::size_t pos = 0;
  auto read_part = [&](char prefix, int& value) {
    if (pos >= token.size() || token[pos] != prefix) return false;
    std::size_t start = ++pos;
    while (pos < token.size() && std::isdigit(static_cast<unsigned char>(token[pos]))) {
      ++pos;
    }
    if (pos == start) return false;
    value = std::stoi(token.substr(start, pos - start));
    return true;
  };
  mode = ModeId{};
  if (!read_part('f', mode.f)) return false;
  if (!read_part('t', mode.t)) return false;
  if (pos < token.size()) {
    if (!read_part('s', mode.s)) return false;
  }
  return pos == token.size();
}

double parse_number(const std::string& origin, int line, const std::string& token,
                    const char* what) {
  try {
    std::size_t used = 0;
    const double value = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return value;
  } catch (const std::exception&) {
    fail(origin, line, std::string("expected ") + what + ", got '" + token + "'");
  }
}

}  // namespace

std::vector<ModeId> ScheduleFile::input_modes() const {
  std::vector<ModeId> modes;
  modes.reserve(entries.size());
  for (const auto& entry : entries) modes.push_back(entry.mode);
  return modes;
}

ScheduleFile parse_schedule(std::istream& in, const std::string& origin) {
  ScheduleFile schedule;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::vector<std::string> parts;
    std::string token;
    while (tokens >> token) parts.push_back(token);
    if (parts.empty()) continue;

    ModeId mode;
    if (!parse_mode(parts[0], mode)) {
      fail(origin, line_number, "unknown mode '" + parts[0] + "'");
    }

    if (parts.size() < 2) fail(origin, line_number, "missing op");
    const std::string& op_name = parts[1];

    bool allow_merge = false;
    if (parts.back() == "merge") {
      allow_merge = true;
      parts.pop_back();
    }

    PlannedOp planned;
    planned.mode = mode;
    planned.allow_merge = allow_merge;
    planned.source_line = line_number;

    if (op_name == "retime") {
      int t_to = 0;
      if (parts.size() != 3 || !parse_index(parts[2], 't', t_to)) {
        fail(origin, line_number, "retime expects one target slot, e.g. 'retime t2'");
      }
      planned.op = Retime{t_to};
    } else if (op_name == "shift") {
      int f_to = 0;
      if (parts.size() != 3 || !parse_index(parts[2], 'f', f_to)) {
        fail(origin, line_number, "shift expects one target channel, e.g. 'shift f1'");
      }
      planned.op = FrequencyShift{f_to};
    } else if (op_name == "split") {
      if (parts.size() != 6) {
        fail(origin, line_number,
             "split expects two slots, a ratio and a phase, e.g. "
             "'split t1 t2 0.5 0.0'");
      }
      Split split;
      if (!parse_index(parts[2], 't', split.t_a) ||
          !parse_index(parts[3], 't', split.t_b)) {
        fail(origin, line_number, "split targets must be slots like t1 t2");
      }
      split.ratio_a = parse_number(origin, line_number, parts[4], "a ratio");
      split.ratio_b = 1.0 - split.ratio_a;
      split.phase = parse_number(origin, line_number, parts[5], "a phase");
      planned.op = split;
    } else if (op_name == "drop") {
      if (parts.size() != 2) fail(origin, line_number, "drop takes no arguments");
      planned.op = Drop{};
    } else {
      fail(origin, line_number, "unknown op '" + op_name + "'");
    }

    for (const auto& existing : schedule.entries) {
      if (existing.mode == mode) {
        fail(origin, line_number,
             "duplicate op for mode " + mode_label(mode) + " (first at line " +
                 std::to_string(existing.source_line) + ")");
      }
    }
    schedule.entries.push_back(std::move(planned));
  }
  return schedule;
}

ScheduleFile parse_schedule_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("schedule: cannot open " + path);
  return parse_schedule(in, path);
}

PulseTimeline plan_schedule(const ScheduleFile& schedule, const TimingParams& timing) {
  return plan_conversion(schedule.input_modes(), schedule.entries, timing);
}

std::string summarize_timeline(const PulseTimeline& timeline) {
  std::ostringstream out;
  out << timeline.channels().size() << " channel"
      << (timeline.channels().size() == 1 ? "" : "s") << ", "
      << timeline.output_count() << " output"
      << (timeline.output_count() == 1 ? "" : "s") << "\n";
  for (const auto& channel : timeline.channels()) {
    out << "  " << mode_label(channel.input) << ": absorb "
        << channel.absorb_us << " us, control " << channel.control_down_us
        << "/" << channel.control_up_us << " us";
    if (channel.shift_hz != 0.0) {
      out << ", shift " << channel.shift_hz / 1e6 << " MHz";
    }
    if (channel.gates.empty()) {
      out << ", dropped";
    }
    for (const auto& gate : channel.gates) {
      out << ", -> " << mode_label(gate.target) << " @ "
          << gate.window.start_us << " us";
      if (gate.ratio != 1.0) out << " (ratio " << gate.ratio << ")";
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace afcmem
