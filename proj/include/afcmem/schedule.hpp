#pragma once

#include <istream>
#include <string>
#include <vector>

#include "afcmem/mux.hpp"

// Declarative schedule text format: one input mode and one op per line.
//
//   f1t1 retime t2
//   f2t2 shift f1
//   f1t1 split t1 t2 0.5 0.0
//   f2t2 drop
//
// Mode tokens are f<i>t<j> (optionally s<k> for a spatial path). Split takes
// two target slots, the first readout ratio and the relative phase (the
// second ratio defaults to the complement). Any op may carry a trailing
// "merge" token to allow its output slot to be shared. '#' starts a comment.
// Unknown modes or ops are rejected with line-numbered errors.

namespace afcmem {

struct ScheduleFile {
  std::vector<PlannedOp> entries;

  std::vector<ModeId> input_modes() const;
};

ScheduleFile parse_schedule(std::istream& in, const std::string& origin = "<schedule>");
ScheduleFile parse_schedule_file(const std::string& path);

// Compiles the parsed schedule (inputs are the entry modes).
PulseTimeline plan_schedule(const ScheduleFile& schedule, const TimingParams& timing);

// Human-readable compilation summary for the validate verb: channel count,
// outputs and their retrieval slots.
std::string summarize_timeline(const PulseTimeline& timeline);

}  // namespace afcmem
