#pragma once

#include <stdexcept>
#include <string>

namespace afcmem {

// Invalid domain values, broken type invariants, malformed user input.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A process matrix outside the channel tolerances (non-CP, non-TP).
struct ChannelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// State/process estimation cannot proceed (all-zero counts, rank-deficient
// input set, projection failure).
struct ReconstructionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Storage-timing violations (control pulse after echo, negative spin time).
struct ScheduleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Schedule compilation failures: slot collisions, infeasible recall times,
// ops referencing unknown modes. Carries the offending source line when the
// schedule came from a file (-1 otherwise).
struct PlanError : std::runtime_error {
  explicit PlanError(const std::string& msg, int line_number = -1)
      : std::runtime_error(msg), line(line_number) {}
  int line;
};

// Text-format parse failures, with location in the message.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File system failures (missing file, unwritable output).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace afcmem
