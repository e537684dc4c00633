#pragma once

#include <string>
#include <vector>

#include "ubft/harness/ctb_world.hpp"
#include "ubft/harness/world.hpp"

namespace ubft::harness {

// Nearest-rank percentile of an unsorted sample; 0 for an empty one.
Time percentile(std::vector<Time> values, double pct);

// Smallest percentile (1..100) whose latency exceeds `factor` times
// `baseline`, or 101 when no such percentile exists. Later onset = fewer slow
// requests. Without a baseline the sample's own median is used, which hides
// a slowdown that reaches the median itself.
int spike_onset(std::vector<Time> const &latencies, double factor, Time baseline);
int spike_onset(std::vector<Time> const &latencies, double factor);

// `key = value` lines with stable names; the header lists how each invariant
// is evaluated.
std::string format_report(Scenario const &sc, RunResult const &r);
std::string format_ctb_report(Scenario const &sc, CtbRunResult const &r);

struct SweepRow {
  std::string value;
  RunResult result;
};
std::string format_sweep(std::string const &param, std::vector<SweepRow> const &rows);

}  // namespace ubft::harness
