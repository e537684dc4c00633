#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ubft/crypto/crypto.hpp"
#include "ubft/sim/fault.hpp"

namespace ubft::harness {

class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::size_t line, std::string const &msg);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct Workload {
  std::uint32_t clients = 1;
  std::uint64_t requests = 100;  // per client
  std::uint32_t op_size = 16;    // flip payload bytes
  std::uint32_t keys = 8;        // kv key space
  double put_ratio = 0.5;
  Time start = 0;
  // one extra client that submits a single request at this time
  std::optional<Time> probe_at;
};

enum class Mode : std::uint8_t { Smr, Ctb };

struct Scenario {
  std::string name;
  Mode mode = Mode::Smr;
  sim::SimConfig sim;
  std::uint32_t t = 8;
  std::uint64_t window = 100;
  crypto::Backend backend = crypto::Backend::Simulated;
  std::string app = "flip";
  bool echo_round = true;
  // zero means "derive from delta"
  Time progress_timeout = 0;
  Time slot_timeout = 0;
  Time echo_timeout = 0;
  Time ctb_slow_timeout = 0;
  Time client_resend = 0;
  bool adversarial_tearing = false;
  Workload workload;
  sim::FaultPlan faults;
  Time time_limit = 0;  // zero: derived from the workload
  std::uint64_t event_budget = 400'000'000;
  std::optional<bool> expect_liveness;
  Time settle = 0;  // extra simulated time after the workload; zero: 50 delta
  // Ctb mode: each member broadcasts this many messages, one every interval.
  std::uint64_t ctb_broadcasts = 6;
  Time ctb_interval = 0;

  Time effective_time_limit() const;
  Time effective_settle() const { return settle > 0 ? settle : 50 * sim.delta; }
};

// `key = value` lines; `#` starts a comment. Fault lines:
//   fault = <at T | decided N> <replica|memory|client> <index> <behavior> [k=v ...]
// Durations accept a `d` suffix meaning multiples of delta (e.g. `5d`).
Scenario parse_scenario(std::string_view text, std::string name = "");
Scenario load_scenario(std::string const &path);

// Sweepable parameters: t, window, delta, gst, seed.
void apply_param(Scenario &s, std::string_view key, std::string_view value);

}  // namespace ubft::harness
