#pragma once

#include <cstdint>
#include <functional>
#include <algorithm>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "ubft/common/types.hpp"
#include "ubft/sim/config.hpp"
#include "ubft/sim/rng.hpp"
#include "ubft/sim/trace.hpp"

namespace ubft::sim {

class SimError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class Role : std::uint8_t { Replica, MemoryNode, Client };

enum class EventKind : std::uint8_t { Deliver, Timer, Crash, PartitionToggle };

using EventId = std::uint64_t;

struct SimEvent {
  Time fire_at = 0;
  Pid target = kNoPid;
  EventKind kind = EventKind::Timer;
  std::uint64_t channel = 0;
  Pid source = kNoPid;
  std::uint64_t token = 0;
  std::uint64_t payload_digest = 0;
  std::uint32_t size = 0;
  std::function<void()> action;
  std::uint64_t seq = 0;  // assigned by schedule()
};

struct RunSummary {
  std::uint64_t events = 0;
  std::uint64_t dropped = 0;
  Time final_time = 0;
  bool predicate_held = false;
  bool livelock = false;
  bool time_limit_hit = false;
  bool drained = false;
};

class Simulator {
 public:
  Simulator(SimConfig cfg, Tracer *tracer);

  Simulator(Simulator const &) = delete;
  Simulator &operator=(Simulator const &) = delete;

  SimConfig const &config() const { return cfg_; }
  Tracer &tracer() { return *tracer_; }
  Rng &rng() { return rng_; }

  Pid add_process(Role role);
  std::size_t process_count() const { return procs_.size(); }
  Role role(Pid p) const { return procs_.at(p).role; }
  bool alive(Pid p) const { return procs_.at(p).alive; }
  double clock_rate(Pid p) const { return procs_.at(p).rate; }

  Time now() const { return now_; }
  Time local_now(Pid p) const;
  // Global duration that spans at least `local` ticks of p's clock.
  Time to_global(Pid p, Time local) const;

  EventId schedule(SimEvent ev);
  // Timer on p's local clock; the action runs only if p is still alive.
  EventId timer(Pid p, Time local_delay, std::function<void()> action, std::uint64_t token = 0);
  EventId at(Time when, Pid target, std::function<void()> action);
  void cancel(EventId id) { cancelled_.insert(id); }

  void crash(Pid p);
  void crash_at(Time when, Pid p);

  RunSummary run_until(std::function<bool()> const &predicate, Time time_limit,
                       std::uint64_t event_budget);

  bool trace_events = true;

  std::uint64_t executed() const { return executed_; }
  std::uint64_t dropped() const { return dropped_; }

 private:
  struct Proc {
    Role role;
    bool alive = true;
    double rate = 1.0;
  };

  struct Later {
    bool operator()(SimEvent const &a, SimEvent const &b) const {
      if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
      return a.seq > b.seq;
    }
  };

  void emit(SimEvent const &ev);

  SimConfig cfg_;
  Tracer *tracer_;
  Rng rng_;
  Rng clock_rng_;
  std::vector<Proc> procs_;
  std::vector<SimEvent> queue_;  // binary heap ordered by Later
  std::unordered_set<EventId> cancelled_;
  Time now_ = 0;
  std::uint64_t next_seq_ = 1;
  std::uint64_t executed_ = 0;
  std::uint64_t dropped_ = 0;
};

}  // namespace ubft::sim
