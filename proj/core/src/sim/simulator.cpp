#include "ubft/sim/simulator.hpp"

#include <cmath>

#include <fmt/format.h>

namespace ubft::sim {

void SimConfig::validate() const {
  if (n_replicas != 2 * f + 1) {
    throw ConfigError(fmt::format("n_replicas ({}) must equal 2f+1 with f={}", n_replicas, f));
  }
  if (n_mem != 2 * f_m + 1) {
    throw ConfigError(fmt::format("n_mem ({}) must equal 2f_m+1 with f_m={}", n_mem, f_m));
  }
  if (gst < 0) throw ConfigError("gst must be >= 0");
  if (delta <= 0) throw ConfigError("delta must be > 0");
  if (!(drift_bound >= 1.0)) throw ConfigError("drift_bound must be >= 1");
  if (pre_gst_cap_factor < 0) throw ConfigError("pre_gst_cap_factor must be >= 0");
  if (mem_delay_divisor < 1) throw ConfigError("mem_delay_divisor must be >= 1");
}

Simulator::Simulator(SimConfig cfg, Tracer *tracer)
    : cfg_{cfg}, tracer_{tracer}, rng_{cfg.seed}, clock_rng_{cfg.seed ^ 0xc10c4ULL} {
  cfg_.validate();
  if (tracer_ == nullptr) throw SimError("simulator needs a tracer");
}

Pid Simulator::add_process(Role role) {
  Proc p{role};
  if (cfg_.drift_bound > 1.0) {
    double lo = 1.0 / cfg_.drift_bound;
    p.rate = lo + (cfg_.drift_bound - lo) * clock_rng_.unit();
  }
  procs_.push_back(p);
  return static_cast<Pid>(procs_.size() - 1);
}

Time Simulator::local_now(Pid p) const {
  auto rate = procs_.at(p).rate;
  if (rate == 1.0) return now_;
  return static_cast<Time>(std::floor(static_cast<double>(now_) * rate));
}

Time Simulator::to_global(Pid p, Time local) const {
  auto rate = procs_.at(p).rate;
  if (rate == 1.0) return local;
  return static_cast<Time>(std::ceil(static_cast<double>(local) / rate));
}

EventId Simulator::schedule(SimEvent ev) {
  if (ev.fire_at < now_) {
    throw SimError(fmt::format("event scheduled in the past ({} < {})", ev.fire_at, now_));
  }
  ev.seq = next_seq_++;
  auto id = ev.seq;
  queue_.push_back(std::move(ev));
  std::push_heap(queue_.begin(), queue_.end(), Later{});
  return id;
}

EventId Simulator::timer(Pid p, Time local_delay, std::function<void()> action,
                         std::uint64_t token) {
  SimEvent ev;
  ev.fire_at = now_ + to_global(p, std::max<Time>(0, local_delay));
  ev.target = p;
  ev.kind = EventKind::Timer;
  ev.token = token;
  ev.action = std::move(action);
  return schedule(std::move(ev));
}

EventId Simulator::at(Time when, Pid target, std::function<void()> action) {
  SimEvent ev;
  ev.fire_at = when;
  ev.target = target;
  ev.kind = EventKind::Timer;
  ev.action = std::move(action);
  return schedule(std::move(ev));
}

void Simulator::crash(Pid p) {
  auto &proc = procs_.at(p);
  if (!proc.alive) return;
  proc.alive = false;
  tracer_->emit(Record{now_, p, RecordKind::SimCrash, {}, 0});
}

void Simulator::crash_at(Time when, Pid p) {
  SimEvent ev;
  ev.fire_at = when;
  ev.target = p;
  ev.kind = EventKind::Crash;
  schedule(std::move(ev));
}

void Simulator::emit(SimEvent const &ev) {
  if (!trace_events) return;
  Record r{ev.fire_at, ev.target, RecordKind::SimTimer, {}, ev.payload_digest};
  switch (ev.kind) {
    case EventKind::Deliver:
      r.kind = RecordKind::SimDeliver;
      r.f = {static_cast<std::int64_t>(ev.source), static_cast<std::int64_t>(ev.channel),
             static_cast<std::int64_t>(ev.size), 0};
      break;
    case EventKind::Timer:
      r.f[0] = static_cast<std::int64_t>(ev.token);
      break;
    case EventKind::PartitionToggle:
      r.kind = RecordKind::SimPartition;
      r.f[0] = static_cast<std::int64_t>(ev.token);
      break;
    case EventKind::Crash:
      return;  // crash() records it
  }
  tracer_->emit(r);
}

RunSummary Simulator::run_until(std::function<bool()> const &predicate, Time time_limit,
                                std::uint64_t event_budget) {
  RunSummary s;
  std::uint64_t budget = event_budget;
  while (true) {
    if (predicate && predicate()) {
      s.predicate_held = true;
      break;
    }
    if (queue_.empty()) {
      s.drained = true;
      break;
    }
    if (queue_.front().fire_at > time_limit) {
      s.time_limit_hit = true;
      now_ = std::max(now_, time_limit);
      break;
    }
    if (budget == 0) {
      s.livelock = true;
      break;
    }
    std::pop_heap(queue_.begin(), queue_.end(), Later{});
    SimEvent ev = std::move(queue_.back());
    queue_.pop_back();
    now_ = ev.fire_at;
    if (auto it = cancelled_.find(ev.seq); it != cancelled_.end()) {
      cancelled_.erase(it);
      continue;
    }
    budget--;
    if (ev.kind == EventKind::Crash) {
      crash(ev.target);
      s.events++;
      executed_++;
      continue;
    }
    if (ev.target != kNoPid && !procs_.at(ev.target).alive) {
      s.dropped++;
      dropped_++;
      continue;
    }
    emit(ev);
    s.events++;
    executed_++;
    if (ev.action) ev.action();
  }
  s.final_time = now_;
  return s;
}

}  // namespace ubft::sim
