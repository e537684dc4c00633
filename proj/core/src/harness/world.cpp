#include "ubft/harness/world.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "ubft/app/linearizability.hpp"

namespace ubft::harness {

namespace {

std::int64_t i64(std::uint64_t v) { return static_cast<std::int64_t>(v); }

}  // namespace

World::World(Scenario scenario, RunOptions opts) : sc_{std::move(scenario)}, opts_{opts} {
  writer_ = std::make_unique<sim::TextTraceWriter>(opts_.trace_out);
}

World::~World() = default;

Pid World::victim_pid(sim::Victim const &v) const {
  switch (v.role) {
    case sim::Role::Replica:
      return replica_pids_.at(v.index);
    case sim::Role::MemoryNode:
      return memory_pids_.at(v.index);
    case sim::Role::Client:
      return client_pids_.at(v.index);
  }
  return kNoPid;
}

app::Client::Workload World::workload_for(std::uint32_t index) {
  auto rng = std::make_shared<sim::Rng>(sim_->rng().fork(0x1000 + index));
  auto w = sc_.workload;
  auto id = client_pids_.at(index);
  if (sc_.app == "kv") {
    return [rng, w, id](std::uint64_t seq) {
      auto key = fmt::format("k{}", rng->uniform(0, static_cast<std::int64_t>(w.keys) - 1));
      if (rng->chance(w.put_ratio)) return app::ToyKV::put(key, fmt::format("c{}.{}", id, seq));
      return app::ToyKV::get(key);
    };
  }
  return [rng, w](std::uint64_t) {
    Bytes op(w.op_size);
    for (auto &b : op) b = static_cast<std::uint8_t>('a' + rng->uniform(0, 25));
    return op;
  };
}

void World::build() {
  sim_ = std::make_unique<sim::Simulator>(sc_.sim, &tracer_);
  sim_->trace_events = opts_.trace_events;
  tracer_.attach(writer_.get());
  tracer_.attach(&checker_);
  tracer_.attach(this);

  auto const &cfg = sc_.sim;
  for (std::uint32_t i = 0; i < cfg.n_replicas; i++) replica_pids_.push_back(sim_->add_process(sim::Role::Replica));
  for (std::uint32_t i = 0; i < cfg.n_mem; i++) memory_pids_.push_back(sim_->add_process(sim::Role::MemoryNode));
  auto n_clients = sc_.workload.clients + (sc_.workload.probe_at ? 1 : 0);
  for (std::uint32_t i = 0; i < n_clients; i++) client_pids_.push_back(sim_->add_process(sim::Role::Client));

  cs_ = std::make_unique<crypto::CryptoService>(sc_.backend, cfg.seed, sim_->process_count());
  net_ = std::make_unique<sim::Network>(*sim_);

  dmem::DmemConfig dcfg;
  dcfg.nodes = memory_pids_;
  dcfg.f_m = cfg.f_m;
  dcfg.delta = cfg.delta;
  dcfg.drift_bound = cfg.drift_bound;
  dcfg.adversarial_tearing = sc_.adversarial_tearing;

  auto d = cfg.delta;
  consensus::ReplicaConfig rc;
  rc.n = cfg.n_replicas;
  rc.f = cfg.f;
  rc.t = sc_.t;
  rc.window = sc_.window;
  rc.delta = d;
  rc.slot_timeout = sc_.slot_timeout > 0 ? sc_.slot_timeout : 3 * d;
  rc.progress_timeout = sc_.progress_timeout > 0 ? sc_.progress_timeout : 12 * d;
  rc.max_progress_timeout = 2 * rc.progress_timeout;
  rc.echo_timeout = sc_.echo_timeout > 0 ? sc_.echo_timeout : 3 * d;
  rc.ctb_slow_timeout = sc_.ctb_slow_timeout > 0 ? sc_.ctb_slow_timeout : 3 * d;
  rc.echo_round = sc_.echo_round;
  rc.app = sc_.app;

  for (auto const &e : sc_.faults.entries) {
    if (e.victim.role == sim::Role::Replica && sim::is_byzantine(e.behavior)) {
      byzantine_.insert(replica_pids_.at(e.victim.index));
    }
  }

  for (auto pid : replica_pids_) {
    replicas_.push_back(std::make_unique<consensus::Replica>(*sim_, *net_, *cs_, pid, replica_pids_, rc, dcfg));
    auto *r = replicas_.back().get();
    net_->attach(pid, [r](Pid from, std::uint64_t ch, Bytes const &m) { r->on_message(from, ch, m); });
  }
  for (auto pid : memory_pids_) {
    memory_.push_back(std::make_unique<dmem::MemoryNode>(*sim_, *net_, *cs_, pid, dcfg));
    auto *m = memory_.back().get();
    net_->attach(pid, [m](Pid from, std::uint64_t ch, Bytes const &p) { m->on_message(from, ch, p); });
  }
  for (std::uint32_t i = 0; i < client_pids_.size(); i++) {
    auto pid = client_pids_[i];
    app::ClientConfig cc;
    cc.f = cfg.f;
    cc.replicas = replica_pids_;
    cc.resend_after = sc_.client_resend > 0 ? sc_.client_resend : 10 * d;
    for (auto const &e : sc_.faults.entries) {
      // the subset is a property of the client from its first request on
      if (e.behavior == sim::Behavior::ByzClientSubset && e.victim.role == sim::Role::Client &&
          e.victim.index == i) {
        cc.subset = std::vector<Pid>(replica_pids_.begin(), replica_pids_.end() - 1);
      }
    }
    clients_.push_back(std::make_unique<app::Client>(*sim_, *net_, pid, pid, cc, workload_for(i)));
    auto *c = clients_.back().get();
    net_->attach(pid, [c](Pid from, std::uint64_t ch, Bytes const &m) { c->on_message(from, ch, m); });
  }
}

void World::arm_faults() {
  for (auto const &e : sc_.faults.entries) {
    if (e.trigger.kind == sim::Trigger::Kind::At) {
      sim_->at(std::max<Time>(e.trigger.at, 0), kNoPid, [this, e]() { activate(e); });
    } else {
      decided_triggers_.push_back(e);
    }
  }
}

void World::activate(sim::FaultEntry const &e) {
  auto pid = victim_pid(e.victim);
  tracer_.emit(sim::Record{sim_->now(), pid, sim::RecordKind::RunFault,
                           {static_cast<std::int64_t>(e.behavior), static_cast<std::int64_t>(e.victim.role),
                            e.victim.index},
                           0});
  consensus::Replica *r = e.victim.role == sim::Role::Replica ? replicas_.at(e.victim.index).get() : nullptr;
  switch (e.behavior) {
    case sim::Behavior::Crash:
      sim_->crash(pid);
      return;
    case sim::Behavior::ByzEquivocate:
      if (r) r->byz.equivocate = true;
      return;
    case sim::Behavior::ByzBadSignature:
      if (r) r->set_byz_bad_signature(true);
      return;
    case sim::Behavior::ByzBadChecksum:
      if (r) {
        r->registers().byz.bad_checksum = true;
        r->registers().byz.same_ts_both = true;
      }
      return;
    case sim::Behavior::ByzReplay:
      if (r) r->byz.replay = true;
      return;
    case sim::Behavior::ByzCensorRequests:
      if (r) r->byz.censor = true;
      return;
    case sim::Behavior::ByzSilent:
      net_->set_mute(pid, true);
      return;
    case sim::Behavior::Delay: {
      sim::DelayRule rule;
      if (e.inbound) {
        rule.dst = pid;
      } else {
        rule.src = pid;
      }
      rule.kind = e.kind;
      rule.stream = e.stream;
      rule.amount = e.amount;
      rule.from = sim_->now();
      rule.until = e.until;
      net_->add_delay(rule);
      return;
    }
    case sim::Behavior::ByzClientSubset:
      return;
  }
}

void World::on_record(sim::Record const &r) {
  if (r.kind == sim::RecordKind::Apply && r.process < replica_pids_.size() && !byzantine_.count(r.process)) {
    auto n = ++applied_[r.process];
    for (auto it = decided_triggers_.begin(); it != decided_triggers_.end();) {
      if (n >= it->trigger.decided) {
        auto e = *it;
        sim_->at(sim_->now(), kNoPid, [this, e]() { activate(e); });
        it = decided_triggers_.erase(it);
      } else {
        ++it;
      }
    }
  } else if (r.kind == sim::RecordKind::Checkpoint && opts_.sample_windows && r.process < replica_pids_.size() &&
             !byzantine_.count(r.process)) {
    auto p = r.process;
    auto start = static_cast<std::uint64_t>(r.f[0]);
    // after the adopting handler has finished pruning
    sim_->at(sim_->now(), kNoPid, [this, p, start]() {
      if (!sim_->alive(p)) return;
      auto &rep = *replicas_.at(p);
      windows_.push_back(WindowSample{p, start, rep.footprint().total(), rep.live_bytes().total()});
    });
  }
}

RunResult World::run() {
  build();
  RunResult res;
  res.scenario = sc_.name;
  res.seed = sc_.sim.seed;
  auto const &cfg = sc_.sim;
  tracer_.emit(sim::Record{0, 0, sim::RecordKind::RunConfig,
                           {cfg.n_replicas, cfg.f, sc_.t, i64(sc_.window)}, 0});
  arm_faults();
  for (auto &r : replicas_) r->start();
  for (std::uint32_t i = 0; i < sc_.workload.clients; i++) clients_[i]->start(sc_.workload.requests, sc_.workload.start);
  if (sc_.workload.probe_at) clients_.back()->start(1, *sc_.workload.probe_at);

  auto all_done = [this]() {
    for (auto &c : clients_) {
      if (sim_->alive(c->pid()) && !c->finished()) return false;
    }
    return true;
  };
  res.summary = sim_->run_until(all_done, sc_.effective_time_limit(), sc_.event_budget);
  res.liveness_expected = sc_.expect_liveness.value_or(true);
  res.liveness_ok = all_done();
  if (res.liveness_ok) {
    auto settle = sim_->run_until(nullptr, sim_->now() + sc_.effective_settle(), sc_.event_budget);
    res.summary.events += settle.events;
    res.summary.dropped += settle.dropped;
    if (sim_->now() >= cfg.gst) tracer_.emit(sim::Record{sim_->now(), 0, sim::RecordKind::RunQuiesce, {}, 0});
  }
  collect(res);
  return res;
}

void World::collect(RunResult &res) {
  res.final_time = sim_->now();
  res.violations = checker_.finish();
  res.checks = checker_.checks();

  for (auto &c : clients_) {
    res.requests_expected += c->target();
    res.requests_completed += c->completed();
    res.client_resends += c->resends();
    res.latencies.insert(res.latencies.end(), c->latencies().begin(), c->latencies().end());
  }
  if (res.liveness_expected && !res.liveness_ok) {
    res.violations.push_back(Violation{"run.liveness", res.final_time,
                                       fmt::format("{} of {} requests completed", res.requests_completed,
                                                   res.requests_expected)});
  }

  std::map<std::uint64_t, std::pair<Pid, Bytes>> by_slot;
  for (std::size_t i = 0; i < replicas_.size(); i++) {
    auto &r = *replicas_[i];
    auto pid = replica_pids_[i];
    res.footprint.push_back(r.footprint().total());
    res.live.push_back(r.live_bytes().total());
    if (byzantine_.count(pid)) continue;
    auto const &st = r.stats();
    res.decided_fast += st.decided_fast;
    res.decided_slow += st.decided_slow;
    res.proposals += st.proposals;
    res.view_changes += st.view_changes;
    res.max_view = std::max(res.max_view, r.view());
    res.summary_stalls += st.summary_stalls;
    res.summary_stall_time += st.summary_stall_time;
    res.summary_installs += st.summary_installs;
    res.checkpoints += st.checkpoints;
    res.quarantines += st.quarantines;
    res.ctb_fast += r.ctb().stats().fast;
    res.ctb_slow += r.ctb().stats().slow;
    res.ctb_aborts += r.ctb().stats().abort_equivocation + r.ctb().stats().abort_out_of_tail;
    res.crypto += cs_->counters(pid);
    if (!sim_->alive(pid)) continue;
    res.checks["smr.convergence"]++;
    auto snap = r.app_snapshot();
    auto [it, fresh] = by_slot.try_emplace(r.next_apply(), pid, snap);
    if (!fresh && it->second.second != snap) {
      res.converged = false;
      res.violations.push_back(Violation{"smr.convergence", res.final_time,
                                         fmt::format("replicas {} and {} applied {} slots but differ", it->second.first,
                                                     pid, r.next_apply())});
    }
  }
  for (auto &m : memory_) res.disaggregated_bytes += m->stored_bytes();

  if (sc_.app == "kv") {
    std::vector<app::HistoryEntry> history;
    for (auto &c : clients_) history.insert(history.end(), c->history().begin(), c->history().end());
    auto lin = app::check_kv_linearizable(history);
    res.linearizable = lin.ok;
    res.linearizability_ops = lin.ops_checked;
    res.checks["app.linearizability"] += lin.ops_checked;
    if (!lin.ok) {
      res.violations.push_back(
          Violation{"app.linearizability", res.final_time, fmt::format("no linearization for key '{}'", lin.key)});
    }
  }
  res.windows = windows_;
  res.trace_lines = writer_->lines();
  res.trace_digest = writer_->digest_hex();
}

RunResult run_scenario(Scenario const &sc, RunOptions opts) {
  World w(sc, opts);
  return w.run();
}

}  // namespace ubft::harness
