#include "ubft/harness/ctb_world.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace ubft::harness {

CtbWorld::CtbWorld(Scenario scenario, std::ostream *trace_out, bool trace_events)
    : sc_{std::move(scenario)}, trace_out_{trace_out}, trace_events_{trace_events} {
  writer_ = std::make_unique<sim::TextTraceWriter>(trace_out_);
}

CtbWorld::~CtbWorld() = default;

void CtbWorld::build() {
  sim_ = std::make_unique<sim::Simulator>(sc_.sim, &tracer_);
  sim_->trace_events = trace_events_;
  tracer_.attach(writer_.get());
  tracer_.attach(&checker_);

  auto const &cfg = sc_.sim;
  for (std::uint32_t i = 0; i < cfg.n_replicas; i++) member_pids_.push_back(sim_->add_process(sim::Role::Replica));
  for (std::uint32_t i = 0; i < cfg.n_mem; i++) memory_pids_.push_back(sim_->add_process(sim::Role::MemoryNode));
  cs_ = std::make_unique<crypto::CryptoService>(sc_.backend, cfg.seed, sim_->process_count());
  net_ = std::make_unique<sim::Network>(*sim_);

  dmem::DmemConfig dcfg;
  dcfg.nodes = memory_pids_;
  dcfg.f_m = cfg.f_m;
  dcfg.delta = cfg.delta;
  dcfg.drift_bound = cfg.drift_bound;
  dcfg.adversarial_tearing = sc_.adversarial_tearing;

  auto d = cfg.delta;
  for (auto pid : member_pids_) {
    auto m = std::make_unique<Member>();
    m->pid = pid;
    tail::TbConfig tc;
    tc.t = sc_.t;
    tc.delta = d;
    tc.first_resend = 3 * d;
    tc.max_backoff = 32 * d;
    m->tb = std::make_unique<tail::TbHub>(*sim_, *net_, *cs_, pid, member_pids_, tc);
    m->regs = std::make_unique<dmem::RegisterClient>(*sim_, *net_, *cs_, pid, dcfg);
    ctb::Config cc;
    cc.t = sc_.t;
    cc.delta = d;
    cc.slow_timeout = sc_.ctb_slow_timeout > 0 ? sc_.ctb_slow_timeout : 3 * d;
    m->ep = std::make_unique<ctb::Endpoint>(*sim_, *net_, *cs_, *m->tb, *m->regs, pid, member_pids_, cc);
    auto *raw = m.get();
    m->tb->set_deliver([raw](Pid from, std::uint8_t stream, std::uint64_t, Bytes const &b) {
      raw->ep->on_tb(from, stream, b);
    });
    net_->attach(pid, [raw](Pid from, std::uint64_t ch, Bytes const &b) {
      auto key = ChannelKey::unpack(ch);
      switch (key.kind) {
        case ChannelKind::TbData:
        case ChannelKind::TbAck:
          raw->tb->on_message(from, ch, b);
          return;
        case ChannelKind::Mem:
          raw->regs->on_message(from, ch, b);
          return;
        case ChannelKind::P2P:
          try {
            raw->ep->on_p2p(from, b);
          } catch (DecodeError const &) {
          }
          return;
        case ChannelKind::Client:
          return;
      }
    });
    members_.push_back(std::move(m));
  }
  for (auto pid : memory_pids_) {
    memory_.push_back(std::make_unique<dmem::MemoryNode>(*sim_, *net_, *cs_, pid, dcfg));
    auto *mn = memory_.back().get();
    net_->attach(pid, [mn](Pid from, std::uint64_t ch, Bytes const &b) { mn->on_message(from, ch, b); });
  }
}

void CtbWorld::activate(sim::FaultEntry const &e) {
  Pid pid = e.victim.role == sim::Role::MemoryNode ? memory_pids_.at(e.victim.index) : member_pids_.at(e.victim.index);
  tracer_.emit(sim::Record{sim_->now(), pid, sim::RecordKind::RunFault,
                           {static_cast<std::int64_t>(e.behavior), static_cast<std::int64_t>(e.victim.role),
                            e.victim.index},
                           0});
  Member *m = e.victim.role == sim::Role::Replica ? members_.at(e.victim.index).get() : nullptr;
  switch (e.behavior) {
    case sim::Behavior::Crash:
      sim_->crash(pid);
      return;
    case sim::Behavior::ByzEquivocate:
      if (m) m->equivocate = true;
      return;
    case sim::Behavior::ByzBadSignature:
      if (m) m->ep->byz.bad_signature = true;
      return;
    case sim::Behavior::ByzBadChecksum:
      if (m) {
        m->regs->byz.bad_checksum = true;
        m->regs->byz.same_ts_both = true;
      }
      return;
    case sim::Behavior::ByzReplay:
      if (m && !m->replay) {
        m->replay = true;
        replay_tick(*m);
      }
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
    case sim::Behavior::ByzCensorRequests:
    case sim::Behavior::ByzClientSubset:
      return;  // no requests in a broadcast-only group
  }
}

void CtbWorld::issue(Member &m) {
  m.issued++;
  auto base = fmt::format("m{}.{}.", m.pid, m.issued);
  auto pad = static_cast<std::size_t>(sim_->rng().uniform(0, 24));
  Bytes msg(base.begin(), base.end());
  msg.insert(msg.end(), pad, static_cast<std::uint8_t>('a' + m.issued % 26));
  if (m.equivocate) {
    m.ep->broadcast_split([&msg](Pid to) {
      auto v = msg;
      if (to % 2 == 1) v.push_back('!');
      return v;
    });
  } else {
    m.ep->broadcast(std::move(msg));
  }
}

void CtbWorld::schedule_next(Member &m) {
  if (m.issued >= sc_.ctb_broadcasts) return;
  auto interval = sc_.ctb_interval > 0 ? sc_.ctb_interval : sc_.sim.delta;
  auto jitter = sim_->rng().uniform(0, interval / 2);
  sim_->timer(m.pid, interval + jitter, [this, &m]() {
    issue(m);
    schedule_next(m);
  });
}

void CtbWorld::replay_tick(Member &m) {
  m.tb->resend_all(ctb::kDataStream);
  m.ep->replay_oldest();
  sim_->timer(m.pid, sc_.sim.delta, [this, &m]() { replay_tick(m); });
}

bool CtbWorld::all_issued() const {
  for (auto const &m : members_) {
    if (sim_->alive(m->pid) && m->issued < sc_.ctb_broadcasts) return false;
  }
  return true;
}

CtbRunResult CtbWorld::run() {
  build();
  CtbRunResult res;
  res.seed = sc_.sim.seed;
  auto const &cfg = sc_.sim;
  tracer_.emit(sim::Record{0, 0, sim::RecordKind::RunConfig,
                           {cfg.n_replicas, cfg.f, sc_.t, static_cast<std::int64_t>(sc_.window)}, 0});
  for (auto const &e : sc_.faults.entries) {
    sim_->at(std::max<Time>(e.trigger.at, 0), kNoPid, [this, e]() { activate(e); });
  }
  for (auto &m : members_) schedule_next(*m);

  auto limit = sc_.effective_time_limit();
  res.summary = sim_->run_until([this]() { return all_issued(); }, limit, sc_.event_budget);
  auto until = std::max(sim_->now(), cfg.gst) + sc_.effective_settle();
  until = std::min(until, limit);
  sim_->at(until, kNoPid, []() {});  // a drained queue still reaches the settle point
  auto settle = sim_->run_until(nullptr, until, sc_.event_budget);
  res.summary.events += settle.events;
  res.summary.dropped += settle.dropped;
  if (all_issued() && sim_->now() >= until) {
    res.quiesced = true;
    tracer_.emit(sim::Record{sim_->now(), 0, sim::RecordKind::RunQuiesce, {}, 0});
  }

  res.final_time = sim_->now();
  res.violations = checker_.finish();
  res.checks = checker_.checks();
  for (auto const &m : members_) {
    auto const &st = m->ep->stats();
    res.broadcasts += st.broadcasts;
    res.fast += st.fast;
    res.slow += st.slow;
    res.aborts += st.abort_equivocation + st.abort_out_of_tail;
  }
  res.trace_lines = writer_->lines();
  res.trace_digest = writer_->digest_hex();
  return res;
}

CtbRunResult run_ctb_scenario(Scenario const &sc, std::ostream *trace_out, bool trace_events) {
  CtbWorld w(sc, trace_out, trace_events);
  return w.run();
}

}  // namespace ubft::harness
