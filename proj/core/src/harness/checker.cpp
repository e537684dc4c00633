#include "ubft/harness/checker.hpp"

#include <istream>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "ubft/app/app.hpp"
#include "ubft/sim/fault.hpp"

namespace ubft::harness {

using sim::RecordKind;

std::vector<Coverage> const &coverage() {
  static std::vector<Coverage> const table{
      {"ctb.agreement", "trace: correct deliveries of (b,k) carry one digest"},
      {"ctb.integrity", "trace: correct broadcaster's deliveries match its broadcast digest"},
      {"ctb.no_duplication", "trace: (p,b,k) delivered at most once"},
      {"ctb.tail_validity", "trace at quiesce: last t ids of live correct broadcasters delivered"},
      {"smr.agreement", "trace: one request fingerprint per decided slot"},
      {"smr.validity", "trace, runs without Byzantine replicas: decided = submitted or no-op"},
      {"smr.promise_discipline", "trace: WILL_COMMIT(v,s) covered by COMMIT or checkpoint before SEAL_VIEW(v+1)"},
      {"smr.commit_persistence", "trace: f+1 COMMIT(v,s,r) => no later-view accept of s with r' != r"},
      {"smr.apply_order", "trace: gap-free apply order per replica, equal to its own decision"},
      {"reg.regularity", "trace: read returns last completed or a concurrent write"},
      {"reg.detection_soundness", "trace: byzantine-owner verdict only for Byzantine owners"},
      {"sim.crash_finality", "trace: no milestone from a process after its crash"},
      {"smr.convergence", "counter: equal applied slot => byte-identical snapshots"},
      {"app.linearizability", "counter: kv client history linearizable"},
      {"run.liveness", "counter: all clients finished when liveness is expected"},
      {"smr.fast_path_purity", "counter: critical-path sign+verify in failure-free runs"},
  };
  return table;
}

void Checker::violate(std::string inv, Time time, std::string detail) {
  violations_.push_back(Violation{std::move(inv), time, std::move(detail)});
}

void Checker::on_record(sim::Record const &r) {
  auto p = r.process;
  auto u = [&](int i) { return static_cast<std::uint64_t>(r.f[static_cast<std::size_t>(i)]); };

  if (r.kind != RecordKind::SimCrash && r.kind != RecordKind::RunFault &&
      r.kind != RecordKind::RunQuiesce && r.kind != RecordKind::RunConfig &&
      r.kind != RecordKind::SimDeliver && r.kind != RecordKind::SimTimer) {
    count("sim.crash_finality");
    auto it = crash_time_.find(p);
    if (it != crash_time_.end() && r.time > it->second) {
      violate("sim.crash_finality", r.time,
              fmt::format("process {} emitted {} after crashing at {}", p, sim::kind_name(r.kind), it->second));
    }
  }

  switch (r.kind) {
    case RecordKind::RunConfig:
      n_ = static_cast<std::uint32_t>(r.f[0]);
      f_ = static_cast<std::uint32_t>(r.f[1]);
      t_ = static_cast<std::uint32_t>(r.f[2]);
      noop_fp_ = app::Request::noop().fingerprint();
      return;
    case RecordKind::RunFault: {
      auto b = static_cast<sim::Behavior>(r.f[0]);
      auto role = static_cast<sim::Role>(r.f[1]);
      if (role == sim::Role::Replica && sim::is_byzantine(b)) {
        byzantine_.insert(p);
        any_fault_ = true;
      }
      return;
    }
    case RecordKind::SimCrash:
      crashed_.insert(p);
      crash_time_.emplace(p, r.time);
      return;
    case RecordKind::RunQuiesce:
      quiesced_ = true;
      return;

    case RecordKind::CtbBroadcast:
      ctb_members_.insert(p);
      broadcast_[{p, u(0)}] = r.digest;
      last_k_[p] = std::max(last_k_[p], u(0));
      return;
    case RecordKind::CtbDeliver:
      on_ctb_deliver(r);
      return;

    case RecordKind::ClientSubmit:
      submitted_.insert(r.digest);
      return;
    case RecordKind::Decide: {
      if (!correct(p)) return;
      auto s = u(1);
      own_decides_[p][s] = r.digest;
      count("smr.agreement");
      auto [it, fresh] = decided_.try_emplace(s, r.digest, p);
      if (!fresh && it->second.first != r.digest) {
        violate("smr.agreement", r.time,
                fmt::format("slot {}: replica {} decided {:016x}, replica {} decided {:016x}", s,
                            it->second.second, it->second.first, p, r.digest));
      }
      return;
    }
    case RecordKind::Apply: {
      if (!correct(p)) return;
      auto s = u(0);
      count("smr.apply_order");
      auto &next = next_apply_[p];
      if (s != next) {
        violate("smr.apply_order", r.time, fmt::format("replica {} applied slot {}, expected {}", p, s, next));
      }
      next = s + 1;
      auto &own = own_decides_[p];
      auto it = own.find(s);
      if (it != own.end() && it->second != r.digest) {
        violate("smr.apply_order", r.time, fmt::format("replica {} applied slot {} differently from its decision", p, s));
      }
      own.erase(own.begin(), own.upper_bound(s));
      return;
    }
    case RecordKind::Checkpoint: {
      if (!correct(p)) return;
      auto start = u(0);
      auto &next = next_apply_[p];
      if (start > next) next = start;
      auto &pr = promises_[p];
      for (auto it = pr.begin(); it != pr.end();) {
        it = it->second < start ? pr.erase(it) : std::next(it);
      }
      return;
    }
    case RecordKind::WillCommit:
      if (correct(p)) promises_[p].insert({u(0), u(1)});
      return;
    case RecordKind::CommitBcast: {
      if (correct(p)) promises_[p].erase({u(0), u(1)});
      auto v = u(0);
      auto s = u(1);
      auto &c = commits_[s];
      auto &who = c.votes[{v, r.digest}];
      who.insert(p);
      if (!c.quorum && who.size() >= f_ + 1) {
        c.quorum = true;
        c.view = v;
        c.fp = r.digest;
        for (auto const &a : accepts_[s]) {
          count("smr.commit_persistence");
          if (a.view > v && a.fp != r.digest) {
            violate("smr.commit_persistence", a.time,
                    fmt::format("slot {} committed in view {} but replica {} accepted another request in view {}",
                                s, v, a.who, a.view));
          }
        }
      }
      return;
    }
    case RecordKind::AcceptPrepare: {
      if (!correct(p)) return;
      auto v = u(0);
      auto s = u(1);
      accepts_[s].push_back(Accept{v, r.digest, p, r.time});
      auto it = commits_.find(s);
      if (it != commits_.end() && it->second.quorum) {
        count("smr.commit_persistence");
        if (v > it->second.view && r.digest != it->second.fp) {
          violate("smr.commit_persistence", r.time,
                  fmt::format("slot {} committed in view {} but replica {} accepted another request in view {}",
                              s, it->second.view, p, v));
        }
      }
      return;
    }
    case RecordKind::SealView: {
      if (!correct(p)) return;
      auto w = u(0);
      count("smr.promise_discipline");
      auto &pr = promises_[p];
      for (auto it = pr.begin(); it != pr.end();) {
        if (it->first + 1 == w) {
          violate("smr.promise_discipline", r.time,
                  fmt::format("replica {} sealed view {} with WILL_COMMIT({}, {}) unmatched", p, w - 1,
                              it->first, it->second));
        }
        it = it->first < w ? pr.erase(it) : std::next(it);
      }
      return;
    }

    case RecordKind::RegWriteBegin: {
      auto &reg = regs_[{p, u(0)}];
      reg.writes[u(1)].begin = r.time;
      return;
    }
    case RecordKind::RegWriteEnd: {
      auto &reg = regs_[{p, u(0)}];
      auto it = reg.writes.find(u(1));
      if (it != reg.writes.end()) it->second.end = r.time;
      return;
    }
    case RecordKind::RegReadBegin:
      read_begin_[{p, u(2)}] = r.time;
      return;
    case RecordKind::RegReadEnd:
      on_reg_read_end(r);
      return;
    default:
      return;
  }
}

void Checker::on_ctb_deliver(sim::Record const &r) {
  auto p = r.process;
  auto b = static_cast<Pid>(r.f[0]);
  auto k = static_cast<std::uint64_t>(r.f[1]);
  if (!correct(p)) return;
  count("ctb.no_duplication");
  if (!delivered_.insert({p, b, k}).second) {
    violate("ctb.no_duplication", r.time, fmt::format("process {} delivered ({}, {}) twice", p, b, k));
  }
  count("ctb.agreement");
  auto [it, fresh] = agreed_.try_emplace({b, k}, r.digest);
  if (!fresh && it->second != r.digest) {
    violate("ctb.agreement", r.time,
            fmt::format("({}, {}) delivered as {:016x} and {:016x}", b, k, it->second, r.digest));
  }
  if (correct(b)) {
    count("ctb.integrity");
    auto bc = broadcast_.find({b, k});
    if (bc == broadcast_.end()) {
      violate("ctb.integrity", r.time, fmt::format("process {} delivered ({}, {}) never broadcast", p, b, k));
    } else if (bc->second != r.digest) {
      violate("ctb.integrity", r.time, fmt::format("process {} delivered altered ({}, {})", p, b, k));
    }
  }
}

void Checker::on_reg_read_end(sim::Record const &r) {
  auto reader = r.process;
  auto owner = static_cast<Pid>(r.f[0]);
  auto index = static_cast<std::uint64_t>(r.f[1]);
  auto op = static_cast<std::uint64_t>(r.f[2]);
  auto ts = r.f[3];
  auto bit = read_begin_.find({reader, op});
  if (bit == read_begin_.end()) return;
  auto begin = bit->second;
  read_begin_.erase(bit);
  if (!correct(reader)) return;

  if (ts < 0) {
    count("reg.detection_soundness");
    if (correct(owner)) {
      violate("reg.detection_soundness", r.time,
              fmt::format("reader {} flagged correct owner {} (index {})", reader, owner, index));
    }
    return;
  }
  if (!correct(owner)) return;
  count("reg.regularity");
  auto const &writes = regs_[{owner, index}].writes;
  std::uint64_t last_completed = 0;
  for (auto const &[wts, w] : writes) {
    if (w.end < begin && wts > last_completed) last_completed = wts;
  }
  auto got = static_cast<std::uint64_t>(ts);
  if (got == last_completed) return;
  auto it = writes.find(got);
  // otherwise only a write that had not completed when the read began
  bool concurrent = it != writes.end() && it->second.begin <= r.time && it->second.end >= begin &&
                    got > last_completed;
  if (!concurrent) {
    violate("reg.regularity", r.time,
            fmt::format("reader {} read ts {} of ({}, {:#x}); last completed before the read was {}",
                        reader, got, owner, index, last_completed));
  }
}

std::vector<Violation> Checker::finish() {
  if (finished_) return violations_;
  finished_ = true;
  if (quiesced_ && t_ > 0) {
    for (auto b : ctb_members_) {
      if (!correct(b) || crashed_.count(b)) continue;
      auto last = last_k_[b];
      auto first = last > t_ ? last - t_ + 1 : 1;
      // receivers are the group members 0..n-1, whether or not they broadcast
      std::set<Pid> receivers = ctb_members_;
      for (Pid p = 0; p < n_; p++) receivers.insert(p);
      for (auto p : receivers) {
        if (!correct(p) || crashed_.count(p)) continue;
        for (auto k = first; k <= last; k++) {
          count("ctb.tail_validity");
          if (!delivered_.count({p, b, k})) {
            violate("ctb.tail_validity", kNever,
                    fmt::format("process {} never delivered ({}, {}) from the final tail", p, b, k));
          }
        }
      }
    }
  }
  if (!any_fault_) {
    for (auto const &[s, d] : decided_) {
      count("smr.validity");
      if (d.first != noop_fp_ && !submitted_.count(d.first)) {
        violate("smr.validity", kNever, fmt::format("slot {} decided a request no client submitted", s));
      }
    }
  }
  return violations_;
}

std::vector<Violation> check_trace(std::istream &in, std::map<std::string, std::uint64_t> *checks) {
  Checker c;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    no++;
    if (line.empty()) continue;
    sim::Record r;
    try {
      r = sim::parse_record(line);
    } catch (std::invalid_argument const &e) {
      throw std::invalid_argument(fmt::format("trace line {}: {}", no, e.what()));
    }
    c.on_record(r);
  }
  auto v = c.finish();
  if (checks) *checks = c.checks();
  return v;
}

}  // namespace ubft::harness
