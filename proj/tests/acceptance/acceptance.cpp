// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are the
// constants at the top of each check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ctb_model.hpp"
#include "ubft/dmem/register_client.hpp"
#include "ubft/harness/ctb_world.hpp"
#include "ubft/harness/report.hpp"
#include "ubft/harness/world.hpp"

#ifndef UBFT_SCENARIO_DIR
#define UBFT_SCENARIO_DIR "scenarios"
#endif

using namespace ubft;
using harness::Scenario;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Scenario scenario(std::string const &text, std::string name = "") { return harness::parse_scenario(text, std::move(name)); }

Scenario scenario_file(std::string const &file) {
  return harness::load_scenario(std::string(UBFT_SCENARIO_DIR) + "/" + file);
}

// Milestone trace of one SMR run, parsed back into records.
struct TracedRun {
  harness::RunResult res;
  std::vector<sim::Record> records;
};

TracedRun run_traced(Scenario const &sc) {
  std::stringstream ss;
  harness::RunOptions opts;
  opts.trace_out = &ss;
  opts.trace_events = false;
  TracedRun tr;
  tr.res = harness::run_scenario(sc, opts);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty()) tr.records.push_back(sim::parse_record(line));
  }
  return tr;
}

std::string first_violation(std::vector<harness::Violation> const &v) {
  if (v.empty()) return "";
  return fmt::format("{}: {}", v[0].invariant, v[0].detail);
}

// 1. CTB under one Byzantine member per run.
Outcome ctb_fuzz() {
  const std::uint64_t kSeeds = 1000;
  const std::uint32_t kTails[] = {2, 4, 8};
  const char *kCatalog[] = {"crash",      "byz-equivocate", "byz-bad-signature",
                            "byz-bad-checksum", "byz-replay", "byz-silent"};
  std::uint64_t safety = 0, tail_bad = 0, tail_checked_runs = 0, not_quiesced = 0, other = 0;
  std::string first;
  for (std::uint64_t seed = 0; seed < kSeeds; seed++) {
    sim::Rng pick(seed * 7919 + 1);
    auto t = kTails[seed % 3];
    auto behavior = kCatalog[(seed / 3) % std::size(kCatalog)];
    auto victim = pick.uniform(0, 2);
    auto at = pick.uniform(0, 6);
    auto gst = pick.chance(0.5) ? 0 : pick.uniform(5, 25);
    auto text = fmt::format(
        "mode = ctb\nn = 3\nf = 1\nt = {}\ndelta = 100\ngst = {}d\npre_gst_cap = 10\nseed = {}\n"
        "ctb.broadcasts = {}\nfault = at {}d replica {} {}\n",
        t, gst, seed, 2 * t + pick.uniform(0, 6), at, victim, behavior);
    auto r = harness::run_ctb_scenario(scenario(text, fmt::format("fuzz-{}", seed)));
    if (!r.quiesced) not_quiesced++;
    if (r.checks.count("ctb.tail_validity")) tail_checked_runs++;
    for (auto const &v : r.violations) {
      if (v.invariant == "ctb.agreement" || v.invariant == "ctb.integrity" || v.invariant == "ctb.no_duplication") {
        safety++;
      } else if (v.invariant == "ctb.tail_validity") {
        tail_bad++;
      } else {
        other++;
      }
      if (first.empty()) first = fmt::format("seed {} ({}, t={}): {}: {}", seed, behavior, t, v.invariant, v.detail);
    }
  }
  Outcome o;
  // every run reaches quiescence, so the tail-validity premise holds wherever
  // the broadcaster stayed correct
  o.pass = safety == 0 && tail_bad == 0 && other == 0 && not_quiesced == 0;
  o.detail = fmt::format("runs={} safety_violations={} tail_violations={} other={} unquiesced={} tail_checked_runs={}{}",
                         kSeeds, safety, tail_bad, other, not_quiesced, tail_checked_runs,
                         first.empty() ? "" : " first=[" + first + "]");
  return o;
}

// 2. Exhaustive schedules against the reference model.
Outcome ctb_oracle() {
  auto e = acceptance::enumerate_ctb(3, 2, 3);
  Outcome o;
  o.pass = e.mismatches == 0 && e.tail_misses == 0 && e.terminals > 0;
  o.detail = fmt::format("link_contents={} states={} transitions={} terminals={} distinct_outcomes={} mismatches={} tail_misses={}{}",
                         e.link_contents, e.states, e.transitions, e.terminals, e.outcomes.size(), e.mismatches, e.tail_misses,
                         e.first_mismatch.empty() ? "" : " first=[" + e.first_mismatch + "]");
  return o;
}

// 3. Agreement across decision paths and leader faults.
Outcome smr_agreement() {
  // ordered (first decider's path, later decider's path) per slot
  std::map<std::pair<int, int>, std::uint64_t> pairs;
  std::uint64_t disagreements = 0, other = 0, validity_checks = 0, runs = 0;
  std::string first;
  auto absorb = [&](TracedRun const &tr, std::string const &label) {
    runs++;
    for (auto const &v : tr.res.violations) {
      if (v.invariant == "smr.agreement") {
        disagreements++;
      } else {
        other++;
      }
      if (first.empty()) first = label + ": " + v.invariant + ": " + v.detail;
    }
    if (tr.res.liveness_expected && !tr.res.liveness_ok) {
      other++;
      if (first.empty()) first = label + ": clients did not finish";
    }
    std::set<Pid> byz;
    for (auto const &r : tr.records) {
      if (r.kind == sim::RecordKind::RunFault && sim::is_byzantine(static_cast<sim::Behavior>(r.f[0]))) byz.insert(r.process);
    }
    std::map<std::uint64_t, int> first_path;
    for (auto const &r : tr.records) {
      if (r.kind != sim::RecordKind::Decide || byz.count(r.process)) continue;
      auto slot = static_cast<std::uint64_t>(r.f[1]);
      auto path = static_cast<int>(r.f[2]);
      auto [it, fresh] = first_path.try_emplace(slot, path);
      if (!fresh) pairs[{it->second, path}]++;
    }
  };

  // Delaying one replica's outgoing fast-path stream forces the others onto
  // the slow path while the delayed replica itself may still decide fast.
  // Extra delay only exists before GST, so GST sits at the end of the window.
  for (std::uint64_t seed = 1; seed <= 4; seed++) {
    for (int victim = 0; victim < 3; victim++) {
      auto text = fmt::format(
          "n = 3\nf = 1\nt = 8\nwindow = 32\ndelta = 100\ngst = 40d\npre_gst_cap = 1\nseed = {}\n"
          "workload.clients = 2\nworkload.requests = 60\n"
          "fault = at 0 replica {} delay amount=4d stream=1 kind=tbdata until=40d\n",
          seed, victim);
      absorb(run_traced(scenario(text, "paths")), fmt::format("paths seed={} victim={}", seed, victim));
    }
  }
  for (auto const *file : {"failure_free.scn", "equivocating_leader.scn", "leader_crash.scn"}) {
    for (std::uint64_t seed = 1; seed <= 3; seed++) {
      auto sc = scenario_file(file);
      sc.sim.seed = seed;
      auto tr = run_traced(sc);
      if (std::string(file) == "failure_free.scn") validity_checks += tr.res.checks["smr.validity"];
      absorb(tr, fmt::format("{} seed={}", file, seed));
    }
  }
  auto count = [&](int a, int b) { return pairs.count({a, b}) ? pairs[{a, b}] : 0; };
  bool all_pairs = count(0, 0) && count(0, 1) && count(1, 0) && count(1, 1);
  Outcome o;
  o.pass = disagreements == 0 && other == 0 && all_pairs && validity_checks > 0;
  o.detail = fmt::format("runs={} disagreements={} other_failures={} fast-fast={} fast-slow={} slow-fast={} slow-slow={} "
                         "validity_checks={}{}",
                         runs, disagreements, other, count(0, 0), count(0, 1), count(1, 0), count(1, 1), validity_checks,
                         first.empty() ? "" : " first=[" + first + "]");
  return o;
}

// 4. Failure-free fast path uses no critical-path signatures.
Outcome fast_path_purity() {
  auto sc = scenario("n = 3\nf = 1\nt = 8\nwindow = 100\ndelta = 100\ngst = 0\nseed = 11\nworkload.clients = 1\n"
                     "workload.requests = 1000\n",
                     "purity");
  auto tr = run_traced(sc);
  std::map<sim::RecordKind, std::uint64_t> kinds;
  for (auto const &r : tr.records) kinds[r.kind]++;
  auto n = [&](sim::RecordKind k) { return kinds.count(k) ? kinds[k] : 0; };
  auto critical = tr.res.crypto.critical();
  // anything beyond Echo, PREPARE, WILL_CERTIFY, WILL_COMMIT shows up as one
  // of these milestones
  auto foreign = n(sim::RecordKind::Certify) + n(sim::RecordKind::CommitBcast) + n(sim::RecordKind::SealView) +
                 n(sim::RecordKind::NewViewBcast) + n(sim::RecordKind::CtbSigned);
  Outcome o;
  o.pass = !tr.res.failed() && tr.res.requests_completed == 1000 && critical == 0 && tr.res.decided_slow == 0 &&
           foreign == 0 && tr.res.decided_fast >= 3 * 1000 && n(sim::RecordKind::WillCommit) > 0;
  o.detail = fmt::format("completed={} critical_sign={} critical_verify={} decide_fast={} decide_slow={} "
                         "certify/commit/seal/new_view/ctb_signed={} will_certify={} will_commit={} background_sign={}{}",
                         tr.res.requests_completed, tr.res.crypto.sign[0], tr.res.crypto.verify[0], tr.res.decided_fast,
                         tr.res.decided_slow, foreign, n(sim::RecordKind::WillCertify), n(sim::RecordKind::WillCommit),
                         tr.res.crypto.sign[1],
                         tr.res.violations.empty() ? "" : " first=[" + first_violation(tr.res.violations) + "]");
  return o;
}

// 5. Recovery after GST from a leader that crashed before it.
Outcome post_gst_recovery() {
  const Time kDelta = 100;
  const Time kBound = 50 * kDelta;
  const std::uint64_t kSeeds = 12;
  Time worst = 0;
  std::uint64_t promise_checks = 0, bad = 0;
  std::string first;
  for (std::uint64_t seed = 1; seed <= kSeeds; seed++) {
    auto sc = scenario(fmt::format("n = 3\nf = 1\nt = 16\nwindow = 16\ndelta = 100\ngst = 30d\npre_gst_cap = 10\n"
                                   "seed = {}\nworkload.clients = 2\nworkload.requests = 80\n"
                                   "workload.probe_at = 30d\nfault = at 10d replica 0 crash\n",
                                   seed),
                       "pre-gst-crash");
    auto tr = run_traced(sc);
    promise_checks += tr.res.checks["smr.promise_discipline"];
    // the probe client is the last process and submits its only request at GST
    std::optional<std::uint64_t> fresh;
    Pid probe = 0;
    for (auto const &r : tr.records) {
      if (r.kind == sim::RecordKind::ClientSubmit && (r.process > probe || !fresh)) {
        probe = r.process;
        fresh = r.time == sc.sim.gst ? std::optional<std::uint64_t>(r.digest) : std::nullopt;
      }
    }
    Time decided = -1;
    for (auto const &r : tr.records) {
      if (fresh && decided < 0 && r.kind == sim::RecordKind::Decide && r.digest == *fresh) decided = r.time;
    }
    Time lat = decided < 0 ? kNever : decided - sc.sim.gst;
    worst = std::max(worst, lat);
    if (tr.res.failed() || decided < 0 || lat > kBound) {
      bad++;
      if (first.empty()) {
        first = fmt::format("seed {}: decided {} after GST{}", seed, decided < 0 ? -1 : lat / kDelta,
                            tr.res.violations.empty() ? "" : ", " + first_violation(tr.res.violations));
      }
    }
  }
  Outcome o;
  o.pass = bad == 0 && promise_checks > 0;
  o.detail = fmt::format("seeds={} bound=50d worst={:.1f}d failures={} promise_checks={}{}", kSeeds,
                         worst == kNever ? -1.0 : static_cast<double>(worst) / kDelta, bad, promise_checks,
                         first.empty() ? "" : " first=[" + first + "]");
  return o;
}

// 6. SWMR registers under overlap, tearing, a Byzantine writer and a crashed
// memory node. The regularity oracle uses only operation intervals.
Outcome registers() {
  const std::uint64_t kOpsTarget = 10000;
  struct Rig {
    sim::Tracer tracer;
    std::unique_ptr<sim::Simulator> sim;
    std::unique_ptr<sim::Network> net;
    std::unique_ptr<crypto::CryptoService> cs;
    std::vector<std::unique_ptr<dmem::MemoryNode>> mem;
    std::vector<std::unique_ptr<dmem::RegisterClient>> procs;
    std::vector<Pid> nodes;
  };
  std::uint64_t ops = 0, irregular = 0, false_blame = 0, byz_flagged = 0, incomplete = 0;
  std::string first;
  for (std::uint64_t seed = 1; seed <= 2; seed++) {
    Rig rig;
    sim::SimConfig c;
    c.seed = seed;
    rig.sim = std::make_unique<sim::Simulator>(c, &rig.tracer);
    const Pid kProcs = 4;  // 0..2 correct writers and readers, 3 Byzantine writer
    for (Pid p = 0; p < kProcs; p++) rig.sim->add_process(sim::Role::Replica);
    for (int i = 0; i < 3; i++) rig.nodes.push_back(rig.sim->add_process(sim::Role::MemoryNode));
    rig.cs = std::make_unique<crypto::CryptoService>(crypto::Backend::Simulated, seed, rig.sim->process_count());
    rig.net = std::make_unique<sim::Network>(*rig.sim);
    dmem::DmemConfig d;
    d.nodes = rig.nodes;
    d.adversarial_tearing = seed % 2 == 0;
    for (auto n : rig.nodes) {
      rig.mem.push_back(std::make_unique<dmem::MemoryNode>(*rig.sim, *rig.net, *rig.cs, n, d));
      auto *m = rig.mem.back().get();
      rig.net->attach(n, [m](Pid f, std::uint64_t ch, Bytes const &b) { m->on_message(f, ch, b); });
    }
    for (Pid p = 0; p < kProcs; p++) {
      rig.procs.push_back(std::make_unique<dmem::RegisterClient>(*rig.sim, *rig.net, *rig.cs, p, d));
      auto *rc = rig.procs.back().get();
      rig.net->attach(p, [rc](Pid f, std::uint64_t ch, Bytes const &b) { rc->on_message(f, ch, b); });
    }
    rig.procs[3]->byz.bad_checksum = true;
    rig.procs[3]->byz.same_ts_both = true;
    // f_m = 1: one node fails part-way through
    rig.sim->crash_at(seed == 1 ? 0 : 20000, rig.nodes[seed % 3]);

    struct Interval {
      Time begin = 0, end = -1;
    };
    std::map<std::pair<Pid, std::uint64_t>, std::map<std::uint64_t, Interval>> writes;  // (owner, reg) -> ts
    struct Read {
      Pid reader, owner;
      std::uint64_t reg;
      Time begin, end = -1;
      dmem::ReadResult res;
    };
    std::vector<std::unique_ptr<Read>> reads;
    sim::Rng rng(seed * 1000 + 3);
    auto value = [](Pid owner, std::uint64_t reg, std::uint64_t ts) {
      auto s = fmt::format("{}/{}/{}/", owner, reg, ts);
      s.append(ts % 23, 'x');
      return Bytes(s.begin(), s.end());
    };
    const std::uint64_t kWritesPerReg = 420;
    std::map<std::pair<Pid, std::uint64_t>, std::uint64_t> next_ts;
    std::function<void(Pid, std::uint64_t)> write_next = [&](Pid owner, std::uint64_t reg) {
      auto &ts = next_ts[{owner, reg}];
      if (ts >= kWritesPerReg) return;
      ts++;
      auto my = ts;
      writes[{owner, reg}][my].begin = rig.sim->now();
      rig.procs[owner]->write(reg, my, value(owner, reg, my), [&, owner, reg, my]() {
        writes[{owner, reg}][my].end = rig.sim->now();
        rig.sim->timer(owner, rng.uniform(0, 40), [&, owner, reg]() { write_next(owner, reg); });
      });
    };
    for (Pid owner = 0; owner < kProcs; owner++) {
      for (std::uint64_t reg = 0; reg < 2; reg++) {
        writes[{owner, reg}][0] = Interval{0, 0};
        rig.sim->at(rng.uniform(0, 50), owner, [&, owner, reg]() { write_next(owner, reg); });
      }
    }
    const int kReads = 1700;
    for (int i = 0; i < kReads; i++) {
      Pid reader = static_cast<Pid>(rng.uniform(0, 2));
      Pid owner = static_cast<Pid>(rng.uniform(0, kProcs - 1));
      std::uint64_t reg = static_cast<std::uint64_t>(rng.uniform(0, 1));
      rig.sim->at(rng.uniform(0, 60000), reader, [&, reader, owner, reg]() {
        reads.push_back(std::make_unique<Read>(Read{reader, owner, reg, rig.sim->now(), -1, {}}));
        auto *r = reads.back().get();
        rig.procs[reader]->read(owner, reg, [&rig, r](dmem::ReadResult const &res) {
          r->end = rig.sim->now();
          r->res = res;
        });
      });
    }
    rig.sim->run_until(nullptr, 100'000'000, 2'000'000'000);

    for (auto const &[key, ws] : writes) {
      for (auto const &[ts, w] : ws) {
        if (ts == 0) continue;
        ops++;
        if (w.end < 0) incomplete++;
      }
      if (ws.size() != kWritesPerReg + 1) incomplete++;
    }
    for (auto const &r : reads) {
      ops++;
      if (r->end < 0) {
        incomplete++;
        continue;
      }
      if (r->res.kind == dmem::ReadResult::Kind::ByzantineOwner) {
        if (r->owner == 3) {
          byz_flagged++;
        } else {
          false_blame++;
          if (first.empty()) first = fmt::format("owner {} blamed", r->owner);
        }
        continue;
      }
      if (r->owner == 3) continue;  // no guarantee for a Byzantine writer's values
      auto const &ws = writes[{r->owner, r->reg}];
      std::uint64_t floor = 0;
      for (auto const &[ts, w] : ws) {
        if (w.end >= 0 && w.end <= r->begin) floor = std::max(floor, ts);
      }
      auto it = ws.find(r->res.ts);
      bool ok = it != ws.end() && r->res.ts >= floor && it->second.begin <= r->end &&
                (r->res.ts == 0 || r->res.payload == value(r->owner, r->reg, r->res.ts));
      if (!ok) {
        irregular++;
        if (first.empty()) {
          first = fmt::format("seed {} reader {} read ({}, {}) ts {} floor {}", seed, r->reader, r->owner, r->reg,
                              r->res.ts, floor);
        }
      }
    }
  }
  Outcome o;
  o.pass = ops >= kOpsTarget && irregular == 0 && false_blame == 0 && byz_flagged > 0 && incomplete == 0;
  o.detail = fmt::format("ops={} irregular={} correct_owner_blamed={} byzantine_writer_flagged={} incomplete={}{}", ops,
                         irregular, false_blame, byz_flagged, incomplete, first.empty() ? "" : " first=[" + first + "]");
  return o;
}

// 7. Bounded memory: flat across windows, linear in t.
Outcome memory() {
  const double kFlatTolerance = 0.01;
  const double kMinR2 = 0.99;
  harness::RunOptions opts;
  opts.trace_events = false;
  opts.sample_windows = true;

  auto flat = harness::run_scenario(
      scenario("n = 3\nf = 1\nt = 16\nwindow = 100\ndelta = 100\nseed = 21\nworkload.clients = 1\n"
               "workload.requests = 10000\n",
               "memory-flat"),
      opts);
  double worst_spread = 0;
  std::uint64_t samples = 0;
  std::map<Pid, std::pair<std::size_t, std::size_t>> range;
  for (auto const &w : flat.windows) {
    auto idx = w.start / 100;
    if (idx < 10 || idx > 100) continue;
    samples++;
    auto [it, fresh] = range.try_emplace(w.replica, w.footprint, w.footprint);
    it->second.first = std::min(it->second.first, w.footprint);
    it->second.second = std::max(it->second.second, w.footprint);
  }
  for (auto const &[p, r] : range) {
    worst_spread = std::max(worst_spread, static_cast<double>(r.second - r.first) / static_cast<double>(r.first));
  }
  bool flat_ok = !flat.failed() && flat.requests_completed == 10000 && range.size() == 3 && samples >= 3 * 80 &&
                 worst_spread < kFlatTolerance;

  std::vector<double> ts, bytes;
  for (std::uint32_t t : {16u, 32u, 64u, 128u}) {
    auto r = harness::run_scenario(
        scenario(fmt::format("n = 3\nf = 1\nt = {}\nwindow = 100\ndelta = 100\nseed = 22\nworkload.clients = 1\n"
                             "workload.requests = 2000\n",
                             t),
                 "memory-t"),
        opts);
    double sum = 0;
    std::uint64_t k = 0;
    for (auto const &w : r.windows) {
      if (w.start / 100 >= 10) {
        sum += static_cast<double>(w.footprint);
        k++;
      }
    }
    ts.push_back(t);
    bytes.push_back(k ? sum / static_cast<double>(k) : 0);
    if (r.failed()) flat_ok = false;
  }
  bool monotone = std::is_sorted(bytes.begin(), bytes.end()) && std::adjacent_find(bytes.begin(), bytes.end()) == bytes.end();
  double mx = std::accumulate(ts.begin(), ts.end(), 0.0) / 4, my = std::accumulate(bytes.begin(), bytes.end(), 0.0) / 4;
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 4; i++) {
    sxy += (ts[i] - mx) * (bytes[i] - my);
    sxx += (ts[i] - mx) * (ts[i] - mx);
    syy += (bytes[i] - my) * (bytes[i] - my);
  }
  double r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 0;
  Outcome o;
  o.pass = flat_ok && monotone && r2 >= kMinR2;
  o.detail = fmt::format("window_samples={} max_spread={:.4f}% (tol 1%) bytes@t16/32/64/128={:.0f}/{:.0f}/{:.0f}/{:.0f} "
                         "slope={:.1f}B/t r2={:.5f} monotone={}",
                         samples, 100 * worst_spread, bytes[0], bytes[1], bytes[2], bytes[3], sxx > 0 ? sxy / sxx : 0, r2,
                         monotone);
  return o;
}

// 8. Summary stalls under saturation fall as the tail grows.
Outcome thrashing() {
  harness::RunOptions opts;
  opts.trace_events = false;
  auto make = [](std::uint32_t t, std::uint32_t clients, std::uint32_t requests) {
    return scenario(fmt::format("n = 3\nf = 1\nt = {}\nwindow = 100\ndelta = 100\nseed = 31\n"
                                "workload.clients = {}\nworkload.requests = {}\n",
                                t, clients, requests),
                    "thrash");
  };
  // unloaded latency: one client, largest tail, no summary waits on the path
  auto idle = harness::run_scenario(make(32, 1, 200), opts);
  auto baseline = harness::percentile(idle.latencies, 50);
  std::vector<std::uint64_t> stalls;
  std::vector<int> onset;
  bool ok = !idle.failed() && baseline > 0;
  for (std::uint32_t t : {4u, 8u, 16u, 32u}) {
    auto r = harness::run_scenario(make(t, 48, 40), opts);
    if (r.failed()) ok = false;
    stalls.push_back(r.summary_stalls);
    onset.push_back(harness::spike_onset(r.latencies, 2.0, baseline));
  }
  bool non_increasing = std::is_sorted(stalls.rbegin(), stalls.rend());
  bool later = std::is_sorted(onset.begin(), onset.end()) && onset.back() > onset.front();
  Outcome o;
  o.pass = ok && non_increasing && later && stalls.front() > 0;
  o.detail = fmt::format("stalls@t4/8/16/32={}/{}/{}/{} onset_pct={}/{}/{}/{} (latency > 2x unloaded p50 {}) runs_clean={}",
                         stalls[0], stalls[1], stalls[2], stalls[3], onset[0], onset[1], onset[2], onset[3], baseline,
                         ok);
  return o;
}

// 9. Same seed, same bytes.
Outcome determinism() {
  harness::RunOptions opts;
  opts.trace_events = true;
  auto sc = scenario_file("leader_crash.scn");
  auto a = harness::run_scenario(sc, opts);
  auto b = harness::run_scenario(sc, opts);
  auto c_sc = scenario_file("ctb_equivocation.scn");
  auto c = harness::run_ctb_scenario(c_sc, nullptr, true);
  auto d = harness::run_ctb_scenario(c_sc, nullptr, true);
  auto other = sc;
  other.sim.seed += 1;
  auto e = harness::run_scenario(other, opts);
  Outcome o;
  o.pass = a.trace_digest == b.trace_digest && a.trace_lines == b.trace_lines && c.trace_digest == d.trace_digest &&
           e.trace_digest != a.trace_digest && a.trace_lines > 1000;
  o.detail = fmt::format("smr={} ({} lines) rerun={} ctb={} rerun={} other_seed_differs={}", a.trace_digest.substr(0, 16),
                         a.trace_lines, b.trace_digest.substr(0, 16), c.trace_digest.substr(0, 16),
                         d.trace_digest.substr(0, 16), e.trace_digest != a.trace_digest);
  return o;
}

}  // namespace

int main(int argc, char **argv) {
  struct Criterion {
    int id;
    char const *name;
    std::function<Outcome()> run;
  };
  std::vector<Criterion> all{
      {1, "ctb-fuzz", ctb_fuzz},
      {2, "ctb-vs-oracle", ctb_oracle},
      {3, "smr-agreement", smr_agreement},
      {4, "fast-path-purity", fast_path_purity},
      {5, "post-gst-recovery", post_gst_recovery},
      {6, "registers", registers},
      {7, "bounded-memory", memory},
      {8, "thrashing", thrashing},
      {9, "determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; i++) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (auto const &c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (std::exception const &e) {
      o = Outcome{false, std::string("exception: ") + e.what()};
    }
    auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) failed++;
  }
  return failed == 0 ? 0 : 1;
}
