#include <gtest/gtest.h>

#include <sstream>

#include "ubft/harness/report.hpp"

using namespace ubft;
using namespace ubft::harness;
using sim::Record;
using sim::RecordKind;

namespace {

Record rec(Time t, Pid p, RecordKind k, std::array<std::int64_t, 4> f, std::uint64_t d) {
  return Record{t, p, k, f, d};
}

bool has(std::vector<Violation> const &v, std::string const &inv) {
  for (auto const &x : v) {
    if (x.invariant == inv) return true;
  }
  return false;
}

}  // namespace

TEST(ScenarioParser, ReadsKeysAndFaults) {
  auto sc = parse_scenario(
      "n = 3\nf = 1\nt = 4\nwindow = 16\ndelta = 50\ngst = 10d\n"
      "fault = at 3d replica 0 crash\nworkload.requests = 7\n",
      "x");
  EXPECT_EQ(sc.t, 4u);
  EXPECT_EQ(sc.window, 16u);
  EXPECT_EQ(sc.sim.gst, 500);
  EXPECT_EQ(sc.workload.requests, 7u);
  ASSERT_EQ(sc.faults.entries.size(), 1u);
  EXPECT_EQ(sc.faults.entries[0].trigger.at, 150);
  EXPECT_EQ(sc.faults.entries[0].behavior, sim::Behavior::Crash);
}

TEST(ScenarioParser, ErrorsCarryLineNumbers) {
  try {
    parse_scenario("n = 3\n# comment\nbogus_key = 1\n");
    FAIL() << "expected an error";
  } catch (ScenarioError const &e) {
    EXPECT_EQ(e.line(), 3u);
  }
  try {
    parse_scenario("n = 3\nfault = at 0 replica 0 dance\n");
    FAIL() << "expected an error";
  } catch (ScenarioError const &e) {
    EXPECT_EQ(e.line(), 2u);
  }
  // two faulty replicas exceed f = 1
  EXPECT_ANY_THROW(parse_scenario("fault = at 0 replica 0 crash\nfault = at 0 replica 1 byz-silent\n"));
}

TEST(Checker, CatchesPlantedDisagreement) {
  Checker c;
  c.on_record(rec(0, 0, RecordKind::RunConfig, {3, 1, 8, 100}, 0));
  c.on_record(rec(10, 0, RecordKind::Decide, {0, 5, 0, 0}, 0xaaaa));
  c.on_record(rec(11, 1, RecordKind::Decide, {0, 5, 1, 0}, 0xaaaa));
  EXPECT_TRUE(c.violations().empty());
  c.on_record(rec(12, 2, RecordKind::Decide, {1, 5, 1, 0}, 0xbbbb));
  EXPECT_TRUE(has(c.violations(), "smr.agreement"));
}

TEST(Checker, ByzantineDecisionsDoNotCount) {
  Checker c;
  c.on_record(rec(0, 0, RecordKind::RunConfig, {3, 1, 8, 100}, 0));
  c.on_record(rec(0, 2, RecordKind::RunFault, {static_cast<std::int64_t>(sim::Behavior::ByzEquivocate), 0, 2, 0}, 0));
  c.on_record(rec(10, 0, RecordKind::Decide, {0, 5, 0, 0}, 0xaaaa));
  c.on_record(rec(12, 2, RecordKind::Decide, {0, 5, 0, 0}, 0xbbbb));
  EXPECT_TRUE(c.violations().empty());
}

TEST(Checker, CatchesCtbDuplicateAndForgery) {
  Checker c;
  c.on_record(rec(0, 0, RecordKind::RunConfig, {3, 1, 2, 0}, 0));
  c.on_record(rec(1, 0, RecordKind::CtbBroadcast, {1, 0, 0, 0}, 0x11));
  c.on_record(rec(2, 1, RecordKind::CtbDeliver, {0, 1, 0, 0}, 0x11));
  c.on_record(rec(3, 1, RecordKind::CtbDeliver, {0, 1, 0, 0}, 0x11));
  EXPECT_TRUE(has(c.violations(), "ctb.no_duplication"));
  c.on_record(rec(4, 2, RecordKind::CtbDeliver, {0, 1, 0, 0}, 0x22));
  EXPECT_TRUE(has(c.violations(), "ctb.agreement"));
  EXPECT_TRUE(has(c.violations(), "ctb.integrity"));
}

TEST(Checker, TailValidityAtQuiesce) {
  Checker c;
  c.on_record(rec(0, 0, RecordKind::RunConfig, {3, 1, 2, 0}, 0));
  for (std::int64_t k = 1; k <= 3; k++) c.on_record(rec(k, 0, RecordKind::CtbBroadcast, {k, 0, 0, 0}, 0x10 + k));
  for (Pid p : {0u, 1u}) {
    for (std::int64_t k = 2; k <= 3; k++) c.on_record(rec(9, p, RecordKind::CtbDeliver, {0, k, 0, 0}, 0x10 + k));
  }
  c.on_record(rec(9, 2, RecordKind::CtbDeliver, {0, 3, 0, 0}, 0x13));
  c.on_record(rec(20, 0, RecordKind::RunQuiesce, {}, 0));
  auto v = c.finish();
  EXPECT_TRUE(has(v, "ctb.tail_validity"));
  EXPECT_EQ(v.size(), 1u);
}

TEST(Checker, StaleRegisterReadIsIrregular) {
  Checker c;
  c.on_record(rec(0, 0, RecordKind::RunConfig, {3, 1, 2, 0}, 0));
  c.on_record(rec(1, 0, RecordKind::RegWriteBegin, {7, 1, 0, 0}, 0));
  c.on_record(rec(5, 0, RecordKind::RegWriteEnd, {7, 1, 0, 0}, 0));
  c.on_record(rec(6, 0, RecordKind::RegWriteBegin, {7, 2, 0, 0}, 0));
  c.on_record(rec(9, 0, RecordKind::RegWriteEnd, {7, 2, 0, 0}, 0));
  c.on_record(rec(10, 1, RecordKind::RegReadBegin, {0, 7, 1, 0}, 0));
  c.on_record(rec(12, 1, RecordKind::RegReadEnd, {0, 7, 1, 2}, 0));
  EXPECT_TRUE(c.violations().empty());
  c.on_record(rec(20, 1, RecordKind::RegReadBegin, {0, 7, 2, 0}, 0));
  c.on_record(rec(22, 1, RecordKind::RegReadEnd, {0, 7, 2, 1}, 0));
  EXPECT_TRUE(has(c.violations(), "reg.regularity"));
  c.on_record(rec(30, 1, RecordKind::RegReadBegin, {0, 7, 3, 0}, 0));
  c.on_record(rec(32, 1, RecordKind::RegReadEnd, {0, 7, 3, -1}, 0));
  EXPECT_TRUE(has(c.violations(), "reg.detection_soundness"));
}

TEST(Checker, OfflineTraceMatchesOnline) {
  std::stringstream ss;
  ss << sim::format_record(rec(0, 0, RecordKind::RunConfig, {3, 1, 8, 100}, 0)) << "\n";
  ss << sim::format_record(rec(10, 0, RecordKind::Decide, {0, 5, 0, 0}, 0xaaaa)) << "\n";
  ss << sim::format_record(rec(12, 1, RecordKind::Decide, {0, 5, 0, 0}, 0xbbbb)) << "\n";
  auto v = check_trace(ss);
  EXPECT_TRUE(has(v, "smr.agreement"));
  std::stringstream bad("0\t0\trun.config n=3\n???\n");
  EXPECT_THROW(check_trace(bad), std::invalid_argument);
}

TEST(Stats, NearestRankPercentile) {
  std::vector<Time> v{5, 1, 4, 2, 3};
  EXPECT_EQ(percentile(v, 50), 3);
  EXPECT_EQ(percentile(v, 100), 5);
  EXPECT_EQ(percentile(v, 1), 1);
  EXPECT_EQ(percentile({}, 50), 0);
}

TEST(Stats, SpikeOnset) {
  std::vector<Time> flat(100, 10);
  EXPECT_EQ(spike_onset(flat, 2.0), 101);
  auto spiky = flat;
  for (int i = 0; i < 5; i++) spiky[static_cast<std::size_t>(i)] = 100;
  EXPECT_EQ(spike_onset(spiky, 2.0), 96);
  // a uniformly slow sample has no spike against itself but does against an
  // unloaded baseline
  std::vector<Time> slow(100, 30);
  EXPECT_EQ(spike_onset(slow, 2.0), 101);
  EXPECT_EQ(spike_onset(slow, 2.0, 10), 1);
  EXPECT_EQ(spike_onset(spiky, 2.0, 10), 96);
}

TEST(World, FailureFreeRunIsCleanAndDeterministic) {
  auto sc = parse_scenario("n = 3\nf = 1\nt = 8\nwindow = 16\nseed = 4\nworkload.requests = 60\n", "small");
  RunOptions opts;
  opts.trace_events = true;
  auto a = run_scenario(sc, opts);
  auto b = run_scenario(sc, opts);
  EXPECT_FALSE(a.failed());
  EXPECT_EQ(a.requests_completed, 60u);
  EXPECT_EQ(a.trace_digest, b.trace_digest);
  EXPECT_EQ(a.trace_lines, b.trace_lines);
  sc.sim.seed = 5;
  EXPECT_NE(run_scenario(sc, opts).trace_digest, a.trace_digest);
}

TEST(CtbWorldRun, CrashedBroadcasterStaysSafe) {
  auto sc = parse_scenario("mode = ctb\nt = 2\nctb.broadcasts = 8\nfault = at 3d replica 1 crash\nseed = 3\n", "c");
  auto r = run_ctb_scenario(sc);
  EXPECT_TRUE(r.quiesced);
  EXPECT_TRUE(r.violations.empty());
  EXPECT_GT(r.checks["ctb.tail_validity"], 0u);
}
