#include <gtest/gtest.h>

#include <sstream>

#include "ubft/sim/fault.hpp"
#include "ubft/sim/network.hpp"
#include "ubft/sim/simulator.hpp"

using namespace ubft;
using namespace ubft::sim;

namespace {

SimConfig cfg_with(std::uint64_t seed, Time gst = 0) {
  SimConfig c;
  c.seed = seed;
  c.gst = gst;
  c.delta = 100;
  return c;
}

}  // namespace

TEST(Simulator, SameInstantRunsInScheduleOrder) {
  Tracer tr;
  Simulator sim(cfg_with(1), &tr);
  auto p = sim.add_process(Role::Replica);
  std::vector<int> order;
  for (int i = 0; i < 10; i++) sim.at(50, p, [&order, i]() { order.push_back(i); });
  sim.at(10, p, [&order]() { order.push_back(-1); });
  sim.run_until(nullptr, 1000, 1000);
  ASSERT_EQ(order.size(), 11u);
  EXPECT_EQ(order[0], -1);
  for (int i = 0; i < 10; i++) EXPECT_EQ(order[i + 1], i);
}

TEST(Simulator, CrashedProcessTimersDoNotFire) {
  Tracer tr;
  Simulator sim(cfg_with(1), &tr);
  auto p = sim.add_process(Role::Replica);
  int fired = 0;
  sim.timer(p, 100, [&fired]() { fired++; });
  sim.crash_at(50, p);
  sim.run_until(nullptr, 1000, 1000);
  EXPECT_EQ(fired, 0);
  EXPECT_FALSE(sim.alive(p));
}

TEST(Simulator, SameSeedSameTrace) {
  auto run = [](std::uint64_t seed) {
    Tracer tr;
    TextTraceWriter w(nullptr, true);
    tr.attach(&w);
    Simulator sim(cfg_with(seed, 500), &tr);
    Network net(sim);
    auto a = sim.add_process(Role::Replica);
    auto b = sim.add_process(Role::Replica);
    int hops = 0;
    net.attach(b, [&](Pid, std::uint64_t, Bytes const &p) {
      if (++hops < 40) net.send(b, a, 7, p);
    });
    net.attach(a, [&](Pid, std::uint64_t, Bytes const &p) { net.send(a, b, 7, p); });
    net.send(a, b, 7, Bytes{1, 2, 3});
    sim.run_until(nullptr, 100000, 100000);
    return w.text();
  };
  EXPECT_EQ(run(5), run(5));
  EXPECT_NE(run(5), run(6));
}

TEST(Network, PostGstDelayBoundedByDelta) {
  Tracer tr;
  Simulator sim(cfg_with(9, 0), &tr);
  Network net(sim);
  auto a = sim.add_process(Role::Replica);
  auto b = sim.add_process(Role::Replica);
  for (int i = 0; i < 5000; i++) {
    auto d = net.deliver_delay(a, b, LinkClass::Message);
    ASSERT_GE(d, 1);
    ASSERT_LE(d, 100);
  }
}

TEST(Network, PreGstDelaysStayUnderCap) {
  Tracer tr;
  auto c = cfg_with(3, 1'000'000);
  c.pre_gst_cap_factor = 10;
  Simulator sim(c, &tr);
  Network net(sim);
  auto a = sim.add_process(Role::Replica);
  auto b = sim.add_process(Role::Replica);
  Time worst = 0;
  int beyond_delta = 0;
  for (int i = 0; i < 5000; i++) {
    auto d = net.deliver_delay(a, b, LinkClass::Message);
    ASSERT_GE(d, 0);
    ASSERT_LE(d, 1000);
    worst = std::max(worst, d);
    if (d > 100) beyond_delta++;
  }
  // asynchrony must actually show up before GST
  EXPECT_GT(beyond_delta, 1000);
  EXPECT_GT(worst, 900);
}

TEST(Network, InFlightAtGstLandsWithinDelta) {
  Tracer tr;
  auto c = cfg_with(4, 300);
  c.pre_gst_cap_factor = 100;
  Simulator sim(c, &tr);
  Network net(sim);
  auto a = sim.add_process(Role::Replica);
  auto b = sim.add_process(Role::Replica);
  std::vector<Time> arrivals;
  net.attach(b, [&](Pid, std::uint64_t, Bytes const &) { arrivals.push_back(sim.now()); });
  for (int i = 0; i < 200; i++) net.send(a, b, 1, Bytes{0});
  sim.run_until(nullptr, 1'000'000, 100000);
  ASSERT_EQ(arrivals.size(), 200u);
  for (auto t : arrivals) EXPECT_LE(t, 400);
}

TEST(Network, MemoryLinksAreFifoAndFast) {
  Tracer tr;
  Simulator sim(cfg_with(2, 1'000'000), &tr);
  Network net(sim);
  auto a = sim.add_process(Role::Replica);
  auto m = sim.add_process(Role::MemoryNode);
  std::vector<std::uint8_t> seen;
  std::vector<Time> at;
  net.attach(m, [&](Pid, std::uint64_t, Bytes const &p) {
    seen.push_back(p[0]);
    at.push_back(sim.now());
  });
  for (std::uint8_t i = 0; i < 100; i++) net.send(a, m, 1, Bytes{i}, LinkClass::Memory);
  sim.run_until(nullptr, 1'000'000, 100000);
  ASSERT_EQ(seen.size(), 100u);
  for (std::uint8_t i = 0; i < 100; i++) EXPECT_EQ(seen[i], i);
  for (auto t : at) EXPECT_LE(t, 100);
}

TEST(Simulator, ClockDriftWithinBound) {
  Tracer tr;
  auto c = cfg_with(11);
  c.drift_bound = 1.01;
  Simulator sim(c, &tr);
  for (int i = 0; i < 50; i++) {
    auto p = sim.add_process(Role::Replica);
    auto r = sim.clock_rate(p);
    EXPECT_GE(r, 1.0 / 1.01 - 1e-12);
    EXPECT_LE(r, 1.01 + 1e-12);
  }
  // a 100-tick local timer spans 99..101 global ticks
  for (Pid p = 0; p < 50; p++) {
    auto g = sim.to_global(p, 100);
    EXPECT_GE(g, 99);
    EXPECT_LE(g, 102);
  }
}

TEST(SimConfig, RejectsBadReplicaCount) {
  SimConfig c;
  c.n_replicas = 4;
  EXPECT_THROW(c.validate(), ConfigError);
  c.n_replicas = 3;
  c.n_mem = 2;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(FaultPlan, RejectsTooManyFaultyReplicas) {
  SimConfig c;
  FaultPlan plan;
  FaultEntry e;
  e.victim = Victim{Role::Replica, 0};
  plan.entries.push_back(e);
  EXPECT_NO_THROW(validate_plan(plan, c, 1));
  e.victim.index = 1;
  e.behavior = Behavior::ByzSilent;
  plan.entries.push_back(e);
  EXPECT_THROW(validate_plan(plan, c, 1), ConfigError);
}

TEST(FaultPlan, RejectsByzantineMemory) {
  SimConfig c;
  FaultPlan plan;
  FaultEntry e;
  e.victim = Victim{Role::MemoryNode, 0};
  e.behavior = Behavior::ByzBadChecksum;
  plan.entries.push_back(e);
  EXPECT_THROW(validate_plan(plan, c, 1), ConfigError);
}

TEST(Trace, RecordRoundTrip) {
  Record r{1234, 2, RecordKind::Decide, {3, 17, 1, 0}, 0xabcdef0123456789ULL};
  auto line = format_record(r);
  auto back = parse_record(line);
  EXPECT_EQ(back.time, r.time);
  EXPECT_EQ(back.process, r.process);
  EXPECT_EQ(back.kind, r.kind);
  EXPECT_EQ(back.digest, r.digest);
  EXPECT_EQ(format_record(back), line);
  EXPECT_THROW(parse_record("garbage"), std::invalid_argument);
}
