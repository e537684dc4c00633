#include <gtest/gtest.h>

#include "ubft/app/linearizability.hpp"

using namespace ubft;
using namespace ubft::app;

namespace {

Bytes b(std::string const &s) { return Bytes(s.begin(), s.end()); }

HistoryEntry put(std::uint32_t c, std::string const &k, std::string const &v, Time inv, Time done) {
  return HistoryEntry{c, 0, ToyKV::put(k, v), b("ok"), inv, done};
}

Bytes get_result(bool found, std::string const &v) {
  ToyKV kv;
  if (found) kv.apply(ToyKV::put("_", v));
  return kv.apply(ToyKV::get(found ? "_" : "missing"));
}

HistoryEntry get(std::uint32_t c, std::string const &k, bool found, std::string const &v, Time inv, Time done) {
  return HistoryEntry{c, 0, ToyKV::get(k), get_result(found, v), inv, done};
}

}  // namespace

TEST(Flip, ReversesInput) {
  Flip f;
  EXPECT_EQ(f.apply(b("abc")), b("cba"));
  EXPECT_EQ(f.apply({}), Bytes{});
}

TEST(ToyKV, PutGetAndSnapshot) {
  ToyKV kv;
  EXPECT_EQ(kv.apply(ToyKV::put("a", "1")), b("ok"));
  auto r = ToyKV::decode_get_result(kv.apply(ToyKV::get("a")));
  EXPECT_TRUE(r.first);
  EXPECT_EQ(r.second, "1");
  EXPECT_FALSE(ToyKV::decode_get_result(kv.apply(ToyKV::get("b"))).first);
  ToyKV other;
  other.restore(kv.snapshot());
  EXPECT_EQ(other.data(), kv.data());
}

TEST(ReplicatedApp, SameRequestsSameState) {
  ReplicatedApp a(make_app("kv")), c(make_app("kv"));
  for (std::uint64_t i = 1; i <= 20; i++) {
    Request r{1 + static_cast<std::uint32_t>(i % 3), i, ToyKV::put("k" + std::to_string(i % 4), std::to_string(i))};
    auto ra = a.apply(r);
    auto rc = c.apply(r);
    ASSERT_TRUE(ra && rc);
    EXPECT_EQ(ra->result, rc->result);
  }
  EXPECT_EQ(a.snapshot(), c.snapshot());
  EXPECT_EQ(a.applied(), 20u);
}

TEST(ReplicatedApp, NoopChangesNothing) {
  ReplicatedApp a(make_app("flip"));
  auto before = a.app().snapshot();
  EXPECT_FALSE(a.apply(Request::noop()));
  EXPECT_EQ(a.app().snapshot(), before);
  // the slot still counts as applied
  EXPECT_EQ(a.applied(), 1u);
}

TEST(ReplicatedApp, DuplicateIsAnsweredNotReexecuted) {
  ReplicatedApp a(make_app("kv"));
  Request r{4, 1, ToyKV::put("x", "1")};
  a.apply(r);
  a.apply(Request{5, 1, ToyKV::put("x", "2")});
  auto again = a.apply(r);
  ASSERT_TRUE(again);
  EXPECT_EQ(again->result, b("ok"));
  EXPECT_EQ(a.last_seq(4), 1u);
  ReplicatedApp fresh(make_app("kv"));
  fresh.restore(a.snapshot());
  auto res = fresh.apply(Request{6, 1, ToyKV::get("x")});
  EXPECT_EQ(ToyKV::decode_get_result(res->result).second, "2");
}

TEST(MakeApp, UnknownNameThrows) { EXPECT_THROW(make_app("nope"), std::invalid_argument); }

TEST(Linearizability, SequentialHistoryPasses) {
  std::vector<HistoryEntry> h{put(1, "a", "1", 0, 10), get(2, "a", true, "1", 20, 30), put(1, "a", "2", 40, 50),
                              get(2, "a", true, "2", 60, 70)};
  EXPECT_TRUE(check_kv_linearizable(h).ok);
}

TEST(Linearizability, StaleReadAfterCompletedWriteFails) {
  std::vector<HistoryEntry> h{put(1, "a", "1", 0, 10), put(1, "a", "2", 20, 30), get(2, "a", true, "1", 40, 50)};
  auto r = check_kv_linearizable(h);
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.key, "a");
}

TEST(Linearizability, ConcurrentReadMayGoEitherWay) {
  std::vector<HistoryEntry> h{put(1, "a", "1", 0, 10), put(1, "a", "2", 20, 60), get(2, "a", true, "1", 30, 40),
                              get(3, "a", true, "2", 35, 45)};
  // 3 sees 2 before 2 is complete; then nobody may see 1 afterwards
  EXPECT_TRUE(check_kv_linearizable(h).ok);
  h.push_back(get(2, "a", true, "1", 50, 55));
  EXPECT_FALSE(check_kv_linearizable(h).ok);
}

TEST(Linearizability, PendingPutMayOrMayNotApply) {
  std::vector<HistoryEntry> h{put(1, "a", "1", 0, kNever), get(2, "a", false, "", 5, 8), get(2, "a", true, "1", 10, 12)};
  EXPECT_TRUE(check_kv_linearizable(h).ok);
}

TEST(Linearizability, ReadOfNeverWrittenValueFails) {
  std::vector<HistoryEntry> h{put(1, "a", "1", 0, 10), get(2, "a", true, "9", 20, 30)};
  EXPECT_FALSE(check_kv_linearizable(h).ok);
}
