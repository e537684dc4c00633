#include <gtest/gtest.h>

#include "ubft/ctb/core.hpp"

using namespace ubft;
using namespace ubft::ctb;

namespace {

crypto::CryptoService &cs() {
  static crypto::CryptoService s(crypto::Backend::Simulated, 1, 4);
  return s;
}

Core make_core(Pid self, std::uint32_t t = 4) {
  return Core(self, {0, 1, 2}, t, [](ByteView b) { return cs().digest(0, b); });
}

Bytes b(std::string const &s) { return Bytes(s.begin(), s.end()); }

}  // namespace

TEST(CtbCore, FastPathNeedsEveryMembersLocked) {
  auto c = make_core(1);
  auto fx = c.on_lock(0, 1, b("x"));
  ASSERT_EQ(fx.locked.size(), 1u);
  EXPECT_EQ(fx.locked[0].type, WireType::Locked);
  EXPECT_TRUE(c.on_locked(0, 0, 1, b("x")).deliveries.empty());
  EXPECT_TRUE(c.on_locked(1, 0, 1, b("x")).deliveries.empty());
  auto last = c.on_locked(2, 0, 1, b("x"));
  ASSERT_EQ(last.deliveries.size(), 1u);
  EXPECT_EQ(last.deliveries[0].path, Path::Fast);
  EXPECT_EQ(last.deliveries[0].m, b("x"));
  EXPECT_TRUE(c.delivered(0, 1));
  // a repeat is not delivered twice
  EXPECT_TRUE(c.on_locked(2, 0, 1, b("x")).deliveries.empty());
}

TEST(CtbCore, LockIsFirstComeAndNotReissued) {
  auto c = make_core(1);
  EXPECT_EQ(c.on_lock(0, 1, b("x")).locked.size(), 1u);
  EXPECT_TRUE(c.on_lock(0, 1, b("y")).locked.empty());
  EXPECT_EQ(c.lock_in_slot(0, 1), 1u);
}

TEST(CtbCore, SplitLockedNeverDeliversFast) {
  auto c = make_core(1);
  c.on_locked(0, 0, 1, b("x"));
  c.on_locked(1, 0, 1, b("x"));
  EXPECT_TRUE(c.on_locked(2, 0, 1, b("y")).deliveries.empty());
  EXPECT_FALSE(c.delivered(0, 1));
}

TEST(CtbCore, NewerIdInSlotSupersedesOlder) {
  auto c = make_core(1, 2);
  for (Pid q : {0u, 1u}) c.on_locked(q, 0, 1, b("a"));
  for (Pid q : {0u, 1u, 2u}) c.on_locked(q, 0, 3, b("c"));
  EXPECT_TRUE(c.delivered(0, 3));
  // 1 shares the slot with 3 and is now out of the tail
  EXPECT_TRUE(c.on_locked(2, 0, 1, b("a")).deliveries.empty());
  EXPECT_EQ(c.delivered_in_slot(0, 1), 3u);
}

TEST(CtbCore, SlowPathRespectsLock) {
  auto c = make_core(1);
  c.on_lock(0, 1, b("x"));
  crypto::Signature sig;
  EXPECT_FALSE(c.on_signed(0, 1, b("y"), sig, true).slow);
  EXPECT_FALSE(c.on_signed(0, 1, b("x"), sig, false).slow);
  auto fx = c.on_signed(0, 1, b("x"), sig, true);
  ASSERT_TRUE(fx.slow);
  EXPECT_EQ(fx.slow->k, 1u);
}

TEST(CtbCore, SlowPathDeliversWhenRegistersAgree) {
  auto c = make_core(1);
  auto d = cs().digest(0, b("x"));
  std::vector<CellView> cells{{0, 1, d, true}, {1, 1, d, true}, {2, 0, {}, false}};
  auto fx = c.finish_slow(0, 1, b("x"), d, cells);
  ASSERT_EQ(fx.deliveries.size(), 1u);
  EXPECT_EQ(fx.deliveries[0].path, Path::Slow);
}

TEST(CtbCore, SlowPathAbortsOnEquivocation) {
  auto c = make_core(1);
  auto dx = cs().digest(0, b("x"));
  auto dy = cs().digest(0, b("y"));
  std::vector<CellView> cells{{0, 1, dx, true}, {2, 1, dy, true}};
  auto fx = c.finish_slow(0, 1, b("x"), dx, cells);
  EXPECT_TRUE(fx.deliveries.empty());
  ASSERT_EQ(fx.aborts.size(), 1u);
  EXPECT_EQ(fx.aborts[0].reason, AbortReason::Equivocation);
}

TEST(CtbCore, SlowPathIgnoresUnsignedCells) {
  auto c = make_core(1);
  auto dx = cs().digest(0, b("x"));
  auto dy = cs().digest(0, b("y"));
  std::vector<CellView> cells{{0, 1, dx, true}, {2, 1, dy, false}};
  EXPECT_EQ(c.finish_slow(0, 1, b("x"), dx, cells).deliveries.size(), 1u);
}

TEST(CtbCore, SlowPathAbortsOutOfTail) {
  auto c = make_core(1, 2);
  auto d1 = cs().digest(0, b("a"));
  auto d3 = cs().digest(0, b("c"));
  std::vector<CellView> cells{{0, 3, d3, true}};
  auto fx = c.finish_slow(0, 1, b("a"), d1, cells);
  ASSERT_EQ(fx.aborts.size(), 1u);
  EXPECT_EQ(fx.aborts[0].reason, AbortReason::OutOfTail);
}

TEST(CtbWire, RoundTrip) {
  Wire w{WireType::Signed, 2, 9, b("payload"), cs().sign(2, b("z"), crypto::CryptoPath::Critical)};
  auto back = Wire::decode(w.encode());
  EXPECT_EQ(back.type, w.type);
  EXPECT_EQ(back.broadcaster, 2u);
  EXPECT_EQ(back.k, 9u);
  EXPECT_EQ(back.m, w.m);
  EXPECT_EQ(back.sig, w.sig);
  auto bad = w.encode();
  bad[0] = 9;
  EXPECT_THROW(Wire::decode(bad), DecodeError);
}
