#include "ubft/ctb/core.hpp"

#include <algorithm>

namespace ubft::ctb {

Bytes Wire::encode() const {
  Encoder e(m.size() + 128);
  e.u8(static_cast<std::uint8_t>(type)).u32(broadcaster).u64(k).bytes(m);
  if (type == WireType::Signed) {
    if (!sig) throw DecodeError("SIGNED without signature");
    sig->encode(e);
  }
  return e.take();
}

Wire Wire::decode(ByteView data) {
  Decoder d(data);
  Wire w;
  auto type = d.u8();
  if (type < 1 || type > 3) throw DecodeError("unknown tail-broadcast wire type");
  w.type = static_cast<WireType>(type);
  w.broadcaster = d.u32();
  w.k = d.u64();
  w.m = d.bytes();
  if (w.type == WireType::Signed) w.sig = crypto::Signature::decode(d);
  d.expect_end();
  return w;
}

Bytes signed_payload(Pid broadcaster, std::uint64_t k, crypto::Digest const &d) {
  Encoder e(48);
  e.u8(0x5c).u32(broadcaster).u64(k).raw(d.bytes);
  return e.take();
}

char const *path_name(Path p) {
  switch (p) {
    case Path::Fast: return "fast";
    case Path::Slow: return "slow";
    case Path::Summary: return "summary";
  }
  return "?";
}

void Effects::merge(Effects &&o) {
  for (auto &w : o.locked) locked.push_back(std::move(w));
  for (auto &d : o.deliveries) deliveries.push_back(std::move(d));
  for (auto &a : o.aborts) aborts.push_back(a);
  if (o.slow) slow = std::move(o.slow);
}

Core::Core(Pid self, std::vector<Pid> members, std::uint32_t t, DigestFn digest)
    : self_{self}, members_{std::move(members)}, t_{t}, digest_{std::move(digest)} {}

Core::Instance &Core::inst(Pid broadcaster) {
  auto it = inst_.find(broadcaster);
  if (it == inst_.end()) {
    Instance in;
    in.locks.resize(t_);
    in.delivered.assign(t_, 0);
    for (auto q : members_) in.locked[q].resize(t_);
    it = inst_.emplace(broadcaster, std::move(in)).first;
  }
  return it->second;
}

void Core::deliver_once(Instance &in, Pid broadcaster, std::uint64_t k, Bytes const &m, Path path,
                        Effects &fx) {
  auto &d = in.delivered[k % t_];
  if (k <= d) return;
  d = k;
  fx.deliveries.push_back(Delivery{broadcaster, k, m, path});
}

Effects Core::on_lock(Pid broadcaster, std::uint64_t k, Bytes const &m) {
  Effects fx;
  if (k == 0) return fx;
  auto &in = inst(broadcaster);
  auto &lock = in.locks[k % t_];
  if (k > lock.k) {
    lock = Entry{k, digest_(m)};
    fx.locked.push_back(Wire{WireType::Locked, broadcaster, k, m, std::nullopt});
  }
  return fx;
}

Effects Core::on_locked(Pid from, Pid broadcaster, std::uint64_t k, Bytes const &m) {
  Effects fx;
  if (k == 0) return fx;
  auto &in = inst(broadcaster);
  auto row = in.locked.find(from);
  if (row == in.locked.end()) return fx;  // not a member
  auto s = k % t_;
  auto &cell = row->second[s];
  if (k <= cell.k) return fx;
  cell = Entry{k, digest_(m)};
  bool unanimous = std::all_of(in.locked.begin(), in.locked.end(), [&](auto const &r) {
    return r.second[s].k == cell.k && r.second[s].d == cell.d;
  });
  if (unanimous) deliver_once(in, broadcaster, k, m, Path::Fast, fx);
  return fx;
}

Effects Core::on_signed(Pid broadcaster, std::uint64_t k, Bytes const &m,
                        crypto::Signature const &sig, bool sig_valid) {
  Effects fx;
  if (!sig_valid || k == 0) return fx;
  auto &in = inst(broadcaster);
  auto &lock = in.locks[k % t_];
  auto d = digest_(m);
  // The register write, the reads, and the delivery all sit behind the lock
  // compatibility check; a receiver that locked a different message for k
  // never delivers through the slow path.
  if (k > lock.k || (k == lock.k && d == lock.d)) {
    lock = Entry{k, d};
    fx.slow = SlowJob{broadcaster, k, m, d, sig};
  }
  return fx;
}

Effects Core::finish_slow(Pid broadcaster, std::uint64_t k, Bytes const &m,
                          crypto::Digest const &digest, std::vector<CellView> const &cells) {
  Effects fx;
  for (auto const &c : cells) {
    if (!c.sig_valid) continue;
    if (c.k == k && c.digest != digest) {
      fx.aborts.push_back(Abort{broadcaster, k, AbortReason::Equivocation});
      return fx;
    }
    if (c.k > k && c.k % t_ == k % t_) {
      fx.aborts.push_back(Abort{broadcaster, k, AbortReason::OutOfTail});
      return fx;
    }
  }
  deliver_once(inst(broadcaster), broadcaster, k, m, Path::Slow, fx);
  return fx;
}

std::uint64_t Core::delivered_in_slot(Pid broadcaster, std::uint64_t slot) const {
  auto it = inst_.find(broadcaster);
  return it == inst_.end() ? 0 : it->second.delivered.at(slot);
}

bool Core::delivered(Pid broadcaster, std::uint64_t k) const {
  return k != 0 && delivered_in_slot(broadcaster, k % t_) >= k;
}

std::uint64_t Core::lock_in_slot(Pid broadcaster, std::uint64_t slot) const {
  auto it = inst_.find(broadcaster);
  return it == inst_.end() ? 0 : it->second.locks.at(slot).k;
}

Bytes Core::encode_state() const {
  Encoder e;
  for (auto const &[b, in] : inst_) {
    e.u32(b);
    for (auto const &l : in.locks) e.u64(l.k).raw(l.d.bytes);
    for (auto const &[q, row] : in.locked) {
      e.u32(q);
      for (auto const &l : row) e.u64(l.k).raw(l.d.bytes);
    }
    for (auto d : in.delivered) e.u64(d);
  }
  return e.take();
}

std::size_t Core::bytes() const {
  std::size_t per_entry = 8 + 32;
  std::size_t total = 0;
  for (auto const &[_, in] : inst_) {
    total += t_ * per_entry + t_ * 8 + in.locked.size() * t_ * per_entry;
  }
  return total;
}

}  // namespace ubft::ctb
