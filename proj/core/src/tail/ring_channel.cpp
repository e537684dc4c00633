#include "ubft/tail/ring_channel.hpp"

#include <algorithm>

namespace ubft::tail {

std::uint64_t slot_checksum(crypto::CryptoService &cs, Pid who, std::uint64_t incarnation,
                            ByteView payload) {
  Encoder e(payload.size() + 12);
  e.u64(incarnation).u32(static_cast<std::uint32_t>(payload.size())).raw(payload);
  return cs.checksum(who, e.view());
}

ChannelStats &ChannelStats::operator+=(ChannelStats const &o) {
  sends += o.sends;
  overwrites += o.overwrites;
  staged += o.staged;
  staged_evictions += o.staged_evictions;
  delivered += o.delivered;
  skips += o.skips;
  torn_copies += o.torn_copies;
  bad_checksums += o.bad_checksums;
  stale_landings += o.stale_landings;
  return *this;
}

Bytes encode_slot_write(std::uint32_t slot, Slot const &s) {
  Encoder e(s.payload.size() + 32);
  e.u32(slot).u64(s.incarnation).u32(s.size).u64(s.cksum).raw(s.payload);
  return e.take();
}

ChannelSender::ChannelSender(sim::Simulator &sim, sim::Network &net, crypto::CryptoService &cs,
                             Pid self, Pid peer, std::uint64_t channel, std::uint32_t t,
                             std::size_t staging_cap)
    : sim_{sim},
      net_{net},
      cs_{cs},
      self_{self},
      peer_{peer},
      channel_{channel},
      t_{t},
      staging_cap_{staging_cap},
      busy_(t, false),
      used_(t, false) {}

void ChannelSender::send(Bytes msg) {
  stats_.sends++;
  if (staging_.empty() && !busy_[next_msg_ % t_]) {
    write(std::move(msg));
    return;
  }
  stats_.staged++;
  if (staging_.size() >= staging_cap_) {
    staging_.pop_front();
    stats_.staged_evictions++;
  }
  staging_.push_back(std::move(msg));
}

void ChannelSender::write(Bytes msg) {
  auto j = next_msg_++;
  auto s = static_cast<std::uint32_t>(j % t_);
  Slot slot;
  slot.incarnation = j / t_ + 1;
  slot.size = static_cast<std::uint32_t>(msg.size());
  slot.cksum = slot_checksum(cs_, self_, slot.incarnation, msg);
  slot.payload = std::move(msg);
  if (mutate) mutate(slot);
  if (used_[s]) stats_.overwrites++;
  used_[s] = true;
  busy_[s] = true;
  net_.send(self_, peer_, channel_, encode_slot_write(s, slot), sim::LinkClass::Message,
            [this, s]() {
              busy_[s] = false;
              pump();
            });
}

void ChannelSender::pump() {
  while (!staging_.empty() && !busy_[next_msg_ % t_]) {
    auto msg = std::move(staging_.front());
    staging_.pop_front();
    write(std::move(msg));
  }
}

std::size_t ChannelSender::bytes() const {
  std::size_t total = 64 + t_ / 4;
  for (auto const &m : staging_) total += m.size() + 8;
  return total;
}

ChannelReceiver::ChannelReceiver(sim::Simulator &sim, crypto::CryptoService &cs, Pid self,
                                 std::uint32_t t, Time copy_time, Deliver deliver)
    : sim_{sim},
      cs_{cs},
      self_{self},
      t_{t},
      copy_time_{copy_time},
      deliver_{std::move(deliver)},
      slots_(t),
      version_(t, 0) {}

void ChannelReceiver::on_landing(Bytes const &wire) {
  Decoder d(wire);
  auto s = d.u32();
  if (s >= t_) throw DecodeError("slot index out of range");
  Slot img;
  img.incarnation = d.u64();
  img.size = d.u32();
  img.cksum = d.u64();
  img.payload = d.raw(d.remaining());
  // Writes to one slot complete in order on a reliable connection; an older
  // image arriving late never replaces a newer one.
  if (img.incarnation < slots_[s].incarnation) {
    stats_.stale_landings++;
    return;
  }
  capacity_ = std::max(capacity_, img.payload.size());
  slots_[s] = std::move(img);
  version_[s]++;
  if (!copying_) poll();
}

bool ChannelReceiver::try_deliver(std::size_t s) {
  auto const &slot = slots_[s];
  if (slot.size != slot.payload.size() ||
      slot_checksum(cs_, self_, slot.incarnation, slot.payload) != slot.cksum) {
    stats_.bad_checksums++;
    return false;  // wait for the next landing instead of spinning
  }
  next_++;
  stats_.delivered++;
  deliver_(slot.payload);
  return true;
}

void ChannelReceiver::poll() {
  while (true) {
    auto s = static_cast<std::size_t>(next_ % t_);
    auto expect = next_ / t_ + 1;
    auto const &slot = slots_[s];
    if (slot.incarnation == expect) {
      if (copy_time_ > 0) {
        copying_ = true;
        auto version = version_[s];
        sim_.timer(self_, copy_time_, [this, s, version, expect]() {
          copying_ = false;
          if (version_[s] != version || slots_[s].incarnation != expect) {
            stats_.torn_copies++;
            poll();
            return;
          }
          if (try_deliver(s)) poll();
        });
        return;
      }
      if (!try_deliver(s)) return;
      continue;
    }
    if (slot.incarnation > expect) {
      std::uint64_t best = UINT64_MAX;
      for (std::size_t i = 0; i < t_; i++) {
        if (slots_[i].incarnation == 0) continue;
        auto msg_no = (slots_[i].incarnation - 1) * t_ + i;
        if (msg_no >= next_) best = std::min(best, msg_no);
      }
      stats_.skips += best - next_;
      next_ = best;
      continue;
    }
    return;
  }
}

std::size_t ChannelReceiver::bytes() const {
  return t_ * (Slot::kHeader + capacity_) + 32;
}

}  // namespace ubft::tail
