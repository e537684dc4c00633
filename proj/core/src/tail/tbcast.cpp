#include "ubft/tail/tbcast.hpp"

#include <algorithm>

#include "ubft/common/channel.hpp"

namespace ubft::tail {

TbHub::TbHub(sim::Simulator &sim, sim::Network &net, crypto::CryptoService &cs, Pid self,
             std::vector<Pid> members, TbConfig cfg)
    : sim_{sim}, net_{net}, cs_{cs}, self_{self}, members_{std::move(members)}, cfg_{cfg} {}

bool TbHub::handles(std::uint64_t channel) {
  auto kind = ChannelKey::unpack(channel).kind;
  return kind == ChannelKind::TbData || kind == ChannelKind::TbAck;
}

ChannelSender &TbHub::sender(Pid dst, std::uint8_t stream) {
  auto &slot = senders_[{dst, stream}];
  if (!slot) {
    ChannelKey key{ChannelKind::TbData, stream, 0, self_, dst};
    slot = std::make_unique<ChannelSender>(sim_, net_, cs_, self_, dst, key.pack(), cfg_.t,
                                           2 * cfg_.t);
    auto m = mutators_.find({dst, stream});
    if (m != mutators_.end()) slot->mutate = m->second;
  }
  return *slot;
}

ChannelReceiver &TbHub::receiver(Pid src, std::uint8_t stream) {
  auto &slot = receivers_[{src, stream}];
  if (!slot) {
    slot = std::make_unique<ChannelReceiver>(
        sim_, cs_, self_, cfg_.t, cfg_.copy_time,
        [this, src, stream](Bytes const &wire) { on_channel(src, stream, wire); });
  }
  return *slot;
}

void TbHub::set_slot_mutator(Pid dst, std::uint8_t stream, std::function<void(Slot &)> fn) {
  mutators_[{dst, stream}] = fn;
  auto it = senders_.find({dst, stream});
  if (it != senders_.end()) it->second->mutate = std::move(fn);
}

void TbHub::transmit(Pid dst, std::uint8_t stream, std::uint64_t k, Bytes const &m) {
  Encoder e(m.size() + 8);
  e.u64(k).raw(m);
  sender(dst, stream).send(e.take());
}

std::uint64_t TbHub::broadcast(std::uint8_t stream, Bytes m) {
  return broadcast_to(stream, [&m](Pid) { return std::optional<Bytes>(m); });
}

std::uint64_t TbHub::broadcast_to(std::uint8_t stream, PerReceiver const &per_receiver) {
  auto &out = out_[stream];
  auto k = out.next_k++;
  stats_.broadcasts++;
  if (out.buffer.size() >= depth()) {
    out.buffer.pop_front();
    stats_.evictions++;
  }
  Entry entry;
  entry.k = k;
  auto local = sim_.local_now(self_);
  for (auto p : members_) {
    auto m = per_receiver(p);
    if (!m) continue;
    if (p == self_) {
      sim_.at(sim_.now(), self_, [this, stream, k, m = *m]() {
        stats_.deliveries++;
        if (deliver_) deliver_(self_, stream, k, m);
      });
      continue;
    }
    transmit(p, stream, k, *m);
    entry.pending[p] = Pending{local + cfg_.first_resend, cfg_.first_resend};
    entry.payload[p] = std::move(*m);
  }
  out.buffer.push_back(std::move(entry));
  arm();
  return k;
}

void TbHub::resend_all(std::uint8_t stream) {
  auto it = out_.find(stream);
  if (it == out_.end()) return;
  for (auto const &e : it->second.buffer) {
    for (auto const &[p, m] : e.payload) transmit(p, stream, e.k, m);
  }
}

void TbHub::arm() {
  Time earliest = kNever;
  for (auto const &[_, out] : out_) {
    for (auto const &e : out.buffer) {
      for (auto const &[_, pend] : e.pending) earliest = std::min(earliest, pend.next_local);
    }
  }
  if (earliest == kNever) return;
  if (armed_ && armed_for_ <= earliest) return;
  if (armed_) sim_.cancel(tick_event_);
  armed_ = true;
  armed_for_ = earliest;
  auto wait = std::max<Time>(1, earliest - sim_.local_now(self_));
  tick_event_ = sim_.timer(self_, wait, [this]() {
    armed_ = false;
    armed_for_ = kNever;
    tick();
  });
}

void TbHub::tick() {
  auto local = sim_.local_now(self_);
  for (auto &[stream, out] : out_) {
    for (auto &e : out.buffer) {
      for (auto &[p, pend] : e.pending) {
        if (pend.next_local > local) continue;
        stats_.retransmits++;
        transmit(p, stream, e.k, e.payload[p]);
        pend.backoff = std::min(cfg_.max_backoff, pend.backoff * 2);
        pend.next_local = local + pend.backoff;
      }
    }
  }
  arm();
}

void TbHub::on_message(Pid from, std::uint64_t channel, Bytes const &payload) {
  auto key = ChannelKey::unpack(channel);
  if (key.src != from) return;  // channels are authenticated
  if (key.kind == ChannelKind::TbData) {
    receiver(from, key.stream).on_landing(payload);
    return;
  }
  if (key.kind != ChannelKind::TbAck) return;
  Decoder d(payload);
  auto k = d.u64();
  auto it = out_.find(key.stream);
  if (it == out_.end()) return;
  for (auto &e : it->second.buffer) {
    if (e.k == k) {
      e.pending.erase(from);
      break;
    }
  }
}

void TbHub::on_channel(Pid src, std::uint8_t stream, Bytes const &wire) {
  Decoder d(wire);
  auto k = d.u64();
  auto m = d.raw(d.remaining());

  Encoder ack(8);
  ack.u64(k);
  stats_.acks_sent++;
  net_.send(self_, src, ChannelKey{ChannelKind::TbAck, stream, 0, self_, src}.pack(), ack.take());

  auto &dd = dedupe_[{src, stream}];
  if (k + depth() <= dd.max_k) {
    stats_.too_old++;
    return;
  }
  if (!dd.recent.insert(k).second) {
    stats_.duplicates++;
    return;
  }
  dd.max_k = std::max(dd.max_k, k);
  while (!dd.recent.empty() && *dd.recent.begin() + depth() <= dd.max_k) {
    dd.recent.erase(dd.recent.begin());
  }
  stats_.deliveries++;
  if (deliver_) deliver_(src, stream, k, m);
}

TbStats TbHub::stats() const {
  TbStats s = stats_;
  s.channel = ChannelStats{};
  for (auto const &[_, snd] : senders_) s.channel += snd->stats();
  for (auto const &[_, rcv] : receivers_) s.channel += rcv->stats();
  return s;
}

std::size_t TbHub::retained_bytes() const {
  std::size_t total = 0;
  for (auto const &[_, out] : out_) {
    for (auto const &e : out.buffer) {
      total += 16;
      for (auto const &[_, m] : e.payload) total += m.size() + 8;
      total += e.pending.size() * 16;
    }
  }
  for (auto const &[_, snd] : senders_) total += snd->bytes();
  for (auto const &[_, rcv] : receivers_) total += rcv->bytes();
  for (auto const &[_, dd] : dedupe_) total += 16 + dd.recent.size() * 8;
  return total;
}

std::size_t TbHub::inbound_bytes(Pid from) const {
  std::size_t total = 0;
  for (auto const &[key, rcv] : receivers_) {
    if (key.first == from) total += rcv->bytes();
  }
  for (auto const &[key, dd] : dedupe_) {
    if (key.first == from) total += 16 + dd.recent.size() * 8;
  }
  return total;
}

}  // namespace ubft::tail
