#include "ubft/sim/network.hpp"

#include <algorithm>
#include <cmath>

#include "ubft/common/hash.hpp"

namespace ubft::sim {

void Network::attach(Pid p, Handler h) { handlers_[p] = std::move(h); }

void Network::set_mute(Pid p, bool muted) {
  if (muted) {
    muted_.insert(p);
  } else {
    muted_.erase(p);
  }
}

void Network::partition(std::set<Pid> side, Time start, Time heal) {
  auto const &cfg = sim_.config();
  if (start < cfg.gst) heal = std::min(heal, cfg.gst);
  if (heal <= start) return;
  partitions_.push_back({std::move(side), start, heal});
  for (Time edge : {start, heal}) {
    SimEvent ev;
    ev.fire_at = std::max(edge, sim_.now());
    ev.kind = EventKind::PartitionToggle;
    ev.token = edge == start ? 1 : 0;
    sim_.schedule(std::move(ev));
  }
}

Time Network::deliver_delay(Pid src, Pid dst, LinkClass cls) {
  auto const &cfg = sim_.config();
  auto &rng = sim_.rng();
  if (src == dst) return 0;
  if (cls == LinkClass::Memory) {
    return rng.uniform(1, std::max<Time>(1, cfg.delta / cfg.mem_delay_divisor));
  }
  if (sim_.now() >= cfg.gst) return rng.uniform(1, cfg.delta);
  auto cap = static_cast<Time>(std::llround(cfg.pre_gst_cap_factor * static_cast<double>(cfg.delta)));
  return rng.uniform(0, cap);
}

Time Network::extra_delay(Pid src, Pid dst, std::uint64_t channel) const {
  Time extra = 0;
  if (delays_.empty()) return 0;
  auto key = ChannelKey::unpack(channel);
  auto now = sim_.now();
  for (auto const &r : delays_) {
    if (now < r.from || now >= r.until) continue;
    if (r.src && *r.src != src) continue;
    if (r.dst && *r.dst != dst) continue;
    if (r.kind && *r.kind != key.kind) continue;
    if (r.stream && *r.stream != key.stream) continue;
    extra += r.amount;
  }
  return extra;
}

Time Network::partition_hold(Pid src, Pid dst, Time arrival) const {
  for (auto const &p : partitions_) {
    bool crosses = (p.side.count(src) != 0) != (p.side.count(dst) != 0);
    if (!crosses) continue;
    if (sim_.now() >= p.start && sim_.now() < p.heal) arrival = std::max(arrival, p.heal);
  }
  return arrival;
}

void Network::send(Pid src, Pid dst, std::uint64_t channel, Bytes payload, LinkClass cls,
                   std::function<void()> on_landed) {
  if (muted_.count(src) != 0) {
    stats_.muted++;
    return;
  }
  auto const &cfg = sim_.config();
  auto now = sim_.now();
  auto cls_idx = static_cast<std::size_t>(cls);
  stats_.messages[cls_idx]++;
  stats_.bytes[cls_idx] += payload.size();

  Time arrival = now + deliver_delay(src, dst, cls) + extra_delay(src, dst, channel);
  if (cls == LinkClass::Message) {
    arrival = partition_hold(src, dst, arrival);
    // Anything still in flight at GST lands within delta of it.
    arrival = std::min(arrival, std::max(now, cfg.gst) + cfg.delta);
  } else {
    arrival = std::min(arrival, now + cfg.delta);
    auto &last = memory_fifo_[{src, dst}];
    arrival = std::max(arrival, last);
    last = arrival;
  }
  if (src == dst) arrival = now;

  SimEvent ev;
  ev.fire_at = arrival;
  ev.target = dst;
  ev.kind = EventKind::Deliver;
  ev.channel = channel;
  ev.source = src;
  ev.size = static_cast<std::uint32_t>(payload.size());
  if (sim_.trace_events) ev.payload_digest = fingerprint64(payload);
  ev.action = [this, src, dst, channel, payload = std::move(payload)]() {
    auto it = handlers_.find(dst);
    if (it != handlers_.end()) it->second(src, channel, payload);
  };
  sim_.schedule(std::move(ev));

  if (on_landed) {
    if (!sim_.alive(dst)) {
      stats_.to_dead++;
      return;  // no completion from a dead peer
    }
    sim_.at(arrival, src, [this, dst, cb = std::move(on_landed)]() {
      if (sim_.alive(dst)) cb();
    });
  }
}

}  // namespace ubft::sim
