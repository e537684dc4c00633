#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "ubft/common/bytes.hpp"
#include "ubft/common/channel.hpp"
#include "ubft/sim/simulator.hpp"

namespace ubft::sim {

enum class LinkClass : std::uint8_t { Message, Memory };

// Extra latency injected on matching messages. Unset filters match anything.
struct DelayRule {
  std::optional<Pid> src;
  std::optional<Pid> dst;
  std::optional<ChannelKind> kind;
  std::optional<std::uint8_t> stream;
  Time amount = 0;
  Time from = 0;
  Time until = kNever;
};

struct NetworkStats {
  std::uint64_t messages[2] = {0, 0};
  std::uint64_t bytes[2] = {0, 0};
  std::uint64_t muted = 0;
  std::uint64_t to_dead = 0;
};

class Network {
 public:
  using Handler = std::function<void(Pid from, std::uint64_t channel, Bytes const &payload)>;

  explicit Network(Simulator &sim) : sim_{sim} {}

  void attach(Pid p, Handler h);

  // Samples a one-way delay for a message sent now. Post-GST Message links
  // never exceed delta; Memory links are always bounded by delta / divisor.
  Time deliver_delay(Pid src, Pid dst, LinkClass cls);

  // Delivers `payload` to dst's handler after a sampled delay. `on_landed`
  // runs at the sender at the landing instant (models a write completion).
  void send(Pid src, Pid dst, std::uint64_t channel, Bytes payload,
            LinkClass cls = LinkClass::Message, std::function<void()> on_landed = {});

  void set_mute(Pid p, bool muted);
  bool muted(Pid p) const { return muted_.count(p) != 0; }
  void add_delay(DelayRule rule) { delays_.push_back(rule); }
  // Traffic crossing the cut is held until `heal` (never later than GST).
  void partition(std::set<Pid> side, Time start, Time heal);

  NetworkStats const &stats() const { return stats_; }

 private:
  Time extra_delay(Pid src, Pid dst, std::uint64_t channel) const;
  Time partition_hold(Pid src, Pid dst, Time arrival) const;

  struct Partition {
    std::set<Pid> side;
    Time start;
    Time heal;
  };

  Simulator &sim_;
  std::map<Pid, Handler> handlers_;
  std::set<Pid> muted_;
  std::vector<DelayRule> delays_;
  std::vector<Partition> partitions_;
  std::map<std::pair<Pid, Pid>, Time> memory_fifo_;
  NetworkStats stats_;
};

}  // namespace ubft::sim
