#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "ubft/tail/ring_channel.hpp"

namespace ubft::tail {

struct TbConfig {
  std::uint32_t t = 8;           // channel slots; the resend buffer keeps 2t
  Time delta = 100;
  Time first_resend = 300;       // local time before the first retransmission
  Time max_backoff = 3200;
  Time copy_time = 0;            // receiver copy duration (torn-copy modelling)
};

struct TbStats {
  std::uint64_t broadcasts = 0;
  std::uint64_t deliveries = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t too_old = 0;
  std::uint64_t retransmits = 0;
  std::uint64_t acks_sent = 0;
  std::uint64_t evictions = 0;
  ChannelStats channel;
};

// Best-effort tail broadcast over per-pair ring channels. Each stream has its
// own sequence of ids; the broadcaster keeps the last 2t messages and resends
// them until every receiver acknowledges or they are evicted.
class TbHub {
 public:
  using Deliver =
      std::function<void(Pid from, std::uint8_t stream, std::uint64_t k, Bytes const &m)>;
  using PerReceiver = std::function<std::optional<Bytes>(Pid)>;

  TbHub(sim::Simulator &sim, sim::Network &net, crypto::CryptoService &cs, Pid self,
        std::vector<Pid> members, TbConfig cfg);

  void set_deliver(Deliver d) { deliver_ = std::move(d); }

  std::uint64_t broadcast(std::uint8_t stream, Bytes m);
  // Sends a possibly different payload to each member (nullopt skips that
  // member). Only scripted adversaries use this.
  std::uint64_t broadcast_to(std::uint8_t stream, PerReceiver const &per_receiver);
  // Pushes every buffered message of `stream` again (replay adversary).
  void resend_all(std::uint8_t stream);

  static bool handles(std::uint64_t channel);
  void on_message(Pid from, std::uint64_t channel, Bytes const &payload);

  Pid self() const { return self_; }
  std::vector<Pid> const &members() const { return members_; }
  std::uint32_t depth() const { return 2 * cfg_.t; }
  TbStats stats() const;
  std::size_t retained_bytes() const;
  // Retained bytes of the receive side for messages from `from`.
  std::size_t inbound_bytes(Pid from) const;

  // Test hook: mutates slot images written towards `dst` on `stream`.
  void set_slot_mutator(Pid dst, std::uint8_t stream, std::function<void(Slot &)> fn);

 private:
  struct Pending {
    Time next_local = 0;
    Time backoff = 0;
  };
  struct Entry {
    std::uint64_t k = 0;
    std::map<Pid, Bytes> payload;  // per receiver (identical for correct broadcasts)
    std::map<Pid, Pending> pending;
  };
  struct Outbound {
    std::uint64_t next_k = 1;
    std::deque<Entry> buffer;
  };
  struct Dedupe {
    std::uint64_t max_k = 0;
    std::set<std::uint64_t> recent;
  };

  ChannelSender &sender(Pid dst, std::uint8_t stream);
  ChannelReceiver &receiver(Pid src, std::uint8_t stream);
  void transmit(Pid dst, std::uint8_t stream, std::uint64_t k, Bytes const &m);
  void on_channel(Pid src, std::uint8_t stream, Bytes const &wire);
  void arm();
  void tick();

  sim::Simulator &sim_;
  sim::Network &net_;
  crypto::CryptoService &cs_;
  Pid self_;
  std::vector<Pid> members_;
  TbConfig cfg_;
  Deliver deliver_;
  std::map<std::uint8_t, Outbound> out_;
  std::map<std::pair<Pid, std::uint8_t>, std::unique_ptr<ChannelSender>> senders_;
  std::map<std::pair<Pid, std::uint8_t>, std::unique_ptr<ChannelReceiver>> receivers_;
  std::map<std::pair<Pid, std::uint8_t>, Dedupe> dedupe_;
  std::map<std::pair<Pid, std::uint8_t>, std::function<void(Slot &)>> mutators_;
  bool armed_ = false;
  sim::EventId tick_event_ = 0;
  Time armed_for_ = kNever;
  TbStats stats_;
};

}  // namespace ubft::tail
