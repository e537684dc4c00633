#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "ubft/common/bytes.hpp"
#include "ubft/crypto/crypto.hpp"
#include "ubft/sim/network.hpp"

namespace ubft::tail {

// One slot of the receiver-side circular buffer.
struct Slot {
  std::uint64_t cksum = 0;
  std::uint64_t incarnation = 0;  // number of times the slot was written
  std::uint32_t size = 0;
  Bytes payload;

  static constexpr std::size_t kHeader = 8 + 8 + 4;
};

std::uint64_t slot_checksum(crypto::CryptoService &cs, Pid who, std::uint64_t incarnation,
                            ByteView payload);

struct ChannelStats {
  std::uint64_t sends = 0;
  std::uint64_t overwrites = 0;
  std::uint64_t staged = 0;
  std::uint64_t staged_evictions = 0;
  std::uint64_t delivered = 0;
  std::uint64_t skips = 0;
  std::uint64_t torn_copies = 0;
  std::uint64_t bad_checksums = 0;
  std::uint64_t stale_landings = 0;

  ChannelStats &operator+=(ChannelStats const &o);
};

// Writer side of an ackless last-t channel. Message j goes to slot j mod t with
// incarnation j/t + 1; a slot stays unavailable until its previous write
// lands, and messages wait in a bounded staging queue meanwhile.
class ChannelSender {
 public:
  ChannelSender(sim::Simulator &sim, sim::Network &net, crypto::CryptoService &cs, Pid self,
                Pid peer, std::uint64_t channel, std::uint32_t t, std::size_t staging_cap);

  void send(Bytes msg);

  ChannelStats const &stats() const { return stats_; }
  std::size_t bytes() const;
  std::uint64_t next_msg_no() const { return next_msg_; }

  // Test and adversary hook applied to every slot image before it is written.
  std::function<void(Slot &)> mutate;

 private:
  void write(Bytes msg);
  void pump();

  sim::Simulator &sim_;
  sim::Network &net_;
  crypto::CryptoService &cs_;
  Pid self_;
  Pid peer_;
  std::uint64_t channel_;
  std::uint32_t t_;
  std::size_t staging_cap_;
  std::vector<bool> busy_;
  std::vector<bool> used_;
  std::deque<Bytes> staging_;
  std::uint64_t next_msg_ = 0;
  ChannelStats stats_;
};

// Reader side: polls the slot of the next expected message for its expected
// incarnation, copies, re-validates, and delivers in FIFO order. On seeing a
// newer incarnation it skips ahead to the oldest message still present.
class ChannelReceiver {
 public:
  using Deliver = std::function<void(Bytes const &)>;

  ChannelReceiver(sim::Simulator &sim, crypto::CryptoService &cs, Pid self, std::uint32_t t,
                  Time copy_time, Deliver deliver);

  void on_landing(Bytes const &wire);

  ChannelStats const &stats() const { return stats_; }
  std::size_t bytes() const;
  std::uint64_t next_expected() const { return next_; }
  Slot const &slot(std::size_t i) const { return slots_.at(i); }

 private:
  void poll();
  bool try_deliver(std::size_t s);

  sim::Simulator &sim_;
  crypto::CryptoService &cs_;
  Pid self_;
  std::uint32_t t_;
  Time copy_time_;
  Deliver deliver_;
  std::vector<Slot> slots_;
  std::vector<std::uint64_t> version_;
  std::uint64_t next_ = 0;
  bool copying_ = false;
  std::size_t capacity_ = 0;  // high-water slot payload size
  ChannelStats stats_;
};

Bytes encode_slot_write(std::uint32_t slot, Slot const &s);

}  // namespace ubft::tail
