#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>

#include "ubft/ctb/core.hpp"
#include "ubft/dmem/register_client.hpp"
#include "ubft/tail/tbcast.hpp"

namespace ubft::ctb {

// Tail-broadcast streams used by the CTB layer. LOCKED messages about
// broadcaster b travel on their own stream so each instance keeps its own tail.
inline constexpr std::uint8_t kDataStream = 0;
inline constexpr std::uint8_t kLockedStreamBase = 16;
// Point-to-point sub-channel carrying slow-path requests to a broadcaster.
inline constexpr std::uint8_t kSlowRequestStream = 1;

struct Config {
  std::uint32_t t = 8;
  Time delta = 100;
  Time slow_timeout = 400;  // local time without delivery before the slow path
  bool slow_in_parallel = false;  // SIGNED right after LOCK
};

struct Byz {
  bool bad_signature = false;  // forged SIGNED tokens and register cells
};

struct Stats {
  std::uint64_t broadcasts = 0;
  std::uint64_t fast = 0;
  std::uint64_t slow = 0;
  std::uint64_t abort_equivocation = 0;
  std::uint64_t abort_out_of_tail = 0;
  std::uint64_t signed_sent = 0;
  std::uint64_t slow_requests = 0;
  std::uint64_t invalid_signed = 0;
  std::uint64_t slow_jobs = 0;
};

// Consistent tail broadcast for one process: its own broadcaster instance and
// receiver state for every group member, wired to tail broadcast, registers,
// timers, and signatures.
class Endpoint {
 public:
  using Deliver = std::function<void(Delivery const &)>;

  Endpoint(sim::Simulator &sim, sim::Network &net, crypto::CryptoService &cs, tail::TbHub &tb,
           dmem::RegisterClient &regs, Pid self, std::vector<Pid> members, Config cfg);

  void set_deliver(Deliver d) { deliver_ = std::move(d); }

  std::uint64_t broadcast(Bytes m);
  // Byzantine broadcaster: a possibly different message per receiver, all
  // under the same id.
  std::uint64_t broadcast_split(std::function<Bytes(Pid)> const &per_receiver);
  // Re-broadcasts the oldest retained LOCK as a fresh tail message.
  void replay_oldest();

  void on_tb(Pid from, std::uint8_t stream, Bytes const &payload);
  void on_p2p(Pid from, Bytes const &payload);

  Byz byz;
  Stats const &stats() const { return stats_; }
  Core const &core() const { return core_; }
  std::uint64_t next_k() const { return next_k_; }
  std::size_t bytes() const;

  static std::uint64_t register_index(Pid broadcaster, std::uint64_t slot) {
    return (static_cast<std::uint64_t>(broadcaster) << 32) | slot;
  }

 private:
  struct Sent {
    std::uint64_t k = 0;
    std::map<Pid, Bytes> m;
    bool signed_sent = false;
  };
  struct SlowRead {
    SlowJob job;
    std::vector<CellView> cells;
    std::size_t pending = 0;
  };

  Sent *find_sent(std::uint64_t k);
  void send_signed(std::uint64_t k);
  void apply(Effects &&fx);
  void run_slow(SlowJob job);
  void start_reads(SlowJob job);

  sim::Simulator &sim_;
  sim::Network &net_;
  crypto::CryptoService &cs_;
  tail::TbHub &tb_;
  dmem::RegisterClient &regs_;
  Pid self_;
  std::vector<Pid> members_;
  Config cfg_;
  Core core_;
  Deliver deliver_;
  std::deque<Sent> recent_;
  std::uint64_t next_k_ = 1;
  std::map<std::uint64_t, SlowRead> reads_;
  std::uint64_t next_read_ = 1;
  Stats stats_;
};

}  // namespace ubft::ctb
