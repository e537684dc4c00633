#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>

#include "ubft/dmem/memory_node.hpp"
#include "ubft/dmem/register.hpp"
#include "ubft/sim/network.hpp"

namespace ubft::dmem {

struct ReadResult {
  enum class Kind : std::uint8_t { Value, ByzantineOwner };
  Kind kind = Kind::Value;
  std::uint64_t ts = 0;
  Bytes payload;
};

// Scripted misbehaviour of a Byzantine register owner.
struct ByzWriter {
  bool bad_checksum = false;
  bool same_ts_both = false;
  bool no_pacing = false;
};

struct RegisterStats {
  std::uint64_t writes = 0;
  std::uint64_t reads = 0;
  std::uint64_t retries = 0;
  std::uint64_t byzantine_detected = 0;
};

// Process-side endpoint for SWMR registers: writes the registers this process
// owns and reads anyone's. Operations are split-phase over the network.
class RegisterClient {
 public:
  using WriteDone = std::function<void()>;
  using ReadDone = std::function<void(ReadResult const &)>;

  RegisterClient(sim::Simulator &sim, sim::Network &net, crypto::CryptoService &cs, Pid self,
                 DmemConfig cfg);

  void write(std::uint64_t index, std::uint64_t ts, Bytes payload, WriteDone done = {});
  void read(Pid owner, std::uint64_t index, ReadDone done);
  void on_message(Pid from, std::uint64_t channel, Bytes const &payload);

  ByzWriter byz;
  RegisterStats const &stats() const { return stats_; }
  // Disaggregated footprint of owned registers: 2 cells x n_mem.
  std::size_t disaggregated_bytes() const;
  std::size_t local_bytes() const;
  Time pacing_local() const { return pace_local_; }

 private:
  struct QueuedWrite {
    std::uint64_t ts;
    Bytes payload;
    WriteDone done;
  };
  struct OwnedRegister {
    std::deque<QueuedWrite> queue;
    bool in_flight = false;
    std::uint64_t op = 0;
    std::uint8_t next_sub = 0;
    Time next_allowed_local = 0;
    bool pump_scheduled = false;
    std::size_t payload_bytes = 0;
  };
  struct PendingRead {
    RegKey key;
    Time started_local = 0;
    std::vector<std::array<Cell, 2>> responses;
    ReadDone done;
    std::uint64_t trace_op = 0;
  };

  void pump(std::uint64_t index);
  void issue(std::uint64_t index, QueuedWrite w);
  void start_read(std::uint64_t op, PendingRead r);
  void finish_read(std::uint64_t op);
  std::uint64_t channel(Pid node) const;

  sim::Simulator &sim_;
  sim::Network &net_;
  crypto::CryptoService &cs_;
  Pid self_;
  DmemConfig cfg_;
  Time pace_local_;
  std::map<std::uint64_t, OwnedRegister> owned_;
  std::map<std::uint64_t, std::uint64_t> write_op_index_;  // op -> register index
  std::map<std::uint64_t, WriteDone> write_done_;
  std::map<std::uint64_t, std::uint64_t> write_ts_;
  std::map<std::uint64_t, std::uint32_t> write_acks_;
  std::map<std::uint64_t, PendingRead> reads_;
  std::map<RegKey, Cell> monotone_cache_;
  std::uint64_t next_op_ = 1;
  RegisterStats stats_;
};

}  // namespace ubft::dmem
