#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>

#include "ubft/dmem/register.hpp"
#include "ubft/sim/network.hpp"

namespace ubft::dmem {

enum class MemOp : std::uint8_t { WriteReq = 1, WriteAck = 2, ReadReq = 3, ReadResp = 4 };

// A crash-only memory server. Holds two sub-register cells per register and
// enforces single-writer access control; data is frozen once it crashes.
class MemoryNode {
 public:
  MemoryNode(sim::Simulator &sim, sim::Network &net, crypto::CryptoService &cs, Pid self,
             DmemConfig const &cfg);

  void on_message(Pid from, std::uint64_t channel, Bytes const &payload);

  std::size_t stored_bytes() const;
  std::uint64_t rejected_writes() const { return rejected_; }
  std::uint64_t torn_reads() const { return torn_; }

 private:
  struct Pending {
    Pid writer;
    std::uint64_t op;
    Cell cell;
  };
  struct Sub {
    Cell cell;
    bool writing = false;
    Cell incoming;
    Pid writer = 0;
    std::uint64_t op = 0;
    std::deque<Pending> queue;
  };
  using Register = std::array<Sub, 2>;

  Register &reg(RegKey const &k);
  void begin_write(RegKey const &k, std::size_t s, Pending p);
  void finish_write(RegKey const &k, std::size_t s);

  sim::Simulator &sim_;
  sim::Network &net_;
  crypto::CryptoService &cs_;
  Pid self_;
  DmemConfig cfg_;
  std::map<RegKey, Register> store_;
  std::uint64_t rejected_ = 0;
  std::uint64_t torn_ = 0;
};

}  // namespace ubft::dmem
