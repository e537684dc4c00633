#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "ubft/common/bytes.hpp"
#include "ubft/crypto/crypto.hpp"

namespace ubft::ctb {

enum class WireType : std::uint8_t { Lock = 1, Locked = 2, Signed = 3 };

struct Wire {
  WireType type = WireType::Lock;
  Pid broadcaster = 0;
  std::uint64_t k = 0;
  Bytes m;
  std::optional<crypto::Signature> sig;  // SIGNED only

  Bytes encode() const;
  static Wire decode(ByteView data);
};

// Bytes covered by a SIGNED signature and by register cells.
Bytes signed_payload(Pid broadcaster, std::uint64_t k, crypto::Digest const &d);

enum class Path : std::uint8_t { Fast = 0, Slow = 1, Summary = 2 };
char const *path_name(Path p);

enum class AbortReason : std::uint8_t { Equivocation = 1, OutOfTail = 2 };

struct Delivery {
  Pid broadcaster;
  std::uint64_t k;
  Bytes m;
  Path path;
};

struct Abort {
  Pid broadcaster;
  std::uint64_t k;
  AbortReason reason;
};

// Register-backed slow path for (b, k, m): write own cell, then read every
// member's cell for slot k mod t and call finish_slow with what was found.
struct SlowJob {
  Pid broadcaster;
  std::uint64_t k;
  Bytes m;
  crypto::Digest digest;
  crypto::Signature sig;
};

// One register cell as seen by a slow-path reader. `sig_valid` is the result
// of checking the stored signature against the broadcaster's key.
struct CellView {
  Pid owner = 0;
  std::uint64_t k = 0;
  crypto::Digest digest;
  bool sig_valid = false;
};

struct Effects {
  std::vector<Wire> locked;  // LOCKED messages to tail-broadcast
  std::vector<Delivery> deliveries;
  std::vector<Abort> aborts;
  std::optional<SlowJob> slow;

  void merge(Effects &&o);
};

// Receiver-side state machine of consistent tail broadcast for every
// broadcaster in the group. Pure: no I/O, no timers, copyable.
class Core {
 public:
  using DigestFn = std::function<crypto::Digest(ByteView)>;

  Core(Pid self, std::vector<Pid> members, std::uint32_t t, DigestFn digest);

  Effects on_lock(Pid broadcaster, std::uint64_t k, Bytes const &m);
  Effects on_locked(Pid from, Pid broadcaster, std::uint64_t k, Bytes const &m);
  // `sig_valid`: the SIGNED signature verifies for the broadcaster.
  Effects on_signed(Pid broadcaster, std::uint64_t k, Bytes const &m,
                    crypto::Signature const &sig, bool sig_valid);
  Effects finish_slow(Pid broadcaster, std::uint64_t k, Bytes const &m,
                      crypto::Digest const &digest, std::vector<CellView> const &cells);

  std::uint32_t tail() const { return t_; }
  Pid self() const { return self_; }
  std::vector<Pid> const &members() const { return members_; }
  std::uint64_t delivered_in_slot(Pid broadcaster, std::uint64_t slot) const;
  bool delivered(Pid broadcaster, std::uint64_t k) const;
  std::uint64_t lock_in_slot(Pid broadcaster, std::uint64_t slot) const;
  // Canonical encoding of the whole state (used for state hashing in tests).
  Bytes encode_state() const;
  std::size_t bytes() const;

 private:
  struct Entry {
    std::uint64_t k = 0;  // 0 = empty; broadcast ids start at 1
    crypto::Digest d;
  };
  struct Instance {
    std::vector<Entry> locks;
    std::map<Pid, std::vector<Entry>> locked;
    std::vector<std::uint64_t> delivered;
  };

  Instance &inst(Pid broadcaster);
  void deliver_once(Instance &in, Pid broadcaster, std::uint64_t k, Bytes const &m, Path path,
                    Effects &fx);

  Pid self_;
  std::vector<Pid> members_;
  std::uint32_t t_;
  DigestFn digest_;
  std::map<Pid, Instance> inst_;
};

}  // namespace ubft::ctb
