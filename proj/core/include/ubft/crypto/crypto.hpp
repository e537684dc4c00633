#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ubft/common/bytes.hpp"
#include "ubft/common/types.hpp"

namespace ubft::crypto {

// Every sign/verify carries the path it serves so tests can tell decide-path
// signatures apart from checkpoint and summary work.
enum class CryptoPath : std::uint8_t { Critical = 0, Background = 1 };

enum class Backend : std::uint8_t { Simulated, Real };

struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  auto operator<=>(Digest const &) const = default;
  std::string hex() const { return to_hex(bytes); }
  std::uint64_t prefix64() const;
};

struct Signature {
  Pid signer = 0;
  Digest over;
  std::array<std::uint8_t, 64> token{};

  static constexpr std::size_t kEncodedSize = 4 + 32 + 64;

  void encode(Encoder &e) const;
  static Signature decode(Decoder &d);
  bool operator==(Signature const &) const = default;
};

struct Counters {
  std::uint64_t sign[2] = {0, 0};
  std::uint64_t verify[2] = {0, 0};
  std::uint64_t digests = 0;
  std::uint64_t checksums = 0;

  std::uint64_t critical() const { return sign[0] + verify[0]; }
  std::uint64_t background() const { return sign[1] + verify[1]; }
  Counters &operator+=(Counters const &o);
};

class CryptoService {
 public:
  CryptoService(Backend backend, std::uint64_t seed, std::size_t n_processes);

  Backend backend() const { return backend_; }

  // 32-byte BLAKE2b digest.
  Digest digest(Pid who, ByteView data);
  // Non-cryptographic 64-bit integrity code (SipHash with a fixed key).
  std::uint64_t checksum(Pid who, ByteView data);

  Signature sign(Pid signer, ByteView payload, CryptoPath path);
  bool verify(Pid verifier, Signature const &sig, ByteView payload, Pid expected_signer,
              CryptoPath path);

  // A signature claiming `claimed` as signer that no correct verifier accepts.
  Signature forge(Pid claimed, ByteView payload);

  Counters const &counters(Pid p) const { return counters_.at(p); }
  Counters total() const;
  void reset_counters();

 private:
  std::array<std::uint8_t, 64> token_for(Pid signer, Digest const &d) const;
  bool check_token(Signature const &sig) const;

  Backend backend_;
  std::vector<std::array<std::uint8_t, 32>> secrets_;  // simulated backend
  std::vector<std::array<std::uint8_t, 64>> sk_;       // real backend
  std::vector<std::array<std::uint8_t, 32>> pk_;
  std::vector<Counters> counters_;
};

}  // namespace ubft::crypto
