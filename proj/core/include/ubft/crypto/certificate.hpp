#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "ubft/crypto/crypto.hpp"

namespace ubft::crypto {

// A payload plus signature shares from distinct signers. Valid once at least
// `quorum` shares verify over the payload.
struct Certificate {
  Bytes payload;
  std::vector<Signature> shares;

  void encode(Encoder &e) const;
  static Certificate decode(Decoder &d);
  Bytes encode() const;
  bool operator==(Certificate const &) const = default;
};

// Keeps only shares that verify over `payload`; one per signer. Returns a
// certificate iff at least `quorum` distinct signers remain.
std::optional<Certificate> assemble_certificate(CryptoService &cs, Pid verifier, Bytes payload,
                                                std::vector<Signature> const &shares,
                                                std::uint32_t quorum, CryptoPath path);

bool verify_certificate(CryptoService &cs, Pid verifier, Certificate const &cert,
                        std::uint32_t quorum, CryptoPath path);

// Incremental share collection keyed by payload. Mismatched payloads land in
// separate buckets and never combine.
class ShareCollector {
 public:
  explicit ShareCollector(std::uint32_t quorum) : quorum_{quorum} {}

  // Returns the certificate exactly once, on the share that completes it.
  std::optional<Certificate> add(CryptoService &cs, Pid verifier, Bytes const &payload,
                                 Signature const &share, Pid claimed_signer, CryptoPath path);

  void clear() { buckets_.clear(); }
  std::size_t bytes() const;

 private:
  struct Bucket {
    Bytes payload;
    std::map<Pid, Signature> shares;
    bool done = false;
  };
  std::uint32_t quorum_;
  std::map<Digest, Bucket> buckets_;
};

}  // namespace ubft::crypto
