#include "ubft/crypto/certificate.hpp"

#include <set>

namespace ubft::crypto {

void Certificate::encode(Encoder &e) const {
  e.bytes(payload);
  e.u32(static_cast<std::uint32_t>(shares.size()));
  for (auto const &s : shares) s.encode(e);
}

Bytes Certificate::encode() const {
  Encoder e;
  encode(e);
  return e.take();
}

Certificate Certificate::decode(Decoder &d) {
  Certificate c;
  c.payload = d.bytes();
  auto n = d.u32();
  if (n > 4096) throw DecodeError("too many certificate shares");
  c.shares.reserve(n);
  for (std::uint32_t i = 0; i < n; i++) c.shares.push_back(Signature::decode(d));
  return c;
}

std::optional<Certificate> assemble_certificate(CryptoService &cs, Pid verifier, Bytes payload,
                                                std::vector<Signature> const &shares,
                                                std::uint32_t quorum, CryptoPath path) {
  Certificate cert;
  std::set<Pid> seen;
  for (auto const &s : shares) {
    if (seen.count(s.signer) != 0) continue;
    if (!cs.verify(verifier, s, payload, s.signer, path)) continue;
    seen.insert(s.signer);
    cert.shares.push_back(s);
  }
  if (seen.size() < quorum) return std::nullopt;
  cert.payload = std::move(payload);
  return cert;
}

bool verify_certificate(CryptoService &cs, Pid verifier, Certificate const &cert,
                        std::uint32_t quorum, CryptoPath path) {
  std::set<Pid> seen;
  for (auto const &s : cert.shares) {
    if (seen.count(s.signer) != 0) return false;
    if (!cs.verify(verifier, s, cert.payload, s.signer, path)) return false;
    seen.insert(s.signer);
  }
  return seen.size() >= quorum;
}

std::optional<Certificate> ShareCollector::add(CryptoService &cs, Pid verifier,
                                               Bytes const &payload, Signature const &share,
                                               Pid claimed_signer, CryptoPath path) {
  if (!cs.verify(verifier, share, payload, claimed_signer, path)) return std::nullopt;
  auto &b = buckets_[share.over];
  if (b.done) return std::nullopt;
  if (b.payload.empty()) b.payload = payload;
  b.shares.emplace(claimed_signer, share);
  if (b.shares.size() < quorum_) return std::nullopt;
  b.done = true;
  Certificate c;
  c.payload = b.payload;
  for (auto const &[_, s] : b.shares) c.shares.push_back(s);
  return c;
}

std::size_t ShareCollector::bytes() const {
  std::size_t total = 0;
  for (auto const &[_, b] : buckets_) {
    total += 32 + b.payload.size() + b.shares.size() * (Signature::kEncodedSize + 4);
  }
  return total;
}

}  // namespace ubft::crypto
