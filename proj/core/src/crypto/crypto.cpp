#include "ubft/crypto/crypto.hpp"

#include <cstring>
#include <stdexcept>

#include <sodium.h>

namespace ubft::crypto {

namespace {

std::array<std::uint8_t, 32> derive(std::uint64_t seed, Pid p, std::uint8_t domain) {
  Encoder e;
  e.u8(domain).u64(seed).u32(p);
  std::array<std::uint8_t, 32> out{};
  crypto_generichash(out.data(), out.size(), e.view().data(), e.size(), nullptr, 0);
  return out;
}

}  // namespace

std::uint64_t Digest::prefix64() const {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; i++) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

void Signature::encode(Encoder &e) const {
  e.u32(signer);
  e.raw(over.bytes);
  e.raw(token);
}

Signature Signature::decode(Decoder &d) {
  Signature s;
  s.signer = d.u32();
  d.raw_into(s.over.bytes);
  d.raw_into(s.token);
  return s;
}

Counters &Counters::operator+=(Counters const &o) {
  for (int i = 0; i < 2; i++) {
    sign[i] += o.sign[i];
    verify[i] += o.verify[i];
  }
  digests += o.digests;
  checksums += o.checksums;
  return *this;
}

CryptoService::CryptoService(Backend backend, std::uint64_t seed, std::size_t n_processes)
    : backend_{backend}, counters_(n_processes) {
  if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
  for (std::size_t i = 0; i < n_processes; i++) {
    auto p = static_cast<Pid>(i);
    if (backend_ == Backend::Simulated) {
      secrets_.push_back(derive(seed, p, 1));
    } else {
      auto s = derive(seed, p, 2);
      std::array<std::uint8_t, 64> sk{};
      std::array<std::uint8_t, 32> pk{};
      crypto_sign_seed_keypair(pk.data(), sk.data(), s.data());
      sk_.push_back(sk);
      pk_.push_back(pk);
    }
  }
}

Digest CryptoService::digest(Pid who, ByteView data) {
  counters_.at(who).digests++;
  Digest d;
  crypto_generichash(d.bytes.data(), d.bytes.size(), data.data(), data.size(), nullptr, 0);
  return d;
}

std::uint64_t CryptoService::checksum(Pid who, ByteView data) {
  counters_.at(who).checksums++;
  static constexpr std::array<std::uint8_t, crypto_shorthash_KEYBYTES> kKey{
      'r', 'e', 'g', '-', 'c', 'h', 'e', 'c', 'k', 's', 'u', 'm', 0, 0, 0, 1};
  std::array<std::uint8_t, crypto_shorthash_BYTES> out{};
  crypto_shorthash(out.data(), data.data(), data.size(), kKey.data());
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; i++) v |= static_cast<std::uint64_t>(out[i]) << (8 * i);
  return v;
}

std::array<std::uint8_t, 64> CryptoService::token_for(Pid signer, Digest const &d) const {
  std::array<std::uint8_t, 64> tok{};
  if (backend_ == Backend::Simulated) {
    auto const &key = secrets_.at(signer);
    crypto_generichash(tok.data(), tok.size(), d.bytes.data(), d.bytes.size(), key.data(),
                       key.size());
  } else {
    crypto_sign_detached(tok.data(), nullptr, d.bytes.data(), d.bytes.size(), sk_.at(signer).data());
  }
  return tok;
}

bool CryptoService::check_token(Signature const &sig) const {
  if (sig.signer >= counters_.size()) return false;
  if (backend_ == Backend::Simulated) {
    auto expect = token_for(sig.signer, sig.over);
    return sodium_memcmp(expect.data(), sig.token.data(), expect.size()) == 0;
  }
  return crypto_sign_verify_detached(sig.token.data(), sig.over.bytes.data(), sig.over.bytes.size(),
                                     pk_.at(sig.signer).data()) == 0;
}

Signature CryptoService::sign(Pid signer, ByteView payload, CryptoPath path) {
  auto &c = counters_.at(signer);
  c.sign[static_cast<std::size_t>(path)]++;
  Signature s;
  s.signer = signer;
  s.over = digest(signer, payload);
  s.token = token_for(signer, s.over);
  return s;
}

bool CryptoService::verify(Pid verifier, Signature const &sig, ByteView payload,
                           Pid expected_signer, CryptoPath path) {
  counters_.at(verifier).verify[static_cast<std::size_t>(path)]++;
  if (sig.signer != expected_signer) return false;
  if (digest(verifier, payload) != sig.over) return false;
  return check_token(sig);
}

Signature CryptoService::forge(Pid claimed, ByteView payload) {
  Signature s;
  s.signer = claimed;
  crypto_generichash(s.over.bytes.data(), s.over.bytes.size(), payload.data(), payload.size(),
                     nullptr, 0);
  s.token = token_for(claimed, s.over);
  s.token[0] ^= 0x5a;  // flips bits so the token never matches
  return s;
}

Counters CryptoService::total() const {
  Counters t;
  for (auto const &c : counters_) t += c;
  return t;
}

void CryptoService::reset_counters() {
  for (auto &c : counters_) c = Counters{};
}

}  // namespace ubft::crypto
