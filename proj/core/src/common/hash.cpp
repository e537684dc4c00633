#include "ubft/common/hash.hpp"

#include <array>
#include <stdexcept>

#include <sodium.h>

namespace ubft {

namespace {
struct SodiumInit {
  SodiumInit() {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
  }
};
}  // namespace

std::uint64_t fingerprint64(ByteView data, std::uint64_t key) {
  static SodiumInit const init;
  std::array<unsigned char, crypto_shorthash_KEYBYTES> k{};
  for (std::size_t i = 0; i < 8; i++) k[i] = static_cast<unsigned char>(key >> (8 * i));
  std::array<unsigned char, crypto_shorthash_BYTES> out{};
  crypto_shorthash(out.data(), data.data(), data.size(), k.data());
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; i++) v |= static_cast<std::uint64_t>(out[i]) << (8 * i);
  return v;
}

}  // namespace ubft
