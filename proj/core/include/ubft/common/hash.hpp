#pragma once

#include <cstdint>

#include "ubft/common/bytes.hpp"

namespace ubft {

// 64-bit keyed SipHash fingerprint. Used for trace payload digests and as the
// backing function of protocol checksums; not a cryptographic commitment.
std::uint64_t fingerprint64(ByteView data, std::uint64_t key = 0);

}  // namespace ubft
