#pragma once

#include <cstdint>

#include "ubft/common/types.hpp"

namespace ubft {

enum class ChannelKind : std::uint8_t {
  TbData = 1,  // tail-channel slot writes carrying tail-broadcast payloads
  TbAck = 2,   // tail-broadcast acknowledgements
  P2P = 3,     // point-to-point protocol messages
  Client = 4,  // client requests and replies
  Mem = 5,     // memory-node register operations
};

// Packed 64-bit identifier of a logical channel: kind | stream | arg | src | dst.
struct ChannelKey {
  ChannelKind kind = ChannelKind::P2P;
  std::uint8_t stream = 0;
  std::uint16_t arg = 0;  // 12 bits used
  Pid src = 0;            // 20 bits used
  Pid dst = 0;            // 20 bits used

  std::uint64_t pack() const {
    return (static_cast<std::uint64_t>(kind) << 60) | (static_cast<std::uint64_t>(stream) << 52) |
           (static_cast<std::uint64_t>(arg & 0xfff) << 40) |
           (static_cast<std::uint64_t>(src & 0xfffff) << 20) | (dst & 0xfffff);
  }

  static ChannelKey unpack(std::uint64_t v) {
    ChannelKey k;
    k.kind = static_cast<ChannelKind>(v >> 60);
    k.stream = static_cast<std::uint8_t>((v >> 52) & 0xff);
    k.arg = static_cast<std::uint16_t>((v >> 40) & 0xfff);
    k.src = static_cast<Pid>((v >> 20) & 0xfffff);
    k.dst = static_cast<Pid>(v & 0xfffff);
    return k;
  }
};

}  // namespace ubft
