#pragma once

#include <cstdint>
#include <limits>

namespace ubft {

// Simulated time, in ticks. All protocol durations are multiples of delta.
using Time = std::int64_t;
inline constexpr Time kNever = std::numeric_limits<Time>::max();

// Process identifiers index the simulator's process table. Replicas occupy
// 0..n-1 so that leader(v) = v mod n is also a process id.
using Pid = std::uint32_t;
inline constexpr Pid kNoPid = std::numeric_limits<Pid>::max();

}  // namespace ubft
