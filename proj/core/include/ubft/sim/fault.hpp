#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ubft/common/channel.hpp"
#include "ubft/sim/config.hpp"
#include "ubft/sim/simulator.hpp"

namespace ubft::sim {

enum class Behavior : std::uint8_t {
  Crash,
  ByzEquivocate,      // conflicting tail-broadcast payloads to different receivers
  ByzBadSignature,    // emits signatures that do not verify
  ByzBadChecksum,     // register cells with invalid checksums / duplicate timestamps
  ByzReplay,          // re-broadcasts stale protocol messages
  ByzCensorRequests,  // as leader, never proposes client requests
  ByzSilent,          // sends nothing
  Delay,              // extra latency on the victim's links (not a fault budget item)
  ByzClientSubset,    // client sends each request to a strict subset of replicas
};

std::string_view behavior_name(Behavior b);
std::optional<Behavior> behavior_from_name(std::string_view name);
bool is_byzantine(Behavior b);

struct Victim {
  Role role = Role::Replica;
  std::uint32_t index = 0;
};

struct Trigger {
  enum class Kind : std::uint8_t { At, WhenDecided };
  Kind kind = Kind::At;
  Time at = 0;
  std::uint64_t decided = 0;  // fires once some correct replica applied this many slots
};

struct FaultEntry {
  Trigger trigger;
  Victim victim;
  Behavior behavior = Behavior::Crash;
  // Delay parameters.
  Time amount = 0;
  bool inbound = false;
  std::optional<ChannelKind> kind;
  std::optional<std::uint8_t> stream;
  Time until = kNever;
};

struct FaultPlan {
  std::vector<FaultEntry> entries;
};

struct AdversaryLimits {
  // Safety tests may crash more memory nodes than the liveness budget allows.
  bool allow_memory_overcrash = false;
};

// Throws ConfigError when the plan exceeds the fault model: more than f faulty
// replicas, Byzantine memory nodes, or more than f_m crashed memory nodes.
void validate_plan(FaultPlan const &plan, SimConfig const &cfg, std::uint32_t n_clients,
                   AdversaryLimits limits = {});

std::string describe(FaultEntry const &e);

}  // namespace ubft::sim
