#include "ubft/sim/fault.hpp"

#include <array>
#include <set>

#include <fmt/format.h>

namespace ubft::sim {

namespace {

constexpr std::array<std::string_view, 9> kNames{
    "crash",          "byz-equivocate",        "byz-bad-signature",
    "byz-bad-checksum", "byz-replay",          "byz-censor-requests",
    "byz-silent",     "delay",                 "byz-client-subset",
};

std::string_view role_name(Role r) {
  switch (r) {
    case Role::Replica:
      return "replica";
    case Role::MemoryNode:
      return "memory";
    case Role::Client:
      return "client";
  }
  return "?";
}

}  // namespace

std::string_view behavior_name(Behavior b) { return kNames.at(static_cast<std::size_t>(b)); }

std::optional<Behavior> behavior_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); i++) {
    if (kNames[i] == name) return static_cast<Behavior>(i);
  }
  return std::nullopt;
}

bool is_byzantine(Behavior b) { return b != Behavior::Crash && b != Behavior::Delay; }

std::string describe(FaultEntry const &e) {
  std::string when = e.trigger.kind == Trigger::Kind::At
                         ? fmt::format("at {}", e.trigger.at)
                         : fmt::format("when decided {}", e.trigger.decided);
  return fmt::format("{} {} {} {}", when, role_name(e.victim.role), e.victim.index,
                     behavior_name(e.behavior));
}

void validate_plan(FaultPlan const &plan, SimConfig const &cfg, std::uint32_t n_clients,
                   AdversaryLimits limits) {
  std::set<std::uint32_t> faulty_replicas;
  std::set<std::uint32_t> crashed_memory;
  for (auto const &e : plan.entries) {
    auto const &v = e.victim;
    switch (v.role) {
      case Role::Replica:
        if (v.index >= cfg.n_replicas) {
          throw ConfigError(fmt::format("fault targets missing replica {}", v.index));
        }
        if (e.behavior == Behavior::ByzClientSubset) {
          throw ConfigError("byz-client-subset applies to clients only");
        }
        if (e.behavior != Behavior::Delay) faulty_replicas.insert(v.index);
        break;
      case Role::MemoryNode:
        if (v.index >= cfg.n_mem) {
          throw ConfigError(fmt::format("fault targets missing memory node {}", v.index));
        }
        if (is_byzantine(e.behavior)) {
          throw ConfigError(fmt::format("memory node {} can only crash (model violation: {})",
                                        v.index, behavior_name(e.behavior)));
        }
        if (e.behavior == Behavior::Crash) crashed_memory.insert(v.index);
        break;
      case Role::Client:
        if (v.index >= n_clients) {
          throw ConfigError(fmt::format("fault targets missing client {}", v.index));
        }
        if (e.behavior != Behavior::ByzClientSubset && e.behavior != Behavior::Crash &&
            e.behavior != Behavior::Delay) {
          throw ConfigError("clients support crash, delay and byz-client-subset only");
        }
        break;
    }
  }
  if (faulty_replicas.size() > cfg.f) {
    throw ConfigError(fmt::format("{} faulty replicas exceed f={}", faulty_replicas.size(), cfg.f));
  }
  if (crashed_memory.size() > cfg.f_m && !limits.allow_memory_overcrash) {
    throw ConfigError(
        fmt::format("{} crashed memory nodes exceed f_m={}", crashed_memory.size(), cfg.f_m));
  }
}

}  // namespace ubft::sim
