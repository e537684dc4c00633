#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ubft/app/client.hpp"

namespace ubft::app {

struct LinearizabilityResult {
  bool ok = true;
  std::string key;  // first key without a valid linearization
  std::size_t ops_checked = 0;
};

// Wing-Gong style search, partitioned per key, over client-observed ToyKV
// operations. Pending puts may take effect or not; pending gets are ignored.
LinearizabilityResult check_kv_linearizable(std::vector<HistoryEntry> const &history);

}  // namespace ubft::app
