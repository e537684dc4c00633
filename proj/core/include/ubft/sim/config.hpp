#pragma once

#include <cstdint>
#include <stdexcept>

#include "ubft/common/types.hpp"

namespace ubft::sim {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SimConfig {
  std::uint32_t n_replicas = 3;
  std::uint32_t f = 1;
  std::uint32_t n_mem = 3;
  std::uint32_t f_m = 1;
  Time delta = 100;
  Time gst = 0;
  std::uint64_t seed = 1;
  double drift_bound = 1.0;
  // Pre-GST message delays are drawn from [0, pre_gst_cap_factor * delta].
  double pre_gst_cap_factor = 100.0;
  // Memory nodes sit on the same fabric for the whole run: one-way delays are
  // drawn from [1, delta / mem_delay_divisor] regardless of GST.
  Time mem_delay_divisor = 4;

  void validate() const;
};

}  // namespace ubft::sim
