#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <vector>

#include "ubft/common/bytes.hpp"
#include "ubft/common/types.hpp"
#include "ubft/crypto/crypto.hpp"
#include "ubft/sim/rng.hpp"

namespace ubft::dmem {

struct RegKey {
  Pid owner = 0;
  std::uint64_t index = 0;
  auto operator<=>(RegKey const &) const = default;
};

// One sub-register: (timestamp, checksum over (ts, payload), payload).
struct Cell {
  std::uint64_t ts = 0;
  std::uint64_t cksum = 0;
  Bytes payload;

  bool operator==(Cell const &) const = default;
  std::size_t bytes() const { return 16 + payload.size(); }
  void encode(Encoder &e) const;
  static Cell decode(Decoder &d);
};

std::uint64_t cell_checksum(crypto::CryptoService &cs, Pid who, std::uint64_t ts,
                            ByteView payload);
Cell make_cell(crypto::CryptoService &cs, Pid who, std::uint64_t ts, Bytes payload);
bool cell_valid(crypto::CryptoService &cs, Pid who, Cell const &c);
// The value every sub-register holds before its first write.
Cell initial_cell(crypto::CryptoService &cs, Pid who);

enum class TornOutcome : std::uint8_t { Old, New, Mixed };

// What a reader observes when its read of a cell overlaps a write landing on
// it. Mixed cells splice the two payloads and never carry a valid checksum.
Cell torn_read_model(crypto::CryptoService &cs, Pid who, Cell const &old_cell,
                     Cell const &new_cell, bool adversarial, sim::Rng &rng,
                     TornOutcome *outcome = nullptr);

enum class ReadVerdict : std::uint8_t { Value, ByzantineOwner, Retry };

struct Verdict {
  ReadVerdict kind = ReadVerdict::Retry;
  Cell cell;
};

// Combines f_m+1 (or more) node responses, each holding both sub-registers.
Verdict evaluate_read(crypto::CryptoService &cs, Pid reader,
                      std::vector<std::array<Cell, 2>> const &responses, Time elapsed_local,
                      Time delta_local);

struct DmemConfig {
  std::vector<Pid> nodes;  // 2f_m+1 memory-node processes
  std::uint32_t f_m = 1;
  Time delta = 100;
  double drift_bound = 1.0;
  Time write_span = 10;  // time a write occupies a cell at a node
  bool adversarial_tearing = false;
  double tear_mix_probability = 0.5;
};

}  // namespace ubft::dmem
