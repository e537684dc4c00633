#include "ubft/dmem/register.hpp"

#include <algorithm>

namespace ubft::dmem {

void Cell::encode(Encoder &e) const {
  e.u64(ts).u64(cksum).bytes(payload);
}

Cell Cell::decode(Decoder &d) {
  Cell c;
  c.ts = d.u64();
  c.cksum = d.u64();
  c.payload = d.bytes();
  return c;
}

std::uint64_t cell_checksum(crypto::CryptoService &cs, Pid who, std::uint64_t ts,
                            ByteView payload) {
  Encoder e(payload.size() + 8);
  e.u64(ts).raw(payload);
  return cs.checksum(who, e.view());
}

Cell make_cell(crypto::CryptoService &cs, Pid who, std::uint64_t ts, Bytes payload) {
  Cell c;
  c.ts = ts;
  c.cksum = cell_checksum(cs, who, ts, payload);
  c.payload = std::move(payload);
  return c;
}

bool cell_valid(crypto::CryptoService &cs, Pid who, Cell const &c) {
  return cell_checksum(cs, who, c.ts, c.payload) == c.cksum;
}

Cell initial_cell(crypto::CryptoService &cs, Pid who) { return make_cell(cs, who, 0, {}); }

Cell torn_read_model(crypto::CryptoService &cs, Pid who, Cell const &old_cell,
                     Cell const &new_cell, bool adversarial, sim::Rng &rng,
                     TornOutcome *outcome) {
  auto pick = TornOutcome::Mixed;
  if (!adversarial) {
    auto r = rng.uniform(0, 2);
    pick = r == 0 ? TornOutcome::Old : (r == 1 ? TornOutcome::New : TornOutcome::Mixed);
  }
  if (outcome != nullptr) *outcome = pick;
  if (pick == TornOutcome::Old) return old_cell;
  if (pick == TornOutcome::New) return new_cell;

  // Header words from the new write, trailing payload bytes from the old one.
  Cell mixed;
  mixed.ts = new_cell.ts;
  mixed.cksum = old_cell.cksum;
  mixed.payload = new_cell.payload;
  auto half = mixed.payload.size() / 2;
  for (std::size_t i = half; i < mixed.payload.size() && i < old_cell.payload.size(); i++) {
    mixed.payload[i] = old_cell.payload[i];
  }
  if (cell_valid(cs, who, mixed)) mixed.cksum ^= 1;
  return mixed;
}

Verdict evaluate_read(crypto::CryptoService &cs, Pid reader,
                      std::vector<std::array<Cell, 2>> const &responses, Time elapsed_local,
                      Time delta_local) {
  bool any_valid[2] = {false, false};
  std::uint64_t best_ts[2] = {0, 0};
  Cell const *best = nullptr;
  std::vector<std::uint64_t> valid_ts[2];
  for (auto const &resp : responses) {
    for (std::size_t s = 0; s < 2; s++) {
      auto const &c = resp[s];
      if (!cell_valid(cs, reader, c)) continue;
      any_valid[s] = true;
      valid_ts[s].push_back(c.ts);
      best_ts[s] = std::max(best_ts[s], c.ts);
      if (best == nullptr || c.ts > best->ts) best = &c;
    }
  }
  if (!any_valid[0] && !any_valid[1]) {
    if (elapsed_local < delta_local) return {ReadVerdict::ByzantineOwner, {}};
    return {ReadVerdict::Retry, {}};
  }
  // A correct owner alternates sub-registers with strictly increasing
  // timestamps, so a written timestamp can never show up in both.
  for (auto ts : valid_ts[0]) {
    if (ts == 0) continue;
    if (std::find(valid_ts[1].begin(), valid_ts[1].end(), ts) != valid_ts[1].end()) {
      return {ReadVerdict::ByzantineOwner, {}};
    }
  }
  return {ReadVerdict::Value, *best};
}

}  // namespace ubft::dmem
