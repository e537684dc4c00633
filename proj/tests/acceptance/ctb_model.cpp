#include "ctb_model.hpp"

#include <map>
#include <optional>
#include <unordered_set>
#include <vector>

#include <fmt/format.h>

#include "ubft/ctb/core.hpp"

namespace ubft::acceptance {

namespace {

using Seq = std::vector<std::uint64_t>;

// Reference receiver written from the protocol rules, not from ctb::Core:
//  - LOCK(k, m): lock it unless the slot k mod t already holds an id >= k;
//    a fresh lock is announced with LOCKED(k, m).
//  - LOCKED(k, m) from q: remembered if newer than q's last one in that slot.
//  - deliver (k, m) once every member's latest LOCKED in the slot is (k, m),
//    unless an id >= k was already delivered in that slot.
struct RefReceiver {
  std::uint32_t n = 0;
  std::uint32_t t = 0;
  std::map<std::uint64_t, std::uint64_t> lock;
  std::map<std::pair<std::uint32_t, std::uint64_t>, std::pair<std::uint64_t, std::string>> latest;
  std::set<std::uint64_t> delivered;

  bool on_lock(std::uint64_t k) {
    auto &cur = lock[k % t];
    if (cur >= k) return false;
    cur = k;
    return true;
  }

  std::optional<std::uint64_t> on_locked(std::uint32_t q, std::uint64_t k, std::string const &m) {
    auto &cur = latest[{q, k % t}];
    if (cur.first >= k) return std::nullopt;
    cur = {k, m};
    for (std::uint32_t r = 0; r < n; r++) {
      auto it = latest.find({r, k % t});
      if (it == latest.end() || it->second != std::make_pair(k, m)) return std::nullopt;
    }
    for (auto d : delivered) {
      if (d % t == k % t && d >= k) return std::nullopt;
    }
    delivered.insert(k);
    return k;
  }

  void key(std::string &out) const {
    for (auto const &[s, k] : lock) out += fmt::format("L{}:{};", s, k);
    for (auto const &[qs, v] : latest) out += fmt::format("R{}.{}:{};", qs.first, qs.second, v.first);
    for (auto d : delivered) out += fmt::format("D{};", d);
  }
};

std::string msg_for(std::uint64_t k) { return fmt::format("m{}", k); }
Bytes bytes_for(std::uint64_t k) {
  auto s = msg_for(k);
  return Bytes(s.begin(), s.end());
}

// Every content a tail link can end up delivering when `sent` went in: any
// message with at least t newer ones behind it may be lost.
std::vector<Seq> tail_variants(Seq const &sent, std::uint32_t t) {
  std::vector<Seq> out;
  std::size_t droppable = sent.size() > t ? sent.size() - t : 0;
  for (std::uint64_t mask = 0; mask < (1ULL << droppable); mask++) {
    Seq s;
    for (std::size_t i = 0; i < sent.size(); i++) {
      if (i < droppable && (mask >> i) & 1) continue;
      s.push_back(sent[i]);
    }
    out.push_back(std::move(s));
  }
  return out;
}

struct Receiver {
  std::uint32_t self;
  std::uint32_t n;
  std::uint32_t t;
  std::uint64_t broadcasts;
  crypto::CryptoService *cs;
  CtbEnumeration *out;

  // inputs: [0] = LOCK link, [1 + q] = LOCKED link from q
  std::vector<Seq> links;
  std::unordered_set<std::string> visited;

  struct State {
    std::vector<std::size_t> pos;
    ctb::Core core;
    RefReceiver ref;
    std::set<std::uint64_t> core_delivered;
    std::set<std::uint64_t> locked_self;  // ids this receiver announced
  };

  void mismatch(std::string what) {
    if (out->mismatches++ == 0) out->first_mismatch = fmt::format("receiver {}: {}", self, what);
  }

  std::string key(State const &s) {
    std::string k;
    for (auto p : s.pos) k += fmt::format("{},", p);
    auto d = cs->digest(0, s.core.encode_state());
    k += d.hex().substr(0, 32);
    s.ref.key(k);
    for (auto v : s.core_delivered) k += fmt::format("d{};", v);
    return k;
  }

  void explore(State const &s) {
    if (!visited.insert(key(s)).second) return;
    out->states++;
    bool any = false;
    for (std::size_t l = 0; l < links.size(); l++) {
      if (s.pos[l] >= links[l].size()) continue;
      auto k = links[l][s.pos[l]];
      // its own LOCKED arrives only after it announced that id
      if (l == 1 + self && !s.locked_self.count(k)) continue;
      any = true;
      out->transitions++;
      State next = s;
      next.pos[l]++;
      if (l == 0) {
        step_lock(next, k);
      } else {
        step_locked(next, static_cast<std::uint32_t>(l - 1), k);
      }
      explore(next);
    }
    if (!any) terminal(s);
  }

  void step_lock(State &s, std::uint64_t k) {
    auto fx = s.core.on_lock(0, k, bytes_for(k));
    bool ref = s.ref.on_lock(k);
    bool core = !fx.locked.empty();
    if (core != ref) mismatch(fmt::format("LOCK {}: core locked={} reference={}", k, core, ref));
    if (ref) s.locked_self.insert(k);
  }

  void step_locked(State &s, std::uint32_t q, std::uint64_t k) {
    auto fx = s.core.on_locked(q, 0, k, bytes_for(k));
    auto ref = s.ref.on_locked(q, k, msg_for(k));
    std::optional<std::uint64_t> core;
    for (auto const &d : fx.deliveries) {
      if (core) mismatch("core delivered twice in one step");
      core = d.k;
      if (d.m != bytes_for(d.k)) mismatch("core delivered an altered message");
      if (!s.core_delivered.insert(d.k).second) mismatch("core delivered an id twice");
    }
    if (core != ref) {
      mismatch(fmt::format("LOCKED {} from {}: core delivered {} reference {}", k, q,
                           core ? static_cast<std::int64_t>(*core) : -1, ref ? static_cast<std::int64_t>(*ref) : -1));
    }
  }

  void terminal(State const &s) {
    // a stuck self link means the receiver skipped a LOCK it never announced
    for (std::size_t l = 0; l < links.size(); l++) {
      if (s.pos[l] < links[l].size()) return;
    }
    out->terminals++;
    if (s.core_delivered != s.ref.delivered) mismatch("terminal delivered sets differ");
    auto first = broadcasts > t ? broadcasts - t + 1 : 1;
    for (auto k = first; k <= broadcasts; k++) {
      if (!s.core_delivered.count(k)) out->tail_misses++;
    }
    out->outcomes.insert({self, s.ref.delivered});
  }
};

}  // namespace

CtbEnumeration enumerate_ctb(std::uint32_t n, std::uint32_t t, std::uint64_t broadcasts) {
  CtbEnumeration out;
  crypto::CryptoService cs(crypto::Backend::Simulated, 1, 1);
  std::vector<Pid> members;
  for (Pid p = 0; p < n; p++) members.push_back(p);
  Seq sent;
  for (std::uint64_t k = 1; k <= broadcasts; k++) sent.push_back(k);

  // A member announces every LOCK it consumes (ids arrive in increasing
  // order), so its LOCKED stream equals its LOCK link content.
  auto lock_links = tail_variants(sent, t);
  std::set<Seq> locked_at_peer;
  for (auto const &l : lock_links) {
    for (auto &v : tail_variants(l, t)) locked_at_peer.insert(std::move(v));
  }

  for (std::uint32_t self = 0; self < n; self++) {
    for (auto const &own_lock : lock_links) {
      for (auto const &own_locked : tail_variants(own_lock, t)) {
        // every combination of what the other members' LOCKED links carry
        std::vector<Seq> choices(locked_at_peer.begin(), locked_at_peer.end());
        std::vector<std::size_t> pick(n, 0);
        while (true) {
          Receiver rx{self, n, t, broadcasts, &cs, &out, {}, {}};
          rx.links.push_back(own_lock);
          for (std::uint32_t q = 0; q < n; q++) rx.links.push_back(q == self ? own_locked : choices[pick[q]]);
          out.link_contents++;
          Receiver::State s{std::vector<std::size_t>(rx.links.size(), 0),
                            ctb::Core(self, members, t, [&cs](ByteView b) { return cs.digest(0, b); }),
                            RefReceiver{n, t, {}, {}, {}},
                            {},
                            {}};
          rx.explore(s);
          std::uint32_t q = 0;
          for (; q < n; q++) {
            if (q == self) continue;
            if (++pick[q] < choices.size()) break;
            pick[q] = 0;
          }
          if (q == n) break;
        }
      }
    }
  }
  return out;
}

}  // namespace ubft::acceptance
