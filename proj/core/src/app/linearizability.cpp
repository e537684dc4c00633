#include "ubft/app/linearizability.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace ubft::app {

namespace {

struct KvOp {
  bool put = false;
  std::string value;  // put: written value; get: observed value
  bool found = false;  // get only
  Time invoked = 0;
  Time completed = kNever;
};

class KeySearch {
 public:
  explicit KeySearch(std::vector<KvOp> ops) : ops_{std::move(ops)}, done_(ops_.size(), false) {
    for (auto const &o : ops_) {
      if (o.completed != kNever) required_++;
    }
  }

  bool run() { return step(std::nullopt, 0); }

 private:
  bool step(std::optional<std::string> const &value, std::size_t linearized_required) {
    if (linearized_required == required_) return true;
    auto key = memo_key(value);
    if (!seen_.insert(key).second) return false;
    // An operation can go next only if it was invoked before every remaining
    // operation's completion.
    Time horizon = kNever;
    for (std::size_t i = 0; i < ops_.size(); i++) {
      if (!done_[i]) horizon = std::min(horizon, ops_[i].completed);
    }
    for (std::size_t i = 0; i < ops_.size(); i++) {
      if (done_[i] || ops_[i].invoked > horizon) continue;
      auto const &o = ops_[i];
      std::optional<std::string> next = value;
      if (o.put) {
        next = o.value;
      } else if (o.found != value.has_value() || (o.found && o.value != *value)) {
        continue;
      }
      done_[i] = true;
      bool ok = step(next, linearized_required + (o.completed != kNever ? 1 : 0));
      done_[i] = false;
      if (ok) return true;
    }
    return false;
  }

  std::string memo_key(std::optional<std::string> const &value) const {
    std::string k;
    k.reserve(ops_.size() / 8 + 8 + (value ? value->size() : 0));
    std::uint8_t acc = 0;
    for (std::size_t i = 0; i < ops_.size(); i++) {
      if (done_[i]) acc |= static_cast<std::uint8_t>(1u << (i % 8));
      if (i % 8 == 7) {
        k.push_back(static_cast<char>(acc));
        acc = 0;
      }
    }
    k.push_back(static_cast<char>(acc));
    k.push_back(value ? '\1' : '\0');
    if (value) k += *value;
    return k;
  }

  std::vector<KvOp> ops_;
  std::vector<bool> done_;
  std::size_t required_ = 0;
  std::set<std::string> seen_;
};

}  // namespace

LinearizabilityResult check_kv_linearizable(std::vector<HistoryEntry> const &history) {
  std::map<std::string, std::vector<KvOp>> per_key;
  LinearizabilityResult res;
  for (auto const &h : history) {
    ToyKV::Decoded d;
    try {
      d = ToyKV::decode_op(h.op);
    } catch (DecodeError const &) {
      continue;
    }
    KvOp op;
    op.put = d.op == ToyKV::Op::Put;
    op.invoked = h.invoked;
    op.completed = h.completed;
    if (op.put) {
      op.value = d.value;
    } else {
      if (h.completed == kNever) continue;
      auto [found, v] = ToyKV::decode_get_result(h.result);
      op.found = found;
      op.value = v;
    }
    per_key[d.key].push_back(std::move(op));
    res.ops_checked++;
  }
  for (auto &[key, ops] : per_key) {
    std::sort(ops.begin(), ops.end(),
              [](KvOp const &a, KvOp const &b) { return a.invoked < b.invoked; });
    if (!KeySearch(std::move(ops)).run()) {
      res.ok = false;
      res.key = key;
      return res;
    }
  }
  return res;
}

}  // namespace ubft::app
