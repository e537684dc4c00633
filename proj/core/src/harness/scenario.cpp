#include "ubft/harness/scenario.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include <fmt/format.h>

namespace ubft::harness {

ScenarioError::ScenarioError(std::size_t line, std::string const &msg)
    : std::runtime_error(line > 0 ? fmt::format("line {}: {}", line, msg) : msg), line_{line} {}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) i++;
    auto j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') j++;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

struct Ctx {
  std::size_t line;
  Time delta;

  [[noreturn]] void fail(std::string const &msg) const { throw ScenarioError(line, msg); }

  std::uint64_t u64(std::string_view v) const {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) fail(fmt::format("expected an integer, got '{}'", v));
    return out;
  }

  std::uint32_t u32(std::string_view v) const {
    auto x = u64(v);
    if (x > 0xffffffffULL) fail(fmt::format("value '{}' out of range", v));
    return static_cast<std::uint32_t>(x);
  }

  double real(std::string_view v) const {
    try {
      std::size_t used = 0;
      std::string s{v};
      double d = std::stod(s, &used);
      if (used != s.size()) fail(fmt::format("expected a number, got '{}'", v));
      return d;
    } catch (std::logic_error const &) {
      fail(fmt::format("expected a number, got '{}'", v));
    }
  }

  Time duration(std::string_view v) const {
    if (!v.empty() && v.back() == 'd') {
      return static_cast<Time>(u64(v.substr(0, v.size() - 1))) * delta;
    }
    if (v == "never") return kNever;
    return static_cast<Time>(u64(v));
  }

  bool boolean(std::string_view v) const {
    if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "off" || v == "no" || v == "0") return false;
    fail(fmt::format("expected a boolean, got '{}'", v));
  }
};

std::optional<ChannelKind> channel_kind(std::string_view v) {
  if (v == "tbdata") return ChannelKind::TbData;
  if (v == "tback") return ChannelKind::TbAck;
  if (v == "p2p") return ChannelKind::P2P;
  if (v == "client") return ChannelKind::Client;
  if (v == "mem") return ChannelKind::Mem;
  return std::nullopt;
}

sim::FaultEntry parse_fault(Ctx const &c, std::string_view value) {
  auto w = words(value);
  if (w.size() < 5) c.fail("fault needs: <at T|decided N> <role> <index> <behavior> [k=v ...]");
  sim::FaultEntry e;
  if (w[0] == "at") {
    e.trigger.kind = sim::Trigger::Kind::At;
    e.trigger.at = c.duration(w[1]);
  } else if (w[0] == "decided") {
    e.trigger.kind = sim::Trigger::Kind::WhenDecided;
    e.trigger.decided = c.u64(w[1]);
  } else {
    c.fail(fmt::format("unknown fault trigger '{}'", w[0]));
  }
  if (w[2] == "replica") {
    e.victim.role = sim::Role::Replica;
  } else if (w[2] == "memory") {
    e.victim.role = sim::Role::MemoryNode;
  } else if (w[2] == "client") {
    e.victim.role = sim::Role::Client;
  } else {
    c.fail(fmt::format("unknown victim role '{}'", w[2]));
  }
  e.victim.index = c.u32(w[3]);
  auto b = sim::behavior_from_name(w[4]);
  if (!b) c.fail(fmt::format("unknown behavior '{}'", w[4]));
  e.behavior = *b;
  for (std::size_t i = 5; i < w.size(); i++) {
    auto eq = w[i].find('=');
    if (eq == std::string_view::npos) c.fail(fmt::format("expected key=value, got '{}'", w[i]));
    auto k = w[i].substr(0, eq);
    auto v = w[i].substr(eq + 1);
    if (e.behavior != sim::Behavior::Delay) c.fail(fmt::format("'{}' takes no options", w[4]));
    if (k == "amount") {
      e.amount = c.duration(v);
    } else if (k == "inbound") {
      e.inbound = c.boolean(v);
    } else if (k == "kind") {
      e.kind = channel_kind(v);
      if (!e.kind) c.fail(fmt::format("unknown channel kind '{}'", v));
    } else if (k == "stream") {
      e.stream = static_cast<std::uint8_t>(c.u32(v));
    } else if (k == "until") {
      e.until = c.duration(v);
    } else {
      c.fail(fmt::format("unknown delay option '{}'", k));
    }
  }
  if (e.behavior == sim::Behavior::Delay && e.amount <= 0) c.fail("delay needs amount > 0");
  return e;
}

void set(Scenario &s, Ctx const &c, std::string_view key, std::string_view v) {
  auto &cfg = s.sim;
  if (key == "name") {
    s.name = std::string{v};
  } else if (key == "mode") {
    if (v == "smr") {
      s.mode = Mode::Smr;
    } else if (v == "ctb") {
      s.mode = Mode::Ctb;
    } else {
      c.fail(fmt::format("unknown mode '{}'", v));
    }
  } else if (key == "n") {
    cfg.n_replicas = c.u32(v);
  } else if (key == "f") {
    cfg.f = c.u32(v);
  } else if (key == "f_m") {
    cfg.f_m = c.u32(v);
    cfg.n_mem = 2 * cfg.f_m + 1;
  } else if (key == "n_mem") {
    cfg.n_mem = c.u32(v);
  } else if (key == "t") {
    s.t = c.u32(v);
    if (s.t == 0) c.fail("t must be positive");
  } else if (key == "window") {
    s.window = c.u64(v);
    if (s.window == 0) c.fail("window must be positive");
  } else if (key == "delta") {
    // already applied in the first pass
  } else if (key == "gst") {
    cfg.gst = c.duration(v);
  } else if (key == "seed") {
    cfg.seed = c.u64(v);
  } else if (key == "drift") {
    cfg.drift_bound = c.real(v);
  } else if (key == "pre_gst_cap") {
    cfg.pre_gst_cap_factor = c.real(v);
  } else if (key == "crypto") {
    if (v == "simulated") {
      s.backend = crypto::Backend::Simulated;
    } else if (v == "real") {
      s.backend = crypto::Backend::Real;
    } else {
      c.fail(fmt::format("crypto must be simulated or real, got '{}'", v));
    }
  } else if (key == "app") {
    if (v != "flip" && v != "kv") c.fail(fmt::format("unknown app '{}'", v));
    s.app = std::string{v};
  } else if (key == "echo") {
    s.echo_round = c.boolean(v);
  } else if (key == "progress_timeout") {
    s.progress_timeout = c.duration(v);
  } else if (key == "slot_timeout") {
    s.slot_timeout = c.duration(v);
  } else if (key == "echo_timeout") {
    s.echo_timeout = c.duration(v);
  } else if (key == "ctb_slow_timeout") {
    s.ctb_slow_timeout = c.duration(v);
  } else if (key == "client_resend") {
    s.client_resend = c.duration(v);
  } else if (key == "tearing") {
    s.adversarial_tearing = c.boolean(v);
  } else if (key == "workload.clients") {
    s.workload.clients = c.u32(v);
  } else if (key == "workload.requests") {
    s.workload.requests = c.u64(v);
  } else if (key == "workload.op_size") {
    s.workload.op_size = c.u32(v);
  } else if (key == "workload.keys") {
    s.workload.keys = c.u32(v);
    if (s.workload.keys == 0) c.fail("workload.keys must be positive");
  } else if (key == "workload.put_ratio") {
    s.workload.put_ratio = c.real(v);
  } else if (key == "workload.start") {
    s.workload.start = c.duration(v);
  } else if (key == "workload.probe_at") {
    s.workload.probe_at = c.duration(v);
  } else if (key == "time_limit") {
    s.time_limit = c.duration(v);
  } else if (key == "event_budget") {
    s.event_budget = c.u64(v);
  } else if (key == "expect_liveness") {
    s.expect_liveness = c.boolean(v);
  } else if (key == "settle") {
    s.settle = c.duration(v);
  } else if (key == "ctb.broadcasts") {
    s.ctb_broadcasts = c.u64(v);
  } else if (key == "ctb.interval") {
    s.ctb_interval = c.duration(v);
  } else if (key == "fault") {
    s.faults.entries.push_back(parse_fault(c, v));
  } else {
    c.fail(fmt::format("unknown key '{}'", key));
  }
}

}  // namespace

Time Scenario::effective_time_limit() const {
  if (time_limit > 0) return time_limit;
  auto per_request = 60 * sim.delta;
  auto total = static_cast<Time>(workload.requests) * per_request;
  if (mode == Mode::Ctb) total = static_cast<Time>(ctb_broadcasts) * 40 * sim.delta;
  return std::max(sim.gst + workload.start, workload.probe_at.value_or(0)) + total + 2000 * sim.delta;
}

Scenario parse_scenario(std::string_view text, std::string name) {
  struct Line {
    std::size_t no;
    std::string key;
    std::string value;
  };
  std::vector<Line> lines;
  std::size_t no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto raw = text.substr(pos, end - pos);
    pos = end + 1;
    no++;
    auto hash = raw.find('#');
    if (hash != std::string_view::npos) raw = raw.substr(0, hash);
    raw = trim(raw);
    if (raw.empty()) {
      if (end == text.size()) break;
      continue;
    }
    auto eq = raw.find('=');
    if (eq == std::string_view::npos) throw ScenarioError(no, fmt::format("expected key = value, got '{}'", raw));
    auto key = trim(raw.substr(0, eq));
    auto value = trim(raw.substr(eq + 1));
    if (key.empty() || value.empty()) throw ScenarioError(no, "empty key or value");
    lines.push_back(Line{no, std::string{key}, std::string{value}});
    if (end == text.size()) break;
  }

  Scenario s;
  s.name = std::move(name);
  // delta first: durations elsewhere may be written in multiples of it
  for (auto const &l : lines) {
    if (l.key == "delta") {
      Ctx c{l.no, 1};
      s.sim.delta = c.duration(l.value);
      if (s.sim.delta <= 0) c.fail("delta must be positive");
    }
  }
  for (auto const &l : lines) set(s, Ctx{l.no, s.sim.delta}, l.key, l.value);

  try {
    s.sim.validate();
  } catch (sim::ConfigError const &e) {
    throw ScenarioError(0, e.what());
  }
  if (s.workload.clients == 0 && s.mode == Mode::Smr) throw ScenarioError(0, "workload.clients must be positive");
  if (s.workload.put_ratio < 0 || s.workload.put_ratio > 1) {
    throw ScenarioError(0, "workload.put_ratio must lie in [0, 1]");
  }
  try {
    sim::validate_plan(s.faults, s.sim, s.workload.clients);
  } catch (sim::ConfigError const &e) {
    throw ScenarioError(0, e.what());
  }
  return s;
}

Scenario load_scenario(std::string const &path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(0, fmt::format("cannot open scenario '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  auto name = path;
  auto slash = name.find_last_of('/');
  if (slash != std::string::npos) name = name.substr(slash + 1);
  auto dot = name.rfind('.');
  if (dot != std::string::npos) name = name.substr(0, dot);
  return parse_scenario(ss.str(), name);
}

void apply_param(Scenario &s, std::string_view key, std::string_view value) {
  if (key != "t" && key != "window" && key != "delta" && key != "gst" && key != "seed") {
    throw ScenarioError(0, fmt::format("'{}' cannot be swept (t, window, delta, gst, seed)", key));
  }
  Ctx c{0, s.sim.delta};
  if (key == "delta") {
    s.sim.delta = c.duration(value);
    if (s.sim.delta <= 0) c.fail("delta must be positive");
    return;
  }
  set(s, c, key, value);
}

}  // namespace ubft::harness
