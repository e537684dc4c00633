#include "ubft/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include <fmt/format.h>

namespace ubft::harness {

Time percentile(std::vector<Time> values, double pct) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(values.size())));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

int spike_onset(std::vector<Time> const &latencies, double factor, Time baseline) {
  for (int p = 1; p <= 100 && !latencies.empty(); p++) {
    if (static_cast<double>(percentile(latencies, p)) > factor * static_cast<double>(baseline)) return p;
  }
  return 101;
}

int spike_onset(std::vector<Time> const &latencies, double factor) {
  return spike_onset(latencies, factor, percentile(latencies, 50));
}

std::string format_report(Scenario const &sc, RunResult const &r) {
  std::string out;
  auto line = [&out](std::string_view key, auto const &value) {
    fmt::format_to(std::back_inserter(out), "{} = {}\n", key, value);
  };
  out += "# invariant coverage\n";
  for (auto const &c : coverage()) fmt::format_to(std::back_inserter(out), "#   {}: {}\n", c.invariant, c.mechanism);

  line("scenario", r.scenario.empty() ? "-" : r.scenario);
  line("seed", r.seed);
  line("config.n", sc.sim.n_replicas);
  line("config.f", sc.sim.f);
  line("config.n_mem", sc.sim.n_mem);
  line("config.f_m", sc.sim.f_m);
  line("config.t", sc.t);
  line("config.window", sc.window);
  line("config.delta", sc.sim.delta);
  line("config.gst", sc.sim.gst);
  line("config.crypto", sc.backend == crypto::Backend::Real ? "real" : "simulated");
  line("config.app", sc.app);
  line("config.faults", sc.faults.entries.size());
  for (std::size_t i = 0; i < sc.faults.entries.size(); i++) {
    line(fmt::format("config.fault.{}", i), sim::describe(sc.faults.entries[i]));
  }

  line("run.final_time", r.final_time);
  line("run.events", r.summary.events);
  line("run.dropped", r.summary.dropped);
  line("run.livelock", r.summary.livelock);
  line("run.time_limit_hit", r.summary.time_limit_hit);
  line("run.liveness_expected", r.liveness_expected);
  line("run.liveness_ok", r.liveness_ok);

  line("clients.requests_expected", r.requests_expected);
  line("clients.requests_completed", r.requests_completed);
  line("clients.resends", r.client_resends);
  line("latency.p50", percentile(r.latencies, 50));
  line("latency.p90", percentile(r.latencies, 90));
  line("latency.p99", percentile(r.latencies, 99));
  line("latency.max", percentile(r.latencies, 100));
  line("latency.spike_onset_pct", spike_onset(r.latencies, 2.0));

  line("decide.fast", r.decided_fast);
  line("decide.slow", r.decided_slow);
  line("decide.proposals", r.proposals);
  line("ctb.fast", r.ctb_fast);
  line("ctb.slow", r.ctb_slow);
  line("ctb.aborts", r.ctb_aborts);
  line("view.max", r.max_view);
  line("view.changes", r.view_changes);
  line("summary.stalls", r.summary_stalls);
  line("summary.stall_time", r.summary_stall_time);
  line("summary.installs", r.summary_installs);
  line("checkpoint.adoptions", r.checkpoints);
  line("quarantine.count", r.quarantines);

  line("crypto.critical.sign", r.crypto.sign[0]);
  line("crypto.critical.verify", r.crypto.verify[0]);
  line("crypto.background.sign", r.crypto.sign[1]);
  line("crypto.background.verify", r.crypto.verify[1]);
  line("crypto.digests", r.crypto.digests);

  for (std::size_t i = 0; i < r.footprint.size(); i++) {
    line(fmt::format("memory.replica.{}.footprint", i), r.footprint[i]);
    line(fmt::format("memory.replica.{}.live", i), r.live[i]);
  }
  line("memory.disaggregated", r.disaggregated_bytes);

  for (auto const &[name, n] : r.checks) line(fmt::format("checks.{}", name), n);
  line("state.converged", r.converged);
  if (sc.app == "kv") line("state.linearizable", r.linearizable);
  line("violations.count", r.violations.size());
  for (std::size_t i = 0; i < r.violations.size(); i++) {
    auto const &v = r.violations[i];
    line(fmt::format("violation.{}", i), fmt::format("{} @{}: {}", v.invariant, v.time == kNever ? -1 : v.time, v.detail));
  }
  line("trace.lines", r.trace_lines);
  line("trace.digest", r.trace_digest);
  line("status", r.failed() ? "fail" : "pass");
  return out;
}

std::string format_ctb_report(Scenario const &sc, CtbRunResult const &r) {
  std::string out;
  auto line = [&out](std::string_view key, auto const &value) {
    fmt::format_to(std::back_inserter(out), "{} = {}\n", key, value);
  };
  line("scenario", sc.name.empty() ? "-" : sc.name);
  line("seed", r.seed);
  line("config.n", sc.sim.n_replicas);
  line("config.t", sc.t);
  line("config.gst", sc.sim.gst);
  line("config.faults", sc.faults.entries.size());
  for (std::size_t i = 0; i < sc.faults.entries.size(); i++) {
    line(fmt::format("config.fault.{}", i), sim::describe(sc.faults.entries[i]));
  }
  line("run.final_time", r.final_time);
  line("run.events", r.summary.events);
  line("run.quiesced", r.quiesced);
  line("ctb.broadcasts", r.broadcasts);
  line("ctb.fast", r.fast);
  line("ctb.slow", r.slow);
  line("ctb.aborts", r.aborts);
  for (auto const &[name, n] : r.checks) line(fmt::format("checks.{}", name), n);
  line("violations.count", r.violations.size());
  for (std::size_t i = 0; i < r.violations.size(); i++) {
    auto const &v = r.violations[i];
    line(fmt::format("violation.{}", i), fmt::format("{} @{}: {}", v.invariant, v.time == kNever ? -1 : v.time, v.detail));
  }
  line("trace.lines", r.trace_lines);
  line("trace.digest", r.trace_digest);
  line("status", r.failed() ? "fail" : "pass");
  return out;
}

std::string format_sweep(std::string const &param, std::vector<SweepRow> const &rows) {
  std::string out = fmt::format("{:>8} {:>8} {:>10} {:>10} {:>10} {:>10} {:>8} {:>8} {:>12} {:>6}\n", param,
                                "done", "p50", "p90", "p99", "max", "stalls", "onset", "footprint", "status");
  for (auto const &row : rows) {
    auto const &r = row.result;
    std::size_t fp = r.footprint.empty() ? 0 : *std::max_element(r.footprint.begin(), r.footprint.end());
    fmt::format_to(std::back_inserter(out), "{:>8} {:>8} {:>10} {:>10} {:>10} {:>10} {:>8} {:>8} {:>12} {:>6}\n",
                   row.value, r.requests_completed, percentile(r.latencies, 50), percentile(r.latencies, 90),
                   percentile(r.latencies, 99), percentile(r.latencies, 100), r.summary_stalls,
                   spike_onset(r.latencies, 2.0), fp, r.failed() ? "fail" : "pass");
  }
  return out;
}

}  // namespace ubft::harness
