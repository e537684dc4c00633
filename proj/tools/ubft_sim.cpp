#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ubft/harness/ctb_world.hpp"
#include "ubft/harness/report.hpp"
#include "ubft/harness/scenario.hpp"
#include "ubft/harness/world.hpp"

using namespace ubft;

namespace {

int cmd_run(std::string const &path, std::optional<std::uint64_t> seed, std::string const &trace_path,
            std::string const &report_path, bool quiet_events) {
  auto sc = harness::load_scenario(path);
  if (seed) sc.sim.seed = *seed;
  std::ofstream trace_file;
  harness::RunOptions opts;
  opts.trace_events = !quiet_events;
  if (!trace_path.empty()) {
    trace_file.open(trace_path);
    if (!trace_file) throw std::runtime_error(fmt::format("cannot write trace '{}'", trace_path));
    opts.trace_out = &trace_file;
  }
  if (sc.mode == harness::Mode::Ctb) {
    auto res = harness::run_ctb_scenario(sc, opts.trace_out, opts.trace_events);
    auto report = harness::format_ctb_report(sc, res);
    if (report_path.empty()) {
      std::cout << report;
    } else {
      std::ofstream out(report_path);
      out << report;
    }
    return res.failed() ? 1 : 0;
  }
  auto res = harness::run_scenario(sc, opts);
  auto report = harness::format_report(sc, res);
  if (report_path.empty()) {
    std::cout << report;
  } else {
    std::ofstream out(report_path);
    out << report;
    std::cout << fmt::format("{}: {} ({} violations)\n", sc.name, res.failed() ? "fail" : "pass",
                             res.violations.size());
  }
  return res.failed() ? 1 : 0;
}

int cmd_sweep(std::string const &path, std::string const &param, unsigned jobs) {
  auto eq = param.find('=');
  if (eq == std::string::npos) throw std::runtime_error("--param expects name=v1,v2,...");
  auto name = param.substr(0, eq);
  std::vector<std::string> values;
  std::string rest = param.substr(eq + 1);
  std::size_t pos = 0;
  while (pos <= rest.size()) {
    auto comma = rest.find(',', pos);
    if (comma == std::string::npos) comma = rest.size();
    if (comma > pos) values.push_back(rest.substr(pos, comma - pos));
    pos = comma + 1;
  }
  auto base = harness::load_scenario(path);
  std::vector<harness::Scenario> scenarios;
  for (auto const &v : values) {
    auto sc = base;
    harness::apply_param(sc, name, v);
    scenarios.push_back(std::move(sc));
  }
  std::vector<harness::SweepRow> rows(values.size());
  harness::RunOptions opts;
  opts.trace_events = false;
  // independent runs share nothing, so they can go in parallel
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&]() {
    while (true) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next >= scenarios.size()) return;
        i = next++;
      }
      rows[i] = harness::SweepRow{values[i], harness::run_scenario(scenarios[i], opts)};
    }
  };
  std::vector<std::thread> pool;
  for (unsigned j = 0; j < std::max(1u, jobs); j++) pool.emplace_back(worker);
  for (auto &t : pool) t.join();
  std::cout << harness::format_sweep(name, rows);
  for (auto const &r : rows) {
    if (r.result.failed()) return 1;
  }
  return 0;
}

int cmd_check(std::string const &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open trace '{}'", path));
  std::map<std::string, std::uint64_t> checks;
  auto violations = harness::check_trace(in, &checks);
  for (auto const &[name, n] : checks) std::cout << fmt::format("checks.{} = {}\n", name, n);
  std::cout << fmt::format("violations.count = {}\n", violations.size());
  for (std::size_t i = 0; i < violations.size(); i++) {
    auto const &v = violations[i];
    std::cout << fmt::format("violation.{} = {} @{}: {}\n", i, v.invariant, v.time == kNever ? -1 : v.time, v.detail);
  }
  return violations.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App cli{"Deterministic simulator for BFT replication over disaggregated memory"};
  cli.require_subcommand(1);

  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string trace_path;
  std::string report_path;
  bool quiet_events = false;
  auto *run = cli.add_subcommand("run", "run one scenario and print its report");
  run->add_option("scenario", scenario, "scenario file")->required();
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--trace", trace_path, "write the event trace here");
  run->add_option("--report", report_path, "write the report here instead of stdout");
  run->add_flag("--milestones-only", quiet_events, "omit sim.deliver and sim.timer lines from the trace");

  std::string param;
  unsigned jobs = 1;
  auto *sweep = cli.add_subcommand("sweep", "run a scenario once per parameter value");
  sweep->add_option("scenario", scenario, "scenario file")->required();
  sweep->add_option("--param", param, "name=v1,v2,... (t, window, delta, gst, seed)")->required();
  sweep->add_option("--jobs", jobs, "parallel runs");

  std::string trace_in;
  auto *check = cli.add_subcommand("check", "evaluate safety invariants over a trace file");
  check->add_option("trace", trace_in, "trace file")->required();

  CLI11_PARSE(cli, argc, argv);
  try {
    if (*run) return cmd_run(scenario, seed, trace_path, report_path, quiet_events);
    if (*sweep) return cmd_sweep(scenario, param, jobs);
    if (*check) return cmd_check(trace_in);
  } catch (harness::ScenarioError const &e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return 2;
  } catch (std::exception const &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
