#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "ubft/app/client.hpp"
#include "ubft/consensus/replica.hpp"
#include "ubft/dmem/memory_node.hpp"
#include "ubft/harness/checker.hpp"
#include "ubft/harness/scenario.hpp"

namespace ubft::harness {

struct RunOptions {
  std::ostream *trace_out = nullptr;  // text trace sink
  bool trace_events = true;           // include sim.deliver / sim.timer lines
  bool sample_windows = false;        // footprint sample at every checkpoint
};

// Footprint of one replica when it adopted the checkpoint starting `start`.
struct WindowSample {
  Pid replica = 0;
  std::uint64_t start = 0;
  std::size_t footprint = 0;
  std::size_t live = 0;
};

struct RunResult {
  std::string scenario;
  std::uint64_t seed = 0;
  sim::RunSummary summary;
  Time final_time = 0;
  std::vector<Violation> violations;
  std::map<std::string, std::uint64_t> checks;
  bool liveness_expected = true;
  bool liveness_ok = true;
  bool converged = true;
  bool linearizable = true;
  std::size_t linearizability_ops = 0;

  std::uint64_t requests_expected = 0;
  std::uint64_t requests_completed = 0;
  std::vector<Time> latencies;  // completion order, all clients
  std::uint64_t client_resends = 0;

  // sums over replicas that were never Byzantine
  std::uint64_t decided_fast = 0;
  std::uint64_t decided_slow = 0;
  std::uint64_t proposals = 0;
  std::uint64_t view_changes = 0;
  std::uint64_t max_view = 0;
  std::uint64_t summary_stalls = 0;
  Time summary_stall_time = 0;
  std::uint64_t summary_installs = 0;
  std::uint64_t checkpoints = 0;
  std::uint64_t quarantines = 0;
  std::uint64_t ctb_fast = 0;
  std::uint64_t ctb_slow = 0;
  std::uint64_t ctb_aborts = 0;
  crypto::Counters crypto;  // replicas only

  std::vector<std::size_t> footprint;  // per replica, end of run
  std::vector<std::size_t> live;
  std::size_t disaggregated_bytes = 0;
  std::vector<WindowSample> windows;

  std::uint64_t trace_lines = 0;
  std::string trace_digest;

  bool failed() const { return !violations.empty() || (liveness_expected && !liveness_ok); }
};

// One SMR deployment: replicas 0..n-1, then memory nodes, then clients
// (client id == process id).
class World : public sim::Observer {
 public:
  World(Scenario scenario, RunOptions opts = {});
  ~World() override;
  World(World const &) = delete;
  World &operator=(World const &) = delete;

  RunResult run();

  sim::Simulator &sim() { return *sim_; }
  consensus::Replica &replica(std::size_t i) { return *replicas_.at(i); }
  std::size_t replica_count() const { return replicas_.size(); }
  app::Client &client(std::size_t i) { return *clients_.at(i); }
  Scenario const &scenario() const { return sc_; }

  void on_record(sim::Record const &r) override;

 private:
  void build();
  void arm_faults();
  void activate(sim::FaultEntry const &e);
  Pid victim_pid(sim::Victim const &v) const;
  app::Client::Workload workload_for(std::uint32_t client_index);
  void collect(RunResult &res);

  Scenario sc_;
  RunOptions opts_;
  sim::Tracer tracer_;
  std::unique_ptr<sim::TextTraceWriter> writer_;
  Checker checker_;
  std::unique_ptr<sim::Simulator> sim_;
  std::unique_ptr<sim::Network> net_;
  std::unique_ptr<crypto::CryptoService> cs_;
  std::vector<Pid> replica_pids_;
  std::vector<Pid> memory_pids_;
  std::vector<Pid> client_pids_;
  std::vector<std::unique_ptr<consensus::Replica>> replicas_;
  std::vector<std::unique_ptr<dmem::MemoryNode>> memory_;
  std::vector<std::unique_ptr<app::Client>> clients_;
  std::set<Pid> byzantine_;
  std::vector<sim::FaultEntry> decided_triggers_;
  std::map<Pid, std::uint64_t> applied_;
  std::vector<WindowSample> windows_;
};

RunResult run_scenario(Scenario const &sc, RunOptions opts = {});

}  // namespace ubft::harness
