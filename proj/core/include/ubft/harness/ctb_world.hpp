#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "ubft/ctb/endpoint.hpp"
#include "ubft/dmem/memory_node.hpp"
#include "ubft/harness/checker.hpp"
#include "ubft/harness/scenario.hpp"

namespace ubft::harness {

struct CtbRunResult {
  std::uint64_t seed = 0;
  sim::RunSummary summary;
  Time final_time = 0;
  bool quiesced = false;
  std::vector<Violation> violations;
  std::map<std::string, std::uint64_t> checks;
  std::uint64_t broadcasts = 0;
  std::uint64_t fast = 0;
  std::uint64_t slow = 0;
  std::uint64_t aborts = 0;
  std::uint64_t trace_lines = 0;
  std::string trace_digest;

  bool failed() const { return !violations.empty(); }
};

// A group of processes running only consistent tail broadcast: members
// 0..n-1, then memory nodes. Fault victims use role `replica` for members.
class CtbWorld {
 public:
  explicit CtbWorld(Scenario scenario, std::ostream *trace_out = nullptr, bool trace_events = false);
  ~CtbWorld();
  CtbWorld(CtbWorld const &) = delete;
  CtbWorld &operator=(CtbWorld const &) = delete;

  CtbRunResult run();

 private:
  struct Member {
    Pid pid = 0;
    std::unique_ptr<tail::TbHub> tb;
    std::unique_ptr<dmem::RegisterClient> regs;
    std::unique_ptr<ctb::Endpoint> ep;
    std::uint64_t issued = 0;
    bool equivocate = false;
    bool replay = false;
  };

  void build();
  void activate(sim::FaultEntry const &e);
  void issue(Member &m);
  void schedule_next(Member &m);
  void replay_tick(Member &m);
  bool all_issued() const;

  Scenario sc_;
  std::ostream *trace_out_;
  bool trace_events_;
  sim::Tracer tracer_;
  std::unique_ptr<sim::TextTraceWriter> writer_;
  Checker checker_;
  std::unique_ptr<sim::Simulator> sim_;
  std::unique_ptr<sim::Network> net_;
  std::unique_ptr<crypto::CryptoService> cs_;
  std::vector<std::unique_ptr<Member>> members_;
  std::vector<std::unique_ptr<dmem::MemoryNode>> memory_;
  std::vector<Pid> member_pids_;
  std::vector<Pid> memory_pids_;
  std::set<Pid> faulty_;
};

CtbRunResult run_ctb_scenario(Scenario const &sc, std::ostream *trace_out = nullptr, bool trace_events = false);

}  // namespace ubft::harness
