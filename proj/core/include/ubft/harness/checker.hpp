#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "ubft/sim/trace.hpp"

namespace ubft::harness {

struct Violation {
  std::string invariant;
  Time time = 0;
  std::string detail;
};

// Invariant name -> how it is evaluated. Printed in report headers.
struct Coverage {
  std::string invariant;
  std::string mechanism;
};
std::vector<Coverage> const &coverage();

// Evaluates safety invariants over the global record stream. Works online
// (attached to a Tracer) or offline over a trace file.
class Checker : public sim::Observer {
 public:
  void on_record(sim::Record const &r) override;
  // End-of-run predicates (tail validity). Call once.
  std::vector<Violation> finish();

  std::vector<Violation> const &violations() const { return violations_; }
  std::map<std::string, std::uint64_t> const &checks() const { return checks_; }
  std::set<Pid> const &byzantine() const { return byzantine_; }

 private:
  struct Write {
    Time begin = 0;
    Time end = kNever;
  };
  struct Reg {
    std::map<std::uint64_t, Write> writes;  // ts -> interval
  };
  struct Commit {
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::set<Pid>> votes;  // (view, fp) -> who
    bool quorum = false;
    std::uint64_t view = 0;
    std::uint64_t fp = 0;
  };
  struct Accept {
    std::uint64_t view;
    std::uint64_t fp;
    Pid who;
    Time time;
  };

  void violate(std::string inv, Time time, std::string detail);
  void count(char const *inv) { checks_[inv]++; }
  bool correct(Pid p) const { return byzantine_.count(p) == 0; }

  void on_ctb_deliver(sim::Record const &r);
  void on_reg_read_end(sim::Record const &r);

  std::uint32_t n_ = 0;
  std::uint32_t f_ = 0;
  std::uint32_t t_ = 0;
  std::set<Pid> byzantine_;
  std::set<Pid> crashed_;
  std::map<Pid, Time> crash_time_;
  bool any_fault_ = false;
  bool quiesced_ = false;

  // consistent tail broadcast
  std::map<std::pair<Pid, std::uint64_t>, std::uint64_t> broadcast_;   // (b, k) -> digest
  std::map<Pid, std::uint64_t> last_k_;
  std::map<std::pair<Pid, std::uint64_t>, std::uint64_t> agreed_;      // first correct delivery
  std::set<std::tuple<Pid, Pid, std::uint64_t>> delivered_;            // (p, b, k)
  std::set<Pid> ctb_members_;

  // consensus
  std::set<std::uint64_t> submitted_;
  std::map<std::uint64_t, std::pair<std::uint64_t, Pid>> decided_;     // slot -> (fp, first decider)
  std::map<Pid, std::map<std::uint64_t, std::uint64_t>> own_decides_;  // p -> slot -> fp
  std::map<Pid, std::uint64_t> next_apply_;
  std::map<Pid, std::set<std::pair<std::uint64_t, std::uint64_t>>> promises_;  // p -> (v, s)
  std::map<std::uint64_t, Commit> commits_;
  std::map<std::uint64_t, std::vector<Accept>> accepts_;
  std::uint64_t noop_fp_ = 0;

  // registers
  std::map<std::pair<Pid, std::uint64_t>, Reg> regs_;
  std::map<std::pair<Pid, std::uint64_t>, Time> read_begin_;  // (reader, op) -> time

  std::vector<Violation> violations_;
  std::map<std::string, std::uint64_t> checks_;
  bool finished_ = false;
};

// Parses a text trace and runs the checker over it. Throws
// std::invalid_argument with a line number on malformed input.
std::vector<Violation> check_trace(std::istream &in, std::map<std::string, std::uint64_t> *checks = nullptr);

}  // namespace ubft::harness
