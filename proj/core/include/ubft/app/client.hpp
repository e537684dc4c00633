#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "ubft/app/app.hpp"
#include "ubft/sim/network.hpp"

namespace ubft::app {

struct ClientConfig {
  std::uint32_t f = 1;
  std::vector<Pid> replicas;
  Time resend_after = 1000;  // local time
  // Byzantine client: each request goes only to these replicas.
  std::optional<std::vector<Pid>> subset;
};

struct HistoryEntry {
  std::uint32_t client = 0;
  std::uint64_t seq = 0;
  Bytes op;
  Bytes result;
  Time invoked = 0;
  Time completed = kNever;
};

// Closed-loop client: one outstanding request, sent unsigned to every
// replica, completed by f+1 byte-identical replies.
class Client {
 public:
  using Workload = std::function<Bytes(std::uint64_t seq)>;

  Client(sim::Simulator &sim, sim::Network &net, Pid self, std::uint32_t id, ClientConfig cfg,
         Workload workload);

  // Issues `count` requests back to back starting at local time `start`.
  void start(std::uint64_t count, Time start_at = 0);
  void on_message(Pid from, std::uint64_t channel, Bytes const &payload);

  std::uint32_t id() const { return id_; }
  Pid pid() const { return self_; }
  std::uint64_t completed() const { return completed_; }
  std::uint64_t target() const { return target_; }
  bool finished() const { return completed_ >= target_; }
  std::uint64_t resends() const { return resends_; }
  std::vector<HistoryEntry> const &history() const { return history_; }
  std::vector<Time> const &latencies() const { return latencies_; }

 private:
  void submit();
  void send_current();
  void arm_resend();

  sim::Simulator &sim_;
  sim::Network &net_;
  Pid self_;
  std::uint32_t id_;
  ClientConfig cfg_;
  Workload workload_;
  std::uint64_t target_ = 0;
  std::uint64_t completed_ = 0;
  std::uint64_t seq_ = 0;
  Request current_;
  bool outstanding_ = false;
  std::map<Pid, Bytes> replies_;
  std::vector<HistoryEntry> history_;
  std::vector<Time> latencies_;
  std::uint64_t resends_ = 0;
  sim::EventId resend_timer_ = 0;
};

}  // namespace ubft::app
