#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ubft/app/app.hpp"
#include "ubft/consensus/messages.hpp"
#include "ubft/ctb/endpoint.hpp"
#include "ubft/dmem/register_client.hpp"
#include "ubft/tail/tbcast.hpp"

namespace ubft::consensus {

struct ReplicaConfig {
  std::uint32_t n = 3;
  std::uint32_t f = 1;
  std::uint32_t t = 8;
  std::uint64_t window = 100;
  Time delta = 100;
  Time slot_timeout = 600;      // accepted slot undecided this long -> CERTIFY
  Time progress_timeout = 1000;  // pending requests without a decide -> suspect leader
  Time max_progress_timeout = 16000;
  Time echo_timeout = 400;      // leader proposes without every follower's echo
  Time ctb_slow_timeout = 400;
  bool echo_round = true;
  std::string app = "flip";
};

struct ReplicaByz {
  bool equivocate = false;     // as leader, PREPARE carries a different request per follower
  bool bad_signature = false;  // every signature it produces is forged
  bool replay = false;         // re-broadcasts stale tail messages every tick
  bool censor = false;         // as leader, never proposes client requests
};

struct ReplicaStats {
  std::uint64_t proposals = 0;
  std::uint64_t decided_fast = 0;
  std::uint64_t decided_slow = 0;
  std::uint64_t applied = 0;
  std::uint64_t view_changes = 0;
  std::uint64_t summary_stalls = 0;
  Time summary_stall_time = 0;
  std::uint64_t summaries = 0;
  std::uint64_t summary_installs = 0;
  std::uint64_t checkpoints = 0;
  std::uint64_t quarantines = 0;
  std::uint64_t certifies = 0;
  std::uint64_t commits = 0;
};

// Memory retained by one replica, split by structure.
struct Footprint {
  std::size_t peer_states = 0;
  std::size_t slots = 0;
  std::size_t inbox = 0;
  std::size_t tbcast = 0;
  std::size_t ctbcast = 0;
  std::size_t registers = 0;
  std::size_t collectors = 0;

  std::size_t total() const {
    return peer_states + slots + inbox + tbcast + ctbcast + registers + collectors;
  }
};

class Replica {
 public:
  Replica(sim::Simulator &sim, sim::Network &net, crypto::CryptoService &cs, Pid self,
          std::vector<Pid> replicas, ReplicaConfig cfg, dmem::DmemConfig dcfg);

  void start();
  void on_message(Pid from, std::uint64_t channel, Bytes const &payload);

  ReplicaByz byz;
  void set_byz_bad_signature(bool on);

  Pid self() const { return self_; }
  std::uint64_t view() const { return view_; }
  Pid leader(std::uint64_t v) const { return replicas_[v % replicas_.size()]; }
  std::uint64_t next_apply() const { return next_apply_; }
  std::uint64_t checkpoint_start() const { return checkpoint_.body.start; }
  ReplicaStats const &stats() const { return stats_; }
  app::ReplicatedApp const &app() const { return app_; }
  Bytes app_snapshot() const { return app_.snapshot(); }
  tail::TbHub const &tb() const { return *tb_; }
  ctb::Endpoint const &ctb() const { return *ctb_; }
  dmem::RegisterClient &registers() { return *regs_; }
  bool quarantined(Pid p) const { return quarantined_.count(p) != 0; }

  // Live bytes of retained protocol state (excludes the application).
  Footprint live_bytes() const;
  // Capacity of the bounded structures (t, 2t, window, n entries) at the
  // largest message sizes seen so far, as a preallocating build would reserve.
  Footprint footprint() const;

 private:
  struct Known {
    app::Request req;
    bool client_copy = false;
    Time first_seen = 0;
    std::set<Pid> echoes;
    std::optional<std::uint64_t> proposed_in_view;
    std::optional<std::uint64_t> echoed_in_view;
  };
  struct SlotState {
    std::optional<Prepare> accepted;
    Time accepted_at = 0;
    bool waiting_copy = false;
    std::map<std::uint64_t, std::set<Pid>> will_certify;
    std::map<std::uint64_t, std::set<Pid>> will_commit;
    std::optional<std::uint64_t> sent_will_certify;
    std::optional<std::uint64_t> sent_will_commit;
    std::optional<std::uint64_t> sent_certify;
    std::optional<std::uint64_t> sent_commit;
    std::map<std::uint64_t, crypto::ShareCollector> certify;
    Bytes certify_msg;  // own share, resent until a COMMIT forms
    Time certify_at = 0;
    bool decided = false;
  };
  struct Inbox {
    std::uint64_t next = 1;
    std::map<std::uint64_t, Bytes> buffered;
    std::optional<std::pair<std::uint64_t, PeerState>> summary;
  };

  std::uint64_t window_end() const { return checkpoint_.body.start + cfg_.window; }
  bool in_window(std::uint64_t s) const {
    return s >= checkpoint_.body.start && s < window_end();
  }
  SlotState *slot(std::uint64_t s);
  crypto::Signature sign(Bytes const &payload, crypto::CryptoPath path);
  std::uint64_t fp(app::Request const &r) const;
  void trace(sim::RecordKind kind, std::array<std::int64_t, 4> f, std::uint64_t digest = 0);

  // transport
  void ctb_send(Msg const &m);
  void do_broadcast(Bytes const &bytes);
  void tb_send(std::uint8_t stream, Msg const &m);
  void p2p_send(Pid to, Msg const &m);
  void on_tb(Pid from, std::uint8_t stream, Bytes const &payload);
  void on_p2p(Pid from, Bytes const &payload);
  void on_client(Pid from, Bytes const &payload);

  // CTB FIFO delivery, validation, summaries
  void on_ctb(ctb::Delivery const &d);
  void drain(Pid p);
  bool process_ctb(Pid p, std::uint64_t id, Bytes const &bytes, bool validate);
  bool valid_prepare(PeerState const &ps, Pid p, Prepare const &pr);
  MustPropose must_propose_for(PeerState const &ps, std::uint64_t slot);
  void quarantine(Pid p);
  void send_certify_summary(Pid p, std::uint64_t id);
  void on_certify_summary(Pid from, Msg const &m);
  void on_summary(Pid from, Msg const &m);
  void maybe_install_summary(Pid p);

  // common case
  void try_propose();
  void propose(app::Request req);
  void on_prepare(Prepare const &p);
  void send_will_certify(std::uint64_t s);
  void check_fast(std::uint64_t s);
  void send_certify(std::uint64_t s, std::uint64_t v);
  void on_certify(Pid from, Msg const &m);
  void on_commit(std::uint64_t s);
  void decide(std::uint64_t s, app::Request const &req, std::uint64_t v, bool fast);
  void try_apply();
  bool have_copy(app::Request const &r) const;
  bool pending_requests() const;

  // checkpoints
  void certify_checkpoint();
  void on_certify_checkpoint(Pid from, Msg const &m);
  void maybe_checkpoint(Checkpoint const &cp, bool may_park = true);
  bool park_checkpoint(Checkpoint const &cp);
  bool valid_checkpoint(Checkpoint const &cp);

  // view change
  void suspect();
  void advance_view();
  bool promises_fulfilled();
  void on_enter_view();
  void on_crtfy_vc(Pid from, Msg const &m);
  void try_new_view();
  bool valid_new_view(PeerState const &ps, Pid p, NewView const &nv);
  void maybe_join();

  void tick();
  void resend_certifies(Time now);
  void relay_commit(Msg const &m);

  sim::Simulator &sim_;
  sim::Network &net_;
  crypto::CryptoService &cs_;
  Pid self_;
  std::vector<Pid> replicas_;
  ReplicaConfig cfg_;
  std::unique_ptr<tail::TbHub> tb_;
  std::unique_ptr<dmem::RegisterClient> regs_;
  std::unique_ptr<ctb::Endpoint> ctb_;
  app::ReplicatedApp app_;

  std::uint64_t view_ = 0;
  std::uint64_t want_view_ = 0;
  std::uint64_t next_slot_ = 0;
  std::uint64_t next_apply_ = 0;
  Checkpoint checkpoint_;
  std::map<Pid, PeerState> peers_;
  std::set<Pid> quarantined_;
  std::map<Pid, Inbox> inbox_;
  std::map<std::uint64_t, SlotState> slots_;
  std::map<std::uint64_t, app::Request> decided_;
  std::map<std::uint32_t, Known> known_;
  std::map<std::uint64_t, crypto::ShareCollector> cp_shares_;
  bool cp_certified_for_window_ = false;
  // certified checkpoint held back while this replica finishes its own window
  std::optional<Checkpoint> parked_cp_;
  Time parked_until_ = 0;
  std::map<std::pair<std::uint64_t, Pid>, crypto::ShareCollector> vc_shares_;
  std::map<std::uint64_t, std::map<Pid, crypto::Certificate>> vc_certs_;
  std::set<std::uint64_t> new_view_sent_;
  std::map<std::pair<Pid, std::uint64_t>, std::shared_ptr<ViewChangeEvidence>> evidence_;

  bool blocked_ = false;
  std::uint64_t blocked_id_ = 0;
  Time blocked_at_ = 0;
  std::deque<Bytes> outbox_;
  std::map<std::uint64_t, crypto::ShareCollector> summary_shares_;

  std::size_t hw_ctb_ = 0;
  std::map<std::uint8_t, std::size_t> hw_tb_;

  Time last_progress_ = 0;
  Time progress_timeout_;
  ReplicaStats stats_;
};

}  // namespace ubft::consensus
