#include "ubft/consensus/replica.hpp"

#include <algorithm>

#include "ubft/common/channel.hpp"

namespace ubft::consensus {

namespace {

std::int64_t i64(std::uint64_t v) { return static_cast<std::int64_t>(v); }

}  // namespace

Replica::Replica(sim::Simulator &sim, sim::Network &net, crypto::CryptoService &cs, Pid self,
                 std::vector<Pid> replicas, ReplicaConfig cfg, dmem::DmemConfig dcfg)
    : sim_{sim},
      net_{net},
      cs_{cs},
      self_{self},
      replicas_{std::move(replicas)},
      cfg_{std::move(cfg)},
      app_{app::make_app(cfg_.app)},
      progress_timeout_{cfg_.progress_timeout} {
  tail::TbConfig tc;
  tc.t = cfg_.t;
  tc.delta = cfg_.delta;
  tc.first_resend = 3 * cfg_.delta;
  tc.max_backoff = 32 * cfg_.delta;
  tb_ = std::make_unique<tail::TbHub>(sim, net, cs, self, replicas_, tc);
  regs_ = std::make_unique<dmem::RegisterClient>(sim, net, cs, self, std::move(dcfg));
  ctb::Config cc;
  cc.t = cfg_.t;
  cc.delta = cfg_.delta;
  cc.slow_timeout = cfg_.ctb_slow_timeout;
  ctb_ = std::make_unique<ctb::Endpoint>(sim, net, cs, *tb_, *regs_, self, replicas_, cc);

  tb_->set_deliver([this](Pid from, std::uint8_t stream, std::uint64_t, Bytes const &m) {
    if (stream == ctb::kDataStream || stream >= ctb::kLockedStreamBase) {
      ctb_->on_tb(from, stream, m);
    } else {
      on_tb(from, stream, m);
    }
  });
  ctb_->set_deliver([this](ctb::Delivery const &d) { on_ctb(d); });

  checkpoint_.genesis = true;
  checkpoint_.body = CheckpointBody{0, app_.snapshot()};
  for (auto p : replicas_) {
    peers_[p];
    inbox_[p];
  }
}

void Replica::start() {
  last_progress_ = sim_.local_now(self_);
  sim_.timer(self_, cfg_.delta, [this]() { tick(); });
}

void Replica::set_byz_bad_signature(bool on) {
  byz.bad_signature = on;
  ctb_->byz.bad_signature = on;
}

void Replica::on_message(Pid from, std::uint64_t channel, Bytes const &payload) {
  auto key = ChannelKey::unpack(channel);
  switch (key.kind) {
    case ChannelKind::TbData:
    case ChannelKind::TbAck:
      tb_->on_message(from, channel, payload);
      return;
    case ChannelKind::Mem:
      regs_->on_message(from, channel, payload);
      return;
    case ChannelKind::P2P:
      if (key.stream == ctb::kSlowRequestStream) {
        try {
          ctb_->on_p2p(from, payload);
        } catch (DecodeError const &) {
        }
      } else if (key.stream == kP2PStream) {
        on_p2p(from, payload);
      }
      return;
    case ChannelKind::Client:
      on_client(from, payload);
      return;
  }
}

// ---- helpers ---------------------------------------------------------------

Replica::SlotState *Replica::slot(std::uint64_t s) {
  // Slots of the next window are kept too: peers may adopt a checkpoint first.
  if (s < checkpoint_.body.start || s >= window_end() + cfg_.window) return nullptr;
  return &slots_[s];
}

crypto::Signature Replica::sign(Bytes const &payload, crypto::CryptoPath path) {
  if (byz.bad_signature) return cs_.forge(self_, payload);
  return cs_.sign(self_, payload, path);
}

std::uint64_t Replica::fp(app::Request const &r) const { return r.fingerprint(); }

void Replica::trace(sim::RecordKind kind, std::array<std::int64_t, 4> f, std::uint64_t digest) {
  sim_.tracer().emit(sim::Record{sim_.now(), self_, kind, f, digest});
}

void Replica::ctb_send(Msg const &m) {
  auto bytes = m.encode();
  hw_ctb_ = std::max(hw_ctb_, bytes.size());
  if (blocked_) {
    if (outbox_.empty()) {
      stats_.summary_stalls++;
      blocked_at_ = sim_.now();
      trace(sim::RecordKind::SummaryStall, {i64(blocked_id_)});
    }
    outbox_.push_back(std::move(bytes));
    return;
  }
  do_broadcast(bytes);
}

void Replica::do_broadcast(Bytes const &bytes) {
  std::uint64_t k = 0;
  if (byz.equivocate && static_cast<MsgType>(bytes[0]) == MsgType::Prepare) {
    auto m = Msg::decode(bytes);
    auto alt = m;
    alt.prepare.req.op.push_back('!');
    if (alt.prepare.req.is_noop()) alt.prepare.req = app::Request{0, 1, {'x'}};
    auto alt_bytes = alt.encode();
    k = ctb_->broadcast_split([&](Pid p) {
      auto idx = std::find(replicas_.begin(), replicas_.end(), p) - replicas_.begin();
      return (p != self_ && idx % 2 == 1) ? alt_bytes : bytes;
    });
  } else {
    k = ctb_->broadcast(bytes);
  }
  if (k % cfg_.t == 0) {
    blocked_ = true;
    blocked_id_ = k;
  }
}

void Replica::tb_send(std::uint8_t stream, Msg const &m) {
  auto bytes = m.encode();
  auto &hw = hw_tb_[stream];
  hw = std::max(hw, bytes.size());
  tb_->broadcast(stream, std::move(bytes));
}

void Replica::p2p_send(Pid to, Msg const &m) {
  net_.send(self_, to, ChannelKey{ChannelKind::P2P, kP2PStream, 0, self_, to}.pack(), m.encode());
}

void Replica::on_tb(Pid from, std::uint8_t stream, Bytes const &payload) {
  auto &hw = hw_tb_[stream];
  hw = std::max(hw, payload.size());
  Msg m;
  try {
    m = Msg::decode(payload);
  } catch (DecodeError const &) {
    return;
  }
  switch (m.type) {
    case MsgType::WillCertify:
    case MsgType::WillCommit: {
      if (stream != kFastStream) return;
      auto *st = slot(m.slot);
      if (!st) return;
      auto &sets = m.type == MsgType::WillCertify ? st->will_certify : st->will_commit;
      sets[m.view].insert(from);
      check_fast(m.slot);
      return;
    }
    case MsgType::Certify:
      if (stream == kSlowStream) on_certify(from, m);
      return;
    case MsgType::CertifyCheckpoint:
      if (stream == kBackgroundStream) on_certify_checkpoint(from, m);
      return;
    case MsgType::Summary:
      if (stream == kBackgroundStream) on_summary(from, m);
      return;
    default:
      return;
  }
}

void Replica::on_p2p(Pid from, Bytes const &payload) {
  Msg m;
  try {
    m = Msg::decode(payload);
  } catch (DecodeError const &) {
    return;
  }
  if (std::find(replicas_.begin(), replicas_.end(), from) == replicas_.end()) return;
  switch (m.type) {
    case MsgType::CrtfyVc:
      on_crtfy_vc(from, m);
      return;
    case MsgType::CertifySummary:
      on_certify_summary(from, m);
      return;
    case MsgType::Echo: {
      if (leader(view_) != self_ || m.req.is_noop()) return;
      if (app_.last_seq(m.req.client) >= m.req.seq) return;
      auto &k = known_[m.req.client];
      if (k.req.seq < m.req.seq || k.req.client != m.req.client) {
        k = Known{};
        k.req = m.req;
        k.first_seen = sim_.local_now(self_);
      } else if (!(k.req == m.req)) {
        return;
      }
      k.echoes.insert(from);
      try_propose();
      return;
    }
    default:
      return;
  }
}

void Replica::on_client(Pid from, Bytes const &payload) {
  app::Request req;
  try {
    Decoder d(payload);
    req = app::Request::decode(d);
    d.expect_end();
  } catch (DecodeError const &) {
    return;
  }
  if (req.is_noop() || req.client != from) return;
  auto done = app_.last_seq(req.client);
  if (done >= req.seq) {
    if (auto r = app_.cached(req.client, req.seq)) {
      net_.send(self_, from, ChannelKey{ChannelKind::Client, 0, 0, self_, from}.pack(),
                r->encode());
    }
    return;
  }
  auto &k = known_[req.client];
  if (k.req.client != req.client || k.req.seq < req.seq) {
    k = Known{};
    k.req = req;
    k.first_seen = sim_.local_now(self_);
  } else if (!(k.req == req)) {
    return;
  }
  k.client_copy = true;
  if (leader(view_) != self_) {
    if (k.echoed_in_view != view_) {
      k.echoed_in_view = view_;
      p2p_send(leader(view_), make_echo(req));
    }
  } else {
    try_propose();
  }
  // Endorse accepted slots that were waiting for this copy.
  std::vector<std::uint64_t> waiting;
  for (auto &[s, st] : slots_) {
    if (st.waiting_copy && st.accepted && st.accepted->req == req) waiting.push_back(s);
  }
  for (auto s : waiting) {
    slots_[s].waiting_copy = false;
    send_will_certify(s);
  }
}

// ---- CTB FIFO delivery -----------------------------------------------------

void Replica::on_ctb(ctb::Delivery const &d) {
  auto p = d.broadcaster;
  hw_ctb_ = std::max(hw_ctb_, d.m.size());
  if (quarantined_.count(p)) return;
  auto it = inbox_.find(p);
  if (it == inbox_.end()) return;
  auto &in = it->second;
  if (d.k < in.next) return;
  in.buffered.emplace(d.k, d.m);
  while (in.buffered.size() > 2 * cfg_.t) in.buffered.erase(in.buffered.begin());
  drain(p);
}

void Replica::drain(Pid p) {
  auto &in = inbox_[p];
  while (!quarantined_.count(p) && !in.buffered.empty() && in.buffered.begin()->first == in.next) {
    auto node = in.buffered.extract(in.buffered.begin());
    auto id = node.key();
    in.next++;
    if (!process_ctb(p, id, node.mapped(), true)) {
      quarantine(p);
      return;
    }
    if (id % cfg_.t == 0) send_certify_summary(p, id);
  }
  maybe_install_summary(p);
}

void Replica::quarantine(Pid p) {
  if (!quarantined_.insert(p).second) return;
  stats_.quarantines++;
  inbox_[p].buffered.clear();
  trace(sim::RecordKind::Quarantine, {p});
}

MustPropose Replica::must_propose_for(PeerState const &ps, std::uint64_t s) {
  if (!ps.new_view) return MustPropose{};
  // keyed by the NEW_VIEW's CTB id; evidence is decoded once per NEW_VIEW
  Pid owner = leader(ps.view);
  auto key = std::make_pair(owner, ps.new_view->id);
  auto it = evidence_.find(key);
  if (it == evidence_.end()) {
    while (evidence_.size() >= 2 * replicas_.size()) evidence_.erase(evidence_.begin());
    auto msg = Msg::decode(ps.new_view->msg);
    it = evidence_.emplace(key, std::make_shared<ViewChangeEvidence>(msg.new_view, cfg_.window))
             .first;
  }
  return it->second->must_propose(s);
}

bool Replica::valid_prepare(PeerState const &ps, Pid p, Prepare const &pr) {
  if (ps.view != pr.view || leader(pr.view) != p) return false;
  if (pr.slot < ps.cp_start || pr.slot >= ps.cp_start + cfg_.window) return false;
  auto it = ps.prepares.find(pr.slot);
  if (it != ps.prepares.end() && Msg::decode(it->second.msg).prepare.view == pr.view) return false;
  if (pr.view == 0) return true;
  if (!ps.new_view) return false;
  auto mp = must_propose_for(ps, pr.slot);
  switch (mp.kind) {
    case MustPropose::Kind::Any:
      return true;
    case MustPropose::Kind::Noop:
      return pr.req.is_noop();
    case MustPropose::Kind::Req:
      return pr.req == mp.req;
  }
  return false;
}

bool Replica::valid_checkpoint(Checkpoint const &cp) {
  if (cp.genesis || cp.body.start % cfg_.window != 0) return false;
  return verify_certificate(cs_, self_, cp.cert, cfg_.f + 1, crypto::CryptoPath::Background);
}

bool Replica::valid_new_view(PeerState const &ps, Pid p, NewView const &nv) {
  if (nv.view == 0 || nv.view != ps.view || leader(nv.view) != p) return false;
  if (ps.non_checkpoint_in_view) return false;
  std::set<Pid> subjects;
  for (auto const &c : nv.certs) {
    VcPayload vc;
    try {
      vc = VcPayload::decode(c.payload);
      PeerState::decode(vc.state);
    } catch (DecodeError const &) {
      return false;
    }
    if (vc.view != nv.view || !subjects.insert(vc.subject).second) return false;
    if (!verify_certificate(cs_, self_, c, cfg_.f + 1, crypto::CryptoPath::Critical)) return false;
  }
  return subjects.size() >= cfg_.f + 1;
}

bool Replica::process_ctb(Pid p, std::uint64_t id, Bytes const &bytes, bool validate) {
  Msg m;
  try {
    m = Msg::decode(bytes);
  } catch (DecodeError const &) {
    return !validate;
  }
  auto &ps = peers_[p];
  switch (m.type) {
    case MsgType::Prepare: {
      if (validate && !valid_prepare(ps, p, m.prepare)) return false;
      ps.prepares[m.prepare.slot] = Retained{id, bytes};
      ps.non_checkpoint_in_view = true;
      if (p == leader(view_)) on_prepare(m.prepare);
      return true;
    }
    case MsgType::Commit: {
      auto s = m.prepare.slot;
      if (validate) {
        if (s < ps.cp_start || s >= ps.cp_start + cfg_.window) return false;
        if (m.prepare.view != ps.view) return false;
        auto it = ps.commits.find(s);
        if (it != ps.commits.end() && it->second.msg == bytes) return false;
        if (!verify_certificate(cs_, self_, m.cert, cfg_.f + 1, crypto::CryptoPath::Critical)) {
          return false;
        }
      }
      ps.commits[s] = Retained{id, bytes};
      ps.non_checkpoint_in_view = true;
      relay_commit(m);
      on_commit(s);
      return true;
    }
    case MsgType::Checkpoint: {
      auto const &cp = m.checkpoint;
      if (validate && (cp.body.start <= ps.cp_start || !valid_checkpoint(cp))) return false;
      ps.checkpoint = Retained{id, bytes};
      ps.cp_start = cp.body.start;
      auto lo = cp.body.start;
      auto hi = cp.body.start + cfg_.window;
      auto outside = [lo, hi](auto &map) {
        for (auto it = map.begin(); it != map.end();) {
          it = (it->first < lo || it->first >= hi) ? map.erase(it) : std::next(it);
        }
      };
      outside(ps.prepares);
      outside(ps.commits);
      maybe_checkpoint(cp);
      return true;
    }
    case MsgType::SealView: {
      if (validate && m.view <= ps.view) return false;
      ps.seal_view = Retained{id, bytes};
      ps.view = m.view;
      ps.non_checkpoint_in_view = false;
      if (validate) {
        auto payload = VcPayload{m.view, p, ps.encode(false)}.encode();
        auto share = sign(payload, crypto::CryptoPath::Critical);
        auto msg = make_share(MsgType::CrtfyVc, payload, share);
        if (leader(m.view) == self_) {
          on_crtfy_vc(self_, msg);
        } else {
          p2p_send(leader(m.view), msg);
        }
        maybe_join();
      }
      return true;
    }
    case MsgType::NewView: {
      if (validate && !valid_new_view(ps, p, m.new_view)) return false;
      ps.new_view = Retained{id, bytes};
      ps.non_checkpoint_in_view = true;
      if (m.new_view.view > want_view_) want_view_ = m.new_view.view;
      advance_view();
      // the view change finished; give the new leader a full timeout
      if (view_ == m.new_view.view) last_progress_ = sim_.local_now(self_);
      return true;
    }
    default:
      return !validate;
  }
}

void Replica::send_certify_summary(Pid p, std::uint64_t id) {
  auto payload = SummaryPayload{p, id, peers_[p].encode(true)}.encode();
  auto share = sign(payload, crypto::CryptoPath::Background);
  auto msg = make_share(MsgType::CertifySummary, payload, share);
  if (p == self_) {
    on_certify_summary(self_, msg);
  } else {
    p2p_send(p, msg);
  }
}

void Replica::on_certify_summary(Pid from, Msg const &m) {
  SummaryPayload sp;
  try {
    sp = SummaryPayload::decode(m.payload);
  } catch (DecodeError const &) {
    return;
  }
  if (sp.subject != self_ || !blocked_ || sp.id != blocked_id_) return;
  auto [it, _] = summary_shares_.try_emplace(sp.id, cfg_.f + 1);
  auto cert = it->second.add(cs_, self_, m.payload, m.share, from, crypto::CryptoPath::Background);
  if (!cert) return;
  stats_.summaries++;
  tb_send(kBackgroundStream, make_summary(std::move(*cert)));
  summary_shares_.clear();
  blocked_ = false;
  if (!outbox_.empty()) stats_.summary_stall_time += sim_.now() - blocked_at_;
  while (!blocked_ && !outbox_.empty()) {
    auto bytes = std::move(outbox_.front());
    outbox_.pop_front();
    do_broadcast(bytes);
  }
  if (blocked_ && !outbox_.empty()) {
    stats_.summary_stalls++;
    blocked_at_ = sim_.now();
    trace(sim::RecordKind::SummaryStall, {i64(blocked_id_)});
  }
}

void Replica::on_summary(Pid from, Msg const &m) {
  if (!verify_certificate(cs_, self_, m.cert, cfg_.f + 1, crypto::CryptoPath::Background)) return;
  SummaryPayload sp;
  PeerState st;
  try {
    sp = SummaryPayload::decode(m.cert.payload);
    st = PeerState::decode(sp.state);
  } catch (DecodeError const &) {
    return;
  }
  if (sp.subject != from) return;
  auto it = inbox_.find(from);
  if (it == inbox_.end()) return;
  auto &in = it->second;
  if (in.summary && in.summary->first >= sp.id) return;
  in.summary = std::make_pair(sp.id, std::move(st));
  maybe_install_summary(from);
}

void Replica::maybe_install_summary(Pid p) {
  if (quarantined_.count(p)) return;
  auto &in = inbox_[p];
  if (!in.summary || in.summary->first < in.next || in.buffered.empty()) return;
  auto [id, state] = *in.summary;
  auto old_view = peers_[p].view;
  std::map<std::uint64_t, Bytes> replay;
  auto add = [&](std::optional<Retained> const &r) {
    if (r && r->id >= in.next) replay.emplace(r->id, r->msg);
  };
  add(state.checkpoint);
  add(state.seal_view);
  add(state.new_view);
  for (auto const &[_, r] : state.prepares) add(std::optional<Retained>{r});
  for (auto const &[_, r] : state.commits) add(std::optional<Retained>{r});
  for (auto const &[rid, msg] : replay) process_ctb(p, rid, msg, false);
  peers_[p] = state;
  in.next = id + 1;
  while (!in.buffered.empty() && in.buffered.begin()->first <= id) {
    in.buffered.erase(in.buffered.begin());
  }
  stats_.summary_installs++;
  trace(sim::RecordKind::SummaryInstall, {p, i64(id)});
  if (state.view > old_view) {
    auto payload = VcPayload{state.view, p, state.encode(false)}.encode();
    auto msg = make_share(MsgType::CrtfyVc, payload, sign(payload, crypto::CryptoPath::Critical));
    if (leader(state.view) == self_) {
      on_crtfy_vc(self_, msg);
    } else {
      p2p_send(leader(state.view), msg);
    }
    maybe_join();
  }
  for (auto const &[s, _] : state.commits) on_commit(s);
  drain(p);
}

// ---- common case -----------------------------------------------------------

bool Replica::have_copy(app::Request const &r) const {
  if (app_.last_seq(r.client) >= r.seq) return true;
  auto it = known_.find(r.client);
  return it != known_.end() && it->second.client_copy && it->second.req == r;
}

bool Replica::pending_requests() const {
  for (auto const &[c, k] : known_) {
    if (app_.last_seq(c) < k.req.seq) return true;
  }
  return false;
}

void Replica::try_propose() {
  if (leader(view_) != self_ || byz.censor || want_view_ > view_) return;
  if (view_ > 0 && !new_view_sent_.count(view_)) return;
  auto now = sim_.local_now(self_);
  for (auto &[c, k] : known_) {
    if (next_slot_ < checkpoint_.body.start) next_slot_ = checkpoint_.body.start;
    if (next_slot_ >= window_end()) return;
    if (app_.last_seq(c) >= k.req.seq || k.proposed_in_view == view_) continue;
    bool ready = !cfg_.echo_round || k.echoes.size() + 1 >= replicas_.size() ||
                 now - k.first_seen >= cfg_.echo_timeout;
    if (!ready) continue;
    k.proposed_in_view = view_;
    trace(sim::RecordKind::Propose, {i64(view_), i64(next_slot_), i64(k.echoes.size())},
          fp(k.req));
    propose(k.req);
  }
}

void Replica::propose(app::Request req) {
  stats_.proposals++;
  ctb_send(make_prepare(Prepare{view_, next_slot_++, std::move(req)}));
}

void Replica::on_prepare(Prepare const &p) {
  if (p.view != view_ || !in_window(p.slot)) return;
  auto &st = slots_[p.slot];
  if (st.accepted && st.accepted->view == p.view) return;
  st.accepted = p;
  st.accepted_at = sim_.local_now(self_);
  st.waiting_copy = false;
  // an accepted PREPARE decides without further help from the leader
  last_progress_ = st.accepted_at;
  trace(sim::RecordKind::AcceptPrepare, {i64(p.view), i64(p.slot), leader(p.view)}, fp(p.req));
  if (!p.req.is_noop()) {
    auto it = known_.find(p.req.client);
    if (it != known_.end() && it->second.req == p.req) it->second.proposed_in_view = p.view;
  }
  if (p.req.is_noop() || have_copy(p.req)) {
    send_will_certify(p.slot);
  } else {
    st.waiting_copy = true;
  }
  check_fast(p.slot);
}

void Replica::send_will_certify(std::uint64_t s) {
  auto &st = slots_[s];
  if (!st.accepted || st.sent_will_certify == view_ || st.accepted->view != view_) return;
  st.sent_will_certify = view_;
  trace(sim::RecordKind::WillCertify, {i64(view_), i64(s)});
  tb_send(kFastStream, make_will(MsgType::WillCertify, view_, s));
}

void Replica::check_fast(std::uint64_t s) {
  auto it = slots_.find(s);
  if (it == slots_.end() || !in_window(s)) return;
  auto &st = it->second;
  if (!st.accepted || st.accepted->view != view_) return;
  auto v = view_;
  auto n = replicas_.size();
  // no new promises once this replica wants to leave the view
  if (st.will_certify[v].size() >= n && st.sent_will_commit != v && want_view_ == view_) {
    st.sent_will_commit = v;
    trace(sim::RecordKind::WillCommit, {i64(v), i64(s)});
    tb_send(kFastStream, make_will(MsgType::WillCommit, v, s));
  }
  if (st.will_commit[v].size() >= n) decide(s, st.accepted->req, v, true);
}

void Replica::send_certify(std::uint64_t s, std::uint64_t v) {
  auto it = slots_.find(s);
  if (it == slots_.end()) return;
  auto &st = it->second;
  if (!st.accepted || st.accepted->view != v || st.sent_certify == v) return;
  st.sent_certify = v;
  stats_.certifies++;
  auto payload = st.accepted->payload();
  trace(sim::RecordKind::Certify, {i64(v), i64(s)});
  auto msg = make_share(MsgType::Certify, payload, sign(payload, crypto::CryptoPath::Critical));
  st.certify_msg = msg.encode();
  st.certify_at = sim_.local_now(self_);
  tb_send(kSlowStream, msg);
}

// A burst of CERTIFY larger than the tail loses the oldest shares, so shares
// without a COMMIT yet go out again, at most t per tick.
void Replica::resend_certifies(Time now) {
  std::size_t budget = cfg_.t;
  for (auto &[s, st] : slots_) {
    if (budget == 0) break;
    if (st.sent_certify != view_ || st.sent_commit == view_ || st.certify_msg.empty()) continue;
    if (now - st.certify_at < cfg_.slot_timeout) continue;
    st.certify_at = now;
    budget--;
    tb_->broadcast(kSlowStream, st.certify_msg);
  }
}

void Replica::on_certify(Pid from, Msg const &m) {
  auto v = m.prepare.view;
  auto s = m.prepare.slot;
  auto *st = slot(s);
  if (!st) return;
  if (st->accepted && st->accepted->view == v && st->sent_certify != v &&
      st->accepted->payload() == m.payload) {
    send_certify(s, v);
  }
  auto [it, _] = st->certify.try_emplace(v, cfg_.f + 1);
  auto cert = it->second.add(cs_, self_, m.payload, m.share, from, crypto::CryptoPath::Critical);
  if (!cert || v != view_ || !in_window(s) || st->sent_commit == v) return;
  st->sent_commit = v;
  stats_.commits++;
  trace(sim::RecordKind::CommitBcast, {i64(v), i64(s)}, fp(m.prepare.req));
  ctb_send(make_commit(std::move(*cert)));
  advance_view();
}

// A peer's certificate lets this replica keep its WILL_COMMIT promise even when
// its own share collection never completes.
void Replica::relay_commit(Msg const &m) {
  auto v = m.prepare.view;
  auto s = m.prepare.slot;
  auto *st = slot(s);
  if (!st || v != view_ || st->sent_will_commit != v || st->sent_commit == v) return;
  if (!st->accepted || st->accepted->payload() != m.cert.payload) return;
  st->sent_commit = v;
  stats_.commits++;
  trace(sim::RecordKind::CommitBcast, {i64(v), i64(s)}, fp(m.prepare.req));
  ctb_send(make_commit(m.cert));
  advance_view();
}

void Replica::on_commit(std::uint64_t s) {
  if (!in_window(s)) return;
  std::map<Bytes, std::pair<std::uint32_t, Prepare>> tally;
  for (auto const &[q, ps] : peers_) {
    auto it = ps.commits.find(s);
    if (it == ps.commits.end()) continue;
    Msg m;
    try {
      m = Msg::decode(it->second.msg);
    } catch (DecodeError const &) {
      continue;
    }
    auto &e = tally[m.prepare.payload()];
    e.first++;
    e.second = m.prepare;
    if (e.first >= cfg_.f + 1) {
      decide(s, e.second.req, e.second.view, false);
      return;
    }
  }
}

void Replica::decide(std::uint64_t s, app::Request const &req, std::uint64_t v, bool fast) {
  if (!in_window(s)) return;
  auto &st = slots_[s];
  if (st.decided) return;
  st.decided = true;
  if (fast) {
    stats_.decided_fast++;
  } else {
    stats_.decided_slow++;
  }
  trace(sim::RecordKind::Decide, {i64(v), i64(s), fast ? 0 : 1}, fp(req));
  decided_[s] = req;
  last_progress_ = sim_.local_now(self_);
  progress_timeout_ = cfg_.progress_timeout;
  try_apply();
}

void Replica::try_apply() {
  while (true) {
    auto it = decided_.find(next_apply_);
    if (it == decided_.end()) break;
    auto req = std::move(it->second);
    decided_.erase(it);
    auto reply = app_.apply(req);
    stats_.applied++;
    trace(sim::RecordKind::Apply, {i64(next_apply_)}, fp(req));
    if (reply) {
      Pid to = reply->client;
      net_.send(self_, to, ChannelKey{ChannelKind::Client, 0, 0, self_, to}.pack(),
                reply->encode());
    }
    next_apply_++;
    if (next_apply_ == window_end()) certify_checkpoint();
  }
  if (parked_cp_ && next_apply_ >= parked_cp_->body.start) {
    auto cp = std::move(*parked_cp_);
    parked_cp_.reset();
    maybe_checkpoint(cp, false);
  }
}

// ---- checkpoints -----------------------------------------------------------

void Replica::certify_checkpoint() {
  auto payload = CheckpointBody{window_end(), app_.snapshot()}.payload();
  auto share = sign(payload, crypto::CryptoPath::Background);
  tb_send(kBackgroundStream, make_share(MsgType::CertifyCheckpoint, payload, share));
}

void Replica::on_certify_checkpoint(Pid from, Msg const &m) {
  CheckpointBody body;
  try {
    body = CheckpointBody::from_payload(m.payload);
  } catch (DecodeError const &) {
    return;
  }
  if (body.start <= checkpoint_.body.start || body.start % cfg_.window != 0) return;
  if (body.start > window_end() + cfg_.window) return;
  auto [it, _] = cp_shares_.try_emplace(body.start, cfg_.f + 1);
  auto cert = it->second.add(cs_, self_, m.payload, m.share, from, crypto::CryptoPath::Background);
  if (!cert) return;
  Checkpoint cp;
  cp.body = std::move(body);
  cp.cert = std::move(*cert);
  maybe_checkpoint(cp);
}

// A replica that has already promised every slot left before the checkpoint
// is at most one hop behind; it waits up to slot_timeout to decide them itself
// instead of jumping to the certified state.
bool Replica::park_checkpoint(Checkpoint const &cp) {
  auto now = sim_.local_now(self_);
  if (parked_cp_ && parked_cp_->body.start >= cp.body.start) return now < parked_until_;
  if (next_apply_ >= cp.body.start || cp.body.start != window_end()) return false;
  for (auto s = next_apply_; s < cp.body.start; s++) {
    if (decided_.count(s)) continue;
    auto it = slots_.find(s);
    if (it == slots_.end() || it->second.sent_will_commit != view_) return false;
  }
  if (!parked_cp_) parked_until_ = now + cfg_.slot_timeout;
  parked_cp_ = cp;
  return now < parked_until_;
}

void Replica::maybe_checkpoint(Checkpoint const &cp, bool may_park) {
  if (cp.body.start <= checkpoint_.body.start) return;
  if (may_park && park_checkpoint(cp)) return;
  if (parked_cp_ && parked_cp_->body.start <= cp.body.start) parked_cp_.reset();
  checkpoint_ = cp;
  auto start = cp.body.start;
  stats_.checkpoints++;
  trace(sim::RecordKind::Checkpoint, {i64(start)});
  if (next_apply_ < start) {
    app_.restore(cp.body.app_state);
    next_apply_ = start;
  }
  slots_.erase(slots_.begin(), slots_.lower_bound(start));
  decided_.erase(decided_.begin(), decided_.lower_bound(start));
  cp_shares_.erase(cp_shares_.begin(), cp_shares_.upper_bound(start));
  if (next_slot_ < start) next_slot_ = start;
  ctb_send(make_checkpoint(cp));
  try_apply();
  advance_view();
  try_propose();
  // requests re-proposed in the new window need fresh endorsements
  std::vector<std::uint64_t> ready;
  for (auto const &[s, st] : slots_) {
    if (st.accepted && st.accepted->view == view_ && in_window(s)) ready.push_back(s);
  }
  for (auto s : ready) check_fast(s);
}

// ---- view change -----------------------------------------------------------

void Replica::suspect() {
  // Stay at most one view ahead of f+1 replicas; otherwise two correct
  // replicas with skewed timers leapfrog each other forever.
  if (view_ > 0) {
    std::size_t with_me = 1;
    for (auto const &[q, ps] : peers_) {
      if (q != self_ && ps.view >= view_) with_me++;
    }
    if (with_me < cfg_.f + 1) return;
  }
  if (want_view_ < view_ + 1) want_view_ = view_ + 1;
  progress_timeout_ = std::min(progress_timeout_ * 2, cfg_.max_progress_timeout);
  advance_view();
}

bool Replica::promises_fulfilled() {
  bool ok = true;
  std::vector<std::uint64_t> todo;
  for (auto const &[s, st] : slots_) {
    if (!in_window(s)) continue;
    if (st.sent_will_commit == view_ && st.sent_commit != view_) {
      ok = false;
      todo.push_back(s);
    }
  }
  for (auto s : todo) send_certify(s, view_);
  return ok;
}

void Replica::advance_view() {
  while (view_ < want_view_) {
    if (!promises_fulfilled()) return;
    view_++;
    stats_.view_changes++;
    trace(sim::RecordKind::SealView, {i64(view_)});
    ctb_send(make_seal_view(view_));
    on_enter_view();
  }
}

void Replica::on_enter_view() {
  trace(sim::RecordKind::ViewEntered, {i64(view_)});
  auto now = sim_.local_now(self_);
  last_progress_ = now;
  for (auto &[c, k] : known_) {
    k.echoes.clear();
    k.first_seen = now;
    if (leader(view_) != self_ && k.client_copy && app_.last_seq(c) < k.req.seq) {
      k.echoed_in_view = view_;
      p2p_send(leader(view_), make_echo(k.req));
    }
  }
  if (leader(view_) == self_) try_new_view();
  // prepares of this view that arrived before this replica entered it
  auto const &lp = peers_[leader(view_)];
  std::vector<Prepare> stored;
  for (auto const &[s, r] : lp.prepares) {
    try {
      auto m = Msg::decode(r.msg);
      if (m.prepare.view == view_) stored.push_back(m.prepare);
    } catch (DecodeError const &) {
    }
  }
  for (auto const &p : stored) on_prepare(p);
}

void Replica::maybe_join() {
  std::vector<std::uint64_t> higher;
  for (auto const &[q, ps] : peers_) {
    if (q != self_ && ps.view > view_) higher.push_back(ps.view);
  }
  if (higher.size() < cfg_.f + 1) return;
  std::sort(higher.rbegin(), higher.rend());
  auto target = higher[cfg_.f];
  if (target > want_view_) want_view_ = target;
  advance_view();
}

void Replica::on_crtfy_vc(Pid from, Msg const &m) {
  VcPayload vc;
  try {
    vc = VcPayload::decode(m.payload);
  } catch (DecodeError const &) {
    return;
  }
  if (vc.view < view_ || leader(vc.view) != self_ || new_view_sent_.count(vc.view)) return;
  if (vc.view > view_ + cfg_.window) return;
  auto key = std::make_pair(vc.view, vc.subject);
  auto [it, _] = vc_shares_.try_emplace(key, cfg_.f + 1);
  auto cert = it->second.add(cs_, self_, m.payload, m.share, from, crypto::CryptoPath::Critical);
  if (!cert) return;
  vc_certs_[vc.view].emplace(vc.subject, std::move(*cert));
  try_new_view();
}

void Replica::try_new_view() {
  auto v = view_;
  if (v == 0 || leader(v) != self_ || new_view_sent_.count(v) || want_view_ > v) return;
  auto it = vc_certs_.find(v);
  if (it == vc_certs_.end() || it->second.size() < cfg_.f + 1) return;
  NewView nv;
  nv.view = v;
  for (auto const &[_, c] : it->second) {
    if (nv.certs.size() == cfg_.f + 1) break;
    nv.certs.push_back(c);
  }
  new_view_sent_.insert(v);
  vc_certs_.erase(vc_certs_.begin(), vc_certs_.upper_bound(v));
  vc_shares_.erase(vc_shares_.begin(), vc_shares_.lower_bound({v + 1, 0}));
  trace(sim::RecordKind::NewViewBcast, {i64(v)});
  ctb_send(make_new_view(nv));

  ViewChangeEvidence ev(nv, cfg_.window);
  if (auto const &r = ev.highest_checkpoint()) {
    try {
      auto m = Msg::decode(r->msg);
      if (m.type == MsgType::Checkpoint && valid_checkpoint(m.checkpoint)) {
        maybe_checkpoint(m.checkpoint);
      }
    } catch (DecodeError const &) {
    }
  }
  if (view_ != v) return;
  next_slot_ = checkpoint_.body.start;
  for (auto s = checkpoint_.body.start; s < window_end(); s++) {
    auto mp = ev.must_propose(s);
    if (mp.kind == MustPropose::Kind::Any) break;
    auto req = mp.kind == MustPropose::Kind::Req ? mp.req : app::Request::noop();
    if (!req.is_noop()) {
      auto k = known_.find(req.client);
      if (k != known_.end() && k->second.req == req) k->second.proposed_in_view = v;
    }
    trace(sim::RecordKind::Propose, {i64(v), i64(s), 0}, fp(req));
    propose(std::move(req));
  }
  try_propose();
}

// ---- timers ----------------------------------------------------------------

void Replica::tick() {
  auto now = sim_.local_now(self_);
  if (byz.replay) {
    tb_->resend_all(kFastStream);
    tb_->resend_all(ctb::kDataStream);
    ctb_->replay_oldest();
  }
  std::vector<std::uint64_t> late;
  for (auto const &[s, st] : slots_) {
    if (st.accepted && st.accepted->view == view_ && !st.decided && st.sent_certify != view_ &&
        now - st.accepted_at >= cfg_.slot_timeout) {
      late.push_back(s);
    }
  }
  for (auto s : late) send_certify(s, view_);
  resend_certifies(now);
  if (parked_cp_ && now >= parked_until_) {
    auto cp = std::move(*parked_cp_);
    parked_cp_.reset();
    maybe_checkpoint(cp, false);
  }

  if (!pending_requests() && want_view_ == view_) {
    last_progress_ = now;
  } else if (now - last_progress_ >= progress_timeout_) {
    last_progress_ = now;
    suspect();
  }
  advance_view();
  try_propose();
  sim_.timer(self_, cfg_.delta, [this]() { tick(); });
}

// ---- accounting ------------------------------------------------------------

Footprint Replica::live_bytes() const {
  Footprint fp;
  for (auto const &[_, ps] : peers_) fp.peer_states += ps.bytes();
  for (auto const &[_, st] : slots_) {
    fp.slots += 64;
    if (st.accepted) fp.slots += 40 + st.accepted->req.op.size();
    for (auto const &[_v, set] : st.will_certify) fp.slots += 8 + 4 * set.size();
    for (auto const &[_v, set] : st.will_commit) fp.slots += 8 + 4 * set.size();
    for (auto const &[_v, c] : st.certify) fp.collectors += c.bytes();
    fp.collectors += st.certify_msg.size();
  }
  for (auto const &[_, r] : decided_) fp.slots += 16 + r.op.size();
  for (auto const &[_, in] : inbox_) {
    fp.inbox += 16;
    for (auto const &[_k, m] : in.buffered) fp.inbox += 8 + m.size();
    if (in.summary) fp.inbox += 8 + in.summary->second.bytes();
  }
  for (auto const &[_, c] : cp_shares_) fp.collectors += c.bytes();
  for (auto const &[_, c] : vc_shares_) fp.collectors += c.bytes();
  for (auto const &[_, c] : summary_shares_) fp.collectors += c.bytes();
  for (auto const &b : outbox_) fp.collectors += b.size();
  fp.tbcast = tb_->retained_bytes();
  fp.ctbcast = ctb_->bytes();
  fp.registers = regs_->local_bytes();
  return fp;
}

Footprint Replica::footprint() const {
  std::size_t n = replicas_.size();
  std::size_t t = cfg_.t;
  std::size_t w = cfg_.window;
  std::size_t sig = crypto::Signature::kEncodedSize;
  std::size_t msg = hw_ctb_;
  Footprint fp;

  // Per tail-broadcast stream and peer: sender ring, receiver ring, resend
  // buffer of 2t, and a 2t dedupe window.
  auto stream = [&](std::size_t m) {
    std::size_t slot_bytes = tail::Slot::kHeader + 8 + m;
    return n * (2 * t * slot_bytes + 2 * t * (8 + m) + 2 * t * 8);
  };
  std::size_t lock_wire = 1 + 4 + 8 + 4 + msg + 1 + sig;
  std::size_t locked_wire = 1 + 4 + 8 + 4 + 32 + 1;
  fp.tbcast = stream(lock_wire) + n * stream(locked_wire);
  for (auto s : {kFastStream, kSlowStream, kBackgroundStream}) {
    auto it = hw_tb_.find(s);
    fp.tbcast += stream(it == hw_tb_.end() ? 0 : it->second);
  }

  // CTB: per broadcaster t locks, n x t LOCKED rows, t delivered ids; t sent.
  fp.ctbcast = n * (t * 40 + n * t * 40 + t * 8) + t * (16 + msg);
  // Reader-side monotone cache over every (owner, broadcaster, slot) cell.
  fp.registers = n * n * t * (16 + 8 + 32 + sig);

  std::size_t retained = 16 + msg;
  std::size_t peer = 32 + 3 * retained + 2 * w * retained;  // prepares + commits per window
  fp.peer_states = n * peer;
  fp.slots = 2 * w * (96 + msg + 2 * n * 8);
  fp.inbox = n * (16 + 2 * t * (8 + msg) + peer);
  std::size_t quorum = (cfg_.f + 1) * sig;
  // CERTIFY per slot, plus checkpoint, view-change and summary shares; outbox
  fp.collectors = w * (2 * msg + quorum + sig) + 3 * (peer + quorum) + 2 * w * msg;
  return fp;
}

}  // namespace ubft::consensus
