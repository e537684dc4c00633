#include "ubft/consensus/messages.hpp"

namespace ubft::consensus {

namespace {

void encode_opt(Encoder &e, std::optional<Retained> const &r) {
  e.boolean(r.has_value());
  if (r) e.u64(r->id).bytes(r->msg);
}

std::optional<Retained> decode_opt(Decoder &d) {
  if (!d.boolean()) return std::nullopt;
  Retained r;
  r.id = d.u64();
  r.msg = d.bytes();
  return r;
}

void encode_map(Encoder &e, std::map<std::uint64_t, Retained> const &m) {
  e.u32(static_cast<std::uint32_t>(m.size()));
  for (auto const &[slot, r] : m) e.u64(slot).u64(r.id).bytes(r.msg);
}

std::map<std::uint64_t, Retained> decode_map(Decoder &d) {
  std::map<std::uint64_t, Retained> m;
  auto n = d.u32();
  for (std::uint32_t i = 0; i < n; i++) {
    auto slot = d.u64();
    Retained r;
    r.id = d.u64();
    r.msg = d.bytes();
    m.emplace(slot, std::move(r));
  }
  return m;
}

}  // namespace

Bytes Prepare::payload() const {
  Encoder e(req.op.size() + 40);
  e.u8(0x50).u64(view).u64(slot);
  req.encode(e);
  return e.take();
}

Prepare Prepare::from_payload(ByteView p) {
  Decoder d(p);
  if (d.u8() != 0x50) throw DecodeError("not a PREPARE payload");
  Prepare out;
  out.view = d.u64();
  out.slot = d.u64();
  out.req = app::Request::decode(d);
  d.expect_end();
  return out;
}

Bytes CheckpointBody::payload() const {
  Encoder e(app_state.size() + 16);
  e.u8(0x43).u64(start).bytes(app_state);
  return e.take();
}

CheckpointBody CheckpointBody::from_payload(ByteView p) {
  Decoder d(p);
  if (d.u8() != 0x43) throw DecodeError("not a checkpoint payload");
  CheckpointBody b;
  b.start = d.u64();
  b.app_state = d.bytes();
  d.expect_end();
  return b;
}

void Checkpoint::encode(Encoder &e) const {
  e.boolean(genesis);
  if (genesis) {
    e.bytes(body.payload());
  } else {
    cert.encode(e);
  }
}

Checkpoint Checkpoint::decode(Decoder &d) {
  Checkpoint c;
  c.genesis = d.boolean();
  if (c.genesis) {
    c.body = CheckpointBody::from_payload(d.bytes());
  } else {
    c.cert = crypto::Certificate::decode(d);
    c.body = CheckpointBody::from_payload(c.cert.payload);
  }
  return c;
}

Bytes PeerState::encode(bool with_new_view) const {
  Encoder e;
  e.boolean(with_new_view).u64(view);
  encode_opt(e, seal_view);
  if (with_new_view) encode_opt(e, new_view);
  encode_map(e, prepares);
  encode_map(e, commits);
  encode_opt(e, checkpoint);
  e.u64(cp_start).boolean(non_checkpoint_in_view);
  return e.take();
}

PeerState PeerState::decode(ByteView data) {
  Decoder d(data);
  PeerState s;
  bool with_new_view = d.boolean();
  s.view = d.u64();
  s.seal_view = decode_opt(d);
  if (with_new_view) s.new_view = decode_opt(d);
  s.prepares = decode_map(d);
  s.commits = decode_map(d);
  s.checkpoint = decode_opt(d);
  s.cp_start = d.u64();
  s.non_checkpoint_in_view = d.boolean();
  d.expect_end();
  return s;
}

std::size_t PeerState::bytes() const {
  std::size_t total = 32;
  auto opt = [](std::optional<Retained> const &r) { return r ? 8 + r->msg.size() : 0; };
  total += opt(seal_view) + opt(new_view) + opt(checkpoint);
  for (auto const &[_, r] : prepares) total += 16 + r.msg.size();
  for (auto const &[_, r] : commits) total += 16 + r.msg.size();
  return total;
}

Bytes VcPayload::encode() const {
  Encoder e(state.size() + 20);
  e.u8(0x56).u64(view).u32(subject).bytes(state);
  return e.take();
}

VcPayload VcPayload::decode(ByteView p) {
  Decoder d(p);
  if (d.u8() != 0x56) throw DecodeError("not a view-change payload");
  VcPayload v;
  v.view = d.u64();
  v.subject = d.u32();
  v.state = d.bytes();
  d.expect_end();
  return v;
}

Bytes SummaryPayload::encode() const {
  Encoder e(state.size() + 20);
  e.u8(0x53).u32(subject).u64(id).bytes(state);
  return e.take();
}

SummaryPayload SummaryPayload::decode(ByteView p) {
  Decoder d(p);
  if (d.u8() != 0x53) throw DecodeError("not a summary payload");
  SummaryPayload s;
  s.subject = d.u32();
  s.id = d.u64();
  s.state = d.bytes();
  d.expect_end();
  return s;
}

Bytes Msg::encode() const {
  Encoder e;
  e.u8(static_cast<std::uint8_t>(type));
  switch (type) {
    case MsgType::Prepare:
      e.bytes(prepare.payload());
      break;
    case MsgType::Commit:
    case MsgType::Summary:
      cert.encode(e);
      break;
    case MsgType::Checkpoint:
      checkpoint.encode(e);
      break;
    case MsgType::SealView:
      e.u64(view);
      break;
    case MsgType::NewView:
      e.u64(new_view.view).u32(static_cast<std::uint32_t>(new_view.certs.size()));
      for (auto const &c : new_view.certs) c.encode(e);
      break;
    case MsgType::WillCertify:
    case MsgType::WillCommit:
      e.u64(view).u64(slot);
      break;
    case MsgType::Certify:
    case MsgType::CertifyCheckpoint:
    case MsgType::CrtfyVc:
    case MsgType::CertifySummary:
      e.bytes(payload);
      share.encode(e);
      break;
    case MsgType::Echo:
      req.encode(e);
      break;
  }
  return e.take();
}

Msg Msg::decode(ByteView data) {
  Decoder d(data);
  Msg m;
  auto t = d.u8();
  m.type = static_cast<MsgType>(t);
  switch (m.type) {
    case MsgType::Prepare:
      m.prepare = Prepare::from_payload(d.bytes());
      m.view = m.prepare.view;
      m.slot = m.prepare.slot;
      break;
    case MsgType::Commit:
      m.cert = crypto::Certificate::decode(d);
      m.prepare = Prepare::from_payload(m.cert.payload);
      m.view = m.prepare.view;
      m.slot = m.prepare.slot;
      break;
    case MsgType::Summary:
      m.cert = crypto::Certificate::decode(d);
      break;
    case MsgType::Checkpoint:
      m.checkpoint = Checkpoint::decode(d);
      break;
    case MsgType::SealView:
      m.view = d.u64();
      break;
    case MsgType::NewView: {
      m.new_view.view = d.u64();
      m.view = m.new_view.view;
      auto n = d.u32();
      if (n > 4096) throw DecodeError("too many certificates");
      for (std::uint32_t i = 0; i < n; i++) m.new_view.certs.push_back(crypto::Certificate::decode(d));
      break;
    }
    case MsgType::WillCertify:
    case MsgType::WillCommit:
      m.view = d.u64();
      m.slot = d.u64();
      break;
    case MsgType::Certify:
      m.payload = d.bytes();
      m.share = crypto::Signature::decode(d);
      m.prepare = Prepare::from_payload(m.payload);
      m.view = m.prepare.view;
      m.slot = m.prepare.slot;
      break;
    case MsgType::CertifyCheckpoint:
    case MsgType::CrtfyVc:
    case MsgType::CertifySummary:
      m.payload = d.bytes();
      m.share = crypto::Signature::decode(d);
      break;
    case MsgType::Echo:
      m.req = app::Request::decode(d);
      break;
    default:
      throw DecodeError("unknown consensus message type");
  }
  d.expect_end();
  return m;
}

Msg make_prepare(Prepare p) {
  Msg m;
  m.type = MsgType::Prepare;
  m.view = p.view;
  m.slot = p.slot;
  m.prepare = std::move(p);
  return m;
}

Msg make_commit(crypto::Certificate c) {
  Msg m;
  m.type = MsgType::Commit;
  m.prepare = Prepare::from_payload(c.payload);
  m.cert = std::move(c);
  return m;
}

Msg make_checkpoint(Checkpoint c) {
  Msg m;
  m.type = MsgType::Checkpoint;
  m.checkpoint = std::move(c);
  return m;
}

Msg make_seal_view(std::uint64_t v) {
  Msg m;
  m.type = MsgType::SealView;
  m.view = v;
  return m;
}

Msg make_new_view(NewView nv) {
  Msg m;
  m.type = MsgType::NewView;
  m.view = nv.view;
  m.new_view = std::move(nv);
  return m;
}

Msg make_will(MsgType type, std::uint64_t v, std::uint64_t s) {
  Msg m;
  m.type = type;
  m.view = v;
  m.slot = s;
  return m;
}

Msg make_share(MsgType type, Bytes payload, crypto::Signature share) {
  Msg m;
  m.type = type;
  m.payload = std::move(payload);
  m.share = share;
  return m;
}

Msg make_summary(crypto::Certificate c) {
  Msg m;
  m.type = MsgType::Summary;
  m.cert = std::move(c);
  return m;
}

Msg make_echo(app::Request r) {
  Msg m;
  m.type = MsgType::Echo;
  m.req = std::move(r);
  return m;
}

ViewChangeEvidence::ViewChangeEvidence(NewView const &nv, std::uint64_t window) {
  std::uint64_t best_cp = 0;
  bool have_open = false;
  for (auto const &c : nv.certs) {
    auto vc = VcPayload::decode(c.payload);
    subjects_.push_back(vc.subject);
    auto st = PeerState::decode(vc.state);
    auto last_open = st.cp_start + window - 1;
    if (!have_open || last_open > max_open_) max_open_ = last_open;
    have_open = true;
    if (st.checkpoint && (!highest_cp_ || st.cp_start > best_cp)) {
      highest_cp_ = st.checkpoint;
      best_cp = st.cp_start;
    }
    for (auto const &[slot, r] : st.commits) {
      auto msg = Msg::decode(r.msg);
      auto it = latest_commit_.find(slot);
      if (it == latest_commit_.end() || msg.prepare.view > it->second.first) {
        latest_commit_[slot] = {msg.prepare.view, msg.prepare.req};
      }
    }
  }
}

MustPropose ViewChangeEvidence::must_propose(std::uint64_t slot) const {
  if (slot > max_open_) return MustPropose{MustPropose::Kind::Any, {}};
  auto it = latest_commit_.find(slot);
  if (it == latest_commit_.end()) return MustPropose{MustPropose::Kind::Noop, app::Request::noop()};
  return MustPropose{MustPropose::Kind::Req, it->second.second};
}

}  // namespace ubft::consensus
