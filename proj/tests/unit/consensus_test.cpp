#include <gtest/gtest.h>

#include "ubft/consensus/messages.hpp"

using namespace ubft;
using namespace ubft::consensus;

namespace {

crypto::CryptoService &cs() {
  static crypto::CryptoService s(crypto::Backend::Simulated, 2, 3);
  return s;
}

app::Request req(std::uint32_t client, std::uint64_t seq, std::string const &op) {
  return app::Request{client, seq, Bytes(op.begin(), op.end())};
}

crypto::Certificate certify(Bytes payload) {
  crypto::Certificate c;
  c.payload = std::move(payload);
  for (Pid p : {0u, 1u}) c.shares.push_back(cs().sign(p, c.payload, crypto::CryptoPath::Critical));
  return c;
}

Retained commit_of(std::uint64_t view, std::uint64_t slot, app::Request r, std::uint64_t id) {
  Prepare p{view, slot, std::move(r)};
  return Retained{id, make_commit(certify(p.payload())).encode()};
}

crypto::Certificate vc_cert(Pid subject, std::uint64_t view, PeerState const &st) {
  VcPayload vp{view, subject, st.encode(false)};
  return certify(vp.encode());
}

}  // namespace

TEST(Messages, PrepareRoundTrip) {
  auto m = make_prepare(Prepare{3, 17, req(5, 2, "op")});
  auto back = Msg::decode(m.encode());
  EXPECT_EQ(back.type, MsgType::Prepare);
  EXPECT_EQ(back.prepare, m.prepare);
}

TEST(Messages, WillAndShareRoundTrip) {
  auto w = Msg::decode(make_will(MsgType::WillCommit, 4, 9).encode());
  EXPECT_EQ(w.type, MsgType::WillCommit);
  EXPECT_EQ(w.view, 4u);
  EXPECT_EQ(w.slot, 9u);

  Prepare p{1, 2, req(1, 1, "a")};
  auto sh = cs().sign(2, p.payload(), crypto::CryptoPath::Critical);
  auto c = Msg::decode(make_share(MsgType::Certify, p.payload(), sh).encode());
  EXPECT_EQ(c.type, MsgType::Certify);
  EXPECT_EQ(c.share, sh);
  EXPECT_EQ(c.payload, p.payload());
}

TEST(Messages, CommitCarriesCertificate) {
  Prepare p{2, 5, req(1, 1, "a")};
  auto cert = certify(p.payload());
  auto back = Msg::decode(make_commit(cert).encode());
  EXPECT_EQ(back.type, MsgType::Commit);
  EXPECT_EQ(back.cert, cert);
  EXPECT_EQ(back.prepare, p);
  EXPECT_TRUE(crypto::verify_certificate(cs(), 2, back.cert, 2, crypto::CryptoPath::Critical));
}

TEST(Messages, EchoAndSealRoundTrip) {
  auto e = Msg::decode(make_echo(req(7, 3, "zz")).encode());
  EXPECT_EQ(e.type, MsgType::Echo);
  EXPECT_EQ(e.req, req(7, 3, "zz"));
  auto s = Msg::decode(make_seal_view(6).encode());
  EXPECT_EQ(s.type, MsgType::SealView);
  EXPECT_EQ(s.view, 6u);
}

TEST(Messages, TruncatedInputThrows) {
  auto bytes = make_prepare(Prepare{3, 17, req(5, 2, "op")}).encode();
  for (std::size_t cut = 0; cut < bytes.size(); cut++) {
    Bytes part(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_THROW(Msg::decode(part), DecodeError) << cut;
  }
}

TEST(PeerStateCodec, RoundTrip) {
  PeerState st;
  st.view = 3;
  st.commits[4] = commit_of(1, 4, req(1, 1, "a"), 11);
  st.prepares[5] = Retained{12, make_prepare(Prepare{3, 5, req(2, 1, "b")}).encode()};
  st.seal_view = Retained{13, make_seal_view(3).encode()};
  auto back = PeerState::decode(st.encode(true));
  EXPECT_EQ(back.view, 3u);
  EXPECT_EQ(back.commits, st.commits);
  EXPECT_EQ(back.prepares, st.prepares);
  EXPECT_EQ(back.seal_view, st.seal_view);
}

// The new leader re-proposes, per open slot, the request committed in the
// highest view, a no-op when nothing was committed, and anything past the
// open window.
TEST(MustPropose, HighestViewCommitWins) {
  PeerState a, b;
  a.view = b.view = 3;
  a.commits[1] = commit_of(0, 1, req(1, 1, "old"), 1);
  b.commits[1] = commit_of(2, 1, req(2, 1, "new"), 5);
  b.commits[2] = commit_of(2, 2, req(2, 2, "x"), 6);
  NewView nv{3, {vc_cert(0, 3, a), vc_cert(1, 3, b)}};
  ViewChangeEvidence ev(nv, 4);
  auto m1 = ev.must_propose(1);
  EXPECT_EQ(m1.kind, MustPropose::Kind::Req);
  EXPECT_EQ(m1.req, req(2, 1, "new"));
  EXPECT_EQ(ev.must_propose(2).req, req(2, 2, "x"));
}

TEST(MustPropose, UncommittedOpenSlotGetsNoop) {
  PeerState a, b;
  a.commits[2] = commit_of(0, 2, req(1, 1, "a"), 1);
  NewView nv{1, {vc_cert(0, 1, a), vc_cert(1, 1, b)}};
  ViewChangeEvidence ev(nv, 4);
  auto m = ev.must_propose(1);
  EXPECT_EQ(m.kind, MustPropose::Kind::Noop);
  EXPECT_TRUE(m.req.is_noop());
  EXPECT_EQ(ev.must_propose(3).kind, MustPropose::Kind::Noop);
}

TEST(MustPropose, PastTheWindowIsFree) {
  PeerState a, b;
  NewView nv{1, {vc_cert(0, 1, a), vc_cert(1, 1, b)}};
  ViewChangeEvidence ev(nv, 4);
  auto last = ev.max_open_slot();
  EXPECT_EQ(ev.must_propose(last).kind, MustPropose::Kind::Noop);
  EXPECT_EQ(ev.must_propose(last + 1).kind, MustPropose::Kind::Any);
  EXPECT_EQ(ev.subjects(), (std::vector<Pid>{0, 1}));
}
