#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "ubft/app/app.hpp"
#include "ubft/crypto/certificate.hpp"

namespace ubft::consensus {

// Tail-broadcast streams of the consensus layer.
inline constexpr std::uint8_t kFastStream = 1;        // WILL_CERTIFY, WILL_COMMIT
inline constexpr std::uint8_t kSlowStream = 2;        // CERTIFY
inline constexpr std::uint8_t kBackgroundStream = 3;  // CERTIFY-CHECKPOINT, SUMMARY
// Point-to-point sub-channel (CRTFY_VC, CERTIFY_SUMMARY, ECHO).
inline constexpr std::uint8_t kP2PStream = 2;

enum class MsgType : std::uint8_t {
  // carried by consistent tail broadcast
  Prepare = 1,
  Commit = 2,
  Checkpoint = 3,
  SealView = 4,
  NewView = 5,
  // carried by tail broadcast
  WillCertify = 10,
  WillCommit = 11,
  Certify = 12,
  CertifyCheckpoint = 13,
  Summary = 14,
  // point to point
  CrtfyVc = 20,
  CertifySummary = 21,
  Echo = 22,
};

struct Prepare {
  std::uint64_t view = 0;
  std::uint64_t slot = 0;
  app::Request req;

  Bytes payload() const;  // what CERTIFY shares sign
  static Prepare from_payload(ByteView p);
  bool operator==(Prepare const &) const = default;
};

// Application snapshot authorising the window [start, start + window).
struct CheckpointBody {
  std::uint64_t start = 0;
  Bytes app_state;

  Bytes payload() const;
  static CheckpointBody from_payload(ByteView p);
};

struct Checkpoint {
  CheckpointBody body;
  crypto::Certificate cert;  // empty for the genesis checkpoint
  bool genesis = false;

  void encode(Encoder &e) const;
  static Checkpoint decode(Decoder &d);
};

// A CTB message retained in a peer state together with its CTB id.
struct Retained {
  std::uint64_t id = 0;
  Bytes msg;
  bool operator==(Retained const &) const = default;
};

// What a replica knows about a peer from the peer's CTB messages.
struct PeerState {
  std::uint64_t view = 0;
  std::optional<Retained> seal_view;
  std::optional<Retained> new_view;
  std::map<std::uint64_t, Retained> prepares;
  std::map<std::uint64_t, Retained> commits;
  std::optional<Retained> checkpoint;
  std::uint64_t cp_start = 0;  // derived from `checkpoint`
  bool non_checkpoint_in_view = false;

  // Canonical encoding; CRTFY_VC certifies the state without new_view.
  Bytes encode(bool with_new_view) const;
  static PeerState decode(ByteView data);
  std::size_t bytes() const;
};

struct NewView {
  std::uint64_t view = 0;
  std::vector<crypto::Certificate> certs;  // CRTFY_VC certificates
};

// Payload certified by CRTFY_VC shares.
struct VcPayload {
  std::uint64_t view = 0;
  Pid subject = 0;
  Bytes state;  // PeerState::encode(false)

  Bytes encode() const;
  static VcPayload decode(ByteView p);
};

// Payload certified by CERTIFY_SUMMARY shares.
struct SummaryPayload {
  Pid subject = 0;
  std::uint64_t id = 0;
  Bytes state;  // PeerState::encode(true)

  Bytes encode() const;
  static SummaryPayload decode(ByteView p);
};

// One decoded consensus message. Only the fields relevant to `type` are set.
struct Msg {
  MsgType type = MsgType::Prepare;
  Prepare prepare;                   // Prepare, Certify (the certified PREPARE)
  std::uint64_t view = 0;            // SealView, WillCertify, WillCommit, NewView
  std::uint64_t slot = 0;            // WillCertify, WillCommit
  crypto::Certificate cert;          // Commit, Summary
  Checkpoint checkpoint;             // Checkpoint
  NewView new_view;                  // NewView
  crypto::Signature share;           // Certify, CertifyCheckpoint, CrtfyVc, CertifySummary
  Bytes payload;                     // signed payload for share-carrying messages
  app::Request req;                  // Echo

  Bytes encode() const;
  static Msg decode(ByteView data);  // throws DecodeError
};

Msg make_prepare(Prepare p);
Msg make_commit(crypto::Certificate c);
Msg make_checkpoint(Checkpoint c);
Msg make_seal_view(std::uint64_t v);
Msg make_new_view(NewView nv);
Msg make_will(MsgType type, std::uint64_t v, std::uint64_t s);
Msg make_share(MsgType type, Bytes payload, crypto::Signature share);
Msg make_summary(crypto::Certificate c);
Msg make_echo(app::Request r);

// Result of MustPropose for one slot.
struct MustPropose {
  enum class Kind : std::uint8_t { Any, Noop, Req };
  Kind kind = Kind::Any;
  app::Request req;
  bool operator==(MustPropose const &) const = default;
};

// Decodes the certified states once; MustPropose queries are then cheap.
class ViewChangeEvidence {
 public:
  ViewChangeEvidence(NewView const &nv, std::uint64_t window);

  MustPropose must_propose(std::uint64_t slot) const;
  std::uint64_t max_open_slot() const { return max_open_; }
  // Highest checkpoint among the certified states (raw CHECKPOINT message).
  std::optional<Retained> const &highest_checkpoint() const { return highest_cp_; }
  std::vector<Pid> const &subjects() const { return subjects_; }

 private:
  std::uint64_t max_open_ = 0;
  std::optional<Retained> highest_cp_;
  std::map<std::uint64_t, std::pair<std::uint64_t, app::Request>> latest_commit_;  // slot -> (view, req)
  std::vector<Pid> subjects_;
};

}  // namespace ubft::consensus
