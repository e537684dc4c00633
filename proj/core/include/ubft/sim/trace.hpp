#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ubft/common/types.hpp"

namespace ubft::sim {

// Every line of a trace is one Record. Simulator events and protocol
// milestones share the format so a single checker can consume both.
enum class RecordKind : std::uint8_t {
  SimDeliver,
  SimTimer,
  SimCrash,
  SimPartition,
  RunConfig,
  RunFault,
  RunQuiesce,
  CtbBroadcast,
  CtbDeliver,
  CtbAbort,
  CtbSigned,
  RegWriteBegin,
  RegWriteEnd,
  RegReadBegin,
  RegReadEnd,
  Propose,
  AcceptPrepare,
  WillCertify,
  WillCommit,
  Certify,
  CommitBcast,
  Decide,
  Apply,
  Checkpoint,
  SealView,
  NewViewBcast,
  ViewEntered,
  SummaryStall,
  SummaryInstall,
  Quarantine,
  ClientSubmit,
  ClientDone,
  kCount,
};

struct Record {
  Time time = 0;
  std::uint32_t process = 0;
  RecordKind kind = RecordKind::SimTimer;
  std::array<std::int64_t, 4> f{};
  std::uint64_t digest = 0;
};

std::string_view kind_name(RecordKind kind);
std::optional<RecordKind> kind_from_name(std::string_view name);

// `time<TAB>process<TAB>kind field=value ...<TAB>payload-digest`
std::string format_record(Record const &r);
Record parse_record(std::string_view line);  // throws std::invalid_argument

class Observer {
 public:
  virtual ~Observer() = default;
  virtual void on_record(Record const &r) = 0;
};

class Tracer {
 public:
  void attach(Observer *o) { observers_.push_back(o); }
  void detach(Observer *o);
  bool active() const { return !observers_.empty(); }

  void emit(Record const &r) {
    for (auto *o : observers_) o->on_record(r);
  }

 private:
  std::vector<Observer *> observers_;
};

// Renders records as text, optionally into a stream, and folds every byte
// into a running BLAKE2b hash so two runs can be compared cheaply.
class TextTraceWriter : public Observer {
 public:
  explicit TextTraceWriter(std::ostream *out = nullptr, bool keep_text = false);
  ~TextTraceWriter() override;
  TextTraceWriter(TextTraceWriter const &) = delete;
  TextTraceWriter &operator=(TextTraceWriter const &) = delete;

  void on_record(Record const &r) override;

  std::uint64_t lines() const { return lines_; }
  std::uint64_t bytes() const { return bytes_; }
  std::string digest_hex();
  std::string const &text() const { return text_; }

 private:
  struct HashState;
  std::ostream *out_;
  bool keep_text_;
  std::string text_;
  std::uint64_t lines_ = 0;
  std::uint64_t bytes_ = 0;
  HashState *hash_;
  bool finalized_ = false;
  std::string final_hex_;
};

}  // namespace ubft::sim
