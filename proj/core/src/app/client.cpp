#include "ubft/app/client.hpp"

#include "ubft/common/channel.hpp"

namespace ubft::app {

Client::Client(sim::Simulator &sim, sim::Network &net, Pid self, std::uint32_t id,
               ClientConfig cfg, Workload workload)
    : sim_{sim}, net_{net}, self_{self}, id_{id}, cfg_{std::move(cfg)}, workload_{std::move(workload)} {}

void Client::start(std::uint64_t count, Time start_at) {
  target_ += count;
  if (outstanding_) return;
  sim_.at(std::max(start_at, sim_.now()), self_, [this]() { submit(); });
}

void Client::submit() {
  if (outstanding_ || completed_ >= target_) return;
  seq_++;
  current_ = Request{id_, seq_, workload_(seq_)};
  outstanding_ = true;
  replies_.clear();
  history_.push_back(HistoryEntry{id_, seq_, current_.op, {}, sim_.now(), kNever});
  sim_.tracer().emit(sim::Record{sim_.now(), self_, sim::RecordKind::ClientSubmit,
                                 {static_cast<std::int64_t>(seq_)}, current_.fingerprint()});
  send_current();
  arm_resend();
}

void Client::send_current() {
  auto payload = current_.encode();
  auto const &targets = cfg_.subset ? *cfg_.subset : cfg_.replicas;
  for (auto r : targets) {
    net_.send(self_, r, ChannelKey{ChannelKind::Client, 0, 0, self_, r}.pack(), payload);
  }
}

void Client::arm_resend() {
  auto seq = seq_;
  resend_timer_ = sim_.timer(self_, cfg_.resend_after, [this, seq]() {
    if (!outstanding_ || seq_ != seq) return;
    resends_++;
    send_current();
    arm_resend();
  });
}

void Client::on_message(Pid from, std::uint64_t, Bytes const &payload) {
  if (!outstanding_) return;
  Reply r;
  try {
    r = Reply::decode(payload);
  } catch (DecodeError const &) {
    return;
  }
  if (r.client != id_ || r.seq != seq_) return;
  replies_[from] = r.result;
  std::uint32_t matching = 0;
  for (auto const &[_, res] : replies_) {
    if (res == r.result) matching++;
  }
  if (matching < cfg_.f + 1) return;
  outstanding_ = false;
  sim_.cancel(resend_timer_);
  auto &h = history_.back();
  h.result = r.result;
  h.completed = sim_.now();
  auto latency = h.completed - h.invoked;
  latencies_.push_back(latency);
  completed_++;
  sim_.tracer().emit(sim::Record{sim_.now(), self_, sim::RecordKind::ClientDone,
                                 {static_cast<std::int64_t>(seq_), latency}, 0});
  sim_.at(sim_.now(), self_, [this]() { submit(); });
}

}  // namespace ubft::app
