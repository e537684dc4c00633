#include "ubft/dmem/register_client.hpp"

#include <algorithm>
#include <cmath>

#include "ubft/common/channel.hpp"

namespace ubft::dmem {

RegisterClient::RegisterClient(sim::Simulator &sim, sim::Network &net, crypto::CryptoService &cs,
                               Pid self, DmemConfig cfg)
    : sim_{sim}, net_{net}, cs_{cs}, self_{self}, cfg_{std::move(cfg)} {
  // The pause is measured on the writer's clock; scaling by the squared drift
  // bound keeps it at least delta on every other process's clock.
  pace_local_ = static_cast<Time>(
      std::ceil(static_cast<double>(cfg_.delta) * cfg_.drift_bound * cfg_.drift_bound));
}

std::uint64_t RegisterClient::channel(Pid node) const {
  return ChannelKey{ChannelKind::Mem, 0, 0, self_, node}.pack();
}

void RegisterClient::write(std::uint64_t index, std::uint64_t ts, Bytes payload, WriteDone done) {
  stats_.writes++;
  if (byz.no_pacing) {
    issue(index, QueuedWrite{ts, std::move(payload), std::move(done)});
    return;
  }
  owned_[index].queue.push_back(QueuedWrite{ts, std::move(payload), std::move(done)});
  pump(index);
}

void RegisterClient::pump(std::uint64_t index) {
  auto &reg = owned_[index];
  if (reg.in_flight || reg.queue.empty()) return;
  auto local = sim_.local_now(self_);
  if (local < reg.next_allowed_local) {
    if (!reg.pump_scheduled) {
      reg.pump_scheduled = true;
      sim_.timer(self_, reg.next_allowed_local - local, [this, index]() {
        owned_[index].pump_scheduled = false;
        pump(index);
      });
    }
    return;
  }
  auto w = std::move(reg.queue.front());
  reg.queue.pop_front();
  issue(index, std::move(w));
}

void RegisterClient::issue(std::uint64_t index, QueuedWrite w) {
  auto &reg = owned_[index];
  auto op = next_op_++;
  if (!byz.no_pacing) reg.in_flight = true;
  reg.op = op;
  reg.payload_bytes = w.payload.size();
  auto sub = reg.next_sub;
  reg.next_sub ^= 1;

  auto cell = make_cell(cs_, self_, w.ts, std::move(w.payload));
  if (byz.bad_checksum) cell.cksum ^= 0xbadc0ffeeULL;

  sim_.tracer().emit(sim::Record{sim_.now(), self_, sim::RecordKind::RegWriteBegin,
                                 {static_cast<std::int64_t>(index), static_cast<std::int64_t>(w.ts)},
                                 0});
  write_op_index_[op] = index;
  write_ts_[op] = w.ts;
  write_done_[op] = std::move(w.done);

  auto send_sub = [&](std::uint8_t s) {
    for (auto node : cfg_.nodes) {
      Encoder e;
      e.u8(static_cast<std::uint8_t>(MemOp::WriteReq)).u64(op).u32(self_).u64(index).u8(s);
      cell.encode(e);
      net_.send(self_, node, channel(node), e.take(), sim::LinkClass::Memory);
    }
  };
  send_sub(sub);
  if (byz.same_ts_both) send_sub(static_cast<std::uint8_t>(sub ^ 1));
}

void RegisterClient::read(Pid owner, std::uint64_t index, ReadDone done) {
  stats_.reads++;
  auto op = next_op_++;
  sim_.tracer().emit(sim::Record{sim_.now(), self_, sim::RecordKind::RegReadBegin,
                                 {static_cast<std::int64_t>(owner),
                                  static_cast<std::int64_t>(index), static_cast<std::int64_t>(op)},
                                 0});
  PendingRead r;
  r.key = RegKey{owner, index};
  r.done = std::move(done);
  r.trace_op = op;
  start_read(op, std::move(r));
}

void RegisterClient::start_read(std::uint64_t op, PendingRead r) {
  r.started_local = sim_.local_now(self_);
  r.responses.clear();
  auto key = r.key;
  reads_[op] = std::move(r);
  for (auto node : cfg_.nodes) {
    Encoder e;
    e.u8(static_cast<std::uint8_t>(MemOp::ReadReq)).u64(op).u32(key.owner).u64(key.index);
    net_.send(self_, node, channel(node), e.take(), sim::LinkClass::Memory);
  }
}

void RegisterClient::on_message(Pid, std::uint64_t, Bytes const &payload) {
  Decoder d(payload);
  auto op_kind = static_cast<MemOp>(d.u8());
  auto op = d.u64();
  d.u32();
  d.u64();
  if (op_kind == MemOp::WriteAck) {
    auto it = write_op_index_.find(op);
    if (it == write_op_index_.end()) return;
    if (++write_acks_[op] < cfg_.f_m + 1) return;
    auto index = it->second;
    auto ts = write_ts_[op];
    auto done = std::move(write_done_[op]);
    write_op_index_.erase(it);
    write_ts_.erase(op);
    write_done_.erase(op);
    write_acks_.erase(op);
    sim_.tracer().emit(sim::Record{sim_.now(), self_, sim::RecordKind::RegWriteEnd,
                                   {static_cast<std::int64_t>(index), static_cast<std::int64_t>(ts)},
                                   0});
    auto &reg = owned_[index];
    reg.in_flight = false;
    reg.next_allowed_local = sim_.local_now(self_) + pace_local_;
    if (done) done();
    pump(index);
  } else if (op_kind == MemOp::ReadResp) {
    auto it = reads_.find(op);
    if (it == reads_.end()) return;
    std::array<Cell, 2> cells{Cell::decode(d), Cell::decode(d)};
    it->second.responses.push_back(std::move(cells));
    if (it->second.responses.size() >= cfg_.f_m + 1) finish_read(op);
  }
}

void RegisterClient::finish_read(std::uint64_t op) {
  auto node = reads_.extract(op);
  auto &r = node.mapped();
  auto elapsed = sim_.local_now(self_) - r.started_local;
  auto v = evaluate_read(cs_, self_, r.responses, elapsed, cfg_.delta);
  if (v.kind == ReadVerdict::Retry) {
    stats_.retries++;
    auto retry_op = next_op_++;
    sim_.timer(self_, std::max<Time>(1, cfg_.delta / 2),
               [this, retry_op, r = std::move(r)]() mutable { start_read(retry_op, std::move(r)); });
    return;
  }
  ReadResult res;
  if (v.kind == ReadVerdict::ByzantineOwner) {
    stats_.byzantine_detected++;
    res.kind = ReadResult::Kind::ByzantineOwner;
  } else {
    auto &cached = monotone_cache_[r.key];
    if (v.cell.ts >= cached.ts) cached = v.cell;
    res.ts = cached.ts;
    res.payload = cached.payload;
  }
  std::int64_t ts_field = res.kind == ReadResult::Kind::Value ? static_cast<std::int64_t>(res.ts) : -1;
  sim_.tracer().emit(sim::Record{sim_.now(), self_, sim::RecordKind::RegReadEnd,
                                 {static_cast<std::int64_t>(r.key.owner),
                                  static_cast<std::int64_t>(r.key.index),
                                  static_cast<std::int64_t>(r.trace_op), ts_field},
                                 0});
  if (r.done) r.done(res);
}

std::size_t RegisterClient::disaggregated_bytes() const {
  std::size_t total = 0;
  for (auto const &[_, reg] : owned_) total += 2 * (16 + reg.payload_bytes) * cfg_.nodes.size();
  return total;
}

std::size_t RegisterClient::local_bytes() const {
  std::size_t total = 0;
  for (auto const &[_, reg] : owned_) {
    total += 48;
    for (auto const &w : reg.queue) total += 16 + w.payload.size();
  }
  for (auto const &[_, c] : monotone_cache_) total += 12 + c.bytes();
  for (auto const &[_, r] : reads_) {
    total += 32;
    for (auto const &resp : r.responses) total += resp[0].bytes() + resp[1].bytes();
  }
  return total;
}

}  // namespace ubft::dmem
