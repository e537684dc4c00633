#include "ubft/dmem/memory_node.hpp"

#include <algorithm>

#include "ubft/common/channel.hpp"

namespace ubft::dmem {

MemoryNode::MemoryNode(sim::Simulator &sim, sim::Network &net, crypto::CryptoService &cs,
                       Pid self, DmemConfig const &cfg)
    : sim_{sim}, net_{net}, cs_{cs}, self_{self}, cfg_{cfg} {}

MemoryNode::Register &MemoryNode::reg(RegKey const &k) {
  auto it = store_.find(k);
  if (it == store_.end()) {
    Register r;
    r[0].cell = initial_cell(cs_, self_);
    r[1].cell = r[0].cell;
    it = store_.emplace(k, std::move(r)).first;
  }
  return it->second;
}

void MemoryNode::on_message(Pid from, std::uint64_t, Bytes const &payload) {
  Decoder d(payload);
  auto op = static_cast<MemOp>(d.u8());
  auto op_id = d.u64();
  RegKey key;
  key.owner = d.u32();
  key.index = d.u64();
  if (op == MemOp::WriteReq) {
    auto s = d.u8();
    auto cell = Cell::decode(d);
    if (from != key.owner || s > 1) {
      rejected_++;
      return;
    }
    auto &sub = reg(key)[s];
    Pending p{from, op_id, std::move(cell)};
    if (sub.writing) {
      sub.queue.push_back(std::move(p));
    } else {
      begin_write(key, s, std::move(p));
    }
  } else if (op == MemOp::ReadReq) {
    auto &r = reg(key);
    Encoder e;
    e.u8(static_cast<std::uint8_t>(MemOp::ReadResp)).u64(op_id).u32(key.owner).u64(key.index);
    for (auto &sub : r) {
      if (sub.writing) {
        torn_++;
        torn_read_model(cs_, self_, sub.cell, sub.incoming, cfg_.adversarial_tearing, sim_.rng())
            .encode(e);
      } else {
        sub.cell.encode(e);
      }
    }
    ChannelKey ch{ChannelKind::Mem, 0, 0, self_, from};
    net_.send(self_, from, ch.pack(), e.take(), sim::LinkClass::Memory);
  }
}

void MemoryNode::begin_write(RegKey const &k, std::size_t s, Pending p) {
  auto &sub = reg(k)[s];
  sub.writing = true;
  sub.incoming = std::move(p.cell);
  sub.writer = p.writer;
  sub.op = p.op;
  sim_.at(sim_.now() + std::max<Time>(1, cfg_.write_span), self_,
          [this, k, s]() { finish_write(k, s); });
}

void MemoryNode::finish_write(RegKey const &k, std::size_t s) {
  auto &sub = reg(k)[s];
  sub.cell = std::move(sub.incoming);
  sub.incoming = Cell{};
  sub.writing = false;
  Encoder e;
  e.u8(static_cast<std::uint8_t>(MemOp::WriteAck)).u64(sub.op).u32(k.owner).u64(k.index);
  e.u8(static_cast<std::uint8_t>(s));
  ChannelKey ch{ChannelKind::Mem, 0, 0, self_, sub.writer};
  net_.send(self_, sub.writer, ch.pack(), e.take(), sim::LinkClass::Memory);
  if (!sub.queue.empty()) {
    auto next = std::move(sub.queue.front());
    sub.queue.pop_front();
    begin_write(k, s, std::move(next));
  }
}

std::size_t MemoryNode::stored_bytes() const {
  std::size_t total = 0;
  for (auto const &[_, r] : store_) total += r[0].cell.bytes() + r[1].cell.bytes();
  return total;
}

}  // namespace ubft::dmem
