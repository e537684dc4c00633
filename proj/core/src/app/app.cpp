#include "ubft/app/app.hpp"

#include <algorithm>
#include <stdexcept>

#include "ubft/common/hash.hpp"

namespace ubft::app {

void Request::encode(Encoder &e) const { e.u32(client).u64(seq).bytes(op); }

Request Request::decode(Decoder &d) {
  Request r;
  r.client = d.u32();
  r.seq = d.u64();
  r.op = d.bytes();
  return r;
}

Bytes Request::encode() const {
  Encoder e(op.size() + 16);
  encode(e);
  return e.take();
}

std::uint64_t Request::fingerprint() const { return fingerprint64(encode()); }

Bytes Reply::encode() const {
  Encoder e(result.size() + 16);
  e.u32(client).u64(seq).bytes(result);
  return e.take();
}

Reply Reply::decode(ByteView data) {
  Decoder d(data);
  Reply r;
  r.client = d.u32();
  r.seq = d.u64();
  r.result = d.bytes();
  d.expect_end();
  return r;
}

Bytes Flip::apply(Bytes const &op) {
  applied_++;
  return Bytes(op.rbegin(), op.rend());
}

Bytes Flip::snapshot() const {
  Encoder e(8);
  e.u64(applied_);
  return e.take();
}

void Flip::restore(ByteView snap) {
  Decoder d(snap);
  applied_ = d.u64();
  d.expect_end();
}

Bytes ToyKV::put(std::string const &key, std::string const &value) {
  Encoder e;
  e.u8(static_cast<std::uint8_t>(Op::Put)).bytes(to_bytes(key)).bytes(to_bytes(value));
  return e.take();
}

Bytes ToyKV::get(std::string const &key) {
  Encoder e;
  e.u8(static_cast<std::uint8_t>(Op::Get)).bytes(to_bytes(key));
  return e.take();
}

ToyKV::Decoded ToyKV::decode_op(ByteView op) {
  Decoder d(op);
  Decoded out;
  auto kind = d.u8();
  if (kind != 1 && kind != 2) throw DecodeError("unknown kv op");
  out.op = static_cast<Op>(kind);
  out.key = to_string(d.bytes());
  if (out.op == Op::Put) out.value = to_string(d.bytes());
  d.expect_end();
  return out;
}

std::pair<bool, std::string> ToyKV::decode_get_result(ByteView r) {
  Decoder d(r);
  auto found = d.boolean();
  auto v = to_string(d.bytes());
  return {found, v};
}

Bytes ToyKV::apply(Bytes const &op) {
  Decoded o;
  try {
    o = decode_op(op);
  } catch (DecodeError const &) {
    return to_bytes("bad-op");
  }
  if (o.op == Op::Put) {
    data_[o.key] = o.value;
    return to_bytes("ok");
  }
  Encoder e;
  auto it = data_.find(o.key);
  e.boolean(it != data_.end()).bytes(to_bytes(it != data_.end() ? it->second : std::string{}));
  return e.take();
}

Bytes ToyKV::snapshot() const {
  Encoder e;
  e.u32(static_cast<std::uint32_t>(data_.size()));
  for (auto const &[k, v] : data_) e.bytes(to_bytes(k)).bytes(to_bytes(v));
  return e.take();
}

void ToyKV::restore(ByteView snap) {
  Decoder d(snap);
  data_.clear();
  auto n = d.u32();
  for (std::uint32_t i = 0; i < n; i++) {
    auto k = to_string(d.bytes());
    data_[k] = to_string(d.bytes());
  }
  d.expect_end();
}

std::unique_ptr<App> make_app(std::string const &name) {
  if (name == "flip") return std::make_unique<Flip>();
  if (name == "kv") return std::make_unique<ToyKV>();
  throw std::invalid_argument("unknown app: " + name);
}

std::optional<Reply> ReplicatedApp::apply(Request const &req) {
  applied_++;
  if (req.is_noop()) return std::nullopt;
  auto it = last_.find(req.client);
  if (it != last_.end() && it->second.first >= req.seq) {
    if (it->second.first == req.seq) return Reply{req.client, req.seq, it->second.second};
    return std::nullopt;
  }
  auto result = app_->apply(req.op);
  last_[req.client] = {req.seq, result};
  return Reply{req.client, req.seq, std::move(result)};
}

std::uint64_t ReplicatedApp::last_seq(std::uint32_t client) const {
  auto it = last_.find(client);
  return it == last_.end() ? 0 : it->second.first;
}

std::optional<Reply> ReplicatedApp::cached(std::uint32_t client, std::uint64_t seq) const {
  auto it = last_.find(client);
  if (it == last_.end() || it->second.first != seq) return std::nullopt;
  return Reply{client, seq, it->second.second};
}

Bytes ReplicatedApp::snapshot() const {
  Encoder e;
  e.u64(applied_).u32(static_cast<std::uint32_t>(last_.size()));
  for (auto const &[c, entry] : last_) e.u32(c).u64(entry.first).bytes(entry.second);
  e.bytes(app_->snapshot());
  return e.take();
}

void ReplicatedApp::restore(ByteView snap) {
  Decoder d(snap);
  applied_ = d.u64();
  last_.clear();
  auto n = d.u32();
  for (std::uint32_t i = 0; i < n; i++) {
    auto c = d.u32();
    auto seq = d.u64();
    last_[c] = {seq, d.bytes()};
  }
  app_->restore(d.bytes());
  d.expect_end();
}

std::size_t ReplicatedApp::bytes() const {
  std::size_t total = 16 + app_->snapshot().size();
  for (auto const &[_, entry] : last_) total += 12 + entry.second.size();
  return total;
}

}  // namespace ubft::app
