#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ubft {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

inline std::string to_string(ByteView b) {
  return std::string(reinterpret_cast<char const *>(b.data()), b.size());
}

std::string to_hex(ByteView b);
std::string to_hex64(std::uint64_t v);

// Little-endian, length-prefixed wire encoding shared by every protocol layer.
class Encoder {
 public:
  Encoder() = default;
  explicit Encoder(std::size_t reserve) { buf_.reserve(reserve); }

  Encoder &u8(std::uint8_t v) {
    buf_.push_back(v);
    return *this;
  }
  Encoder &u32(std::uint32_t v) { return fixed(v); }
  Encoder &u64(std::uint64_t v) { return fixed(v); }
  Encoder &i64(std::int64_t v) { return fixed(static_cast<std::uint64_t>(v)); }
  Encoder &boolean(bool v) { return u8(v ? 1 : 0); }

  Encoder &bytes(ByteView v) {
    u32(static_cast<std::uint32_t>(v.size()));
    return raw(v);
  }

  Encoder &raw(ByteView v) {
    buf_.insert(buf_.end(), v.begin(), v.end());
    return *this;
  }

  std::size_t size() const { return buf_.size(); }
  Bytes const &view() const { return buf_; }
  Bytes take() { return std::move(buf_); }

 private:
  template <typename T>
  Encoder &fixed(T v) {
    for (std::size_t i = 0; i < sizeof(T); i++) {
      buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    return *this;
  }

  Bytes buf_;
};

class Decoder {
 public:
  explicit Decoder(ByteView in) : in_{in} {}

  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() { return fixed<std::uint32_t>(); }
  std::uint64_t u64() { return fixed<std::uint64_t>(); }
  std::int64_t i64() { return static_cast<std::int64_t>(fixed<std::uint64_t>()); }
  bool boolean() {
    auto v = u8();
    if (v > 1) throw DecodeError("bad boolean");
    return v == 1;
  }

  Bytes bytes() {
    auto len = u32();
    return raw(len);
  }

  Bytes raw(std::size_t len) {
    need(len);
    Bytes out(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
              in_.begin() + static_cast<std::ptrdiff_t>(pos_ + len));
    pos_ += len;
    return out;
  }

  template <std::size_t N>
  void raw_into(std::uint8_t (&out)[N]) {
    need(N);
    std::memcpy(out, in_.data() + pos_, N);
    pos_ += N;
  }

  void raw_into(std::span<std::uint8_t> out) {
    need(out.size());
    std::memcpy(out.data(), in_.data() + pos_, out.size());
    pos_ += out.size();
  }

  bool done() const { return pos_ == in_.size(); }
  std::size_t remaining() const { return in_.size() - pos_; }

  void expect_end() const {
    if (!done()) throw DecodeError("trailing bytes");
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw DecodeError("truncated message");
  }

  template <typename T>
  T fixed() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); i++) {
      v |= static_cast<T>(in_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(T);
    return v;
  }

  ByteView in_;
  std::size_t pos_ = 0;
};

}  // namespace ubft
