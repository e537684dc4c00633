#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "ubft/common/bytes.hpp"
#include "ubft/common/types.hpp"

namespace ubft::app {

inline constexpr std::uint32_t kNoopClient = 0xFFFFFFFFu;

struct Request {
  std::uint32_t client = 0;
  std::uint64_t seq = 0;
  Bytes op;

  bool is_noop() const { return client == kNoopClient; }
  static Request noop() { return Request{kNoopClient, 0, {}}; }
  bool operator==(Request const &) const = default;

  void encode(Encoder &e) const;
  static Request decode(Decoder &d);
  Bytes encode() const;
  // Trace digest of a request; no-ops all share one value.
  std::uint64_t fingerprint() const;
};

struct Reply {
  std::uint32_t client = 0;
  std::uint64_t seq = 0;
  Bytes result;

  Bytes encode() const;
  static Reply decode(ByteView data);
};

// Deterministic state machine replicated by the consensus layer.
class App {
 public:
  virtual ~App() = default;
  virtual std::string name() const = 0;
  virtual Bytes apply(Bytes const &op) = 0;
  virtual Bytes snapshot() const = 0;
  virtual void restore(ByteView snap) = 0;
  virtual std::unique_ptr<App> clone_empty() const = 0;
};

// Reverses its input.
class Flip : public App {
 public:
  std::string name() const override { return "flip"; }
  Bytes apply(Bytes const &op) override;
  Bytes snapshot() const override;
  void restore(ByteView snap) override;
  std::unique_ptr<App> clone_empty() const override { return std::make_unique<Flip>(); }

 private:
  std::uint64_t applied_ = 0;
};

// Tiny key-value store: put(k, v) -> "ok"; get(k) -> found flag + value.
class ToyKV : public App {
 public:
  enum class Op : std::uint8_t { Put = 1, Get = 2 };

  static Bytes put(std::string const &key, std::string const &value);
  static Bytes get(std::string const &key);
  struct Decoded {
    Op op;
    std::string key;
    std::string value;
  };
  static Decoded decode_op(ByteView op);
  // get result: (found, value)
  static std::pair<bool, std::string> decode_get_result(ByteView r);

  std::string name() const override { return "kv"; }
  Bytes apply(Bytes const &op) override;
  Bytes snapshot() const override;
  void restore(ByteView snap) override;
  std::unique_ptr<App> clone_empty() const override { return std::make_unique<ToyKV>(); }

  std::map<std::string, std::string> const &data() const { return data_; }

 private:
  std::map<std::string, std::string> data_;
};

std::unique_ptr<App> make_app(std::string const &name);  // throws std::invalid_argument

// App plus the bookkeeping every replica keeps: applied count and the last
// reply per client, so a re-proposed request is answered but not re-executed.
class ReplicatedApp {
 public:
  explicit ReplicatedApp(std::unique_ptr<App> app) : app_{std::move(app)} {}

  // Returns the reply for a client request, or nothing for a no-op.
  std::optional<Reply> apply(Request const &req);
  Bytes snapshot() const;
  void restore(ByteView snap);

  std::uint64_t applied() const { return applied_; }
  // Highest applied seq of `client` (0 if none) and its cached reply.
  std::uint64_t last_seq(std::uint32_t client) const;
  std::optional<Reply> cached(std::uint32_t client, std::uint64_t seq) const;
  App const &app() const { return *app_; }
  std::size_t bytes() const;

 private:
  std::unique_ptr<App> app_;
  std::uint64_t applied_ = 0;
  std::map<std::uint32_t, std::pair<std::uint64_t, Bytes>> last_;
};

}  // namespace ubft::app
