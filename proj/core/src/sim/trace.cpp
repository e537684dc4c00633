#include "ubft/sim/trace.hpp"

#include <algorithm>
#include <charconv>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>
#include <sodium.h>

#include "ubft/common/bytes.hpp"

namespace ubft::sim {

namespace {

struct KindInfo {
  std::string_view name;
  std::array<std::string_view, 4> fields;
};

// Index order must follow RecordKind.
constexpr std::array<KindInfo, static_cast<std::size_t>(RecordKind::kCount)> kKinds{{
    {"sim.deliver", {"src", "channel", "size", ""}},
    {"sim.timer", {"token", "", "", ""}},
    {"sim.crash", {"", "", "", ""}},
    {"sim.partition", {"on", "", "", ""}},
    {"run.config", {"n", "f", "t", "window"}},
    {"run.fault", {"behavior", "role", "index", ""}},
    {"run.quiesce", {"", "", "", ""}},
    {"ctb.broadcast", {"k", "", "", ""}},
    {"ctb.deliver", {"b", "k", "path", ""}},
    {"ctb.abort", {"b", "k", "reason", ""}},
    {"ctb.signed", {"k", "", "", ""}},
    {"reg.write_begin", {"index", "ts", "", ""}},
    {"reg.write_end", {"index", "ts", "", ""}},
    {"reg.read_begin", {"owner", "index", "op", ""}},
    {"reg.read_end", {"owner", "index", "op", "ts"}},
    {"smr.propose", {"view", "slot", "echoes", ""}},
    {"smr.accept_prepare", {"view", "slot", "leader", ""}},
    {"smr.will_certify", {"view", "slot", "", ""}},
    {"smr.will_commit", {"view", "slot", "", ""}},
    {"smr.certify", {"view", "slot", "", ""}},
    {"smr.commit", {"view", "slot", "", ""}},
    {"smr.decide", {"view", "slot", "path", ""}},
    {"smr.apply", {"slot", "", "", ""}},
    {"smr.checkpoint", {"start", "", "", ""}},
    {"smr.seal_view", {"view", "", "", ""}},
    {"smr.new_view", {"view", "", "", ""}},
    {"smr.view_entered", {"view", "", "", ""}},
    {"smr.summary_stall", {"id", "", "", ""}},
    {"smr.summary_install", {"b", "id", "", ""}},
    {"smr.quarantine", {"peer", "", "", ""}},
    {"client.submit", {"seq", "", "", ""}},
    {"client.done", {"seq", "latency", "", ""}},
}};

template <typename T>
T parse_int(std::string_view s) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument(fmt::format("bad integer '{}'", s));
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

std::string_view kind_name(RecordKind kind) {
  return kKinds.at(static_cast<std::size_t>(kind)).name;
}

std::optional<RecordKind> kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kKinds.size(); i++) {
    if (kKinds[i].name == name) return static_cast<RecordKind>(i);
  }
  return std::nullopt;
}

std::string format_record(Record const &r) {
  auto const &info = kKinds.at(static_cast<std::size_t>(r.kind));
  std::string out = fmt::format("{}\t{}\t{}", r.time, r.process, info.name);
  for (std::size_t i = 0; i < 4; i++) {
    if (info.fields[i].empty()) continue;
    fmt::format_to(std::back_inserter(out), " {}={}", info.fields[i], r.f[i]);
  }
  out.push_back('\t');
  out += to_hex64(r.digest);
  return out;
}

Record parse_record(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  auto cols = split(line, '\t');
  if (cols.size() != 4) throw std::invalid_argument("expected 4 tab-separated columns");
  Record r;
  r.time = parse_int<Time>(cols[0]);
  r.process = parse_int<std::uint32_t>(cols[1]);
  auto words = split(cols[2], ' ');
  auto kind = kind_from_name(words[0]);
  if (!kind) throw std::invalid_argument(fmt::format("unknown record kind '{}'", words[0]));
  r.kind = *kind;
  auto const &info = kKinds[static_cast<std::size_t>(r.kind)];
  for (std::size_t w = 1; w < words.size(); w++) {
    auto eq = words[w].find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("field without '='");
    auto name = words[w].substr(0, eq);
    auto it = std::find(info.fields.begin(), info.fields.end(), name);
    if (name.empty() || it == info.fields.end()) {
      throw std::invalid_argument(fmt::format("unknown field '{}' for {}", name, info.name));
    }
    r.f[static_cast<std::size_t>(it - info.fields.begin())] =
        parse_int<std::int64_t>(words[w].substr(eq + 1));
  }
  if (cols[3].size() != 16) throw std::invalid_argument("digest must be 16 hex digits");
  std::uint64_t d = 0;
  auto [ptr, ec] = std::from_chars(cols[3].data(), cols[3].data() + 16, d, 16);
  if (ec != std::errc{} || ptr != cols[3].data() + 16) throw std::invalid_argument("bad digest");
  r.digest = d;
  return r;
}

void Tracer::detach(Observer *o) {
  observers_.erase(std::remove(observers_.begin(), observers_.end(), o), observers_.end());
}

struct TextTraceWriter::HashState {
  crypto_generichash_state st;
};

TextTraceWriter::TextTraceWriter(std::ostream *out, bool keep_text)
    : out_{out}, keep_text_{keep_text}, hash_{new HashState} {
  if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
  crypto_generichash_init(&hash_->st, nullptr, 0, 32);
}

TextTraceWriter::~TextTraceWriter() { delete hash_; }

void TextTraceWriter::on_record(Record const &r) {
  if (finalized_) throw std::logic_error("trace writer already finalized");
  auto line = format_record(r);
  line.push_back('\n');
  crypto_generichash_update(&hash_->st, reinterpret_cast<unsigned char const *>(line.data()),
                            line.size());
  lines_++;
  bytes_ += line.size();
  if (out_ != nullptr) *out_ << line;
  if (keep_text_) text_ += line;
}

std::string TextTraceWriter::digest_hex() {
  if (!finalized_) {
    std::array<std::uint8_t, 32> out{};
    crypto_generichash_final(&hash_->st, out.data(), out.size());
    final_hex_ = to_hex(out);
    finalized_ = true;
  }
  return final_hex_;
}

}  // namespace ubft::sim
