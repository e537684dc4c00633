#include "ubft/ctb/endpoint.hpp"

#include "ubft/common/channel.hpp"

namespace ubft::ctb {

namespace {

Bytes encode_cell(std::uint64_t k, crypto::Digest const &d, crypto::Signature const &sig) {
  Encoder e(8 + 32 + crypto::Signature::kEncodedSize);
  e.u64(k).raw(d.bytes);
  sig.encode(e);
  return e.take();
}

std::int64_t i64(std::uint64_t v) { return static_cast<std::int64_t>(v); }

}  // namespace

Endpoint::Endpoint(sim::Simulator &sim, sim::Network &net, crypto::CryptoService &cs,
                   tail::TbHub &tb, dmem::RegisterClient &regs, Pid self, std::vector<Pid> members,
                   Config cfg)
    : sim_{sim},
      net_{net},
      cs_{cs},
      tb_{tb},
      regs_{regs},
      self_{self},
      members_{members},
      cfg_{cfg},
      core_{self, std::move(members), cfg.t,
            [&cs, self](ByteView m) { return cs.digest(self, m); }} {}

Endpoint::Sent *Endpoint::find_sent(std::uint64_t k) {
  for (auto &s : recent_) {
    if (s.k == k) return &s;
  }
  return nullptr;
}

std::uint64_t Endpoint::broadcast(Bytes m) {
  return broadcast_split([&m](Pid) { return m; });
}

std::uint64_t Endpoint::broadcast_split(std::function<Bytes(Pid)> const &per_receiver) {
  auto k = next_k_++;
  stats_.broadcasts++;
  Sent sent;
  sent.k = k;
  for (auto p : members_) sent.m[p] = per_receiver(p);
  auto const &first = sent.m.at(members_.front());
  sim_.tracer().emit(sim::Record{sim_.now(), self_, sim::RecordKind::CtbBroadcast, {i64(k)},
                                 cs_.digest(self_, first).prefix64()});
  tb_.broadcast_to(kDataStream, [&](Pid p) -> std::optional<Bytes> {
    return Wire{WireType::Lock, self_, k, sent.m.at(p), std::nullopt}.encode();
  });
  if (recent_.size() >= cfg_.t) recent_.pop_front();
  recent_.push_back(std::move(sent));
  if (cfg_.slow_in_parallel) {
    send_signed(k);
  } else {
    sim_.timer(self_, cfg_.slow_timeout, [this, k]() {
      if (!core_.delivered(self_, k)) send_signed(k);
    });
  }
  return k;
}

void Endpoint::replay_oldest() {
  if (recent_.empty()) return;
  auto const &s = recent_.front();
  tb_.broadcast_to(kDataStream, [&](Pid p) -> std::optional<Bytes> {
    return Wire{WireType::Lock, self_, s.k, s.m.at(p), std::nullopt}.encode();
  });
}

void Endpoint::send_signed(std::uint64_t k) {
  auto *s = find_sent(k);
  if (!s || s->signed_sent) return;
  s->signed_sent = true;
  stats_.signed_sent++;
  sim_.tracer().emit(sim::Record{sim_.now(), self_, sim::RecordKind::CtbSigned, {i64(k)}, 0});
  std::map<Bytes, crypto::Signature> sigs;  // one signature per distinct message
  tb_.broadcast_to(kDataStream, [&](Pid p) -> std::optional<Bytes> {
    auto const &m = s->m.at(p);
    auto it = sigs.find(m);
    if (it == sigs.end()) {
      auto payload = signed_payload(self_, k, cs_.digest(self_, m));
      auto sig = byz.bad_signature ? cs_.forge(self_, payload)
                                   : cs_.sign(self_, payload, crypto::CryptoPath::Critical);
      it = sigs.emplace(m, sig).first;
    }
    return Wire{WireType::Signed, self_, k, m, it->second}.encode();
  });
}

void Endpoint::on_tb(Pid from, std::uint8_t stream, Bytes const &payload) {
  Wire w;
  try {
    w = Wire::decode(payload);
  } catch (DecodeError const &) {
    return;
  }
  if (stream == kDataStream) {
    if (w.broadcaster != from) return;
    if (w.type == WireType::Lock) {
      apply(core_.on_lock(from, w.k, w.m));
      if (from != self_ && !core_.delivered(from, w.k)) {
        auto k = w.k;
        sim_.timer(self_, cfg_.slow_timeout, [this, from, k]() {
          if (core_.delivered(from, k) || core_.lock_in_slot(from, k % cfg_.t) != k) return;
          stats_.slow_requests++;
          Encoder e(8);
          e.u64(k);
          net_.send(self_, from,
                    ChannelKey{ChannelKind::P2P, kSlowRequestStream, 0, self_, from}.pack(),
                    e.take());
        });
      }
    } else if (w.type == WireType::Signed) {
      auto d = cs_.digest(self_, w.m);
      bool ok = w.sig && w.sig->signer == from &&
                cs_.verify(self_, *w.sig, signed_payload(from, w.k, d), from,
                           crypto::CryptoPath::Critical);
      if (!ok) stats_.invalid_signed++;
      apply(core_.on_signed(from, w.k, w.m, w.sig.value_or(crypto::Signature{}), ok));
    }
    return;
  }
  if (stream >= kLockedStreamBase && w.type == WireType::Locked &&
      w.broadcaster == static_cast<Pid>(stream - kLockedStreamBase)) {
    apply(core_.on_locked(from, w.broadcaster, w.k, w.m));
  }
}

void Endpoint::on_p2p(Pid from, Bytes const &payload) {
  Decoder d(payload);
  auto k = d.u64();
  (void)from;
  send_signed(k);
}

void Endpoint::apply(Effects &&fx) {
  for (auto const &w : fx.locked) {
    tb_.broadcast(static_cast<std::uint8_t>(kLockedStreamBase + w.broadcaster), w.encode());
  }
  for (auto const &a : fx.aborts) {
    if (a.reason == AbortReason::Equivocation) {
      stats_.abort_equivocation++;
    } else {
      stats_.abort_out_of_tail++;
    }
    sim_.tracer().emit(sim::Record{sim_.now(), self_, sim::RecordKind::CtbAbort,
                                   {a.broadcaster, i64(a.k), static_cast<std::int64_t>(a.reason)},
                                   0});
  }
  for (auto const &dl : fx.deliveries) {
    if (dl.path == Path::Fast) {
      stats_.fast++;
    } else {
      stats_.slow++;
    }
    sim_.tracer().emit(sim::Record{sim_.now(), self_, sim::RecordKind::CtbDeliver,
                                   {dl.broadcaster, i64(dl.k), static_cast<std::int64_t>(dl.path)},
                                   cs_.digest(self_, dl.m).prefix64()});
    if (deliver_) deliver_(dl);
  }
  if (fx.slow) run_slow(std::move(*fx.slow));
}

void Endpoint::run_slow(SlowJob job) {
  stats_.slow_jobs++;
  auto payload = signed_payload(job.broadcaster, job.k, job.digest);
  auto sig = byz.bad_signature ? cs_.forge(job.broadcaster, payload) : job.sig;
  auto index = register_index(job.broadcaster, job.k % cfg_.t);
  regs_.write(index, job.k, encode_cell(job.k, job.digest, sig),
              [this, job = std::move(job)]() mutable { start_reads(std::move(job)); });
}

void Endpoint::start_reads(SlowJob job) {
  auto id = next_read_++;
  auto index = register_index(job.broadcaster, job.k % cfg_.t);
  auto &r = reads_[id];
  r.job = std::move(job);
  r.pending = members_.size();
  for (auto q : members_) {
    regs_.read(q, index, [this, id, q](dmem::ReadResult const &res) {
      auto it = reads_.find(id);
      if (it == reads_.end()) return;
      auto &rd = it->second;
      if (res.kind == dmem::ReadResult::Kind::Value && res.ts != 0) {
        try {
          Decoder d(res.payload);
          CellView c;
          c.owner = q;
          c.k = d.u64();
          d.raw_into(c.digest.bytes);
          auto sig = crypto::Signature::decode(d);
          auto b = rd.job.broadcaster;
          c.sig_valid = sig.signer == b &&
                        cs_.verify(self_, sig, signed_payload(b, c.k, c.digest), b,
                                   crypto::CryptoPath::Critical);
          rd.cells.push_back(c);
        } catch (DecodeError const &) {
          // unparsable cell: treated as absent
        }
      }
      if (--rd.pending > 0) return;
      auto node = reads_.extract(it);
      auto &done = node.mapped();
      apply(core_.finish_slow(done.job.broadcaster, done.job.k, done.job.m, done.job.digest,
                              done.cells));
    });
  }
}

std::size_t Endpoint::bytes() const {
  std::size_t total = core_.bytes();
  for (auto const &s : recent_) {
    total += 16;
    // identical copies are stored once
    Bytes const *prev = nullptr;
    for (auto const &[_, m] : s.m) {
      if (!prev || *prev != m) total += m.size();
      prev = &m;
    }
  }
  for (auto const &[_, r] : reads_) total += 64 + r.job.m.size() + r.cells.size() * 56;
  return total;
}

}  // namespace ubft::ctb
