#include "qkdnet/reconcile.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <tuple>

#include "qkdnet/errors.hpp"
#include "qkdnet/security.hpp"
#include "qkdnet/toeplitz.hpp"

namespace qkdnet {

namespace {

constexpr double kKnownLlr = 50.0;

enum class DisclosureKind : std::uint8_t { kRequest = 0, kResponse = 1, kConverged = 2, kFailed = 3 };

std::vector<std::uint32_t> owner_checks(const LdpcCode& code) {
  std::vector<std::uint32_t> owner(code.edges());
  for (std::uint32_t c = 0; c < code.m; ++c) {
    for (std::uint32_t e = code.check_offsets[c]; e < code.check_offsets[c + 1]; ++e) owner[e] = c;
  }
  return owner;
}

// Low-degree variables whose checks are not shared with another modulation
// variable come last in the order, so they stay punctured the longest.
FrameCode make_frame_code(LdpcCode code, std::size_t modulation_bits, std::uint64_t seed) {
  const std::size_t n = code.n;
  Rng rng(derive_seed(seed, {0x4D4FD}));
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0U);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return code.var_degree(a) < code.var_degree(b);
  });

  const std::vector<std::uint32_t> owner = owner_checks(code);
  std::vector<char> tainted(code.m, 0);
  std::vector<char> chosen(n, 0);
  std::vector<std::uint32_t> picked;
  picked.reserve(modulation_bits);
  for (std::uint32_t v : order) {
    if (picked.size() == modulation_bits) break;
    bool clean = true;
    for (std::uint32_t i = code.var_offsets[v]; i < code.var_offsets[v + 1]; ++i) {
      if (tainted[owner[code.var_edges[i]]]) clean = false;
    }
    if (!clean) continue;
    picked.push_back(v);
    chosen[v] = 1;
    for (std::uint32_t i = code.var_offsets[v]; i < code.var_offsets[v + 1]; ++i) {
      tainted[owner[code.var_edges[i]]] = 1;
    }
  }
  for (std::uint32_t v : order) {
    if (picked.size() == modulation_bits) break;
    if (!chosen[v]) {
      picked.push_back(v);
      chosen[v] = 1;
    }
  }

  FrameCode fc;
  fc.modulation.assign(picked.rbegin(), picked.rend());
  fc.key_positions.reserve(n - modulation_bits);
  for (std::uint32_t v = 0; v < n; ++v) {
    if (!chosen[v]) fc.key_positions.push_back(v);
  }
  const std::vector<std::uint32_t> reversed(fc.modulation.rbegin(), fc.modulation.rend());
  const std::vector<std::size_t> prefix = prefix_ranks(code, reversed);
  fc.suffix_rank.assign(prefix.rbegin(), prefix.rend());
  fc.code = std::move(code);
  return fc;
}

std::size_t rank_of_unknown(const FrameCode& fc, const std::vector<char>& known) {
  std::vector<std::uint32_t> punctured;
  for (std::uint32_t v : fc.modulation) {
    if (!known[v]) punctured.push_back(v);
  }
  return column_rank(fc.code, punctured);
}

}  // namespace

std::size_t ReconcileSettings::disclosure_increment(const LdpcCode& code) const noexcept {
  const auto inc = static_cast<std::size_t>(std::llround(increment_fraction * static_cast<double>(code.m)));
  return std::max<std::size_t>(inc, 1);
}

CodePool::CodePool(const ReconcileSettings& settings) {
  if (settings.frame_bits == 0 || settings.rate_pool.empty()) {
    throw DomainError("CodePool: empty frame or rate pool");
  }
  if (settings.modulation_bits >= settings.code_length()) {
    throw DomainError("CodePool: modulation_bits must be below the code length");
  }
  std::vector<double> rates = settings.rate_pool;
  std::sort(rates.begin(), rates.end());
  for (double rate : rates) {
    const std::uint64_t seed =
        derive_seed(settings.code_seed, {static_cast<std::uint64_t>(std::llround(rate * 1e4))});
    codes_.push_back(make_frame_code(build_code(settings.code_length(), rate, seed),
                                     settings.modulation_bits, seed));
  }
}

std::shared_ptr<const CodePool> CodePool::get(const ReconcileSettings& settings) {
  using Key = std::tuple<std::size_t, std::size_t, std::vector<double>, std::uint64_t>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const CodePool>> cache;
  Key key{settings.frame_bits, settings.modulation_bits, settings.rate_pool, settings.code_seed};
  std::lock_guard lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto pool = std::make_shared<const CodePool>(settings);
  cache.emplace(std::move(key), pool);
  return pool;
}

std::size_t CodePool::index_of(double rate) const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < codes_.size(); ++i) {
    if (std::abs(codes_[i].code.rate - rate) < std::abs(codes_[best].code.rate - rate)) best = i;
  }
  return best;
}

double inverse_binary_entropy(double h) {
  if (!(h >= 0.0 && h <= 1.0)) throw DomainError("inverse_binary_entropy: h outside [0, 1]");
  double lo = 0.0;
  double hi = 0.5;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (binary_entropy(mid) < h) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

BlindReconciler::BlindReconciler(ReconcileSettings settings, std::uint64_t fill_seed)
    : settings_(std::move(settings)), pool_(CodePool::get(settings_)), fill_rng_(fill_seed) {
  if (settings_.round_cap == 0) throw DomainError("BlindReconciler: round_cap must be positive");
  if (!(settings_.syndrome_headroom >= 1.0)) {
    throw DomainError("BlindReconciler: syndrome_headroom must be >= 1");
  }
}

std::optional<double> BlindReconciler::rate_hint() const {
  if (recent_qber_.empty()) return std::nullopt;
  return std::accumulate(recent_qber_.begin(), recent_qber_.end(), 0.0) /
         static_cast<double>(recent_qber_.size());
}

BlindReconciler::Plan BlindReconciler::plan_frame() const {
  const auto k = static_cast<double>(settings_.frame_bits);
  Plan plan;
  const std::optional<double> hint = rate_hint();
  if (!hint) {
    plan.code_index = pool_->index_of(settings_.initial_rate);
    const FrameCode& fc = pool_->at(plan.code_index);
    const auto leak0 = static_cast<double>(fc.code.m - fc.suffix_rank[0]);
    plan.decoder_qber = std::clamp(inverse_binary_entropy(std::min(1.0, leak0 / k)),
                                   settings_.min_hint_qber, 0.45);
    return plan;
  }

  const double q = std::clamp(*hint, settings_.min_hint_qber, 0.45);
  plan.decoder_qber = q;
  const double target = settings_.start_efficiency * binary_entropy(q) * k;
  // Highest-rate code whose syndrome covers the target with headroom; the
  // excess is shortened away below.
  plan.code_index = 0;
  for (std::size_t i = pool_->size(); i-- > 0;) {
    if (static_cast<double>(pool_->at(i).code.m) >= settings_.syndrome_headroom * target) {
      plan.code_index = i;
      break;
    }
  }
  const FrameCode& fc = pool_->at(plan.code_index);
  std::size_t s = 0;
  while (s < fc.modulation.size() &&
         static_cast<double>(fc.code.m - fc.suffix_rank[s]) < target) {
    ++s;
  }
  plan.preshortened = s;
  return plan;
}

ReconciliationResult BlindReconciler::reconcile_frame(const BitString& alice, const BitString& bob,
                                                      ClassicalChannel& channel) {
  if (alice.size() != settings_.frame_bits || bob.size() != settings_.frame_bits) {
    throw LengthMismatchError("reconcile_frame: frames must hold " +
                              std::to_string(settings_.frame_bits) + " bits");
  }
  const Plan plan = plan_frame();
  const FrameCode& fc = pool_->at(plan.code_index);
  const LdpcCode& code = fc.code;
  const std::size_t n = code.n;
  const std::uint32_t frame_id = frame_counter_++;

  // Alice: embed the key, fill modulation positions, send the syndrome.
  BitString word_a(n);
  for (std::size_t i = 0; i < fc.key_positions.size(); ++i) {
    word_a.set(fc.key_positions[i], alice.test(i));
  }
  for (std::uint32_t v : fc.modulation) word_a.set(v, fill_rng_.below(2) != 0);
  {
    BitString shortened(plan.preshortened);
    for (std::size_t i = 0; i < plan.preshortened; ++i) shortened.set(i, word_a.test(fc.modulation[i]));
    ByteWriter w;
    w.u32(frame_id)
        .u8(static_cast<std::uint8_t>(plan.code_index))
        .u16(static_cast<std::uint16_t>(plan.preshortened))
        .bits(compute_syndrome(code, word_a))
        .bits(shortened);
    channel.send(Endpoint::kA, MessageType::kSyndrome, w.data());
  }

  // Bob: rebuild the frame from what arrived on the wire.
  Frame syndrome_frame = channel.expect(Endpoint::kB, MessageType::kSyndrome);
  ByteReader rd(syndrome_frame.payload);
  if (rd.u32() != frame_id) throw FrameFormatError("reconcile: frame id mismatch");
  const std::size_t code_index = rd.u8();
  if (code_index != plan.code_index) throw FrameFormatError("reconcile: code index mismatch");
  const std::size_t s0 = rd.u16();
  if (s0 > fc.modulation.size()) throw FrameFormatError("reconcile: bad shortened count");
  const BitString syndrome = rd.bits(code.m);
  const BitString s0_values = rd.bits(s0);
  rd.expect_end();

  const double llr = bsc_llr(plan.decoder_qber);
  std::vector<double> prior(n, 0.0);
  std::vector<char> known(n, 0);
  for (std::size_t i = 0; i < fc.key_positions.size(); ++i) {
    prior[fc.key_positions[i]] = bob.test(i) ? -llr : llr;
  }
  for (std::size_t i = 0; i < s0; ++i) {
    const std::uint32_t v = fc.modulation[i];
    prior[v] = s0_values.test(i) ? -kKnownLlr : kKnownLlr;
    known[v] = 1;
  }
  std::vector<char> is_fill(n, 0);
  for (std::uint32_t v : fc.modulation) is_fill[v] = 1;

  ReconciliationResult result;
  result.code_rate = code.rate;
  result.syndrome_bits = code.m;
  result.disclosed_bits = s0;
  std::size_t fill_disclosed = s0;
  std::size_t key_disclosed = 0;
  const std::size_t increment = settings_.disclosure_increment(code);

  DecodeResult decoded;
  for (unsigned round = 1;; ++round) {
    result.rounds = round;
    decoded = bp_decode(code, prior, syndrome, settings_.max_iter);
    if (decoded.converged) {
      BitString corrected(settings_.frame_bits);
      for (std::size_t i = 0; i < fc.key_positions.size(); ++i) {
        corrected.set(i, decoded.word.test(fc.key_positions[i]));
      }
      result.corrected_errors = hamming_distance(corrected, bob);
      result.corrected_bob = std::move(corrected);
      ByteWriter w;
      w.u32(frame_id)
          .u8(static_cast<std::uint8_t>(DisclosureKind::kConverged))
          .u32(static_cast<std::uint32_t>(result.corrected_errors));
      channel.send(Endpoint::kB, MessageType::kDisclosure, w.data());
      break;
    }
    if (round == settings_.round_cap) {
      ByteWriter w;
      w.u32(frame_id).u8(static_cast<std::uint8_t>(DisclosureKind::kFailed));
      channel.send(Endpoint::kB, MessageType::kDisclosure, w.data());
      break;
    }

    std::vector<std::uint32_t> candidates;
    for (std::uint32_t v = 0; v < n; ++v) {
      if (!known[v]) candidates.push_back(v);
    }
    const std::size_t take = std::min(increment, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                      candidates.end(), [&](std::uint32_t a, std::uint32_t b) {
                        const double ra = std::abs(decoded.posterior[a]);
                        const double rb = std::abs(decoded.posterior[b]);
                        return ra < rb || (ra == rb && a < b);
                      });
    candidates.resize(take);
    {
      ByteWriter w;
      w.u32(frame_id)
          .u8(static_cast<std::uint8_t>(DisclosureKind::kRequest))
          .u16(static_cast<std::uint16_t>(take));
      for (std::uint32_t v : candidates) w.u16(static_cast<std::uint16_t>(v));
      channel.send(Endpoint::kB, MessageType::kDisclosure, w.data());
    }

    // Alice answers with the requested values.
    {
      Frame req = channel.expect(Endpoint::kA, MessageType::kDisclosure);
      ByteReader r(req.payload);
      if (r.u32() != frame_id || r.u8() != static_cast<std::uint8_t>(DisclosureKind::kRequest)) {
        throw FrameFormatError("reconcile: unexpected disclosure message");
      }
      const std::size_t count = r.u16();
      BitString values(count);
      for (std::size_t i = 0; i < count; ++i) {
        const std::size_t v = r.u16();
        if (v >= n) throw FrameFormatError("reconcile: disclosure position out of range");
        values.set(i, word_a.test(v));
      }
      r.expect_end();
      ByteWriter w;
      w.u32(frame_id).u8(static_cast<std::uint8_t>(DisclosureKind::kResponse)).bits(values);
      channel.send(Endpoint::kA, MessageType::kDisclosure, w.data());
    }

    Frame resp = channel.expect(Endpoint::kB, MessageType::kDisclosure);
    ByteReader r(resp.payload);
    if (r.u32() != frame_id || r.u8() != static_cast<std::uint8_t>(DisclosureKind::kResponse)) {
      throw FrameFormatError("reconcile: unexpected disclosure response");
    }
    const BitString values = r.bits(take);
    r.expect_end();
    for (std::size_t i = 0; i < take; ++i) {
      const std::uint32_t v = candidates[i];
      known[v] = 1;
      prior[v] = values.test(i) ? -kKnownLlr : kKnownLlr;
      result.disclosed_positions.push_back(v);
      if (is_fill[v]) {
        ++fill_disclosed;
      } else {
        ++key_disclosed;
      }
    }
    result.disclosed_bits += take;
  }

  // Alice reads Bob's final status.
  Frame status = channel.expect(Endpoint::kA, MessageType::kDisclosure);
  ByteReader st(status.payload);
  if (st.u32() != frame_id) throw FrameFormatError("reconcile: frame id mismatch");
  const auto kind = static_cast<DisclosureKind>(st.u8());
  if (kind == DisclosureKind::kConverged) {
    const std::uint32_t corrections = st.u32();
    result.converged = true;
    recent_qber_.push_back(static_cast<double>(corrections) /
                           static_cast<double>(settings_.frame_bits));
    while (recent_qber_.size() > settings_.hint_window) recent_qber_.pop_front();
  } else if (kind == DisclosureKind::kFailed) {
    result.converged = false;
    result.corrected_bob = bob;
    recent_qber_.clear();
  } else {
    throw FrameFormatError("reconcile: unexpected final status");
  }
  st.expect_end();

  result.fill_credit = fill_disclosed + rank_of_unknown(fc, known);
  result.leak_ec = result.syndrome_bits + result.disclosed_bits - result.fill_credit;
  (void)key_disclosed;
  return result;
}

std::vector<ReconciliationResult> BlindReconciler::reconcile(const BitString& alice,
                                                             const BitString& bob,
                                                             ClassicalChannel& channel) {
  if (alice.size() != bob.size()) throw LengthMismatchError("reconcile: key lengths differ");
  if (alice.size() % settings_.frame_bits != 0) {
    throw LengthMismatchError("reconcile: key length is not a multiple of the frame size");
  }
  std::vector<ReconciliationResult> out;
  for (std::size_t pos = 0; pos < alice.size(); pos += settings_.frame_bits) {
    out.push_back(reconcile_frame(alice.slice(pos, settings_.frame_bits),
                                  bob.slice(pos, settings_.frame_bits), channel));
  }
  return out;
}

VerificationTag make_verification_tag(const BitString& key, const BitString& seed) {
  return {toeplitz_hash(key, seed, kVerificationTagBits), seed};
}

VerifyOutcome verify_block(const BitString& key_a, const BitString& key_b, const BitString& seed) {
  if (key_a.size() != key_b.size()) throw LengthMismatchError("verify_block: key lengths differ");
  VerifyOutcome out;
  out.match = toeplitz_hash(key_a, seed, kVerificationTagBits) ==
              toeplitz_hash(key_b, seed, kVerificationTagBits);
  return out;
}

VerifyOutcome run_verification(const BitString& key_a, const BitString& key_b,
                               ClassicalChannel& channel, Rng& public_rng) {
  if (key_a.size() != key_b.size()) throw LengthMismatchError("run_verification: key lengths differ");
  const BitString seed = BitString::random(key_a.size() + kVerificationTagBits - 1, public_rng);
  {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(key_a.size()))
        .bits(seed)
        .bits(make_verification_tag(key_a, seed).tag);
    channel.send(Endpoint::kA, MessageType::kVerificationTag, w.data());
  }
  Frame f = channel.expect(Endpoint::kB, MessageType::kVerificationTag);
  ByteReader r(f.payload);
  const std::size_t len = r.u32();
  if (len != key_b.size()) throw FrameFormatError("run_verification: key length mismatch");
  const BitString wire_seed = r.bits(len + kVerificationTagBits - 1);
  const BitString tag_a = r.bits(kVerificationTagBits);
  r.expect_end();
  VerifyOutcome out;
  out.match = make_verification_tag(key_b, wire_seed).tag == tag_a;
  {
    ByteWriter w;
    w.u8(out.match ? 1 : 0);
    channel.send(Endpoint::kB, MessageType::kVerificationVerdict, w.data());
  }
  Frame v = channel.expect(Endpoint::kA, MessageType::kVerificationVerdict);
  ByteReader vr(v.payload);
  const bool verdict = vr.u8() != 0;
  vr.expect_end();
  out.match = verdict;
  return out;
}

std::size_t LocalizedVerifyOutcome::kept_count() const noexcept {
  return static_cast<std::size_t>(std::count(kept.begin(), kept.end(), true));
}

LocalizedVerifyOutcome run_localized_verification(std::span<const BitString> frames_a,
                                                  std::span<const BitString> frames_b,
                                                  ClassicalChannel& channel, Rng& public_rng) {
  if (frames_a.size() != frames_b.size()) {
    throw LengthMismatchError("run_localized_verification: frame counts differ");
  }
  LocalizedVerifyOutcome out;
  out.kept.assign(frames_a.size(), false);
  auto check = [&](auto&& self, std::size_t lo, std::size_t hi) -> void {
    BitString a;
    BitString b;
    for (std::size_t i = lo; i < hi; ++i) {
      a.append(frames_a[i]);
      b.append(frames_b[i]);
    }
    const VerifyOutcome v = run_verification(a, b, channel, public_rng);
    ++out.tags;
    out.disclosed_bits += v.disclosed_bits;
    if (v.match) {
      std::fill(out.kept.begin() + static_cast<std::ptrdiff_t>(lo),
                out.kept.begin() + static_cast<std::ptrdiff_t>(hi), true);
      return;
    }
    if (hi - lo == 1) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    self(self, lo, mid);
    self(self, mid, hi);
  };
  if (!frames_a.empty()) check(check, 0, frames_a.size());
  return out;
}

}  // namespace qkdnet
