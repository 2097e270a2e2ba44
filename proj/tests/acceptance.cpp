// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qkdnet/authchan.hpp"
#include "qkdnet/campaign.hpp"
#include "qkdnet/config.hpp"
#include "qkdnet/errors.hpp"
#include "qkdnet/linksim.hpp"
#include "qkdnet/netnode.hpp"
#include "qkdnet/privacy.hpp"
#include "qkdnet/random.hpp"
#include "qkdnet/reconcile.hpp"
#include "qkdnet/security.hpp"
#include "qkdnet/toeplitz.hpp"

namespace {

using namespace qkdnet;
using Clock = std::chrono::steady_clock;

// Tolerances and budgets.
constexpr double kEpsRelTol = 0.01;
constexpr double kEpsQkdBound = 2.3e-11;
constexpr double kEpsNetBound = 5e-11;
constexpr std::size_t kOracleTuples = 1000;
constexpr double kOracleBitTol = 1.0;
constexpr double kRateFactor = 3.0;
constexpr double kLink1Target = 20.0;   // bit/s
constexpr double kLink2Target = 100.0;  // bit/s
constexpr double kRenewalRate = 20.0;   // bit/s bottleneck
constexpr std::size_t kRenewalRequests = 20;
constexpr double kWaitMin = 11.0;
constexpr double kWaitMax = 14.0;
constexpr std::size_t kRelays = 1000;
constexpr double kMinConvergence = 0.95;
constexpr double kEfficiencyCap = 1.3;
constexpr std::size_t kBlockBits = std::size_t{1} << 20;
constexpr std::size_t kTamperRuns = 100;
constexpr std::size_t kLinearityTriples = 100;

int failures = 0;

void report(int id, bool pass, double seconds, double budget_s, const std::string& detail) {
  const bool in_time = seconds <= budget_s;
  const bool ok = pass && in_time;
  if (!ok) ++failures;
  std::printf("criterion %d: %s  %s  [%.2f s, budget %.0f s]\n", id, ok ? "PASS" : "FAIL",
              detail.c_str(), seconds, budget_s);
  std::fflush(stdout);
}

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string format(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void criterion1() {
  const auto t0 = Clock::now();
  const auto r = compose_epsilon(SecurityParams(2e-11, 1e-12, 40), 3);
  // Hand arithmetic in long double.
  const long double auth = 2.0L / 1099511627776.0L;
  const long double qkd = 2e-11L + 1e-12L + auth;
  const long double net = 2.0L * (qkd + auth);
  const double rel_qkd = std::fabs(static_cast<double>((r.eps_qkd - qkd) / qkd));
  const double rel_net = std::fabs(static_cast<double>((r.eps_qkdnet - net) / net));
  const bool pass = r.eps_qkd < kEpsQkdBound && r.eps_qkdnet < kEpsNetBound &&
                    rel_qkd <= kEpsRelTol && rel_net <= kEpsRelTol;
  report(1, pass, since(t0), 1.0,
         format("eps_qkd=%.4e (<2.3e-11, rel err %.1e) eps_qkdnet=%.4e (<5e-11, rel err %.1e)",
                r.eps_qkd, rel_qkd, r.eps_qkdnet, rel_net));
}

// Written out from the formulas independently of the library.
long double oracle_length(long double l_ver, long double eta, long double mu, long double q,
                          long double leak, long double eps_pa) {
  const long double p2 = std::exp(-mu) * mu * mu / 2.0L;
  const long double y1 = 1.0L - p2 / (eta * mu);
  const long double q1 = q / y1;
  long double h = 0.0L;
  if (q1 > 0.0L) h = -(q1 * std::log(q1) + (1.0L - q1) * std::log1p(-q1)) / std::log(2.0L);
  const long double pa = -5.0L * std::log(eps_pa) / std::log(2.0L);
  const long double v = l_ver * y1 * (1.0L - h) - leak - pa;
  return v > 0.0L ? std::floor(v) : 0.0L;
}

void criterion2() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  std::size_t tested = 0;
  double worst = 0.0;
  while (tested < kOracleTuples) {
    const std::size_t l_ver = 10000 + rng.below(4000000);
    const double loss_db = 1.0 + 19.0 * rng.uniform();
    const double eta = transmittance_from_db(loss_db);
    const double mu = 0.005 + 0.5 * rng.uniform();
    const double q = 0.1 * rng.uniform();
    const std::size_t leak = rng.below(l_ver / 2);
    const double eps_pa = std::pow(10.0, -6.0 - 12.0 * rng.uniform());
    std::size_t got = 0;
    try {
      const auto est = estimate_single_photon(eta, mu, q);
      got = secret_key_length(l_ver, est.y1_hat, est.q1_hat, leak, eps_pa);
    } catch (const ProtocolAbort&) {
      continue;
    } catch (const EstimateInvalidError&) {
      continue;
    }
    const long double want = oracle_length(l_ver, eta, mu, q, leak, eps_pa);
    worst = std::max(worst, static_cast<double>(std::fabs(static_cast<long double>(got) - want)));
    ++tested;
  }
  report(2, worst <= kOracleBitTol, since(t0), 1.0,
         format("%zu in-domain tuples, max |library - oracle| = %.0f bit (tol 1)", tested, worst));
}

void rate_criterion(int id, const LinkParams& params, double target) {
  const auto t0 = Clock::now();
  RunConfig cfg;
  cfg.links = {{"link", "node1", "node2", params}};
  cfg.sim_duration_s = 3600.0;
  cfg.master_seed = 100 + static_cast<std::uint64_t>(id);
  const CampaignReport r = run_campaign(cfg);
  const LinkReport& l = r.links.at(0);
  const double rate = l.secret_rate();
  const bool pass = r.exit_code == kExitOk && rate > 0.0 && rate >= target / kRateFactor &&
                    rate <= target * kRateFactor;
  report(id, pass, since(t0), 60.0,
         format("%.0f dB mu=%.2f sifted %.0f bit/s, 1 h: R_sec=%.2f bit/s (envelope %.2f..%.0f), "
                "%zu/%zu frames, leak/l_ver=%.4f",
                params.loss_db, params.mu, params.sifted_rate, rate, target / kRateFactor,
                target * kRateFactor, l.frames_converged, l.frames,
                l.verified_bits ? static_cast<double>(l.leak_ec_bits) / l.verified_bits : 0.0));
}

void criterion5() {
  const auto t0 = Clock::now();
  TrustedNetwork net;
  net.add_link("node1", "node2");
  net.add_link("node2", "node3");
  // Secret key streams in once per simulated second; link 1 is the bottleneck.
  Rng rng(55);
  const double horizon = 2.0 * kRenewalRequests * 256.0 / kRenewalRate;
  for (int t = 1; t <= static_cast<int>(horizon); ++t) {
    const auto bits1 = static_cast<std::size_t>(std::floor(kRenewalRate * t) -
                                                std::floor(kRenewalRate * (t - 1)));
    net.store("node1", "node2").deposit(BitString::random(bits1, rng), t);
    net.store("node2", "node3").deposit(BitString::random(5 * bits1, rng), t);
  }
  RenewalService svc(net, 56);
  double at = 0.0;
  double total_wait = 0.0;
  bool exact = true;
  for (std::size_t i = 0; i < kRenewalRequests; ++i) {
    const RenewalResult res = svc.request("node1", "node3", at, 256);
    exact = exact && res.key == res.sent;
    total_wait += res.wait_s();
    at = res.delivered_s;
  }
  const double mean = total_wait / kRenewalRequests;
  report(5, exact && mean >= kWaitMin && mean <= kWaitMax, since(t0), 60.0,
         format("bottleneck %.0f bit/s, %zu back-to-back 256-bit renewals: mean wait %.2f s "
                "(bounds %.0f..%.0f), keys exact: %s",
                kRenewalRate, kRenewalRequests, mean, kWaitMin, kWaitMax, exact ? "yes" : "no"));
}

void criterion6() {
  const auto t0 = Clock::now();
  TrustedNetwork net;
  net.add_link("node1", "node2");
  net.add_link("node2", "node3");
  Rng rng(66);
  net.store("node1", "node2").deposit(BitString::random(kRelays * 256, rng));
  net.store("node2", "node3").deposit(BitString::random(kRelays * 256, rng));
  const RelayPath path = net.find_path("node1", "node3");
  std::size_t exact = 0;
  std::set<std::size_t> offsets12;
  std::set<std::size_t> offsets23;
  bool disjoint = true;
  for (std::size_t i = 0; i < kRelays; ++i) {
    const BitString key = generate_network_key(256, derive_seed(67, {i}));
    const RelayRecord rec = net.relay_key(key, path);
    if (rec.delivered == key) ++exact;
    disjoint = disjoint && offsets12.insert(rec.hops.at(0).pad_offset).second &&
               offsets23.insert(rec.hops.at(1).pad_offset).second;
  }
  const std::size_t reuse = net.store("node1", "node2").reuse_audit().size() +
                            net.store("node2", "node3").reuse_audit().size();
  report(6, exact == kRelays && reuse == 0 && disjoint, since(t0), 10.0,
         format("%zu/%zu keys bit-exact at node3, reused pad bits: %zu", exact, kRelays, reuse));
}

void criterion7() {
  const auto t0 = Clock::now();
  const ReconcileSettings settings;
  const std::size_t frames = kBlockBits / settings.frame_bits;
  bool pass = true;
  std::string detail;
  for (double q : {0.01, 0.03, 0.05}) {
    BlindReconciler rec(settings, derive_seed(70, {static_cast<std::uint64_t>(q * 1000)}));
    ClassicalChannel ch;
    Rng public_rng(71);
    const SiftedPair pair = generate_sifted_pair_at(
        q, 100.0, kBlockBits, derive_seed(72, {static_cast<std::uint64_t>(q * 1000)}));
    BitString block_a;
    BitString block_b;
    std::size_t converged = 0;
    std::size_t leak = 0;
    std::size_t wrong_frames = 0;
    for (std::size_t f = 0; f < frames; ++f) {
      const BitString fa = pair.alice.slice(f * settings.frame_bits, settings.frame_bits);
      const BitString fb = pair.bob.slice(f * settings.frame_bits, settings.frame_bits);
      const ReconciliationResult r = rec.reconcile_frame(fa, fb, ch);
      ch.reset_transcripts();
      if (!r.converged) continue;
      ++converged;
      leak += r.leak_ec;
      if (r.corrected_bob != fa) ++wrong_frames;
      block_a.append(fa);
      block_b.append(r.corrected_bob);
    }
    const VerifyOutcome ver = run_verification(block_a, block_b, ch, public_rng);
    const bool sound = !ver.match || block_a == block_b;
    const double conv = static_cast<double>(converged) / static_cast<double>(frames);
    const double per_bit = static_cast<double>(leak) / static_cast<double>(block_a.size()) +
                           static_cast<double>(ver.disclosed_bits) / static_cast<double>(kBlockBits);
    const double cap = kEfficiencyCap * binary_entropy(q) +
                       static_cast<double>(kVerificationTagBits) / static_cast<double>(kBlockBits);
    pass = pass && conv >= kMinConvergence && sound && per_bit <= cap;
    detail += format("q=%.2f: conv %.3f, leak/n %.5f <= %.5f (f=%.3f), verified %s, "
                     "misconverged frames %zu; ",
                     q, conv, per_bit, cap, per_bit / binary_entropy(q),
                     ver.match ? "yes" : "no", wrong_frames);
  }
  report(7, pass, since(t0), 300.0, detail);
}

// Honest traffic of one block on a link: reconciliation, verification,
// accounting, PA seed and a relayed key.
std::vector<ClassicalChannel::LogEntry> record_session() {
  ClassicalChannel ch;
  ReconcileSettings settings;
  BlindReconciler rec(settings, 80);
  const SiftedPair pair = generate_sifted_pair_at(0.03, 100.0, 2 * settings.frame_bits, 81);
  const auto frames = rec.reconcile(pair.alice, pair.bob, ch);
  BitString corrected;
  for (const auto& f : frames) corrected.append(f.corrected_bob);
  Rng public_rng(82);
  run_verification(pair.alice, corrected, ch, public_rng);
  KeyBlock block;
  block.stage = KeyStage::kVerified;
  block.bits = pair.alice;
  block.l_ver = pair.alice.size();
  block.leak_ec = 1500;
  block.qber = 0.03;
  const auto est = estimate_single_photon(transmittance_from_db(7.0), 0.03, 0.03);
  run_privacy_amplification(block, block, est, SecurityParams::defaults(), ch, public_rng);
  ch.send(Endpoint::kA, MessageType::kRelayCiphertext,
          ByteWriter{}.u16(0).u32(256).bits(generate_network_key(256, 83)).take());
  return ch.log();
}

// Replays `session` through a fresh channel, flipping one bit of transcript
// byte `target` (counted over all frames) when target is set, then runs one
// authentication round.
bool replay_and_authenticate(const std::vector<ClassicalChannel::LogEntry>& session,
                             std::optional<std::size_t> target, std::uint8_t mask,
                             std::uint64_t seed) {
  ClassicalChannel ch;
  std::size_t seen = 0;
  ch.set_tamper([&](std::vector<std::uint8_t>& frame) {
    if (target && *target >= seen && *target < seen + frame.size()) {
      frame[*target - seen] ^= mask;
    }
    seen += frame.size();
  });
  for (const auto& e : session) {
    ch.send(e.from, e.type, e.payload);
    try {
      ch.receive(peer(e.from));
    } catch (const FrameFormatError&) {
      // A corrupted header is dropped by framing; the transcripts still differ.
    }
  }
  Rng boot(seed);
  const BitString shared = BitString::random(kBootstrapKeyBits, boot);
  AuthKeyPool pa(shared);
  AuthKeyPool pb(shared);
  LinkAuthenticator auth(ch, pa, pb, 40, derive_seed(seed, {1}));
  return auth.run_round();
}

void criterion8() {
  const auto t0 = Clock::now();
  const auto session = record_session();
  std::size_t total = 0;
  for (const auto& e : session) total += kFrameHeaderBytes + e.payload.size();
  const bool honest_ok = replay_and_authenticate(session, std::nullopt, 0, 90);
  Rng rng(91);
  std::size_t rejected = 0;
  std::size_t accepted = 0;
  for (std::size_t run = 0; run < kTamperRuns; ++run) {
    const std::size_t byte = rng.below(total);
    const auto mask = static_cast<std::uint8_t>(1U << rng.below(8));
    if (replay_and_authenticate(session, byte, mask, 92 + run)) {
      ++accepted;
    } else {
      ++rejected;
    }
  }
  report(8, honest_ok && rejected == kTamperRuns && accepted == 0, since(t0), 10.0,
         format("%zu tamper runs over a %zu-byte session: %zu authentication failures, "
                "%zu false accepts; honest control %s",
                kTamperRuns, total, rejected, accepted, honest_ok ? "accepted" : "REJECTED"));
}

void criterion9() {
  const auto t0 = Clock::now();
  Rng rng(99);
  std::size_t linear = 0;
  for (std::size_t t = 0; t < kLinearityTriples; ++t) {
    const std::size_t n = 256 + rng.below(4000);
    const std::size_t m = 1 + rng.below(n);
    const BitString a = BitString::random(n, rng);
    const BitString b = BitString::random(n, rng);
    const BitString seed = BitString::random(n + m - 1, rng);
    if (toeplitz_hash(xor_combine(a, b), seed, m) ==
        xor_combine(toeplitz_hash(a, seed, m), toeplitz_hash(b, seed, m))) {
      ++linear;
    }
  }
  bool entropy_ok = binary_entropy(0.0) == 0.0 && binary_entropy(1.0) == 0.0 &&
                    binary_entropy(0.5) == 1.0;
  for (int i = 1; i < 4096; ++i) {
    const double q = i / 4096.0;
    entropy_ok = entropy_ok && binary_entropy(q) == binary_entropy(1.0 - q);
  }
  report(9, linear == kLinearityTriples && entropy_ok, since(t0), 1.0,
         format("Toeplitz linearity %zu/%zu triples; entropy endpoints and symmetry exact: %s",
                linear, kLinearityTriples, entropy_ok ? "yes" : "no"));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> checks{
      criterion1,
      criterion2,
      [] { rate_criterion(3, LinkParams::polarization_profile(), kLink1Target); },
      [] { rate_criterion(4, LinkParams::phase_profile(), kLink2Target); },
      criterion5,
      criterion6,
      criterion7,
      criterion8,
      criterion9,
  };
  // Build the shared code pool outside the timed sections.
  const auto t0 = Clock::now();
  CodePool::get(ReconcileSettings{});
  std::printf("code pool built in %.2f s\n", since(t0));
  for (const auto& check : checks) {
    try {
      check();
    } catch (const std::exception& e) {
      ++failures;
      std::printf("criterion check threw: %s\n", e.what());
    }
  }
  std::printf("%d criterion failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
