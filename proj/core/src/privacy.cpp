#include "qkdnet/privacy.hpp"

#include <cmath>
#include <string>

#include "qkdnet/errors.hpp"
#include "qkdnet/toeplitz.hpp"

namespace qkdnet {

const char* to_string(KeyStage stage) noexcept {
  switch (stage) {
    case KeyStage::kSifted:
      return "sifted";
    case KeyStage::kVerified:
      return "verified";
    case KeyStage::kSecret:
      return "secret";
  }
  return "unknown";
}

double estimate_qber(const BitString& bob_before, const BitString& bob_after) {
  if (bob_before.size() != bob_after.size()) {
    throw LengthMismatchError("estimate_qber: keys differ in length");
  }
  if (bob_before.empty()) throw DomainError("estimate_qber: empty key");
  return static_cast<double>(hamming_distance(bob_before, bob_after)) /
         static_cast<double>(bob_before.size());
}

SinglePhotonEstimate estimate_y1(double eta, double mu) {
  if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("estimate_y1: eta must lie in (0, 1]");
  if (!(mu > 0.0) || !std::isfinite(mu)) throw DomainError("estimate_y1: mu must be positive");
  SinglePhotonEstimate est;
  est.eta = eta;
  est.mu = mu;
  est.p2 = std::exp(-mu) * mu * mu / 2.0;
  const double detected = eta * mu;
  if (detected <= est.p2) {
    throw EstimateInvalidError("estimate_y1: multiphoton probability " + std::to_string(est.p2) +
                               " reaches eta*mu = " + std::to_string(detected));
  }
  est.y1_hat = (detected - est.p2) / detected;
  return est;
}

double estimate_q1(double q, double y1_hat) {
  if (!(q >= 0.0 && q < 0.5)) throw DomainError("estimate_q1: q must lie in [0, 0.5)");
  if (!(y1_hat > 0.0 && y1_hat <= 1.0)) throw DomainError("estimate_q1: y1_hat must lie in (0, 1]");
  const double q1 = q / y1_hat;
  if (q1 >= kCriticalQber) {
    throw ProtocolAbort("single-photon QBER " + std::to_string(q1) + " at or above " +
                            std::to_string(kCriticalQber),
                        q1);
  }
  return q1;
}

SinglePhotonEstimate estimate_single_photon(double eta, double mu, double q) {
  SinglePhotonEstimate est = estimate_y1(eta, mu);
  est.q1_hat = estimate_q1(q, est.y1_hat);
  return est;
}

std::size_t secret_key_length(std::size_t l_ver, double y1_hat, double q1_hat,
                              std::size_t leak_ec, double eps_pa) {
  if (!(eps_pa > 0.0 && eps_pa < 1.0)) throw DomainError("secret_key_length: eps_pa outside (0, 1)");
  if (!(y1_hat >= 0.0 && y1_hat <= 1.0)) throw DomainError("secret_key_length: y1_hat outside [0, 1]");
  if (!(q1_hat >= 0.0 && q1_hat <= 1.0)) throw DomainError("secret_key_length: q1_hat outside [0, 1]");
  const double value = static_cast<double>(l_ver) * y1_hat * (1.0 - binary_entropy(q1_hat)) -
                       static_cast<double>(leak_ec) - 5.0 * std::log2(1.0 / eps_pa);
  if (!(value > 0.0)) return 0;
  return static_cast<std::size_t>(std::floor(value));
}

std::size_t pa_seed_length(std::size_t l_ver, std::size_t l_sec_raw) {
  if (l_ver == 0 || l_sec_raw == 0) throw DomainError("pa_seed_length: empty input or output");
  return l_ver + l_sec_raw - 1;
}

AmplifiedKey privacy_amplify(const KeyBlock& block, const SinglePhotonEstimate& est,
                             const SecurityParams& params, const BitString& seed) {
  if (block.stage != KeyStage::kVerified) {
    throw DomainError("privacy_amplify: block is not at the verified stage");
  }
  if (block.bits.size() != block.l_ver) {
    throw LengthMismatchError("privacy_amplify: l_ver does not match the key length");
  }
  const std::size_t l_sec_raw =
      secret_key_length(block.l_ver, est.y1_hat, est.q1_hat, block.leak_ec, params.eps_pa());
  const std::size_t reserve = 2 * static_cast<std::size_t>(params.l_auth());
  if (l_sec_raw <= reserve) {
    throw InsufficientKeyError("privacy_amplify: secret length " + std::to_string(l_sec_raw) +
                               " does not exceed the " + std::to_string(reserve) +
                               "-bit authentication reservation");
  }
  const BitString hashed = toeplitz_hash(block.bits, seed, l_sec_raw);

  AmplifiedKey out;
  out.secret = block;
  out.secret.stage = KeyStage::kSecret;
  out.secret.l_sec_raw = l_sec_raw;
  out.secret.l_sec_final = l_sec_raw - reserve;
  out.secret.bits = hashed.slice(0, out.secret.l_sec_final);
  out.reserved = hashed.slice(out.secret.l_sec_final, reserve);
  return out;
}

AmplifiedPair run_privacy_amplification(const KeyBlock& alice_block, const KeyBlock& bob_block,
                                        const SinglePhotonEstimate& est,
                                        const SecurityParams& params, ClassicalChannel& channel,
                                        Rng& public_rng) {
  const std::size_t l_sec_raw = secret_key_length(alice_block.l_ver, est.y1_hat, est.q1_hat,
                                                  alice_block.leak_ec, params.eps_pa());
  {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(alice_block.l_ver))
        .u32(static_cast<std::uint32_t>(alice_block.leak_ec))
        .f64(alice_block.qber)
        .u32(static_cast<std::uint32_t>(l_sec_raw));
    channel.send(Endpoint::kA, MessageType::kBlockAccounting, w.data());
  }
  Frame acct = channel.expect(Endpoint::kB, MessageType::kBlockAccounting);
  ByteReader ar(acct.payload);
  const std::size_t l_ver = ar.u32();
  const std::size_t leak = ar.u32();
  const double qber = ar.f64();
  const std::size_t announced = ar.u32();
  ar.expect_end();
  if (l_ver != bob_block.l_ver || leak != bob_block.leak_ec) {
    throw FrameFormatError("privacy amplification: block accounting disagrees");
  }
  (void)qber;

  const std::size_t reserve = 2 * static_cast<std::size_t>(params.l_auth());
  if (announced <= reserve) {
    throw InsufficientKeyError("privacy amplification: secret length " +
                               std::to_string(announced) + " does not cover the reservation");
  }
  const BitString seed = BitString::random(pa_seed_length(l_ver, announced), public_rng);
  {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(seed.size())).bits(seed);
    channel.send(Endpoint::kA, MessageType::kPaSeed, w.data());
  }
  Frame sf = channel.expect(Endpoint::kB, MessageType::kPaSeed);
  ByteReader sr(sf.payload);
  const std::size_t seed_len = sr.u32();
  if (seed_len != pa_seed_length(l_ver, announced)) {
    throw FrameFormatError("privacy amplification: seed length mismatch");
  }
  const BitString bob_seed = sr.bits(seed_len);
  sr.expect_end();

  return {privacy_amplify(alice_block, est, params, seed),
          privacy_amplify(bob_block, est, params, bob_seed)};
}

}  // namespace qkdnet
