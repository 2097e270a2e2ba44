#pragma once

#include <cstddef>
#include <cstdint>

#include "qkdnet/authchan.hpp"
#include "qkdnet/bitstring.hpp"
#include "qkdnet/security.hpp"

namespace qkdnet {

/// Single-photon QBER at or above which a block is aborted.
inline constexpr double kCriticalQber = 0.11;

enum class KeyStage : std::uint8_t { kSifted, kVerified, kSecret };

const char* to_string(KeyStage stage) noexcept;

/// Key material at one pipeline stage with its accounting.
struct KeyBlock {
  KeyStage stage = KeyStage::kSifted;
  BitString bits;
  std::size_t l_ver = 0;
  std::size_t leak_ec = 0;
  double qber = 0.0;
  double duration_s = 0.0;
  std::size_t l_sec_raw = 0;
  std::size_t l_sec_final = 0;
};

struct SinglePhotonEstimate {
  double y1_hat = 0.0;
  double q1_hat = 0.0;
  double eta = 0.0;
  double mu = 0.0;
  double p2 = 0.0;
};

/// Fraction of positions Bob changed during reconciliation.
double estimate_qber(const BitString& bob_before, const BitString& bob_after);

/// Single-photon fraction (eta mu - p2) / (eta mu), p2 = e^-mu mu^2 / 2.
/// Throws EstimateInvalidError when eta mu <= p2; q1_hat is left at 0.
SinglePhotonEstimate estimate_y1(double eta, double mu);

/// q / y1_hat. Throws ProtocolAbort when the result reaches kCriticalQber.
double estimate_q1(double q, double y1_hat);

/// Full estimate for a block: estimate_y1 followed by estimate_q1.
SinglePhotonEstimate estimate_single_photon(double eta, double mu, double q);

/// floor(l_ver y1 (1 - h(q1)) - leak_ec - 5 log2(1 / eps_pa)), clamped at 0.
std::size_t secret_key_length(std::size_t l_ver, double y1_hat, double q1_hat,
                              std::size_t leak_ec, double eps_pa);

struct AmplifiedKey {
  KeyBlock secret;
  /// 2 * l_auth bits set aside for the next authentication rounds.
  BitString reserved;
};

/// Hashes a verified block to l_sec_raw bits and splits off the reservation.
/// Throws InsufficientKeyError when l_sec_raw <= 2 * l_auth.
AmplifiedKey privacy_amplify(const KeyBlock& block, const SinglePhotonEstimate& est,
                             const SecurityParams& params, const BitString& seed);

/// Length of the public seed privacy_amplify needs for a block.
std::size_t pa_seed_length(std::size_t l_ver, std::size_t l_sec_raw);

/// Channel exchange around privacy_amplify: Alice announces the block
/// accounting (0x21) and a fresh seed (0x20); both sides hash their copy.
/// Returns Alice's and Bob's results.
struct AmplifiedPair {
  AmplifiedKey alice;
  AmplifiedKey bob;
};
AmplifiedPair run_privacy_amplification(const KeyBlock& alice_block, const KeyBlock& bob_block,
                                        const SinglePhotonEstimate& est,
                                        const SecurityParams& params, ClassicalChannel& channel,
                                        Rng& public_rng);

}  // namespace qkdnet
