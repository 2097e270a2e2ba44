#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "qkdnet/authchan.hpp"
#include "qkdnet/bitstring.hpp"
#include "qkdnet/ldpc.hpp"
#include "qkdnet/random.hpp"

namespace qkdnet {

inline constexpr std::size_t kVerificationTagBits = 50;

/// Knobs of the blind (rate-adaptive) reconciliation protocol.
///
/// Every frame carries frame_bits key bits plus modulation_bits positions
/// that Alice fills with private random bits. Modulation positions start
/// punctured (unknown to Bob). When a decode fails, Bob asks for the values
/// of the least reliable positions still unknown to him, key or fill, and
/// decodes again.
struct ReconcileSettings {
  std::size_t frame_bits = 4096;
  std::size_t modulation_bits = 424;
  std::vector<double> rate_pool{0.5, 0.6, 0.7, 0.75, 0.8, 0.85, 0.875, 0.9};
  double initial_rate = 0.7;
  /// Positions revealed per extra round, as a fraction of the syndrome length.
  double increment_fraction = 1.0 / 15.0;
  unsigned round_cap = 10;
  unsigned max_iter = 60;
  /// First-round leak relative to h(q) * frame_bits once an estimate exists.
  double start_efficiency = 0.85;
  /// Syndrome length of the chosen code relative to the first-round leak.
  double syndrome_headroom = 1.3;
  std::size_t hint_window = 8;
  double min_hint_qber = 0.002;
  std::uint64_t code_seed = 0x51F7ED5EEDULL;

  std::size_t code_length() const noexcept { return frame_bits + modulation_bits; }
  std::size_t disclosure_increment(const LdpcCode& code) const noexcept;
};

/// A pool code together with its frame layout.
struct FrameCode {
  LdpcCode code;
  /// Modulation positions in reveal-priority order (first revealed first).
  std::vector<std::uint32_t> modulation;
  /// Code positions carrying key bits, ascending.
  std::vector<std::uint32_t> key_positions;
  /// suffix_rank[s]: rank of the columns modulation[s..]; size modulation + 1.
  std::vector<std::size_t> suffix_rank;
};

/// Immutable rate pool shared by every reconciler with equal settings.
class CodePool {
 public:
  static std::shared_ptr<const CodePool> get(const ReconcileSettings& settings);

  explicit CodePool(const ReconcileSettings& settings);
  std::size_t size() const noexcept { return codes_.size(); }
  const FrameCode& at(std::size_t i) const { return codes_.at(i); }
  /// Index of the pool code closest to `rate`.
  std::size_t index_of(double rate) const;

 private:
  std::vector<FrameCode> codes_;
};

struct ReconciliationResult {
  BitString corrected_bob;
  /// Information about the key disclosed by this frame:
  /// syndrome_bits + disclosed_bits - fill_credit.
  std::size_t leak_ec = 0;
  unsigned rounds = 0;
  bool converged = false;
  /// Code positions whose fill values were revealed, in reveal order.
  std::vector<std::uint32_t> disclosed_positions;

  std::size_t syndrome_bits = 0;
  std::size_t disclosed_bits = 0;
  /// Entropy of Alice's fill bits that masks the syndrome:
  /// disclosed_bits + rank of the still-punctured columns.
  std::size_t fill_credit = 0;
  std::size_t corrected_errors = 0;
  double code_rate = 0.0;
};

/// Frame-by-frame blind reconciliation between Alice (endpoint A) and Bob (B).
///
/// The only QBER information the protocol reads is its own record of
/// corrections in earlier frames, which both parties learn from Bob's
/// completion message. The first frame, and any frame after a failure, starts
/// from initial_rate with every modulation position punctured.
class BlindReconciler {
 public:
  BlindReconciler(ReconcileSettings settings, std::uint64_t fill_seed);

  const ReconcileSettings& settings() const noexcept { return settings_; }
  const CodePool& pool() const noexcept { return *pool_; }

  /// Reconciles one frame of exactly frame_bits bits. Non-convergence after
  /// the round cap is reported through converged = false.
  ReconciliationResult reconcile_frame(const BitString& alice, const BitString& bob,
                                       ClassicalChannel& channel);

  /// Splits equal-length keys (a multiple of frame_bits) into frames.
  std::vector<ReconciliationResult> reconcile(const BitString& alice, const BitString& bob,
                                              ClassicalChannel& channel);

  /// Mean corrected-error rate over recent converged frames, if any.
  std::optional<double> rate_hint() const;

 private:
  struct Plan {
    std::size_t code_index = 0;
    std::size_t preshortened = 0;
    double decoder_qber = 0.0;
  };
  Plan plan_frame() const;

  ReconcileSettings settings_;
  std::shared_ptr<const CodePool> pool_;
  Rng fill_rng_;
  std::uint32_t frame_counter_ = 0;
  std::deque<double> recent_qber_;
};

/// Inverse of binary_entropy on [0, 0.5].
double inverse_binary_entropy(double h);

struct VerificationTag {
  BitString tag;
  BitString hash_seed;
};

/// 50-bit Toeplitz tag of a key under the given seed (key length + 49 bits).
VerificationTag make_verification_tag(const BitString& key, const BitString& seed);

struct VerifyOutcome {
  bool match = false;
  std::size_t disclosed_bits = kVerificationTagBits;
};

/// Compares 50-bit Toeplitz tags of two equal-length keys.
VerifyOutcome verify_block(const BitString& key_a, const BitString& key_b,
                           const BitString& seed);

/// Verification exchange over the channel: Alice sends the public seed and her
/// tag (0x12), Bob answers with the verdict (0x13).
VerifyOutcome run_verification(const BitString& key_a, const BitString& key_b,
                               ClassicalChannel& channel, Rng& public_rng);

struct LocalizedVerifyOutcome {
  /// Per frame: verified and kept.
  std::vector<bool> kept;
  std::size_t tags = 0;
  /// Tag bits published over all exchanges, kept or not.
  std::size_t disclosed_bits = 0;

  std::size_t kept_count() const noexcept;
};

/// Verifies a block given as consecutive frames. When the block tag
/// mismatches, halves are verified recursively so only frames inside a
/// failing single-frame exchange are dropped. Each exchange is one
/// run_verification call.
LocalizedVerifyOutcome run_localized_verification(std::span<const BitString> frames_a,
                                                  std::span<const BitString> frames_b,
                                                  ClassicalChannel& channel, Rng& public_rng);

}  // namespace qkdnet
