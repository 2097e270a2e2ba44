#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qkdnet/bitstring.hpp"

namespace qkdnet {

class Rng;

/// Physical and statistical description of one point-to-point link.
struct LinkParams {
  double loss_db = 0.0;
  double mu = 0.02;            ///< mean photon number per pulse
  double sifted_rate = 100.0;  ///< bit/s
  double qber_mean = 0.03;
  double qber_jitter = 0.0;    ///< std. dev. of per-window QBER
  double distance_km = 1.0;

  /// Throws DomainError unless 0 < mu < 1, 0 <= qber_mean < 0.5 and the
  /// remaining fields are in range.
  void validate() const;

  /// 13 dB, mu = 0.02, 100 bit/s sifted, 30 km polarization-encoding link.
  static LinkParams polarization_profile();
  /// 7 dB, mu = 0.03, 200 bit/s sifted, 15 km phase-encoding link.
  static LinkParams phase_profile();

  bool operator==(const LinkParams&) const = default;
};

struct SiftedPair {
  BitString alice;
  BitString bob;
  double true_qber = 0.0;    ///< realized flipped fraction
  double window_qber = 0.0;  ///< QBER drawn from the process for this block
  double duration_s = 0.0;
};

/// 10^(-loss_db / 10).
double transmittance_from_db(double loss_db);

/// Probability that a coherent pulse of mean mu carries exactly two photons.
double two_photon_prob(double mu);

/// Draws one window QBER: qber_mean + jitter * N(0, 1), clamped to [0, 0.5).
double sample_window_qber(const LinkParams& params, Rng& rng);

/// Correlated sifted blocks for a link. One QBER draw per call.
SiftedPair generate_sifted_pair(const LinkParams& params, std::size_t block_len,
                                std::uint64_t seed);

/// Same as generate_sifted_pair but with the window QBER given explicitly.
SiftedPair generate_sifted_pair_at(double window_qber, double sifted_rate,
                                   std::size_t block_len, std::uint64_t seed);

/// Per-window mean QBER of the link's fluctuation process.
std::vector<double> qber_timeseries(const LinkParams& params, std::size_t windows,
                                    std::uint64_t seed);

}  // namespace qkdnet
