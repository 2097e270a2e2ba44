#include "qkdnet/linksim.hpp"

#include <algorithm>
#include <cmath>

#include "qkdnet/errors.hpp"
#include "qkdnet/random.hpp"

namespace qkdnet {

namespace {

const double kQberCeiling = std::nextafter(0.5, 0.0);

}  // namespace

void LinkParams::validate() const {
  if (!(loss_db >= 0.0)) throw DomainError("LinkParams: loss_db must be >= 0");
  if (!(mu > 0.0 && mu < 1.0)) throw DomainError("LinkParams: mu must lie in (0, 1)");
  if (!(sifted_rate > 0.0)) throw DomainError("LinkParams: sifted_rate must be > 0");
  if (!(qber_mean >= 0.0 && qber_mean < 0.5)) {
    throw DomainError("LinkParams: qber_mean must lie in [0, 0.5)");
  }
  if (!(qber_jitter >= 0.0)) throw DomainError("LinkParams: qber_jitter must be >= 0");
  if (!(distance_km > 0.0)) throw DomainError("LinkParams: distance_km must be > 0");
}

LinkParams LinkParams::polarization_profile() {
  return LinkParams{.loss_db = 13.0,
                    .mu = 0.02,
                    .sifted_rate = 100.0,
                    .qber_mean = 0.03,
                    .qber_jitter = 0.005,
                    .distance_km = 30.0};
}

LinkParams LinkParams::phase_profile() {
  return LinkParams{.loss_db = 7.0,
                    .mu = 0.03,
                    .sifted_rate = 200.0,
                    .qber_mean = 0.03,
                    .qber_jitter = 0.005,
                    .distance_km = 15.0};
}

double transmittance_from_db(double loss_db) {
  if (!(loss_db >= 0.0)) throw DomainError("transmittance_from_db: loss must be >= 0 dB");
  return std::pow(10.0, -loss_db / 10.0);
}

double two_photon_prob(double mu) {
  if (!(mu > 0.0)) throw DomainError("two_photon_prob: mu must be > 0");
  return std::exp(-mu) * mu * mu / 2.0;
}

double sample_window_qber(const LinkParams& params, Rng& rng) {
  double q = params.qber_mean;
  if (params.qber_jitter > 0.0) q += params.qber_jitter * rng.normal();
  return std::clamp(q, 0.0, kQberCeiling);
}

SiftedPair generate_sifted_pair_at(double window_qber, double sifted_rate,
                                   std::size_t block_len, std::uint64_t seed) {
  if (block_len == 0) throw DomainError("generate_sifted_pair: block_len must be >= 1");
  if (!(sifted_rate > 0.0)) throw DomainError("generate_sifted_pair: sifted_rate must be > 0");
  if (!(window_qber >= 0.0 && window_qber < 0.5)) {
    throw DomainError("generate_sifted_pair: window QBER must lie in [0, 0.5)");
  }
  Rng key_rng(derive_seed(seed, {1}));
  Rng flip_rng(derive_seed(seed, {2}));

  SiftedPair pair;
  pair.alice = BitString::random(block_len, key_rng);
  pair.bob = pair.alice;
  std::size_t flips = 0;
  if (window_qber > 0.0) {
    for (std::size_t i = 0; i < block_len; ++i) {
      if (flip_rng.bernoulli(window_qber)) {
        pair.bob.flip(i);
        ++flips;
      }
    }
  }
  pair.window_qber = window_qber;
  pair.true_qber = static_cast<double>(flips) / static_cast<double>(block_len);
  pair.duration_s = static_cast<double>(block_len) / sifted_rate;
  return pair;
}

SiftedPair generate_sifted_pair(const LinkParams& params, std::size_t block_len,
                                std::uint64_t seed) {
  params.validate();
  Rng qber_rng(derive_seed(seed, {0}));
  return generate_sifted_pair_at(sample_window_qber(params, qber_rng), params.sifted_rate,
                                 block_len, seed);
}

std::vector<double> qber_timeseries(const LinkParams& params, std::size_t windows,
                                    std::uint64_t seed) {
  if (windows == 0) throw DomainError("qber_timeseries: windows must be >= 1");
  params.validate();
  Rng rng(seed);
  std::vector<double> series(windows);
  for (auto& q : series) q = sample_window_qber(params, rng);
  return series;
}

}  // namespace qkdnet
