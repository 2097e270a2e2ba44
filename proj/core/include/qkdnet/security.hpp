#pragma once

#include <cstddef>

namespace qkdnet {

/// Shannon entropy of a Bernoulli(q) source in bits; 0 log 0 is taken as 0.
double binary_entropy(double q);

/// Failure-probability budget of one link's post-processing.
///
/// eps_auth is derived, never set: it is exactly 2 * 2^-l_auth.
class SecurityParams {
 public:
  SecurityParams(double eps_ver, double eps_pa, unsigned l_auth);

  /// Values used by the demonstrated network: 2e-11, 1e-12 and 40-bit tags.
  static SecurityParams defaults() { return {2e-11, 1e-12, 40}; }

  double eps_ver() const noexcept { return eps_ver_; }
  double eps_pa() const noexcept { return eps_pa_; }
  double eps_auth() const noexcept { return eps_auth_; }
  unsigned l_auth() const noexcept { return l_auth_; }

  bool operator==(const SecurityParams&) const = default;

 private:
  double eps_ver_;
  double eps_pa_;
  double eps_auth_;
  unsigned l_auth_;
};

struct EpsilonReport {
  double eps_qkd = 0.0;
  double eps_qkdnet = 0.0;
  std::size_t node_count = 0;
};

/// eps_qkd = eps_ver + eps_pa + eps_auth; eps_qkdnet = (N - 1)(eps_qkd + eps_auth).
EpsilonReport compose_epsilon(const SecurityParams& params, std::size_t node_count);

}  // namespace qkdnet
