#include "qkdnet/security.hpp"

#include <cmath>
#include <string>

#include "qkdnet/errors.hpp"

namespace qkdnet {

double binary_entropy(double q) {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw DomainError("binary_entropy: q must lie in [0, 1]");
  }
  if (q == 0.0 || q == 1.0) return 0.0;
  return -q * std::log2(q) - (1.0 - q) * std::log2(1.0 - q);
}

SecurityParams::SecurityParams(double eps_ver, double eps_pa, unsigned l_auth)
    : eps_ver_(eps_ver),
      eps_pa_(eps_pa),
      eps_auth_(2.0 * std::ldexp(1.0, -static_cast<int>(l_auth))),
      l_auth_(l_auth) {
  auto in_unit = [](double e) { return e > 0.0 && e < 1.0; };
  if (!in_unit(eps_ver) || !in_unit(eps_pa)) {
    throw DomainError("SecurityParams: eps values must lie in (0, 1)");
  }
  // l_auth = 1 would give eps_auth = 1.
  if (l_auth < 2) throw DomainError("SecurityParams: l_auth must be at least 2 bits");
}

EpsilonReport compose_epsilon(const SecurityParams& params, std::size_t node_count) {
  if (node_count < 2) {
    throw DomainError("compose_epsilon: a network needs at least 2 nodes, got " +
                      std::to_string(node_count));
  }
  EpsilonReport report;
  report.node_count = node_count;
  report.eps_qkd = params.eps_ver() + params.eps_pa() + params.eps_auth();
  report.eps_qkdnet =
      static_cast<double>(node_count - 1) * (report.eps_qkd + params.eps_auth());
  return report;
}

}  // namespace qkdnet
