#include <gtest/gtest.h>

#include <cmath>

#include "qkdnet/errors.hpp"
#include "qkdnet/security.hpp"

namespace qkdnet {
namespace {

TEST(BinaryEntropy, Endpoints) {
  EXPECT_EQ(binary_entropy(0.0), 0.0);
  EXPECT_EQ(binary_entropy(1.0), 0.0);
  EXPECT_EQ(binary_entropy(0.5), 1.0);
}

TEST(BinaryEntropy, FrozenValues) {
  // mpmath at 40 digits.
  EXPECT_NEAR(binary_entropy(0.03729), 0.229725889702019, 1e-12);
  EXPECT_NEAR(binary_entropy(0.01), 0.0807931358959112, 1e-12);
  EXPECT_NEAR(binary_entropy(0.03), 0.194391857831576, 1e-12);
  EXPECT_NEAR(binary_entropy(0.05), 0.286396957115956, 1e-12);
  EXPECT_NEAR(binary_entropy(0.11), 0.499915958164528, 1e-12);
  EXPECT_NEAR(binary_entropy(0.25), 0.811278124459133, 1e-12);
}

TEST(BinaryEntropy, SymmetricAndConcave) {
  // Dyadic q keeps 1 - q exact.
  for (int i = 1; i < 1024; ++i) {
    const double q = i / 1024.0;
    EXPECT_EQ(binary_entropy(q), binary_entropy(1.0 - q)) << q;
    const double mid = binary_entropy(q);
    const double lo = binary_entropy(q - 0.0005);
    const double hi = binary_entropy(q + 0.0005);
    EXPECT_GE(mid + 1e-15, 0.5 * (lo + hi)) << q;
  }
}

TEST(BinaryEntropy, RejectsOutOfDomain) {
  EXPECT_THROW(binary_entropy(-0.1), DomainError);
  EXPECT_THROW(binary_entropy(1.1), DomainError);
  EXPECT_THROW(binary_entropy(std::nan("")), DomainError);
}

TEST(SecurityParams, AuthEpsilonIsDerived) {
  const auto p = SecurityParams::defaults();
  EXPECT_EQ(p.eps_auth(), 2.0 * std::ldexp(1.0, -40));
  EXPECT_THROW(SecurityParams(0.0, 1e-12, 40), DomainError);
  EXPECT_THROW(SecurityParams(2e-11, 1.0, 40), DomainError);
  EXPECT_THROW(SecurityParams(2e-11, 1e-12, 0), DomainError);
}

TEST(ComposeEpsilon, FrozenValues) {
  const auto r = compose_epsilon(SecurityParams::defaults(), 3);
  EXPECT_NEAR(r.eps_qkd, 2.28190e-11, 1e-15);
  EXPECT_NEAR(r.eps_qkdnet, 4.92760e-11, 1e-15);
  EXPECT_LT(r.eps_qkd, 2.3e-11);
  EXPECT_LT(r.eps_qkdnet, 5e-11);
  EXPECT_NEAR(compose_epsilon(SecurityParams::defaults(), 11).eps_qkdnet, 2.46380e-10, 1e-14);
}

TEST(ComposeEpsilon, MonotoneInEveryInput) {
  const SecurityParams base(2e-11, 1e-12, 40);
  const auto r = compose_epsilon(base, 3);
  EXPECT_GT(compose_epsilon(SecurityParams(3e-11, 1e-12, 40), 3).eps_qkdnet, r.eps_qkdnet);
  EXPECT_GT(compose_epsilon(SecurityParams(2e-11, 2e-12, 40), 3).eps_qkdnet, r.eps_qkdnet);
  EXPECT_GT(compose_epsilon(SecurityParams(2e-11, 1e-12, 39), 3).eps_qkdnet, r.eps_qkdnet);
  for (std::size_t n = 2; n < 20; ++n) {
    EXPECT_LT(compose_epsilon(base, n).eps_qkdnet, compose_epsilon(base, n + 1).eps_qkdnet);
  }
  EXPECT_THROW(compose_epsilon(base, 1), DomainError);
  EXPECT_THROW(compose_epsilon(base, 0), DomainError);
}

}  // namespace
}  // namespace qkdnet
