#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "qkdnet/errors.hpp"
#include "qkdnet/ldpc.hpp"
#include "qkdnet/random.hpp"

namespace qkdnet {
namespace {

const LdpcCode& small_code() {
  static const LdpcCode code = build_code(1000, 0.5, 77);
  return code;
}

TEST(Ldpc, ConstructionIsDeterministic) {
  const LdpcCode a = build_code(600, 0.75, 5);
  const LdpcCode b = build_code(600, 0.75, 5);
  EXPECT_EQ(a.incidences(), b.incidences());
  EXPECT_NE(a.incidences(), build_code(600, 0.75, 6).incidences());
}

TEST(Ldpc, ShapeAndGirth) {
  const LdpcCode& c = small_code();
  EXPECT_EQ(c.n, 1000u);
  EXPECT_EQ(c.m, 500u);
  EXPECT_FALSE(has_four_cycle(c));
  std::size_t from_vars = 0;
  for (std::size_t v = 0; v < c.n; ++v) {
    EXPECT_GE(c.var_degree(v), 2u);
    from_vars += c.var_degree(v);
  }
  EXPECT_EQ(from_vars, c.edges());
}

TEST(Ldpc, RejectsNonIntegralCheckCount) {
  EXPECT_THROW(build_code(1001, 0.5, 1), DomainError);
}

TEST(Ldpc, SyndromeIsLinear) {
  const LdpcCode& c = small_code();
  Rng rng(41);
  for (int t = 0; t < 50; ++t) {
    const auto a = BitString::random(c.n, rng);
    const auto b = BitString::random(c.n, rng);
    EXPECT_EQ(compute_syndrome(c, xor_combine(a, b)),
              xor_combine(compute_syndrome(c, a), compute_syndrome(c, b)));
  }
  EXPECT_EQ(compute_syndrome(c, BitString(c.n)), BitString(c.m));
}

TEST(Ldpc, DecodesLowNoise) {
  const LdpcCode& c = small_code();
  Rng rng(43);
  int ok = 0;
  for (int t = 0; t < 20; ++t) {
    const auto x = BitString::random(c.n, rng);
    BitString y = x;
    for (std::size_t i = 0; i < c.n; ++i) {
      if (rng.bernoulli(0.03)) y.flip(i);
    }
    const auto r = bp_decode(c, y, compute_syndrome(c, x), bsc_llr(0.03), 60);
    if (r.converged && r.word == x) ++ok;
  }
  EXPECT_GE(ok, 19);
}

TEST(Ldpc, ConvergedWordSatisfiesSyndrome) {
  const LdpcCode& c = small_code();
  Rng rng(47);
  const auto x = BitString::random(c.n, rng);
  BitString y = x;
  for (int k = 0; k < 15; ++k) y.flip(rng.below(c.n));
  const auto target = compute_syndrome(c, x);
  const auto r = bp_decode(c, y, target, bsc_llr(0.02), 60);
  ASSERT_TRUE(r.converged);
  EXPECT_EQ(compute_syndrome(c, r.word), target);
  EXPECT_EQ(r.posterior.size(), c.n);
}

TEST(Ldpc, ExactWordConvergesAtIterationZero) {
  const LdpcCode& c = small_code();
  Rng rng(53);
  const auto x = BitString::random(c.n, rng);
  const auto r = bp_decode(c, x, compute_syndrome(c, x), bsc_llr(0.01), 60);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 0u);
}

TEST(Ldpc, BscLlr) {
  EXPECT_NEAR(bsc_llr(0.1), std::log(9.0), 1e-12);
  EXPECT_THROW(bsc_llr(0.0), DomainError);
  EXPECT_THROW(bsc_llr(0.5), DomainError);
}

TEST(Ldpc, PrefixRanksAgreeWithColumnRank) {
  const LdpcCode& c = small_code();
  std::vector<std::uint32_t> cols(c.n);
  std::iota(cols.begin(), cols.end(), 0U);
  const auto ranks = prefix_ranks(c, cols);
  ASSERT_EQ(ranks.size(), c.n + 1);
  EXPECT_EQ(ranks[0], 0u);
  for (std::size_t i = 1; i < ranks.size(); ++i) {
    EXPECT_LE(ranks[i - 1], ranks[i]);
    EXPECT_LE(ranks[i] - ranks[i - 1], 1u);
  }
  EXPECT_LE(ranks.back(), c.m);
  for (std::size_t k : {1u, 10u, 300u, 700u}) {
    EXPECT_EQ(ranks[k], column_rank(c, std::span(cols).first(k)));
  }
  const std::uint32_t bad[] = {static_cast<std::uint32_t>(c.n)};
  EXPECT_THROW(prefix_ranks(c, bad), DomainError);
}

}  // namespace
}  // namespace qkdnet
