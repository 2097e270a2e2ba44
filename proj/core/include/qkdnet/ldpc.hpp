#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qkdnet/bitstring.hpp"

namespace qkdnet {

/// Variable-node degree distribution in node perspective: (degree, fraction).
using DegreeProfile = std::vector<std::pair<unsigned, double>>;

/// Degree profile tuned for binary symmetric channels at the given rate.
DegreeProfile default_degree_profile(double rate);

/// Sparse parity-check matrix of a binary LDPC code.
///
/// Edges are stored once, ordered by check. For check c its edges are
/// [check_offsets[c], check_offsets[c + 1]) and edge e touches variable
/// edge_var[e]. For variable v, var_edges[var_offsets[v] .. var_offsets[v+1])
/// lists the indices of its edges.
struct LdpcCode {
  std::size_t n = 0;
  std::size_t m = 0;
  double rate = 0.0;
  std::uint64_t seed = 0;
  std::string id;

  std::vector<std::uint32_t> check_offsets;
  std::vector<std::uint32_t> edge_var;
  std::vector<std::uint32_t> var_offsets;
  std::vector<std::uint32_t> var_edges;

  std::size_t edges() const noexcept { return edge_var.size(); }
  std::size_t check_degree(std::size_t c) const noexcept {
    return check_offsets[c + 1] - check_offsets[c];
  }
  std::size_t var_degree(std::size_t v) const noexcept {
    return var_offsets[v + 1] - var_offsets[v];
  }
  /// (check, variable) incidences sorted by check then variable.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> incidences() const;
};

/// Progressive-edge-growth construction. m = n(1 - rate) must be integral.
/// Deterministic in (n, rate, seed). Throws CodeConstructionError when the
/// degree constraints cannot be met.
LdpcCode build_code(std::size_t n, double rate, std::uint64_t seed);
LdpcCode build_code(std::size_t n, double rate, std::uint64_t seed,
                    const DegreeProfile& profile);

/// True when two variables share two or more checks (girth 4).
bool has_four_cycle(const LdpcCode& code);

BitString compute_syndrome(const LdpcCode& code, const BitString& word);

/// GF(2) rank of the parity-check columns selected by `columns`.
std::size_t column_rank(const LdpcCode& code, std::span<const std::uint32_t> columns);

/// ranks[i] = column_rank of the first i selected columns; size columns + 1.
std::vector<std::size_t> prefix_ranks(const LdpcCode& code,
                                      std::span<const std::uint32_t> columns);

struct DecodeResult {
  BitString word;
  bool converged = false;
  unsigned iterations = 0;
  /// Posterior log-likelihood ratios log(P(0)/P(1)) after the last iteration.
  std::vector<double> posterior;
};

/// Log-likelihood ratio log((1 - q)/q) of a received bit on a BSC(q).
double bsc_llr(double q);

/// Sum-product decoding towards a target syndrome.
///
/// `prior` holds one LLR per variable (positive favours 0). Zero marks an
/// erased (punctured) position. Hard decisions at LLR exactly 0 resolve to 0.
/// Stops early once the hard decision satisfies the syndrome; iteration 0 is
/// the prior itself.
DecodeResult bp_decode(const LdpcCode& code, std::span<const double> prior,
                       const BitString& target_syndrome, unsigned max_iter);

/// Uniform-prior convenience form: every bit of `noisy` gets magnitude llr_prior.
DecodeResult bp_decode(const LdpcCode& code, const BitString& noisy,
                       const BitString& target_syndrome, double llr_prior,
                       unsigned max_iter);

}  // namespace qkdnet
