#include "qkdnet/ldpc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "qkdnet/errors.hpp"
#include "qkdnet/random.hpp"

namespace qkdnet {

namespace {

// phi(x) = -log(tanh(x / 2)) is its own inverse on (0, inf). Check-node
// updates run in the phi domain from a two-resolution lookup table.
constexpr double kPhiMax = 35.0;
constexpr double kLlrClamp = 60.0;
constexpr double kFineStep = 1.0 / 4096.0;
constexpr double kFineEnd = 2.0;
constexpr double kCoarseStep = 1.0 / 64.0;
constexpr double kCoarseEnd = 40.0;

double phi_exact(double x) {
  if (x <= 0.0) return kPhiMax;
  return std::min(kPhiMax, -std::log(std::tanh(0.5 * x)));
}

class PhiTable {
 public:
  PhiTable() {
    const auto fine_n = static_cast<std::size_t>(kFineEnd / kFineStep) + 1;
    fine_.resize(fine_n + 1);
    for (std::size_t i = 0; i <= fine_n; ++i) fine_[i] = phi_exact(static_cast<double>(i) * kFineStep);
    const auto coarse_n = static_cast<std::size_t>((kCoarseEnd - kFineEnd) / kCoarseStep) + 1;
    coarse_.resize(coarse_n + 1);
    for (std::size_t i = 0; i <= coarse_n; ++i) {
      coarse_[i] = phi_exact(kFineEnd + static_cast<double>(i) * kCoarseStep);
    }
  }

  double operator()(double x) const noexcept {
    if (x < kFineStep) return phi_exact(x);
    if (x < kFineEnd) return lerp(fine_, x / kFineStep);
    if (x < kCoarseEnd) return lerp(coarse_, (x - kFineEnd) / kCoarseStep);
    return 2.0 * std::exp(-x);
  }

 private:
  static double lerp(const std::vector<double>& table, double pos) noexcept {
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return table[i] + frac * (table[i + 1] - table[i]);
  }

  std::vector<double> fine_;
  std::vector<double> coarse_;
};

const PhiTable& phi_table() {
  static const PhiTable table;
  return table;
}

std::vector<unsigned> expand_degrees(std::size_t n, const DegreeProfile& profile) {
  if (profile.empty()) throw CodeConstructionError("build_code: empty degree profile");
  std::vector<std::size_t> counts(profile.size());
  std::size_t assigned = 0;
  std::size_t largest = 0;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    counts[i] = static_cast<std::size_t>(std::llround(profile[i].second * static_cast<double>(n)));
    assigned += counts[i];
    if (profile[i].second > profile[largest].second) largest = i;
  }
  if (assigned > n) {
    const std::size_t excess = assigned - n;
    if (counts[largest] < excess) throw CodeConstructionError("build_code: bad degree profile");
    counts[largest] -= excess;
  } else {
    counts[largest] += n - assigned;
  }
  std::vector<unsigned> degrees;
  degrees.reserve(n);
  for (std::size_t i = 0; i < profile.size(); ++i) {
    degrees.insert(degrees.end(), counts[i], profile[i].first);
  }
  std::sort(degrees.begin(), degrees.end());
  return degrees;
}

}  // namespace

DegreeProfile default_degree_profile(double rate) {
  // Degree-2 share tracks the syndrome length (about 0.9 m / n) so the
  // degree-2 subgraph stays cycle-free; the remainder splits between
  // degree 3 and a heavy degree that grows with rate.
  const double f2 = std::min(0.9 * (1.0 - rate), 0.47);
  const unsigned heavy = rate >= 0.8 ? 10 : 8;
  const double f_heavy = rate >= 0.8 ? 0.08 : 0.16;
  return {{2, f2}, {3, 1.0 - f2 - f_heavy}, {heavy, f_heavy}};
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> LdpcCode::incidences() const {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  out.reserve(edges());
  for (std::uint32_t c = 0; c < m; ++c) {
    for (std::uint32_t e = check_offsets[c]; e < check_offsets[c + 1]; ++e) {
      out.emplace_back(c, edge_var[e]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

LdpcCode build_code(std::size_t n, double rate, std::uint64_t seed) {
  return build_code(n, rate, seed, default_degree_profile(rate));
}

LdpcCode build_code(std::size_t n, double rate, std::uint64_t seed,
                    const DegreeProfile& profile) {
  if (n < 4) throw DomainError("build_code: n must be at least 4");
  if (!(rate > 0.0 && rate < 1.0)) throw DomainError("build_code: rate must lie in (0, 1)");
  const double m_real = static_cast<double>(n) * (1.0 - rate);
  const auto m = static_cast<std::size_t>(std::llround(m_real));
  if (std::abs(m_real - static_cast<double>(m)) > 1e-6 || m < 2) {
    throw DomainError("build_code: n * (1 - rate) must be an integer >= 2");
  }

  const std::vector<unsigned> degrees = expand_degrees(n, profile);
  for (unsigned d : degrees) {
    if (d < 2 || d > m) {
      throw CodeConstructionError("build_code: variable degree " + std::to_string(d) +
                                  " unsatisfiable with " + std::to_string(m) + " checks");
    }
  }

  Rng rng(derive_seed(seed, {n, m}));
  std::vector<std::vector<std::uint32_t>> var_adj(n);
  std::vector<std::vector<std::uint32_t>> check_adj(m);
  std::vector<std::uint32_t> check_stamp(m, 0);
  std::vector<std::uint32_t> var_stamp(n, 0);
  std::uint32_t stamp = 0;
  std::vector<std::uint32_t> frontier;
  std::vector<std::uint32_t> next;
  std::vector<std::uint32_t> candidates;
  std::vector<std::uint32_t> ties;

  auto pick_min_degree = [&](const std::vector<std::uint32_t>& pool) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    ties.clear();
    for (std::uint32_t c : pool) {
      const std::size_t deg = check_adj[c].size();
      if (deg < best) {
        best = deg;
        ties.clear();
      }
      if (deg == best) ties.push_back(c);
    }
    return ties[rng.below(ties.size())];
  };

  std::vector<std::uint32_t> all_checks(m);
  for (std::uint32_t c = 0; c < m; ++c) all_checks[c] = c;

  for (std::uint32_t v = 0; v < n; ++v) {
    for (unsigned k = 0; k < degrees[v]; ++k) {
      std::uint32_t chosen;
      if (k == 0) {
        chosen = pick_min_degree(all_checks);
      } else {
        // Breadth-first expansion from v over the partial graph.
        ++stamp;
        var_stamp[v] = stamp;
        frontier.clear();
        std::size_t reached = 0;
        for (std::uint32_t c : var_adj[v]) {
          check_stamp[c] = stamp;
          frontier.push_back(c);
          ++reached;
        }
        candidates.clear();
        while (true) {
          next.clear();
          for (std::uint32_t c : frontier) {
            for (std::uint32_t u : check_adj[c]) {
              if (var_stamp[u] == stamp) continue;
              var_stamp[u] = stamp;
              for (std::uint32_t c2 : var_adj[u]) {
                if (check_stamp[c2] == stamp) continue;
                check_stamp[c2] = stamp;
                next.push_back(c2);
              }
            }
          }
          if (next.empty()) {
            for (std::uint32_t c = 0; c < m; ++c) {
              if (check_stamp[c] != stamp) candidates.push_back(c);
            }
            break;
          }
          if (reached + next.size() == m) {
            candidates = next;  // the farthest checks
            break;
          }
          reached += next.size();
          frontier.swap(next);
        }
        if (candidates.empty()) {
          for (std::uint32_t c = 0; c < m; ++c) {
            if (std::find(var_adj[v].begin(), var_adj[v].end(), c) == var_adj[v].end()) {
              candidates.push_back(c);
            }
          }
        }
        chosen = pick_min_degree(candidates);
      }
      var_adj[v].push_back(chosen);
      check_adj[chosen].push_back(v);
    }
  }

  LdpcCode code;
  code.n = n;
  code.m = m;
  code.rate = 1.0 - static_cast<double>(m) / static_cast<double>(n);
  code.seed = seed;
  std::ostringstream id;
  id << "peg-n" << n << "-m" << m << "-s" << std::hex << seed;
  code.id = id.str();

  code.check_offsets.assign(m + 1, 0);
  for (std::size_t c = 0; c < m; ++c) {
    if (check_adj[c].size() < 2) {
      throw CodeConstructionError("build_code: check " + std::to_string(c) +
                                  " has fewer than 2 variables");
    }
    std::sort(check_adj[c].begin(), check_adj[c].end());
    code.check_offsets[c + 1] =
        code.check_offsets[c] + static_cast<std::uint32_t>(check_adj[c].size());
  }
  code.edge_var.reserve(code.check_offsets[m]);
  for (const auto& vars : check_adj) code.edge_var.insert(code.edge_var.end(), vars.begin(), vars.end());

  code.var_offsets.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) {
    code.var_offsets[v + 1] = code.var_offsets[v] + static_cast<std::uint32_t>(var_adj[v].size());
  }
  code.var_edges.assign(code.edges(), 0);
  std::vector<std::uint32_t> fill(code.var_offsets.begin(), code.var_offsets.end() - 1);
  for (std::uint32_t e = 0; e < code.edges(); ++e) {
    code.var_edges[fill[code.edge_var[e]]++] = e;
  }
  return code;
}

bool has_four_cycle(const LdpcCode& code) {
  std::vector<std::uint32_t> seen(code.n, std::numeric_limits<std::uint32_t>::max());
  // Pairwise overlap through check adjacency: a 4-cycle exists iff some
  // variable pair co-occurs in two distinct checks.
  std::vector<std::uint32_t> owner(code.edges());
  for (std::uint32_t c = 0; c < code.m; ++c) {
    for (std::uint32_t e = code.check_offsets[c]; e < code.check_offsets[c + 1]; ++e) owner[e] = c;
  }
  for (std::uint32_t v = 0; v < code.n; ++v) {
    for (std::uint32_t i = code.var_offsets[v]; i < code.var_offsets[v + 1]; ++i) {
      const std::uint32_t c = owner[code.var_edges[i]];
      for (std::uint32_t e = code.check_offsets[c]; e < code.check_offsets[c + 1]; ++e) {
        const std::uint32_t u = code.edge_var[e];
        if (u == v) continue;
        if (seen[u] == v) return true;
        seen[u] = v;
      }
    }
  }
  return false;
}

BitString compute_syndrome(const LdpcCode& code, const BitString& word) {
  if (word.size() != code.n) {
    throw LengthMismatchError("compute_syndrome: word has " + std::to_string(word.size()) +
                              " bits, code length is " + std::to_string(code.n));
  }
  BitString syndrome(code.m);
  for (std::size_t c = 0; c < code.m; ++c) {
    bool parity = false;
    for (std::uint32_t e = code.check_offsets[c]; e < code.check_offsets[c + 1]; ++e) {
      parity ^= word.test(code.edge_var[e]);
    }
    if (parity) syndrome.set(c, true);
  }
  return syndrome;
}

std::vector<std::size_t> prefix_ranks(const LdpcCode& code,
                                      std::span<const std::uint32_t> columns) {
  const std::size_t words = (code.m + 63) / 64;
  std::vector<std::uint32_t> owner(code.edges());
  for (std::uint32_t c = 0; c < code.m; ++c) {
    for (std::uint32_t e = code.check_offsets[c]; e < code.check_offsets[c + 1]; ++e) owner[e] = c;
  }
  // basis[r] holds a reduced column whose lowest set row is r.
  std::vector<std::vector<std::uint64_t>> basis(code.m);
  std::vector<std::size_t> ranks;
  ranks.reserve(columns.size() + 1);
  ranks.push_back(0);
  std::size_t rank = 0;
  std::vector<std::uint64_t> col(words);
  for (std::uint32_t v : columns) {
    if (v >= code.n) throw DomainError("column_rank: column index out of range");
    std::fill(col.begin(), col.end(), 0);
    for (std::uint32_t i = code.var_offsets[v]; i < code.var_offsets[v + 1]; ++i) {
      const std::uint32_t r = owner[code.var_edges[i]];
      col[r / 64] ^= std::uint64_t{1} << (r % 64);
    }
    while (true) {
      std::size_t w = 0;
      while (w < words && col[w] == 0) ++w;
      if (w == words) break;
      const std::size_t r = w * 64 + static_cast<std::size_t>(std::countr_zero(col[w]));
      if (basis[r].empty()) {
        basis[r] = col;
        ++rank;
        break;
      }
      for (std::size_t k = w; k < words; ++k) col[k] ^= basis[r][k];
    }
    ranks.push_back(rank);
  }
  return ranks;
}

std::size_t column_rank(const LdpcCode& code, std::span<const std::uint32_t> columns) {
  return prefix_ranks(code, columns).back();
}

double bsc_llr(double q) {
  if (!(q > 0.0 && q < 0.5)) throw DomainError("bsc_llr: q must lie in (0, 0.5)");
  return std::log((1.0 - q) / q);
}

DecodeResult bp_decode(const LdpcCode& code, std::span<const double> prior,
                       const BitString& target_syndrome, unsigned max_iter) {
  if (prior.size() != code.n) throw LengthMismatchError("bp_decode: prior length != n");
  if (target_syndrome.size() != code.m) {
    throw LengthMismatchError("bp_decode: syndrome length != m");
  }
  const std::size_t n_edges = code.edges();
  const PhiTable& phi = phi_table();
  std::vector<double> v2c(n_edges);
  std::vector<double> c2v(n_edges, 0.0);
  std::vector<double> mag(n_edges);

  DecodeResult result;
  result.word = BitString(code.n);
  result.posterior.assign(prior.begin(), prior.end());

  auto satisfied = [&](const BitString& word) {
    for (std::size_t c = 0; c < code.m; ++c) {
      bool parity = target_syndrome.test(c);
      for (std::uint32_t e = code.check_offsets[c]; e < code.check_offsets[c + 1]; ++e) {
        parity ^= word.test(code.edge_var[e]);
      }
      if (parity) return false;
    }
    return true;
  };

  for (std::size_t v = 0; v < code.n; ++v) {
    if (prior[v] < 0.0) result.word.set(v, true);
  }
  for (std::size_t e = 0; e < n_edges; ++e) v2c[e] = prior[code.edge_var[e]];
  if (satisfied(result.word)) {
    result.converged = true;
    return result;
  }

  for (unsigned it = 1; it <= max_iter; ++it) {
    for (std::size_t c = 0; c < code.m; ++c) {
      const std::uint32_t begin = code.check_offsets[c];
      const std::uint32_t end = code.check_offsets[c + 1];
      bool negative = target_syndrome.test(c);
      double sum = 0.0;
      for (std::uint32_t e = begin; e < end; ++e) {
        negative ^= v2c[e] < 0.0;
        mag[e] = phi(std::abs(v2c[e]));
        sum += mag[e];
      }
      for (std::uint32_t e = begin; e < end; ++e) {
        const double out = phi(std::max(0.0, sum - mag[e]));
        c2v[e] = (negative ^ (v2c[e] < 0.0)) ? -out : out;
      }
    }
    for (std::size_t v = 0; v < code.n; ++v) {
      double total = prior[v];
      for (std::uint32_t i = code.var_offsets[v]; i < code.var_offsets[v + 1]; ++i) {
        total += c2v[code.var_edges[i]];
      }
      result.posterior[v] = total;
      result.word.set(v, total < 0.0);
      for (std::uint32_t i = code.var_offsets[v]; i < code.var_offsets[v + 1]; ++i) {
        const std::uint32_t e = code.var_edges[i];
        v2c[e] = std::clamp(total - c2v[e], -kLlrClamp, kLlrClamp);
      }
    }
    result.iterations = it;
    if (satisfied(result.word)) {
      result.converged = true;
      return result;
    }
  }
  return result;
}

DecodeResult bp_decode(const LdpcCode& code, const BitString& noisy,
                       const BitString& target_syndrome, double llr_prior,
                       unsigned max_iter) {
  if (noisy.size() != code.n) throw LengthMismatchError("bp_decode: noisy length != n");
  std::vector<double> prior(code.n);
  for (std::size_t v = 0; v < code.n; ++v) prior[v] = noisy.test(v) ? -llr_prior : llr_prior;
  return bp_decode(code, prior, target_syndrome, max_iter);
}

}  // namespace qkdnet
