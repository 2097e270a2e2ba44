#include "qkdnet/toeplitz.hpp"

#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "qkdnet/errors.hpp"

namespace qkdnet {

namespace {

// Above this many rows the FFT route is cheaper than direct row evaluation.
constexpr std::size_t kFftRowThreshold = 512;

using cplx = std::complex<double>;

void fft_in_place(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  // Twiddles evaluated directly, not by recurrence, to keep rounding error at 1 ulp.
  std::vector<cplx> roots(n / 2);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(n);
    roots[k] = {std::cos(angle), std::sin(angle)};
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const cplx t = a[i + k + half] * roots[k * stride];
        a[i + k + half] = a[i + k] - t;
        a[i + k] += t;
      }
    }
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : a) v *= scale;
  }
}

}  // namespace

namespace detail {

BitString toeplitz_rows(const BitString& input, const BitString& seed, std::size_t out_len) {
  const auto in_words = input.words();
  BitString out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    const std::size_t offset = out_len - 1 - i;
    std::uint64_t acc = 0;
    for (std::size_t w = 0; w < in_words.size(); ++w) {
      acc ^= in_words[w] & seed.word_at(offset + 64 * w);
    }
    // Seed bits past the row window meet the zero tail of the input.
    out.set(i, std::popcount(acc) & 1);
  }
  return out;
}

BitString toeplitz_fft(const BitString& input, const BitString& seed, std::size_t out_len) {
  const std::size_t n = input.size();
  const std::size_t seed_len = seed.size();
  const std::size_t size = std::bit_ceil(seed_len);

  // z = reversed(input) + i * seed; one forward transform yields both spectra.
  std::vector<cplx> z(size, cplx{0.0, 0.0});
  for (std::size_t j = 0; j < n; ++j) {
    if (input.test(n - 1 - j)) z[j].real(1.0);
  }
  for (std::size_t j = 0; j < seed_len; ++j) {
    if (seed.test(j)) z[j].imag(1.0);
  }
  fft_in_place(z, false);

  std::vector<cplx> product(size);
  for (std::size_t k = 0; k < size; ++k) {
    const cplx zk = z[k];
    const cplx zc = std::conj(z[(size - k) % size]);
    const cplx xk = (zk + zc) * 0.5;
    const cplx sk = (zk - zc) * cplx{0.0, -0.5};
    product[k] = xk * sk;
  }
  fft_in_place(product, true);

  BitString out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double v = product[out_len - 1 - i + n - 1].real();
    const auto count = static_cast<long long>(std::llround(v));
    out.set(i, count & 1);
  }
  return out;
}

}  // namespace detail

BitString toeplitz_hash(const BitString& input, const BitString& seed, std::size_t out_len) {
  if (out_len == 0) throw DomainError("toeplitz_hash: out_len must be >= 1");
  const std::size_t expected = input.size() + out_len - 1;
  if (seed.size() != expected) {
    throw SeedLengthError("toeplitz_hash: seed has " + std::to_string(seed.size()) +
                          " bits, expected " + std::to_string(expected));
  }
  if (input.empty()) return BitString(out_len);
  if (out_len <= kFftRowThreshold) return detail::toeplitz_rows(input, seed, out_len);
  return detail::toeplitz_fft(input, seed, out_len);
}

}  // namespace qkdnet
