#pragma once

#include <cstddef>

#include "qkdnet/bitstring.hpp"

namespace qkdnet {

/// Toeplitz universal hash of `input` to `out_len` bits.
///
/// The (out_len x n) matrix is defined by a seed of n + out_len - 1 bits:
/// row i is the seed window starting at bit out_len - 1 - i, so output bit i
/// is the parity of input AND seed[out_len - 1 - i, out_len - 1 - i + n).
/// Throws SeedLengthError if the seed length is wrong.
BitString toeplitz_hash(const BitString& input, const BitString& seed, std::size_t out_len);

namespace detail {

/// Row-by-row evaluation; cost grows as out_len * n / 64.
BitString toeplitz_rows(const BitString& input, const BitString& seed, std::size_t out_len);

/// GF(2) correlation through a floating-point FFT convolution.
BitString toeplitz_fft(const BitString& input, const BitString& seed, std::size_t out_len);

}  // namespace detail

}  // namespace qkdnet
