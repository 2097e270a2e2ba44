#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qkdnet {

class Rng;

/// Arbitrary-length bit sequence.
///
/// Bits are packed most-significant-bit first into 64-bit words, so bit i of
/// the string is bit (63 - i % 64) of word i / 64. Serialized to bytes the
/// layout is the canonical wire form: 8 bits per byte, MSB first. Bits past
/// size() in the last word are always zero.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::size_t n_bits);

  /// Parses a string of '0'/'1' characters.
  static BitString from_string(std::string_view bits);
  /// Unpacks the first n_bits of an MSB-first byte buffer.
  static BitString from_bytes(std::span<const std::uint8_t> bytes, std::size_t n_bits);
  static BitString random(std::size_t n_bits, Rng& rng);
  static BitString ones(std::size_t n_bits);

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }

  bool test(std::size_t i) const noexcept {
    return (words_[i >> 6] >> (63 - (i & 63))) & 1U;
  }
  bool operator[](std::size_t i) const noexcept { return test(i); }
  void set(std::size_t i, bool value) noexcept {
    const std::uint64_t mask = std::uint64_t{1} << (63 - (i & 63));
    if (value) {
      words_[i >> 6] |= mask;
    } else {
      words_[i >> 6] &= ~mask;
    }
  }
  void flip(std::size_t i) noexcept { words_[i >> 6] ^= std::uint64_t{1} << (63 - (i & 63)); }

  void push_back(bool bit);
  void append(const BitString& other);
  void resize(std::size_t n_bits);
  /// Copy of bits [pos, pos + len).
  BitString slice(std::size_t pos, std::size_t len) const;

  /// The 64 bits starting at bit_offset, MSB first; bits past the end read as zero.
  std::uint64_t word_at(std::size_t bit_offset) const noexcept;

  std::size_t popcount() const noexcept;
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  std::vector<std::uint8_t> to_bytes() const;
  std::string to_string() const;

  BitString& operator^=(const BitString& other);
  bool operator==(const BitString& other) const noexcept = default;

 private:
  void clear_tail() noexcept;

  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
};

/// Elementwise exclusive-or; throws LengthMismatchError on unequal lengths.
BitString xor_combine(const BitString& a, const BitString& b);

std::size_t hamming_distance(const BitString& a, const BitString& b);

}  // namespace qkdnet
