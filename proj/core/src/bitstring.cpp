#include "qkdnet/bitstring.hpp"

#include <bit>

#include "qkdnet/errors.hpp"
#include "qkdnet/random.hpp"

namespace qkdnet {

namespace {

constexpr std::size_t words_for(std::size_t bits) { return (bits + 63) / 64; }

}  // namespace

BitString::BitString(std::size_t n_bits) : words_(words_for(n_bits), 0), size_(n_bits) {}

BitString BitString::from_string(std::string_view bits) {
  BitString out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1') {
      out.set(i, true);
    } else if (bits[i] != '0') {
      throw std::invalid_argument("BitString: invalid character in bit string");
    }
  }
  return out;
}

BitString BitString::from_bytes(std::span<const std::uint8_t> bytes, std::size_t n_bits) {
  if (bytes.size() * 8 < n_bits) {
    throw LengthMismatchError("BitString: byte buffer shorter than bit length");
  }
  BitString out(n_bits);
  const std::size_t n_bytes = (n_bits + 7) / 8;
  for (std::size_t b = 0; b < n_bytes; ++b) {
    out.words_[b / 8] |= std::uint64_t{bytes[b]} << (56 - 8 * (b % 8));
  }
  out.clear_tail();
  return out;
}

BitString BitString::random(std::size_t n_bits, Rng& rng) {
  BitString out(n_bits);
  for (auto& w : out.words_) w = rng();
  out.clear_tail();
  return out;
}

BitString BitString::ones(std::size_t n_bits) {
  BitString out(n_bits);
  for (auto& w : out.words_) w = ~std::uint64_t{0};
  out.clear_tail();
  return out;
}

void BitString::push_back(bool bit) {
  if ((size_ & 63) == 0) words_.push_back(0);
  ++size_;
  set(size_ - 1, bit);
}

void BitString::append(const BitString& other) {
  const std::size_t shift = size_ & 63;
  if (shift == 0) {
    words_.insert(words_.end(), other.words_.begin(), other.words_.end());
  } else {
    words_.reserve(words_for(size_ + other.size_));
    for (std::uint64_t w : other.words_) {
      words_.back() |= w >> shift;
      words_.push_back(w << (64 - shift));
    }
  }
  size_ += other.size_;
  words_.resize(words_for(size_));
}

void BitString::resize(std::size_t n_bits) {
  words_.resize(words_for(n_bits), 0);
  size_ = n_bits;
  clear_tail();
}

std::uint64_t BitString::word_at(std::size_t bit_offset) const noexcept {
  const std::size_t w = bit_offset >> 6;
  const std::size_t shift = bit_offset & 63;
  if (w >= words_.size()) return 0;
  std::uint64_t hi = words_[w] << shift;
  if (shift != 0 && w + 1 < words_.size()) hi |= words_[w + 1] >> (64 - shift);
  return hi;
}

BitString BitString::slice(std::size_t pos, std::size_t len) const {
  if (pos + len > size_) throw std::out_of_range("BitString::slice out of range");
  BitString out(len);
  for (std::size_t w = 0; w < out.words_.size(); ++w) out.words_[w] = word_at(pos + 64 * w);
  out.clear_tail();
  return out;
}

std::size_t BitString::popcount() const noexcept {
  std::size_t total = 0;
  for (std::uint64_t w : words_) total += static_cast<std::size_t>(std::popcount(w));
  return total;
}

std::vector<std::uint8_t> BitString::to_bytes() const {
  std::vector<std::uint8_t> out((size_ + 7) / 8);
  for (std::size_t b = 0; b < out.size(); ++b) {
    out[b] = static_cast<std::uint8_t>(words_[b / 8] >> (56 - 8 * (b % 8)));
  }
  return out;
}

std::string BitString::to_string() const {
  std::string out(size_, '0');
  for (std::size_t i = 0; i < size_; ++i) {
    if (test(i)) out[i] = '1';
  }
  return out;
}

BitString& BitString::operator^=(const BitString& other) {
  if (other.size_ != size_) throw LengthMismatchError("BitString: xor of unequal lengths");
  for (std::size_t w = 0; w < words_.size(); ++w) words_[w] ^= other.words_[w];
  return *this;
}

void BitString::clear_tail() noexcept {
  const std::size_t rem = size_ & 63;
  if (rem != 0 && !words_.empty()) words_.back() &= ~std::uint64_t{0} << (64 - rem);
}

BitString xor_combine(const BitString& a, const BitString& b) {
  BitString out = a;
  out ^= b;
  return out;
}

std::size_t hamming_distance(const BitString& a, const BitString& b) {
  if (a.size() != b.size()) throw LengthMismatchError("hamming_distance: unequal lengths");
  std::size_t d = 0;
  auto wa = a.words();
  auto wb = b.words();
  for (std::size_t i = 0; i < wa.size(); ++i) {
    d += static_cast<std::size_t>(std::popcount(wa[i] ^ wb[i]));
  }
  return d;
}

}  // namespace qkdnet
