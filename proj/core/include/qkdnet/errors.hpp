#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qkdnet {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class LengthMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Toeplitz seed does not have input_len + out_len - 1 bits.
class SeedLengthError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class CodeConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ChannelClosedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FrameFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Authentication key pool cannot supply the requested one-time-pad bits.
class PoolExhaustedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Multiphoton emissions dominate detections; no single-photon bound exists.
class EstimateInvalidError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Estimated single-photon QBER reached the critical value.
class ProtocolAbort : public std::runtime_error {
 public:
  ProtocolAbort(const std::string& what, double q1)
      : std::runtime_error(what), q1_(q1) {}
  double q1() const noexcept { return q1_; }

 private:
  double q1_;
};

/// Secret length does not cover the authentication reservation.
class InsufficientKeyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A relay hop lacks unconsumed pad bits.
class InsufficientKeyMaterialError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PathNotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::size_t line)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what
                                : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace qkdnet
