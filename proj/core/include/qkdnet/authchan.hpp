#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "qkdnet/bitstring.hpp"
#include "qkdnet/random.hpp"

namespace qkdnet {

inline constexpr std::uint8_t kProtocolVersion = 0x01;
inline constexpr std::size_t kFrameHeaderBytes = 6;
/// Pre-shared secret provisioned per node pair for the first rounds.
inline constexpr std::size_t kBootstrapKeyBits = 1024;

enum class MessageType : std::uint8_t {
  kPing = 0x00,
  kSyndrome = 0x10,
  kDisclosure = 0x11,
  kVerificationTag = 0x12,
  kVerificationVerdict = 0x13,
  kPaSeed = 0x20,
  kBlockAccounting = 0x21,
  kAuthTag = 0x30,
  kAuthVerdict = 0x31,
  kRelayCiphertext = 0x40,
};

bool is_known_message_type(std::uint8_t code) noexcept;

struct Frame {
  MessageType type = MessageType::kPing;
  std::vector<std::uint8_t> payload;
};

/// Wire form: u32 big-endian payload length, version byte, type byte, payload.
std::vector<std::uint8_t> encode_frame(MessageType type, std::span<const std::uint8_t> payload);
/// Parses exactly one frame; throws FrameFormatError on any malformation.
Frame decode_frame(std::span<const std::uint8_t> bytes);

/// Big-endian payload builder.
class ByteWriter {
 public:
  ByteWriter& u8(std::uint8_t v);
  ByteWriter& u16(std::uint16_t v);
  ByteWriter& u32(std::uint32_t v);
  ByteWriter& u64(std::uint64_t v);
  ByteWriter& f64(double v);
  /// Packed bits without a length prefix.
  ByteWriter& bits(const BitString& b);
  ByteWriter& bytes(std::span<const std::uint8_t> b);

  const std::vector<std::uint8_t>& data() const noexcept { return out_; }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

/// Big-endian payload reader; throws FrameFormatError on underflow.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  BitString bits(std::size_t n_bits);
  std::size_t remaining() const noexcept { return in_.size() - pos_; }
  void expect_end() const;

 private:
  std::span<const std::uint8_t> need(std::size_t n);
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

enum class Endpoint : std::uint8_t { kA, kB };
enum class Direction : std::uint8_t { kAToB, kBToA };

constexpr Endpoint peer(Endpoint e) noexcept {
  return e == Endpoint::kA ? Endpoint::kB : Endpoint::kA;
}
constexpr Direction direction_from(Endpoint sender) noexcept {
  return sender == Endpoint::kA ? Direction::kAToB : Direction::kBToA;
}

/// All traffic of one direction since the last successful authentication.
struct ChannelTranscript {
  Direction direction = Direction::kAToB;
  std::vector<std::uint8_t> bytes;

  std::size_t bit_length() const noexcept { return bytes.size() * 8; }
  BitString bits() const { return BitString::from_bytes(bytes, bit_length()); }
};

/// In-process reliable ordered transport between the two nodes of one pair.
///
/// Each endpoint keeps its own copy of the outgoing and incoming transcripts;
/// a tamper hook models an active adversary that rewrites frames in flight,
/// so the copies diverge exactly as they would on a real line. Authentication
/// frames (0x30, 0x31) are not transcribed.
class ClassicalChannel {
 public:
  using TamperHook = std::function<void(std::vector<std::uint8_t>& frame)>;

  ClassicalChannel() = default;
  ClassicalChannel(const ClassicalChannel&) = delete;
  ClassicalChannel& operator=(const ClassicalChannel&) = delete;

  /// Returns the encoded frame size in bytes. Throws ChannelClosedError.
  std::size_t send(Endpoint from, MessageType type, std::span<const std::uint8_t> payload);
  /// Pops the next frame addressed to `at`. Throws ChannelClosedError when
  /// closed, FrameFormatError when nothing is pending.
  Frame receive(Endpoint at);
  /// Receives and checks the type; throws FrameFormatError on mismatch.
  Frame expect(Endpoint at, MessageType type);
  bool has_pending(Endpoint at) const;

  void close();
  bool is_open() const;

  void set_tamper(TamperHook hook);

  /// Frames `who` sent in the current round, as sent.
  ChannelTranscript outgoing(Endpoint who) const;
  /// Frames `who` received in the current round, as received.
  ChannelTranscript incoming(Endpoint who) const;
  void reset_transcripts();

  /// Cumulative per-type frame log since construction, for audits.
  struct LogEntry {
    Endpoint from;
    MessageType type;
    std::vector<std::uint8_t> payload;
  };
  std::vector<LogEntry> log() const;
  std::size_t total_bytes() const;

 private:
  struct Side {
    std::deque<std::vector<std::uint8_t>> inbox;
    std::vector<std::uint8_t> sent;
    std::vector<std::uint8_t> received;
  };
  Side& side(Endpoint e) { return e == Endpoint::kA ? a_ : b_; }
  const Side& side(Endpoint e) const { return e == Endpoint::kA ? a_ : b_; }

  mutable std::mutex mutex_;
  Side a_;
  Side b_;
  bool open_ = true;
  TamperHook tamper_;
  std::vector<LogEntry> log_;
  std::size_t total_bytes_ = 0;
};

/// Secret bits reserved for one-time-pad encryption of authentication tags.
/// Consumption is first-in first-out, so pre-shared bootstrap bits are spent
/// before any quantum-derived deposit.
class AuthKeyPool {
 public:
  AuthKeyPool() = default;
  explicit AuthKeyPool(BitString preshared);

  /// Throws PoolExhaustedError if fewer than n_bits remain.
  BitString take(std::size_t n_bits);
  void deposit(const BitString& bits);

  std::size_t available() const;
  std::size_t consumed() const;
  std::size_t deposited() const;
  std::size_t preshared() const { return preshared_; }

 private:
  mutable std::mutex mutex_;
  BitString bits_;
  std::size_t cursor_ = 0;
  std::size_t consumed_base_ = 0;
  std::size_t preshared_ = 0;
};

/// Public Toeplitz seed material expanded from a 64-bit value.
BitString expand_seed(std::uint64_t seed, std::size_t n_bits);

/// toeplitz_hash(transcript, seed, otp.size()) XOR otp.
BitString mac_tag(const ChannelTranscript& transcript, const BitString& seed,
                  const BitString& otp);

/// Recomputes the tag over the local copy and compares.
bool verify_tag(const ChannelTranscript& local, const BitString& remote_tag,
                const BitString& seed, const BitString& otp);

/// Runs the end-of-round authenticity check for one node pair.
///
/// Each side tags its incoming transcript and the other side checks it
/// against its outgoing copy, consuming l_auth pad bits per tag from each
/// pool copy (2 * l_auth per round). Success resets the transcripts; failure
/// latches an alarm and halts the pair.
class LinkAuthenticator {
 public:
  LinkAuthenticator(ClassicalChannel& channel, AuthKeyPool& pool_a, AuthKeyPool& pool_b,
                    unsigned l_auth, std::uint64_t public_seed);

  /// True when both directions verified. Throws PoolExhaustedError.
  bool run_round();

  bool halted() const noexcept { return halted_; }
  std::size_t completed_rounds() const noexcept { return rounds_; }
  unsigned l_auth() const noexcept { return l_auth_; }

 private:
  bool tag_direction(Endpoint tagger);

  ClassicalChannel& channel_;
  AuthKeyPool& pool_a_;
  AuthKeyPool& pool_b_;
  unsigned l_auth_;
  Rng public_rng_;
  bool halted_ = false;
  std::size_t rounds_ = 0;
};

}  // namespace qkdnet
