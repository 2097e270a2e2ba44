#include "qkdnet/authchan.hpp"

#include <bit>
#include <cstring>
#include <string>

#include "qkdnet/errors.hpp"
#include "qkdnet/toeplitz.hpp"

namespace qkdnet {

bool is_known_message_type(std::uint8_t code) noexcept {
  switch (code) {
    case 0x00:
    case 0x10:
    case 0x11:
    case 0x12:
    case 0x13:
    case 0x20:
    case 0x21:
    case 0x30:
    case 0x31:
    case 0x40:
      return true;
    default:
      return false;
  }
}

std::vector<std::uint8_t> encode_frame(MessageType type, std::span<const std::uint8_t> payload) {
  if (payload.size() > 0xFFFFFFFFu) throw FrameFormatError("encode_frame: payload too large");
  std::vector<std::uint8_t> out;
  out.reserve(kFrameHeaderBytes + payload.size());
  const auto len = static_cast<std::uint32_t>(payload.size());
  out.push_back(static_cast<std::uint8_t>(len >> 24));
  out.push_back(static_cast<std::uint8_t>(len >> 16));
  out.push_back(static_cast<std::uint8_t>(len >> 8));
  out.push_back(static_cast<std::uint8_t>(len));
  out.push_back(kProtocolVersion);
  out.push_back(static_cast<std::uint8_t>(type));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameHeaderBytes) throw FrameFormatError("decode_frame: short header");
  const std::uint32_t len = (std::uint32_t{bytes[0]} << 24) | (std::uint32_t{bytes[1]} << 16) |
                            (std::uint32_t{bytes[2]} << 8) | std::uint32_t{bytes[3]};
  if (bytes[4] != kProtocolVersion) {
    throw FrameFormatError("decode_frame: unsupported protocol version " +
                           std::to_string(bytes[4]));
  }
  if (!is_known_message_type(bytes[5])) {
    throw FrameFormatError("decode_frame: unknown message type " + std::to_string(bytes[5]));
  }
  if (bytes.size() != kFrameHeaderBytes + len) {
    throw FrameFormatError("decode_frame: length field does not match frame size");
  }
  Frame frame;
  frame.type = static_cast<MessageType>(bytes[5]);
  frame.payload.assign(bytes.begin() + kFrameHeaderBytes, bytes.end());
  return frame;
}

ByteWriter& ByteWriter::u8(std::uint8_t v) {
  out_.push_back(v);
  return *this;
}

ByteWriter& ByteWriter::u16(std::uint16_t v) {
  out_.push_back(static_cast<std::uint8_t>(v >> 8));
  out_.push_back(static_cast<std::uint8_t>(v));
  return *this;
}

ByteWriter& ByteWriter::u32(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
  return *this;
}

ByteWriter& ByteWriter::u64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
  return *this;
}

ByteWriter& ByteWriter::f64(double v) { return u64(std::bit_cast<std::uint64_t>(v)); }

ByteWriter& ByteWriter::bits(const BitString& b) {
  const auto packed = b.to_bytes();
  out_.insert(out_.end(), packed.begin(), packed.end());
  return *this;
}

ByteWriter& ByteWriter::bytes(std::span<const std::uint8_t> b) {
  out_.insert(out_.end(), b.begin(), b.end());
  return *this;
}

std::span<const std::uint8_t> ByteReader::need(std::size_t n) {
  if (remaining() < n) throw FrameFormatError("payload truncated");
  auto s = in_.subspan(pos_, n);
  pos_ += n;
  return s;
}

std::uint8_t ByteReader::u8() { return need(1)[0]; }

std::uint16_t ByteReader::u16() {
  auto s = need(2);
  return static_cast<std::uint16_t>((s[0] << 8) | s[1]);
}

std::uint32_t ByteReader::u32() {
  auto s = need(4);
  std::uint32_t v = 0;
  for (auto b : s) v = (v << 8) | b;
  return v;
}

std::uint64_t ByteReader::u64() {
  auto s = need(8);
  std::uint64_t v = 0;
  for (auto b : s) v = (v << 8) | b;
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

BitString ByteReader::bits(std::size_t n_bits) {
  return BitString::from_bytes(need((n_bits + 7) / 8), n_bits);
}

void ByteReader::expect_end() const {
  if (remaining() != 0) throw FrameFormatError("payload has trailing bytes");
}

std::size_t ClassicalChannel::send(Endpoint from, MessageType type,
                                   std::span<const std::uint8_t> payload) {
  std::lock_guard lock(mutex_);
  if (!open_) throw ChannelClosedError("send on a closed channel");
  std::vector<std::uint8_t> frame = encode_frame(type, payload);
  const std::size_t size = frame.size();
  const bool transcribed = type != MessageType::kAuthTag && type != MessageType::kAuthVerdict;
  if (transcribed) {
    auto& sent = side(from).sent;
    sent.insert(sent.end(), frame.begin(), frame.end());
  }
  log_.push_back({from, type, {payload.begin(), payload.end()}});
  total_bytes_ += size;
  if (tamper_) tamper_(frame);
  side(peer(from)).inbox.push_back(std::move(frame));
  return size;
}

Frame ClassicalChannel::receive(Endpoint at) {
  std::lock_guard lock(mutex_);
  if (!open_) throw ChannelClosedError("receive on a closed channel");
  auto& s = side(at);
  if (s.inbox.empty()) throw FrameFormatError("receive: no frame pending");
  std::vector<std::uint8_t> raw = std::move(s.inbox.front());
  s.inbox.pop_front();
  Frame frame = decode_frame(raw);
  if (frame.type != MessageType::kAuthTag && frame.type != MessageType::kAuthVerdict) {
    s.received.insert(s.received.end(), raw.begin(), raw.end());
  }
  return frame;
}

Frame ClassicalChannel::expect(Endpoint at, MessageType type) {
  Frame frame = receive(at);
  if (frame.type != type) {
    throw FrameFormatError("expected message type " +
                           std::to_string(static_cast<int>(type)) + ", got " +
                           std::to_string(static_cast<int>(frame.type)));
  }
  return frame;
}

bool ClassicalChannel::has_pending(Endpoint at) const {
  std::lock_guard lock(mutex_);
  return !side(at).inbox.empty();
}

void ClassicalChannel::close() {
  std::lock_guard lock(mutex_);
  open_ = false;
}

bool ClassicalChannel::is_open() const {
  std::lock_guard lock(mutex_);
  return open_;
}

void ClassicalChannel::set_tamper(TamperHook hook) {
  std::lock_guard lock(mutex_);
  tamper_ = std::move(hook);
}

ChannelTranscript ClassicalChannel::outgoing(Endpoint who) const {
  std::lock_guard lock(mutex_);
  return {direction_from(who), side(who).sent};
}

ChannelTranscript ClassicalChannel::incoming(Endpoint who) const {
  std::lock_guard lock(mutex_);
  return {direction_from(peer(who)), side(who).received};
}

void ClassicalChannel::reset_transcripts() {
  std::lock_guard lock(mutex_);
  for (Side* s : {&a_, &b_}) {
    s->sent.clear();
    s->received.clear();
  }
}

std::vector<ClassicalChannel::LogEntry> ClassicalChannel::log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::size_t ClassicalChannel::total_bytes() const {
  std::lock_guard lock(mutex_);
  return total_bytes_;
}

AuthKeyPool::AuthKeyPool(BitString preshared)
    : bits_(std::move(preshared)), preshared_(bits_.size()) {}

BitString AuthKeyPool::take(std::size_t n_bits) {
  std::lock_guard lock(mutex_);
  if (bits_.size() - cursor_ < n_bits) {
    throw PoolExhaustedError("authentication pool holds " +
                             std::to_string(bits_.size() - cursor_) + " bits, " +
                             std::to_string(n_bits) + " requested");
  }
  BitString out = bits_.slice(cursor_, n_bits);
  cursor_ += n_bits;
  // Drop the consumed prefix once it dominates the buffer.
  if (cursor_ > 4096 && cursor_ * 2 > bits_.size()) {
    consumed_base_ += cursor_;
    bits_ = bits_.slice(cursor_, bits_.size() - cursor_);
    cursor_ = 0;
  }
  return out;
}

void AuthKeyPool::deposit(const BitString& bits) {
  std::lock_guard lock(mutex_);
  bits_.append(bits);
}

std::size_t AuthKeyPool::available() const {
  std::lock_guard lock(mutex_);
  return bits_.size() - cursor_;
}

std::size_t AuthKeyPool::consumed() const {
  std::lock_guard lock(mutex_);
  return consumed_base_ + cursor_;
}

std::size_t AuthKeyPool::deposited() const {
  std::lock_guard lock(mutex_);
  return consumed_base_ + bits_.size() - preshared_;
}

BitString expand_seed(std::uint64_t seed, std::size_t n_bits) {
  Rng rng(seed);
  return BitString::random(n_bits, rng);
}

BitString mac_tag(const ChannelTranscript& transcript, const BitString& seed,
                  const BitString& otp) {
  if (otp.empty()) throw PoolExhaustedError("mac_tag: no one-time pad supplied");
  BitString tag = toeplitz_hash(transcript.bits(), seed, otp.size());
  tag ^= otp;
  return tag;
}

bool verify_tag(const ChannelTranscript& local, const BitString& remote_tag,
                const BitString& seed, const BitString& otp) {
  if (remote_tag.size() != otp.size()) return false;
  return mac_tag(local, seed, otp) == remote_tag;
}

LinkAuthenticator::LinkAuthenticator(ClassicalChannel& channel, AuthKeyPool& pool_a,
                                     AuthKeyPool& pool_b, unsigned l_auth,
                                     std::uint64_t public_seed)
    : channel_(channel),
      pool_a_(pool_a),
      pool_b_(pool_b),
      l_auth_(l_auth),
      public_rng_(public_seed) {}

bool LinkAuthenticator::tag_direction(Endpoint tagger) {
  AuthKeyPool& tagger_pool = tagger == Endpoint::kA ? pool_a_ : pool_b_;
  AuthKeyPool& checker_pool = tagger == Endpoint::kA ? pool_b_ : pool_a_;
  const Endpoint checker = peer(tagger);

  // Tagger hashes what it received; seed material is public and fresh.
  const ChannelTranscript received = channel_.incoming(tagger);
  const std::uint64_t seed_value = public_rng_();
  const BitString seed = expand_seed(seed_value, received.bit_length() + l_auth_ - 1);
  const BitString tag = mac_tag(received, seed, tagger_pool.take(l_auth_));
  channel_.send(tagger, MessageType::kAuthTag, ByteWriter{}.u64(seed_value).bits(tag).take());

  Frame frame = channel_.expect(checker, MessageType::kAuthTag);
  ByteReader reader(frame.payload);
  const std::uint64_t remote_seed = reader.u64();
  const BitString remote_tag = reader.bits(l_auth_);
  reader.expect_end();
  const ChannelTranscript sent = channel_.outgoing(checker);
  const BitString checker_seed = expand_seed(remote_seed, sent.bit_length() + l_auth_ - 1);
  const bool ok = verify_tag(sent, remote_tag, checker_seed, checker_pool.take(l_auth_));

  channel_.send(checker, MessageType::kAuthVerdict, ByteWriter{}.u8(ok ? 1 : 0).take());
  Frame verdict = channel_.expect(tagger, MessageType::kAuthVerdict);
  return ok && verdict.payload.size() == 1 && verdict.payload[0] == 1;
}

bool LinkAuthenticator::run_round() {
  if (halted_) return false;
  const bool a_to_b = tag_direction(Endpoint::kB);
  const bool b_to_a = tag_direction(Endpoint::kA);
  if (a_to_b && b_to_a) {
    channel_.reset_transcripts();
    ++rounds_;
    return true;
  }
  halted_ = true;
  return false;
}

}  // namespace qkdnet
