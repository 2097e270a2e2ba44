#include <gtest/gtest.h>

#include "qkdnet/authchan.hpp"
#include "qkdnet/errors.hpp"
#include "qkdnet/random.hpp"

namespace qkdnet {
namespace {

void exchange(ClassicalChannel& ch, Rng& rng, int frames) {
  for (int i = 0; i < frames; ++i) {
    const Endpoint from = (i % 3 == 2) ? Endpoint::kB : Endpoint::kA;
    std::vector<std::uint8_t> payload(1 + rng.below(200));
    for (auto& b : payload) b = static_cast<std::uint8_t>(rng());
    ch.send(from, MessageType::kRelayCiphertext, payload);
    ch.receive(peer(from));
  }
}

BitString bootstrap_key() {
  Rng rng(99);
  return BitString::random(kBootstrapKeyBits, rng);
}

struct Pair {
  ClassicalChannel channel;
  AuthKeyPool pool_a{bootstrap_key()};
  AuthKeyPool pool_b{bootstrap_key()};
};

TEST(Frame, EncodeDecodeRoundTrip) {
  const std::vector<std::uint8_t> payload{1, 2, 3, 250};
  const auto bytes = encode_frame(MessageType::kPaSeed, payload);
  ASSERT_EQ(bytes.size(), kFrameHeaderBytes + payload.size());
  EXPECT_EQ(bytes[4], kProtocolVersion);
  EXPECT_EQ(bytes[5], 0x20);
  const Frame f = decode_frame(bytes);
  EXPECT_EQ(f.type, MessageType::kPaSeed);
  EXPECT_EQ(f.payload, payload);
}

TEST(Frame, RejectsMalformed) {
  auto bytes = encode_frame(MessageType::kPing, std::vector<std::uint8_t>{7, 7});
  auto bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_THROW(decode_frame(bad_version), FrameFormatError);
  auto bad_type = bytes;
  bad_type[5] = 0x77;
  EXPECT_THROW(decode_frame(bad_type), FrameFormatError);
  bytes.pop_back();
  EXPECT_THROW(decode_frame(bytes), FrameFormatError);
  EXPECT_FALSE(is_known_message_type(0x77));
  EXPECT_TRUE(is_known_message_type(0x40));
}

TEST(ByteCodec, RoundTrip) {
  BitString bits = BitString::from_string("1101");
  ByteWriter w;
  w.u8(1).u16(0xBEEF).u32(0xDEADBEEF).u64(1ULL << 60).f64(0.125).bits(bits);
  ByteReader r(w.data());
  EXPECT_EQ(r.u8(), 1);
  EXPECT_EQ(r.u16(), 0xBEEF);
  EXPECT_EQ(r.u32(), 0xDEADBEEFu);
  EXPECT_EQ(r.u64(), 1ULL << 60);
  EXPECT_EQ(r.f64(), 0.125);
  EXPECT_EQ(r.bits(4), bits);
  EXPECT_NO_THROW(r.expect_end());
  EXPECT_THROW(r.u8(), FrameFormatError);
}

TEST(Channel, TranscriptsAreSymmetric) {
  ClassicalChannel ch;
  Rng rng(1);
  exchange(ch, rng, 10);
  EXPECT_EQ(ch.outgoing(Endpoint::kA).bytes, ch.incoming(Endpoint::kB).bytes);
  EXPECT_EQ(ch.outgoing(Endpoint::kB).bytes, ch.incoming(Endpoint::kA).bytes);
  EXPECT_FALSE(ch.outgoing(Endpoint::kA).bytes.empty());
  ch.reset_transcripts();
  EXPECT_TRUE(ch.outgoing(Endpoint::kA).bytes.empty());
  EXPECT_EQ(ch.log().size(), 10u);
}

TEST(Channel, ClosedChannelThrows) {
  ClassicalChannel ch;
  ch.close();
  EXPECT_THROW(ch.send(Endpoint::kA, MessageType::kPing, {}), ChannelClosedError);
  EXPECT_THROW(ch.receive(Endpoint::kB), ChannelClosedError);
}

TEST(Channel, ReceiveWithoutFrameThrows) {
  ClassicalChannel ch;
  EXPECT_THROW(ch.receive(Endpoint::kA), FrameFormatError);
}

TEST(AuthKeyPool, Conservation) {
  Rng rng(2);
  AuthKeyPool pool(BitString::random(1024, rng));
  std::size_t deposited = 0;
  std::size_t taken = 0;
  for (int i = 0; i < 500; ++i) {
    if (rng.below(2) == 0) {
      const auto n = rng.below(300);
      pool.deposit(BitString::random(n, rng));
      deposited += n;
    } else {
      const auto n = rng.below(100);
      if (n <= pool.available()) {
        pool.take(n);
        taken += n;
      }
    }
    ASSERT_EQ(pool.preshared() + pool.deposited(), pool.available() + pool.consumed());
  }
  EXPECT_EQ(pool.deposited(), deposited);
  EXPECT_EQ(pool.consumed(), taken);
}

TEST(AuthKeyPool, FirstInFirstOut) {
  AuthKeyPool pool(BitString::from_string("1100"));
  pool.deposit(BitString::from_string("0011"));
  EXPECT_EQ(pool.take(3).to_string(), "110");
  EXPECT_EQ(pool.take(3).to_string(), "000");
  EXPECT_THROW(pool.take(3), PoolExhaustedError);
}

TEST(Mac, TagDependsOnTranscriptAndPad) {
  Rng rng(3);
  ChannelTranscript t;
  t.bytes = {1, 2, 3, 4};
  const auto seed = expand_seed(5, t.bit_length() + 40 - 1);
  const auto otp = BitString::random(40, rng);
  const auto tag = mac_tag(t, seed, otp);
  EXPECT_EQ(tag.size(), 40u);
  EXPECT_TRUE(verify_tag(t, tag, seed, otp));
  ChannelTranscript t2 = t;
  t2.bytes[2] ^= 0x10;
  EXPECT_FALSE(verify_tag(t2, tag, seed, otp));
  BitString otp2 = otp;
  otp2.flip(0);
  EXPECT_FALSE(verify_tag(t, tag, seed, otp2));
  EXPECT_THROW(mac_tag(t, seed, BitString()), PoolExhaustedError);
}

TEST(Authenticator, HonestRoundsSucceedAndConsumePads) {
  Pair p;
  LinkAuthenticator auth(p.channel, p.pool_a, p.pool_b, 40, 7);
  Rng rng(4);
  for (int r = 0; r < 5; ++r) {
    exchange(p.channel, rng, 6);
    EXPECT_TRUE(auth.run_round());
  }
  EXPECT_EQ(auth.completed_rounds(), 5u);
  EXPECT_EQ(p.pool_a.consumed(), 5u * 80u);
  EXPECT_EQ(p.pool_b.consumed(), 5u * 80u);
  EXPECT_TRUE(p.channel.outgoing(Endpoint::kA).bytes.empty());
}

TEST(Authenticator, PayloadTamperIsDetectedAndLatches) {
  Pair p;
  LinkAuthenticator auth(p.channel, p.pool_a, p.pool_b, 40, 8);
  Rng rng(5);
  int count = 0;
  p.channel.set_tamper([&](std::vector<std::uint8_t>& frame) {
    if (++count == 3) frame.back() ^= 0x01;
  });
  exchange(p.channel, rng, 5);
  p.channel.set_tamper(nullptr);
  EXPECT_FALSE(auth.run_round());
  EXPECT_TRUE(auth.halted());
  EXPECT_FALSE(auth.run_round());
}

TEST(Authenticator, ExhaustedPoolThrows) {
  ClassicalChannel ch;
  AuthKeyPool a(BitString(60));
  AuthKeyPool b(BitString(60));
  LinkAuthenticator auth(ch, a, b, 40, 9);
  EXPECT_THROW(auth.run_round(), PoolExhaustedError);
}

}  // namespace
}  // namespace qkdnet
