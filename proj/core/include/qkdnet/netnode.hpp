#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qkdnet/authchan.hpp"
#include "qkdnet/bitstring.hpp"
#include "qkdnet/security.hpp"

namespace qkdnet {

struct NodeId {
  std::string name;

  NodeId() = default;
  NodeId(std::string n) : name(std::move(n)) {}  // NOLINT: implicit by design
  NodeId(const char* n) : name(n) {}              // NOLINT
  auto operator<=>(const NodeId&) const = default;
};

/// Both copies of a one-time pad drawn from a link store.
struct PadPair {
  BitString first;   ///< copy held by pair().first
  BitString second;  ///< copy held by pair().second
  std::size_t offset = 0;
};

/// Secret key shared by the two ends of one QKD link.
///
/// Each end holds its own copy. Bits are handed out first in, first out and
/// a consumption bitmap records every index ever released, so reuse of a pad
/// bit is detectable after the fact. Deposits carry the simulated time at
/// which they became available.
class LinkKeyStore {
 public:
  LinkKeyStore(NodeId a, NodeId b);

  const std::pair<NodeId, NodeId>& pair() const noexcept { return pair_; }

  /// Appends matching key material to both copies.
  void deposit(const BitString& at_first, const BitString& at_second, double time_s = 0.0);
  void deposit(const BitString& bits, double time_s = 0.0) { deposit(bits, bits, time_s); }

  /// Takes the oldest n_bits. Throws InsufficientKeyMaterialError.
  PadPair take(std::size_t n_bits);

  std::size_t produced() const;
  std::size_t consumed() const;
  std::size_t available() const;
  /// Bits deposited at or before time_s and not yet consumed.
  std::size_t available_at(double time_s) const;
  /// Earliest time at which n_bits unconsumed bits exist, if ever.
  std::optional<double> time_available(std::size_t n_bits) const;

  /// Indices released more than once; empty under one-time-pad discipline.
  std::vector<std::size_t> reuse_audit() const;

 private:
  void mark_consumed(std::size_t begin, std::size_t count);

  mutable std::mutex mutex_;
  std::pair<NodeId, NodeId> pair_;
  BitString first_;
  BitString second_;
  std::vector<std::uint8_t> use_count_;
  std::vector<std::pair<double, std::size_t>> timeline_;  ///< (time, cumulative produced)
  std::size_t cursor_ = 0;
};

/// Ordered list of nodes from source to destination.
struct RelayPath {
  std::vector<NodeId> nodes;

  std::size_t node_count() const noexcept { return nodes.size(); }
  std::size_t hops() const noexcept { return nodes.empty() ? 0 : nodes.size() - 1; }
};

/// Uniform key from seeded randomness.
BitString generate_network_key(std::size_t len, std::uint64_t seed);

struct HopRecord {
  NodeId from;
  NodeId to;
  BitString ciphertext;
  std::size_t pad_offset = 0;
};

struct RelayRecord {
  BitString delivered;
  std::vector<HopRecord> hops;
  /// Intermediate nodes that held the key in plaintext.
  std::vector<NodeId> trust_events;
};

/// Trusted-node chain: one key store and one classical channel per link.
class TrustedNetwork {
 public:
  /// Adds a link; the channel's endpoint A is `a`.
  void add_link(const NodeId& a, const NodeId& b);

  bool has_link(const NodeId& a, const NodeId& b) const;
  LinkKeyStore& store(const NodeId& a, const NodeId& b);
  const LinkKeyStore& store(const NodeId& a, const NodeId& b) const;
  ClassicalChannel& channel(const NodeId& a, const NodeId& b);

  std::vector<NodeId> nodes() const;
  /// Shortest path by hop count. Throws PathNotFoundError.
  RelayPath find_path(const NodeId& src, const NodeId& dst) const;

  /// One-time-pad relay of `key` along `path`. Every hop store must hold
  /// key.size() bits before anything is consumed; otherwise throws
  /// InsufficientKeyMaterialError and leaves all stores untouched.
  RelayRecord relay_key(const BitString& key, const RelayPath& path);

 private:
  struct Link {
    std::unique_ptr<LinkKeyStore> store;
    std::unique_ptr<ClassicalChannel> channel;
  };
  const Link& link(const NodeId& a, const NodeId& b) const;
  Link& link(const NodeId& a, const NodeId& b);

  std::map<std::pair<NodeId, NodeId>, Link> links_;
};

EpsilonReport network_epsilon(const SecurityParams& params, const RelayPath& path);

/// R_sec = l_sec / tau. Throws DomainError for tau_s <= 0.
double secret_key_rate(double l_sec_bits, double tau_s);

struct RenewalResult {
  BitString key;   ///< as recovered at the destination
  BitString sent;  ///< as generated at the source
  double requested_s = 0.0;
  double delivered_s = 0.0;
  double wait_s() const noexcept { return delivered_s - requested_s; }
};

/// Serves fresh end-to-end keys to a consumer in simulated time.
///
/// A request waits until every hop has the key length available according
/// to the deposit timeline, then relays a new key over the path.
class RenewalService {
 public:
  RenewalService(TrustedNetwork& network, std::uint64_t seed);

  /// Throws PathNotFoundError, or InsufficientKeyMaterialError when the
  /// stores will never hold enough key.
  RenewalResult request(const NodeId& src, const NodeId& dst, double at_s,
                        std::size_t key_len = 256);

 private:
  TrustedNetwork& network_;
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace qkdnet
