#include "qkdnet/netnode.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "qkdnet/errors.hpp"
#include "qkdnet/random.hpp"

namespace qkdnet {

LinkKeyStore::LinkKeyStore(NodeId a, NodeId b) : pair_(std::move(a), std::move(b)) {
  if (pair_.first == pair_.second) throw DomainError("LinkKeyStore: a link needs two distinct nodes");
}

void LinkKeyStore::deposit(const BitString& at_first, const BitString& at_second, double time_s) {
  if (at_first.size() != at_second.size()) {
    throw LengthMismatchError("LinkKeyStore::deposit: endpoint copies differ in length");
  }
  std::lock_guard lock(mutex_);
  if (!timeline_.empty() && time_s < timeline_.back().first) {
    throw DomainError("LinkKeyStore::deposit: deposits must be time ordered");
  }
  first_.append(at_first);
  second_.append(at_second);
  use_count_.resize(first_.size(), 0);
  timeline_.emplace_back(time_s, first_.size());
}

PadPair LinkKeyStore::take(std::size_t n_bits) {
  std::lock_guard lock(mutex_);
  if (first_.size() - cursor_ < n_bits) {
    throw InsufficientKeyMaterialError("LinkKeyStore: " + std::to_string(first_.size() - cursor_) +
                                       " bits left on " + pair_.first.name + "-" +
                                       pair_.second.name + ", " + std::to_string(n_bits) +
                                       " requested");
  }
  PadPair pad{first_.slice(cursor_, n_bits), second_.slice(cursor_, n_bits), cursor_};
  mark_consumed(cursor_, n_bits);
  cursor_ += n_bits;
  return pad;
}

void LinkKeyStore::mark_consumed(std::size_t begin, std::size_t count) {
  for (std::size_t i = begin; i < begin + count; ++i) {
    if (use_count_[i] < 255) ++use_count_[i];
  }
}

std::size_t LinkKeyStore::produced() const {
  std::lock_guard lock(mutex_);
  return first_.size();
}

std::size_t LinkKeyStore::consumed() const {
  std::lock_guard lock(mutex_);
  return cursor_;
}

std::size_t LinkKeyStore::available() const {
  std::lock_guard lock(mutex_);
  return first_.size() - cursor_;
}

std::size_t LinkKeyStore::available_at(double time_s) const {
  std::lock_guard lock(mutex_);
  std::size_t produced = 0;
  for (const auto& [t, cumulative] : timeline_) {
    if (t > time_s) break;
    produced = cumulative;
  }
  return produced > cursor_ ? produced - cursor_ : 0;
}

std::optional<double> LinkKeyStore::time_available(std::size_t n_bits) const {
  std::lock_guard lock(mutex_);
  if (n_bits == 0) return 0.0;
  const std::size_t needed = cursor_ + n_bits;
  auto it = std::lower_bound(timeline_.begin(), timeline_.end(), needed,
                             [](const auto& entry, std::size_t v) { return entry.second < v; });
  if (it == timeline_.end()) return std::nullopt;
  return it->first;
}

std::vector<std::size_t> LinkKeyStore::reuse_audit() const {
  std::lock_guard lock(mutex_);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < use_count_.size(); ++i) {
    if (use_count_[i] > 1) out.push_back(i);
  }
  return out;
}

BitString generate_network_key(std::size_t len, std::uint64_t seed) {
  if (len == 0) throw DomainError("generate_network_key: length must be positive");
  Rng rng(seed);
  return BitString::random(len, rng);
}

void TrustedNetwork::add_link(const NodeId& a, const NodeId& b) {
  if (has_link(a, b)) throw DomainError("TrustedNetwork: duplicate link " + a.name + "-" + b.name);
  Link l{std::make_unique<LinkKeyStore>(a, b), std::make_unique<ClassicalChannel>()};
  links_.emplace(std::make_pair(a, b), std::move(l));
}

bool TrustedNetwork::has_link(const NodeId& a, const NodeId& b) const {
  return links_.count({a, b}) != 0 || links_.count({b, a}) != 0;
}

const TrustedNetwork::Link& TrustedNetwork::link(const NodeId& a, const NodeId& b) const {
  auto it = links_.find({a, b});
  if (it == links_.end()) it = links_.find({b, a});
  if (it == links_.end()) throw PathNotFoundError("no link between " + a.name + " and " + b.name);
  return it->second;
}

TrustedNetwork::Link& TrustedNetwork::link(const NodeId& a, const NodeId& b) {
  return const_cast<Link&>(std::as_const(*this).link(a, b));
}

LinkKeyStore& TrustedNetwork::store(const NodeId& a, const NodeId& b) { return *link(a, b).store; }

const LinkKeyStore& TrustedNetwork::store(const NodeId& a, const NodeId& b) const {
  return *link(a, b).store;
}

ClassicalChannel& TrustedNetwork::channel(const NodeId& a, const NodeId& b) {
  return *link(a, b).channel;
}

std::vector<NodeId> TrustedNetwork::nodes() const {
  std::set<NodeId> all;
  for (const auto& [key, l] : links_) {
    all.insert(key.first);
    all.insert(key.second);
  }
  return {all.begin(), all.end()};
}

RelayPath TrustedNetwork::find_path(const NodeId& src, const NodeId& dst) const {
  if (src == dst) throw PathNotFoundError("relay path needs distinct endpoints");
  std::map<NodeId, NodeId> parent;
  std::deque<NodeId> queue{src};
  parent.emplace(src, src);
  while (!queue.empty()) {
    const NodeId cur = queue.front();
    queue.pop_front();
    if (cur == dst) break;
    for (const auto& [key, l] : links_) {
      const NodeId* next = nullptr;
      if (key.first == cur) next = &key.second;
      if (key.second == cur) next = &key.first;
      if (next != nullptr && parent.count(*next) == 0) {
        parent.emplace(*next, cur);
        queue.push_back(*next);
      }
    }
  }
  if (parent.count(dst) == 0) throw PathNotFoundError("no path from " + src.name + " to " + dst.name);
  RelayPath path;
  for (NodeId cur = dst; cur != src; cur = parent.at(cur)) path.nodes.push_back(cur);
  path.nodes.push_back(src);
  std::reverse(path.nodes.begin(), path.nodes.end());
  return path;
}

RelayRecord TrustedNetwork::relay_key(const BitString& key, const RelayPath& path) {
  if (path.node_count() < 2) throw DomainError("relay_key: path needs at least two nodes");
  if (key.empty()) throw DomainError("relay_key: empty key");
  for (std::size_t h = 0; h < path.hops(); ++h) {
    const LinkKeyStore& s = store(path.nodes[h], path.nodes[h + 1]);
    if (s.available() < key.size()) {
      throw InsufficientKeyMaterialError("relay_key: hop " + std::to_string(h) + " (" +
                                         path.nodes[h].name + "-" + path.nodes[h + 1].name +
                                         ") holds " + std::to_string(s.available()) + " of " +
                                         std::to_string(key.size()) + " bits");
    }
  }

  RelayRecord record;
  BitString held = key;  // plaintext at the current node
  for (std::size_t h = 0; h < path.hops(); ++h) {
    const NodeId& from = path.nodes[h];
    const NodeId& to = path.nodes[h + 1];
    Link& l = link(from, to);
    const bool from_is_first = l.store->pair().first == from;
    const PadPair pad = l.store->take(key.size());
    const BitString& pad_sender = from_is_first ? pad.first : pad.second;
    const BitString& pad_receiver = from_is_first ? pad.second : pad.first;

    BitString cipher = xor_combine(held, pad_sender);
    ByteWriter w;
    w.u16(static_cast<std::uint16_t>(h)).u32(static_cast<std::uint32_t>(key.size())).bits(cipher);
    const Endpoint sender = from_is_first ? Endpoint::kA : Endpoint::kB;
    l.channel->send(sender, MessageType::kRelayCiphertext, w.data());

    Frame f = l.channel->expect(peer(sender), MessageType::kRelayCiphertext);
    ByteReader r(f.payload);
    if (r.u16() != h) throw FrameFormatError("relay_key: hop index mismatch");
    const std::size_t len = r.u32();
    if (len != key.size()) throw FrameFormatError("relay_key: key length mismatch");
    const BitString received = r.bits(len);
    r.expect_end();
    held = xor_combine(received, pad_receiver);
    if (h + 1 < path.hops()) record.trust_events.push_back(to);
    record.hops.push_back({from, to, std::move(cipher), pad.offset});
  }
  record.delivered = std::move(held);
  return record;
}

EpsilonReport network_epsilon(const SecurityParams& params, const RelayPath& path) {
  return compose_epsilon(params, path.node_count());
}

double secret_key_rate(double l_sec_bits, double tau_s) {
  if (!(tau_s > 0.0)) throw DomainError("secret_key_rate: tau must be positive");
  if (l_sec_bits < 0.0) throw DomainError("secret_key_rate: negative key length");
  return l_sec_bits / tau_s;
}

RenewalService::RenewalService(TrustedNetwork& network, std::uint64_t seed)
    : network_(network), seed_(seed) {}

RenewalResult RenewalService::request(const NodeId& src, const NodeId& dst, double at_s,
                                      std::size_t key_len) {
  const RelayPath path = network_.find_path(src, dst);
  double ready = at_s;
  for (std::size_t h = 0; h < path.hops(); ++h) {
    const auto t = network_.store(path.nodes[h], path.nodes[h + 1]).time_available(key_len);
    if (!t) {
      throw InsufficientKeyMaterialError("renewal: hop " + path.nodes[h].name + "-" +
                                         path.nodes[h + 1].name + " never reaches " +
                                         std::to_string(key_len) + " bits");
    }
    ready = std::max(ready, *t);
  }
  const BitString key = generate_network_key(key_len, derive_seed(seed_, {counter_++}));
  RelayRecord rec = network_.relay_key(key, path);
  return {std::move(rec.delivered), key, at_s, ready};
}

}  // namespace qkdnet
