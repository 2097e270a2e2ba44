#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "qkdnet/linksim.hpp"
#include "qkdnet/netnode.hpp"
#include "qkdnet/security.hpp"

namespace qkdnet {

struct LinkConfig {
  std::string name;
  NodeId from;
  NodeId to;
  LinkParams params;

  bool operator==(const LinkConfig&) const = default;
};

/// Everything a campaign needs. Text form:
///
///   [run]
///   duration_s = 21600
///   master_seed = 1
///   [security]
///   eps_ver = 2e-11
///   [link]
///   name = polarization
///   from = node1
///   to = node2
///   loss_db = 13
///
/// `#` starts a comment. Each [link] section adds one link; a file without
/// any [link] section uses the two default links.
struct RunConfig {
  std::vector<LinkConfig> links;
  SecurityParams security = SecurityParams::defaults();
  double sim_duration_s = 21600.0;
  std::uint64_t master_seed = 1;
  std::string output_dir = "qkdnet-out";
  double window_s = 60.0;
  std::size_t verify_block_bits = std::size_t{1} << 20;
  std::size_t renewal_key_bits = 256;

  /// node1 -[13 dB polarization]- node2 -[7 dB phase]- node3.
  static RunConfig three_node_default();

  /// Throws ConfigError (line 0) unless the links form one connected chain
  /// and every value is in range.
  void validate() const;
  /// Nodes in chain order, from the end whose name sorts first.
  std::vector<NodeId> chain() const;

  bool operator==(const RunConfig&) const = default;
};

/// Throws ConfigError carrying the offending line number.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
/// Canonical text that parse_config maps back to an equal RunConfig.
std::string serialize_config(const RunConfig& config);

}  // namespace qkdnet
