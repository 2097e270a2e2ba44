#include "qkdnet/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "qkdnet/errors.hpp"

namespace qkdnet {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view v, std::size_t line, std::string_view key) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) {
    throw ConfigError("invalid number '" + std::string(v) + "' for " + std::string(key), line);
  }
  return out;
}

std::uint64_t parse_uint(std::string_view v, std::size_t line, std::string_view key) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("invalid integer '" + std::string(v) + "' for " + std::string(key), line);
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct PendingSecurity {
  double eps_ver;
  double eps_pa;
  unsigned l_auth;
  std::size_t line = 0;
};

}  // namespace

RunConfig RunConfig::three_node_default() {
  RunConfig c;
  c.links.push_back({"polarization", "node1", "node2", LinkParams::polarization_profile()});
  c.links.push_back({"phase", "node2", "node3", LinkParams::phase_profile()});
  return c;
}

void RunConfig::validate() const {
  if (!(sim_duration_s >= 0.0)) throw ConfigError("duration_s must be >= 0", 0);
  if (!(window_s > 0.0)) throw ConfigError("window_s must be > 0", 0);
  if (verify_block_bits == 0) throw ConfigError("verify_block_bits must be > 0", 0);
  if (renewal_key_bits == 0) throw ConfigError("renewal_key_bits must be > 0", 0);
  if (links.empty()) throw ConfigError("no links configured", 0);
  std::set<std::string> names;
  for (const auto& l : links) {
    if (l.name.empty()) throw ConfigError("link without a name", 0);
    if (!names.insert(l.name).second) throw ConfigError("duplicate link name " + l.name, 0);
    if (l.from.name.empty() || l.to.name.empty() || l.from == l.to) {
      throw ConfigError("link " + l.name + " needs two distinct endpoints", 0);
    }
    try {
      l.params.validate();
    } catch (const DomainError& e) {
      throw ConfigError("link " + l.name + ": " + e.what(), 0);
    }
  }
  (void)chain();
}

std::vector<NodeId> RunConfig::chain() const {
  std::map<NodeId, std::vector<NodeId>> adj;
  std::set<std::pair<NodeId, NodeId>> seen;
  for (const auto& l : links) {
    auto key = std::minmax(l.from, l.to);
    if (!seen.insert({key.first, key.second}).second) {
      throw ConfigError("links " + l.from.name + "-" + l.to.name + " configured twice", 0);
    }
    adj[l.from].push_back(l.to);
    adj[l.to].push_back(l.from);
  }
  if (adj.size() != links.size() + 1) throw ConfigError("links do not form a single chain", 0);
  NodeId start;
  bool found = false;
  for (const auto& [node, nbrs] : adj) {
    if (nbrs.size() > 2) throw ConfigError("node " + node.name + " has more than two links", 0);
    if (nbrs.size() == 1 && !found) {
      start = node;
      found = true;
    }
  }
  if (!found) throw ConfigError("links form a cycle", 0);
  std::vector<NodeId> order{start};
  NodeId prev = start;
  NodeId cur = adj[start][0];
  order.push_back(cur);
  while (adj[cur].size() == 2) {
    const NodeId next = adj[cur][0] == prev ? adj[cur][1] : adj[cur][0];
    prev = cur;
    cur = next;
    order.push_back(cur);
  }
  if (order.size() != adj.size()) throw ConfigError("links do not form a single chain", 0);
  return order;
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  cfg.links.clear();
  PendingSecurity sec{cfg.security.eps_ver(), cfg.security.eps_pa(), cfg.security.l_auth()};
  std::string section;
  std::size_t line_no = 0;
  std::vector<std::size_t> link_lines;
  std::set<std::string> keys_in_section;

  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section header", line_no);
      section = std::string(trim(line.substr(1, line.size() - 2)));
      keys_in_section.clear();
      if (section == "link") {
        cfg.links.push_back({});
        cfg.links.back().params = LinkParams{};
        link_lines.push_back(line_no);
      } else if (section != "run" && section != "security") {
        throw ConfigError("unknown section [" + section + "]", line_no);
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key = value", line_no);
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", line_no);
    if (value.empty()) throw ConfigError("empty value for " + key, line_no);
    if (section.empty()) throw ConfigError("key " + key + " outside any section", line_no);
    if (!keys_in_section.insert(key).second) throw ConfigError("duplicate key " + key, line_no);

    if (section == "run") {
      if (key == "duration_s") {
        cfg.sim_duration_s = parse_double(value, line_no, key);
        if (cfg.sim_duration_s < 0.0) throw ConfigError("duration_s must be >= 0", line_no);
      } else if (key == "master_seed") {
        cfg.master_seed = parse_uint(value, line_no, key);
      } else if (key == "output_dir") {
        cfg.output_dir = std::string(value);
      } else if (key == "window_s") {
        cfg.window_s = parse_double(value, line_no, key);
        if (!(cfg.window_s > 0.0)) throw ConfigError("window_s must be > 0", line_no);
      } else if (key == "verify_block_bits") {
        cfg.verify_block_bits = parse_uint(value, line_no, key);
        if (cfg.verify_block_bits == 0) throw ConfigError("verify_block_bits must be > 0", line_no);
      } else if (key == "renewal_key_bits") {
        cfg.renewal_key_bits = parse_uint(value, line_no, key);
        if (cfg.renewal_key_bits == 0) throw ConfigError("renewal_key_bits must be > 0", line_no);
      } else {
        throw ConfigError("unknown key " + key + " in [run]", line_no);
      }
    } else if (section == "security") {
      if (key == "eps_ver") {
        sec.eps_ver = parse_double(value, line_no, key);
      } else if (key == "eps_pa") {
        sec.eps_pa = parse_double(value, line_no, key);
      } else if (key == "l_auth") {
        const auto l = parse_uint(value, line_no, key);
        if (l > 1024) throw ConfigError("l_auth too large", line_no);
        sec.l_auth = static_cast<unsigned>(l);
      } else {
        throw ConfigError("unknown key " + key + " in [security]", line_no);
      }
      sec.line = line_no;
    } else {
      LinkConfig& l = cfg.links.back();
      LinkParams& p = l.params;
      if (key == "name") {
        l.name = std::string(value);
      } else if (key == "from") {
        l.from = NodeId(std::string(value));
      } else if (key == "to") {
        l.to = NodeId(std::string(value));
      } else if (key == "loss_db") {
        p.loss_db = parse_double(value, line_no, key);
      } else if (key == "mu") {
        p.mu = parse_double(value, line_no, key);
      } else if (key == "sifted_rate") {
        p.sifted_rate = parse_double(value, line_no, key);
      } else if (key == "qber_mean") {
        p.qber_mean = parse_double(value, line_no, key);
      } else if (key == "qber_jitter") {
        p.qber_jitter = parse_double(value, line_no, key);
      } else if (key == "distance_km") {
        p.distance_km = parse_double(value, line_no, key);
      } else {
        throw ConfigError("unknown key " + key + " in [link]", line_no);
      }
    }
  }

  try {
    cfg.security = SecurityParams(sec.eps_ver, sec.eps_pa, sec.l_auth);
  } catch (const DomainError& e) {
    throw ConfigError(e.what(), sec.line);
  }
  for (std::size_t i = 0; i < cfg.links.size(); ++i) {
    const LinkConfig& l = cfg.links[i];
    if (l.name.empty()) throw ConfigError("[link] without name", link_lines[i]);
    if (l.from.name.empty() || l.to.name.empty()) {
      throw ConfigError("link " + l.name + " needs from and to", link_lines[i]);
    }
    try {
      l.params.validate();
    } catch (const DomainError& e) {
      throw ConfigError("link " + l.name + ": " + e.what(), link_lines[i]);
    }
  }
  if (cfg.links.empty()) cfg.links = RunConfig::three_node_default().links;
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string(), 0);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream out;
  out << "[run]\n"
      << "duration_s = " << format_double(c.sim_duration_s) << "\n"
      << "master_seed = " << c.master_seed << "\n"
      << "output_dir = " << c.output_dir << "\n"
      << "window_s = " << format_double(c.window_s) << "\n"
      << "verify_block_bits = " << c.verify_block_bits << "\n"
      << "renewal_key_bits = " << c.renewal_key_bits << "\n"
      << "\n[security]\n"
      << "eps_ver = " << format_double(c.security.eps_ver()) << "\n"
      << "eps_pa = " << format_double(c.security.eps_pa()) << "\n"
      << "l_auth = " << c.security.l_auth() << "\n";
  for (const auto& l : c.links) {
    out << "\n[link]\n"
        << "name = " << l.name << "\n"
        << "from = " << l.from.name << "\n"
        << "to = " << l.to.name << "\n"
        << "loss_db = " << format_double(l.params.loss_db) << "\n"
        << "mu = " << format_double(l.params.mu) << "\n"
        << "sifted_rate = " << format_double(l.params.sifted_rate) << "\n"
        << "qber_mean = " << format_double(l.params.qber_mean) << "\n"
        << "qber_jitter = " << format_double(l.params.qber_jitter) << "\n"
        << "distance_km = " << format_double(l.params.distance_km) << "\n";
  }
  return out.str();
}

}  // namespace qkdnet
