#include <gtest/gtest.h>

#include <string>

#include "qkdnet/config.hpp"
#include "qkdnet/errors.hpp"

namespace qkdnet {
namespace {

std::size_t error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  ADD_FAILURE() << "no ConfigError for:\n" << text;
  return 0;
}

TEST(Config, EmptyTextUsesDefaults) {
  const RunConfig c = parse_config("");
  EXPECT_EQ(c, RunConfig::three_node_default());
  ASSERT_EQ(c.links.size(), 2u);
  EXPECT_EQ(c.links[0].params, LinkParams::polarization_profile());
  EXPECT_EQ(c.links[1].params, LinkParams::phase_profile());
  EXPECT_EQ(c.sim_duration_s, 21600.0);
  EXPECT_EQ(c.security, SecurityParams::defaults());
}

TEST(Config, SampleFileMatchesDefaults) {
  EXPECT_EQ(load_config(QKDNET_SAMPLE_CONFIG), RunConfig::three_node_default());
}

TEST(Config, ParsesAllSections) {
  const RunConfig c = parse_config(R"(# campaign
[run]
duration_s = 3600   # one hour
master_seed = 99
output_dir = out dir
window_s = 30
verify_block_bits = 65536
renewal_key_bits = 128

[security]
eps_ver = 1e-10
eps_pa = 1e-11
l_auth = 48

[link]
name = a
from = n1
to = n2
loss_db = 10
mu = 0.1
sifted_rate = 50
qber_mean = 0.02
qber_jitter = 0
distance_km = 5
)");
  EXPECT_EQ(c.sim_duration_s, 3600.0);
  EXPECT_EQ(c.master_seed, 99u);
  EXPECT_EQ(c.output_dir, "out dir");
  EXPECT_EQ(c.window_s, 30.0);
  EXPECT_EQ(c.verify_block_bits, 65536u);
  EXPECT_EQ(c.renewal_key_bits, 128u);
  EXPECT_EQ(c.security, SecurityParams(1e-10, 1e-11, 48));
  ASSERT_EQ(c.links.size(), 1u);
  EXPECT_EQ(c.links[0].name, "a");
  EXPECT_EQ(c.links[0].params.mu, 0.1);
  EXPECT_EQ(c.chain().size(), 2u);
}

TEST(Config, ErrorsCarryLineNumbers) {
  EXPECT_EQ(error_line("[run]\nduration_s = abc\n"), 2u);
  EXPECT_EQ(error_line("[run]\nbogus = 1\n"), 2u);
  EXPECT_EQ(error_line("\n\n[nope]\n"), 3u);
  EXPECT_EQ(error_line("[run]\nmaster_seed = 1\nmaster_seed = 2\n"), 3u);
  EXPECT_EQ(error_line("duration_s = 5\n"), 1u);
  EXPECT_EQ(error_line("[run]\njust text\n"), 2u);
  EXPECT_EQ(error_line("[run\n"), 1u);
  EXPECT_EQ(error_line("[run]\nduration_s = -1\n"), 2u);
  EXPECT_EQ(error_line("[security]\neps_pa = 2\n"), 2u);
  EXPECT_EQ(error_line("[run]\n\n[link]\nname = x\nfrom = a\nto = b\nmu = 1.5\n"), 3u);
  EXPECT_EQ(error_line("[link]\nfrom = a\nto = b\n"), 1u);
}

TEST(Config, RejectsBadTopology) {
  const char* two_islands = R"(
[link]
name = a
from = n1
to = n2
[link]
name = b
from = n3
to = n4
)";
  EXPECT_THROW(parse_config(two_islands), ConfigError);
  const char* star = R"(
[link]
name = a
from = hub
to = n1
[link]
name = b
from = hub
to = n2
[link]
name = c
from = hub
to = n3
)";
  EXPECT_THROW(parse_config(star), ConfigError);
  const char* dup = R"(
[link]
name = a
from = n1
to = n2
[link]
name = a
from = n2
to = n3
)";
  EXPECT_THROW(parse_config(dup), ConfigError);
}

TEST(Config, RoundTrip) {
  RunConfig c = RunConfig::three_node_default();
  c.sim_duration_s = 1234.5;
  c.master_seed = 0xFFFFFFFFFFFFFFFFULL;
  c.links[0].params.qber_mean = 0.0312345678901234;
  c.links[1].params.loss_db = 7.1;
  c.security = SecurityParams(3.3e-11, 1.7e-12, 41);
  const RunConfig back = parse_config(serialize_config(c));
  EXPECT_EQ(back, c);
  EXPECT_EQ(serialize_config(back), serialize_config(c));
}

TEST(Config, ChainOrder) {
  const auto chain = RunConfig::three_node_default().chain();
  ASSERT_EQ(chain.size(), 3u);
  EXPECT_EQ(chain[0].name, "node1");
  EXPECT_EQ(chain[1].name, "node2");
  EXPECT_EQ(chain[2].name, "node3");
}

TEST(Config, MissingFile) {
  EXPECT_THROW(load_config("/nonexistent/qkdnet.cfg"), ConfigError);
}

}  // namespace
}  // namespace qkdnet
