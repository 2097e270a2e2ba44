// Command-line front end: campaign runner, key-length calculator and
// epsilon report.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qkdnet/campaign.hpp"
#include "qkdnet/config.hpp"
#include "qkdnet/errors.hpp"
#include "qkdnet/linksim.hpp"
#include "qkdnet/security.hpp"

namespace {

using namespace qkdnet;

int cmd_run(const std::string& config_path, std::optional<double> duration,
            std::optional<std::uint64_t> seed, std::optional<std::string> out_dir) {
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    if (duration) cfg.sim_duration_s = *duration;
    if (seed) cfg.master_seed = *seed;
    if (out_dir) cfg.output_dir = *out_dir;
    cfg.validate();
  } catch (const ConfigError& e) {
    std::cerr << config_path << ": " << e.what() << "\n";
    return kExitConfigError;
  }

  const CampaignReport report = run_campaign(cfg);
  write_campaign_outputs(report, cfg, cfg.output_dir);

  for (const auto& l : report.links) {
    std::printf("%-14s sifted %9zu  verified %9zu  secret %9zu  R_sec %9.3f bit/s%s\n",
                l.name.c_str(), l.sifted_bits, l.verified_bits, l.secret_bits, l.secret_rate(),
                l.aborted ? "  ABORTED" : l.auth_failed ? "  AUTH FAILURE" : "");
    if (l.aborted || l.auth_failed) std::fprintf(stderr, "%s: %s\n", l.name.c_str(), l.abort_reason.c_str());
  }
  double wait = 0.0;
  for (const auto& r : report.renewals) wait += r.wait_s();
  std::printf("renewals %zu", report.renewals.size());
  if (!report.renewals.empty()) {
    std::printf("  mean wait %.3f s", wait / static_cast<double>(report.renewals.size()));
  }
  std::printf("\neps_qkd %.4e  eps_qkdnet %.4e (N=%zu)\noutputs in %s\n", report.epsilon.eps_qkd,
              report.epsilon.eps_qkdnet, report.epsilon.node_count, cfg.output_dir.c_str());
  return report.exit_code;
}

int cmd_keylength(std::size_t lver, std::optional<double> loss_db, std::optional<double> eta,
                  double mu, double qber, std::size_t leak, double eps_pa) {
  try {
    const double e = eta ? *eta : transmittance_from_db(*loss_db);
    std::printf("%zu\n", compute_keylength(lver, e, mu, qber, leak, eps_pa));
    return 0;
  } catch (const ProtocolAbort& e) {
    std::fprintf(stderr, "abort: %s\n", e.what());
    return kExitLinkAbort;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfigError;
  }
}

int cmd_epsilon(std::size_t nodes, double eps_ver, double eps_pa, unsigned l_auth) {
  try {
    const EpsilonReport r = compose_epsilon(SecurityParams(eps_ver, eps_pa, l_auth), nodes);
    std::printf("eps_auth   %.6e\neps_qkd    %.6e\neps_qkdnet %.6e (N=%zu)\n",
                SecurityParams(eps_ver, eps_pa, l_auth).eps_auth(), r.eps_qkd, r.eps_qkdnet,
                r.node_count);
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfigError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qkdnet: QKD post-processing and trusted-node network simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a simulated campaign");
  std::string config_path;
  std::optional<double> duration;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  run->add_option("--config", config_path, "config file")->required();
  run->add_option("--duration", duration, "simulated seconds");
  run->add_option("--seed", seed, "master seed");
  run->add_option("--out", out_dir, "output directory");

  auto* kl = app.add_subcommand("keylength", "secret key length of one verified block");
  std::size_t lver = 0;
  std::size_t leak = 0;
  std::optional<double> loss_db;
  std::optional<double> eta;
  double mu = 0.0;
  double qber = 0.0;
  double kl_eps_pa = 1e-12;
  kl->add_option("--lver", lver, "verified key bits")->required();
  auto* loss_opt = kl->add_option("--loss-db", loss_db, "channel loss in dB");
  auto* eta_opt = kl->add_option("--eta", eta, "channel transmittance");
  loss_opt->excludes(eta_opt);
  kl->add_option("--mu", mu, "mean photon number")->required();
  kl->add_option("--qber", qber, "estimated QBER")->required();
  kl->add_option("--leak", leak, "leak_ec bits")->required();
  kl->add_option("--eps-pa", kl_eps_pa, "privacy amplification epsilon");

  auto* eps = app.add_subcommand("epsilon", "composed failure probabilities");
  std::size_t nodes = 3;
  double eps_ver = 2e-11;
  double eps_pa = 1e-12;
  unsigned l_auth = 40;
  eps->add_option("--nodes", nodes, "nodes on the path")->required();
  eps->add_option("--eps-ver", eps_ver);
  eps->add_option("--eps-pa", eps_pa);
  eps->add_option("--l-auth", l_auth);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfigError;
  }

  if (*run) return cmd_run(config_path, duration, seed, out_dir);
  if (*kl) {
    if (!loss_db && !eta) {
      std::fprintf(stderr, "keylength: one of --loss-db or --eta is required\n");
      return kExitConfigError;
    }
    return cmd_keylength(lver, loss_db, eta, mu, qber, leak, kl_eps_pa);
  }
  return cmd_epsilon(nodes, eps_ver, eps_pa, l_auth);
}
