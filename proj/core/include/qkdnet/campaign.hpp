#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qkdnet/config.hpp"
#include "qkdnet/reconcile.hpp"
#include "qkdnet/security.hpp"

namespace qkdnet {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitLinkAbort = 3,
  kExitAuthFailure = 4,
};

struct WindowRecord {
  std::size_t window = 0;
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  std::size_t sifted_bits = 0;
  double window_qber = 0.0;
  double realized_qber = 0.0;
};

struct BlockRecord {
  std::size_t index = 0;
  double t_close_s = 0.0;
  double duration_s = 0.0;
  std::size_t l_ver = 0;
  std::size_t leak_ec = 0;
  double qber = 0.0;
  double y1_hat = 0.0;
  double q1_hat = 0.0;
  bool verified = false;
  std::size_t l_sec_raw = 0;
  std::size_t l_sec_final = 0;
  /// Converged frames discarded by localized verification.
  std::size_t frames_dropped = 0;
  std::size_t verification_tags = 0;
};

struct LinkReport {
  std::string name;
  NodeId from;
  NodeId to;
  double duration_s = 0.0;
  std::size_t sifted_bits = 0;
  std::size_t frames = 0;
  std::size_t frames_converged = 0;
  std::size_t frames_dropped = 0;
  std::size_t verified_bits = 0;
  std::size_t leak_ec_bits = 0;
  std::size_t l_sec_raw_bits = 0;
  std::size_t secret_bits = 0;  ///< after the authentication reservation
  std::size_t auth_rounds = 0;
  /// Verified blocks whose two copies differed; zero unless verification failed.
  std::size_t verified_mismatches = 0;
  bool aborted = false;
  bool auth_failed = false;
  std::string abort_reason;
  std::vector<WindowRecord> windows;
  std::vector<BlockRecord> blocks;

  /// R_sec over the whole run (secret_bits / duration), 0 for an empty run.
  double secret_rate() const;
};

struct RenewalRecord {
  std::size_t index = 0;
  double requested_s = 0.0;
  double delivered_s = 0.0;
  bool delivered_ok = false;  ///< destination key equals the source key
  double wait_s() const noexcept { return delivered_s - requested_s; }
};

struct CampaignReport {
  std::vector<LinkReport> links;
  EpsilonReport epsilon;
  std::vector<NodeId> chain;
  std::vector<RenewalRecord> renewals;
  int exit_code = kExitOk;
};

/// Runs every link's pipeline over the simulated duration, then serves
/// back-to-back key renewal requests between the chain ends. Pure with
/// respect to the filesystem; deterministic in the config.
CampaignReport run_campaign(const RunConfig& config,
                            const ReconcileSettings& settings = ReconcileSettings{});

/// Writes qber_timeseries.csv, rates.csv, blocks.csv, epsilon.json,
/// renewal.csv and run_meta.json into `dir`.
void write_campaign_outputs(const CampaignReport& report, const RunConfig& config,
                            const std::filesystem::path& dir);

/// Length from the estimate chain; throws ProtocolAbort or EstimateInvalidError.
std::size_t compute_keylength(std::size_t l_ver, double eta, double mu, double q,
                              std::size_t leak_ec, double eps_pa = 1e-12);

}  // namespace qkdnet
