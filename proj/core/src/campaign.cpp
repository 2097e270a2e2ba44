#include "qkdnet/campaign.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <vector>

#include "json.hpp"
#include "qkdnet/authchan.hpp"
#include "qkdnet/errors.hpp"
#include "qkdnet/linksim.hpp"
#include "qkdnet/netnode.hpp"
#include "qkdnet/privacy.hpp"
#include "qkdnet/random.hpp"

namespace qkdnet {

namespace {

constexpr std::size_t kMaxConsecutiveFailures = 8;
constexpr std::size_t kMaxRenewals = 200000;

enum SeedTag : std::uint64_t {
  kTagLink = 1,
  kTagFill = 2,
  kTagBootstrap = 3,
  kTagMac = 4,
  kTagPublic = 5,
  kTagQber = 6,
  kTagWindow = 7,
  kTagRenewal = 8,
};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

class LinkPipeline {
 public:
  LinkPipeline(const RunConfig& cfg, const LinkConfig& link, std::size_t index,
               const ReconcileSettings& settings, TrustedNetwork& network)
      : cfg_(cfg),
        link_(link),
        seed_(derive_seed(cfg.master_seed, {kTagLink, index})),
        reconciler_(settings, derive_seed(seed_, {kTagFill})),
        channel_(network.channel(link.from, link.to)),
        store_(network.store(link.from, link.to)),
        pool_a_(bootstrap()),
        pool_b_(bootstrap()),
        auth_(channel_, pool_a_, pool_b_, cfg.security.l_auth(), derive_seed(seed_, {kTagMac})),
        public_rng_(derive_seed(seed_, {kTagPublic})),
        qber_rng_(derive_seed(seed_, {kTagQber})),
        eta_(transmittance_from_db(link.params.loss_db)) {
    report_.name = link.name;
    report_.from = link.from;
    report_.to = link.to;
    report_.duration_s = cfg.sim_duration_s;
  }

  void run() {
    const LinkParams& p = link_.params;
    const std::size_t frame = reconciler_.settings().frame_bits;
    for (std::size_t w = 0;; ++w) {
      const double t0 = static_cast<double>(w) * cfg_.window_s;
      if (t0 >= cfg_.sim_duration_s) break;
      const double t1 = std::min(cfg_.sim_duration_s, t0 + cfg_.window_s);
      const auto bits = static_cast<std::size_t>(std::floor(p.sifted_rate * t1) -
                                                 std::floor(p.sifted_rate * t0));
      WindowRecord rec{w, t0, t1, bits, sample_window_qber(p, qber_rng_), 0.0};
      if (bits > 0) {
        SiftedPair pair = generate_sifted_pair_at(rec.window_qber, p.sifted_rate, bits,
                                                  derive_seed(seed_, {kTagWindow, w}));
        rec.realized_qber = pair.true_qber;
        pending_a_.append(pair.alice);
        pending_b_.append(pair.bob);
        report_.sifted_bits += bits;
      }
      report_.windows.push_back(rec);

      while (!halted() && pending_a_.size() >= frame) {
        const BitString fa = pending_a_.slice(0, frame);
        const BitString fb = pending_b_.slice(0, frame);
        pending_a_ = pending_a_.slice(frame, pending_a_.size() - frame);
        pending_b_ = pending_b_.slice(frame, pending_b_.size() - frame);
        process_frame(fa, fb, t1);
        if (!halted() && block_bits_ >= cfg_.verify_block_bits) close_block(t1);
      }
      if (halted()) break;
    }
    if (!halted() && !frames_a_.empty()) close_block(cfg_.sim_duration_s);
  }

  bool halted() const { return report_.aborted || report_.auth_failed; }

  /// Authenticates traffic sent after the last block (relay frames).
  void final_round() {
    if (report_.auth_failed) return;
    if (channel_.outgoing(Endpoint::kA).bytes.empty() &&
        channel_.outgoing(Endpoint::kB).bytes.empty()) {
      return;
    }
    authenticate();
  }

  LinkReport& report() { return report_; }

 private:
  BitString bootstrap() const {
    Rng rng(derive_seed(seed_, {kTagBootstrap}));
    return BitString::random(kBootstrapKeyBits, rng);
  }

  void abort(const std::string& reason) {
    report_.aborted = true;
    report_.abort_reason = reason;
  }

  void process_frame(const BitString& fa, const BitString& fb, double /*t*/) {
    ++report_.frames;
    const ReconciliationResult r = reconciler_.reconcile_frame(fa, fb, channel_);
    if (!r.converged) {
      if (++consecutive_failures_ >= kMaxConsecutiveFailures) {
        abort(std::to_string(consecutive_failures_) + " consecutive frames failed to reconcile");
      }
      return;
    }
    consecutive_failures_ = 0;
    ++report_.frames_converged;
    frames_a_.push_back(fa);
    frames_b_.push_back(r.corrected_bob);
    frame_leak_.push_back(r.leak_ec);
    frame_errors_.push_back(r.corrected_errors);
    block_bits_ += fa.size();
  }

  void authenticate() {
    bool ok = false;
    try {
      ok = auth_.run_round();
    } catch (const PoolExhaustedError& e) {
      report_.auth_failed = true;
      report_.abort_reason = e.what();
      return;
    }
    if (!ok) {
      report_.auth_failed = true;
      report_.abort_reason = "authentication tag mismatch";
      return;
    }
    ++report_.auth_rounds;
  }

  void close_block(double t) {
    BlockRecord rec;
    rec.index = report_.blocks.size();
    rec.t_close_s = t;
    rec.duration_s = t - last_close_s_;
    const LocalizedVerifyOutcome ver =
        run_localized_verification(frames_a_, frames_b_, channel_, public_rng_);
    BitString block_a;
    BitString block_b;
    std::size_t errors = 0;
    rec.leak_ec = ver.disclosed_bits;
    for (std::size_t i = 0; i < frames_a_.size(); ++i) {
      if (!ver.kept[i]) continue;
      block_a.append(frames_a_[i]);
      block_b.append(frames_b_[i]);
      rec.leak_ec += frame_leak_[i];
      errors += frame_errors_[i];
    }
    rec.l_ver = block_a.size();
    rec.frames_dropped = frames_a_.size() - ver.kept_count();
    rec.verification_tags = ver.tags;
    rec.verified = rec.l_ver > 0;
    rec.qber = rec.verified ? static_cast<double>(errors) / static_cast<double>(rec.l_ver) : 0.0;
    last_close_s_ = t;
    report_.frames_dropped += rec.frames_dropped;

    std::optional<AmplifiedPair> amplified;
    if (rec.verified) {
      if (block_a != block_b) ++report_.verified_mismatches;
      try {
        const SinglePhotonEstimate est = estimate_single_photon(eta_, link_.params.mu, rec.qber);
        rec.y1_hat = est.y1_hat;
        rec.q1_hat = est.q1_hat;
        KeyBlock ka{KeyStage::kVerified, block_a, rec.l_ver, rec.leak_ec, rec.qber,
                    rec.duration_s, 0, 0};
        KeyBlock kb = ka;
        kb.bits = block_b;
        rec.l_sec_raw = secret_key_length(rec.l_ver, est.y1_hat, est.q1_hat, rec.leak_ec,
                                          cfg_.security.eps_pa());
        if (rec.l_sec_raw > 2 * static_cast<std::size_t>(cfg_.security.l_auth())) {
          amplified = run_privacy_amplification(ka, kb, est, cfg_.security, channel_, public_rng_);
          rec.l_sec_final = amplified->alice.secret.l_sec_final;
        }
      } catch (const ProtocolAbort& e) {
        rec.q1_hat = e.q1();
        abort(std::string("block ") + std::to_string(rec.index) + ": " + e.what());
      } catch (const EstimateInvalidError& e) {
        abort(std::string("block ") + std::to_string(rec.index) + ": " + e.what());
      }
    }
    frames_a_.clear();
    frames_b_.clear();
    frame_leak_.clear();
    frame_errors_.clear();
    block_bits_ = 0;

    if (!report_.aborted) authenticate();
    if (amplified && !report_.auth_failed && !report_.aborted) {
      pool_a_.deposit(amplified->alice.reserved);
      pool_b_.deposit(amplified->bob.reserved);
      store_.deposit(amplified->alice.secret.bits, amplified->bob.secret.bits, t);
      report_.verified_bits += rec.l_ver;
      report_.leak_ec_bits += rec.leak_ec;
      report_.l_sec_raw_bits += rec.l_sec_raw;
      report_.secret_bits += rec.l_sec_final;
    } else if (rec.verified && !report_.aborted && !report_.auth_failed) {
      report_.verified_bits += rec.l_ver;
      report_.leak_ec_bits += rec.leak_ec;
    }
    report_.blocks.push_back(rec);
  }

  const RunConfig& cfg_;
  const LinkConfig& link_;
  std::uint64_t seed_;
  BlindReconciler reconciler_;
  ClassicalChannel& channel_;
  LinkKeyStore& store_;
  AuthKeyPool pool_a_;
  AuthKeyPool pool_b_;
  LinkAuthenticator auth_;
  Rng public_rng_;
  Rng qber_rng_;
  double eta_;

  LinkReport report_;
  BitString pending_a_;
  BitString pending_b_;
  std::vector<BitString> frames_a_;
  std::vector<BitString> frames_b_;
  std::vector<std::size_t> frame_leak_;
  std::vector<std::size_t> frame_errors_;
  std::size_t block_bits_ = 0;
  std::size_t consecutive_failures_ = 0;
  double last_close_s_ = 0.0;
};

}  // namespace

double LinkReport::secret_rate() const {
  if (!(duration_s > 0.0)) return 0.0;
  return secret_key_rate(static_cast<double>(secret_bits), duration_s);
}

CampaignReport run_campaign(const RunConfig& config, const ReconcileSettings& settings) {
  config.validate();
  CampaignReport report;
  report.chain = config.chain();
  report.epsilon = compose_epsilon(config.security, report.chain.size());

  TrustedNetwork network;
  for (const auto& l : config.links) network.add_link(l.from, l.to);

  std::vector<std::unique_ptr<LinkPipeline>> pipelines;
  for (std::size_t i = 0; i < config.links.size(); ++i) {
    pipelines.push_back(
        std::make_unique<LinkPipeline>(config, config.links[i], i, settings, network));
    pipelines.back()->run();
  }

  RenewalService renewal(network, derive_seed(config.master_seed, {kTagRenewal}));
  const NodeId& src = report.chain.front();
  const NodeId& dst = report.chain.back();
  double t = 0.0;
  for (std::size_t i = 0; i < kMaxRenewals; ++i) {
    bool ready = true;
    for (std::size_t h = 0; h + 1 < report.chain.size(); ++h) {
      const auto when = network.store(report.chain[h], report.chain[h + 1])
                            .time_available(config.renewal_key_bits);
      if (!when || *when > config.sim_duration_s) ready = false;
    }
    if (!ready) break;
    RenewalResult r = renewal.request(src, dst, t, config.renewal_key_bits);
    report.renewals.push_back({i, r.requested_s, r.delivered_s, r.key == r.sent});
    t = r.delivered_s;
  }

  for (auto& p : pipelines) {
    p->final_round();
    report.links.push_back(std::move(p->report()));
  }

  bool abort = false;
  bool auth = false;
  for (const auto& l : report.links) {
    abort = abort || l.aborted;
    auth = auth || l.auth_failed;
  }
  report.exit_code = auth ? kExitAuthFailure : abort ? kExitLinkAbort : kExitOk;
  return report;
}

void write_campaign_outputs(const CampaignReport& report, const RunConfig& config,
                            const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(std::string("cannot write ") + (dir / name).string());
    return out;
  };

  {
    auto out = open("qber_timeseries.csv");
    out << "link,window,t_start_s,t_end_s,sifted_bits,window_qber,realized_qber\n";
    for (const auto& l : report.links) {
      for (const auto& w : l.windows) {
        out << l.name << ',' << w.window << ',' << fmt("%.3f", w.t_start_s) << ','
            << fmt("%.3f", w.t_end_s) << ',' << w.sifted_bits << ',' << fmt("%.6f", w.window_qber)
            << ',' << fmt("%.6f", w.realized_qber) << '\n';
      }
    }
  }
  {
    auto out = open("rates.csv");
    out << "link,from,to,duration_s,sifted_bits,verified_bits,secret_bits,sifted_rate_bps,"
           "verified_rate_bps,secret_rate_bps,leak_ec_bits,l_sec_raw_bits,frames,"
           "frames_converged,frames_dropped,blocks,auth_rounds,aborted,auth_failed\n";
    for (const auto& l : report.links) {
      const double d = l.duration_s > 0.0 ? l.duration_s : 1.0;
      const bool empty = !(l.duration_s > 0.0);
      out << l.name << ',' << l.from.name << ',' << l.to.name << ',' << fmt("%.3f", l.duration_s)
          << ',' << l.sifted_bits << ',' << l.verified_bits << ',' << l.secret_bits << ','
          << fmt("%.6f", empty ? 0.0 : static_cast<double>(l.sifted_bits) / d) << ','
          << fmt("%.6f", empty ? 0.0 : static_cast<double>(l.verified_bits) / d) << ','
          << fmt("%.6f", l.secret_rate()) << ',' << l.leak_ec_bits << ',' << l.l_sec_raw_bits
          << ',' << l.frames << ',' << l.frames_converged << ',' << l.frames_dropped << ',' << l.blocks.size() << ','
          << l.auth_rounds << ',' << (l.aborted ? 1 : 0) << ',' << (l.auth_failed ? 1 : 0)
          << '\n';
    }
  }
  {
    auto out = open("blocks.csv");
    out << "link,block,t_close_s,duration_s,l_ver,leak_ec,qber,y1_hat,q1_hat,verified,l_sec_raw,"
           "l_sec_final,frames_dropped,verification_tags\n";
    for (const auto& l : report.links) {
      for (const auto& b : l.blocks) {
        out << l.name << ',' << b.index << ',' << fmt("%.3f", b.t_close_s) << ','
            << fmt("%.3f", b.duration_s) << ',' << b.l_ver << ',' << b.leak_ec << ','
            << fmt("%.6f", b.qber) << ',' << fmt("%.6f", b.y1_hat) << ','
            << fmt("%.6f", b.q1_hat) << ',' << (b.verified ? 1 : 0) << ',' << b.l_sec_raw << ','
            << b.l_sec_final << ',' << b.frames_dropped << ',' << b.verification_tags << '\n';
      }
    }
  }
  {
    auto out = open("renewal.csv");
    out << "request,requested_s,delivered_s,wait_s,key_bits\n";
    for (const auto& r : report.renewals) {
      out << r.index << ',' << fmt("%.3f", r.requested_s) << ',' << fmt("%.3f", r.delivered_s)
          << ',' << fmt("%.3f", r.wait_s()) << ',' << config.renewal_key_bits << '\n';
    }
  }
  {
    nlohmann::ordered_json j;
    j["eps_ver"] = config.security.eps_ver();
    j["eps_pa"] = config.security.eps_pa();
    j["eps_auth"] = config.security.eps_auth();
    j["l_auth"] = config.security.l_auth();
    j["node_count"] = report.epsilon.node_count;
    j["eps_qkd"] = report.epsilon.eps_qkd;
    j["eps_qkdnet"] = report.epsilon.eps_qkdnet;
    j["eps_qkd_below_2.3e-11"] = report.epsilon.eps_qkd < 2.3e-11;
    j["eps_qkdnet_below_5e-11"] = report.epsilon.eps_qkdnet < 5e-11;
    auto out = open("epsilon.json");
    out << j.dump(2) << '\n';
  }
  {
    nlohmann::ordered_json j;
    j["master_seed"] = config.master_seed;
    j["prng"] = std::string(kPrngAlgorithmId);
    j["exit_code"] = report.exit_code;
    j["config_text"] = serialize_config(config);
    nlohmann::ordered_json c;
    c["duration_s"] = config.sim_duration_s;
    c["window_s"] = config.window_s;
    c["verify_block_bits"] = config.verify_block_bits;
    c["renewal_key_bits"] = config.renewal_key_bits;
    c["output_dir"] = config.output_dir;
    c["security"] = {{"eps_ver", config.security.eps_ver()},
                     {"eps_pa", config.security.eps_pa()},
                     {"l_auth", config.security.l_auth()}};
    nlohmann::ordered_json links = nlohmann::ordered_json::array();
    for (const auto& l : config.links) {
      links.push_back({{"name", l.name},
                       {"from", l.from.name},
                       {"to", l.to.name},
                       {"loss_db", l.params.loss_db},
                       {"mu", l.params.mu},
                       {"sifted_rate", l.params.sifted_rate},
                       {"qber_mean", l.params.qber_mean},
                       {"qber_jitter", l.params.qber_jitter},
                       {"distance_km", l.params.distance_km}});
    }
    c["links"] = links;
    j["config"] = c;
    nlohmann::ordered_json aborts = nlohmann::ordered_json::array();
    for (const auto& l : report.links) {
      if (l.aborted || l.auth_failed) {
        aborts.push_back({{"link", l.name}, {"reason", l.abort_reason}});
      }
    }
    j["link_aborts"] = aborts;
    auto out = open("run_meta.json");
    out << j.dump(2) << '\n';
  }
}

std::size_t compute_keylength(std::size_t l_ver, double eta, double mu, double q,
                              std::size_t leak_ec, double eps_pa) {
  const SinglePhotonEstimate est = estimate_single_photon(eta, mu, q);
  return secret_key_length(l_ver, est.y1_hat, est.q1_hat, leak_ec, eps_pa);
}

}  // namespace qkdnet
