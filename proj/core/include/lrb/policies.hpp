#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lrb/env.hpp"
#include "lrb/features.hpp"
#include "lrb/oful.hpp"
#include "lrb/rtp.hpp"

namespace lrb {

enum class PolicyKind { kRtpOful, kUcbPerUser, kOracleOful, kAlsOful };
enum class GammaSchedule { kSqrt, kCubeRoot, kHexagonAware, kConstant };

struct AlsConfig {
  int iterations = 20;
  double ridge = 1e-3;
  double init_scale = 0.1;
};

struct PolicySpec {
  PolicyKind kind = PolicyKind::kRtpOful;
  GammaSchedule schedule = GammaSchedule::kSqrt;
  double constant_gamma = 1.0;  // Constant schedule value
  double hexagon = 0.0;         // HexagonAware schedule threshold
  OfulParams oful;
  RtpConfig rtp;
  AlsConfig als;
  int num_classes = 1;  // C, known to the policy; the factors/ranks it fits

  // Exploration gate polarity. Default: explore with probability γ_n, the
  // decaying-exploration reading under which the schedule's sum bounds the
  // exploration cost. The literal flag flips it (explore when the Bernoulli
  // draw is 0), matching the listing-style gate instead.
  bool literal_gate = false;
  // Rebuild per-user design matrices from logged actions whenever the feature
  // estimate refreshes, instead of accruing features as they were at play
  // time.
  bool rebuild_on_refresh = false;
  // Exploration sessions required before the first feature refresh.
  int refresh_warmup = 25;
  // Multiplier on the UCB1 bonus.
  double ucb_scale = 1.0;
};

struct RunResult {
  RegretLedger ledger;
  std::vector<InteractionRecord> records;
  std::vector<std::pair<long, FeatureEstimate>> feature_snapshots;  // (session, estimate)
  std::uint64_t seed = 0;
};

// Exploration rate at session n. Sqrt: min{1, √(log(n+1)/n)}; CubeRoot:
// min{1, (log(n+1)/n)^{1/3}}; HexagonAware: min{1, √(threshold/n)}; Constant:
// the given value.
double gamma_value(GammaSchedule schedule, long n, double hexagon = 0.0, double constant = 1.0);

// Per-user optimistic linear bandit fed by estimated features, with
// Bernoulli-gated uniform exploration sessions that feed the moment
// estimates. Falls back to uniform play until a feature estimate exists.
RunResult run_rtp_oful(const LatentModel& model, long num_sessions, const PolicySpec& spec,
                       std::uint64_t seed);

// Independent UCB1 per user over the raw action set.
RunResult run_ucb_per_user(const LatentModel& model, long num_sessions, const PolicySpec& spec,
                           std::uint64_t seed);

// Per-user optimistic linear bandit on the ground-truth features, no
// exploration sessions.
RunResult run_oracle_oful(const LatentModel& model, long num_sessions, const PolicySpec& spec,
                          std::uint64_t seed);

// Alternating least squares on the observed user×action reward table, rank C,
// refreshed on the same exploration schedule; per-user optimistic bandit on
// the fitted action factors.
RunResult run_als_oful(const LatentModel& model, long num_sessions, const PolicySpec& spec,
                       std::uint64_t seed);

RunResult run_policy(const LatentModel& model, long num_sessions, const PolicySpec& spec,
                     std::uint64_t seed);

// Observed reward table for the ALS baseline.
struct RewardTable {
  Matrix sum;    // B×A accumulated rewards
  Matrix count;  // B×A observation counts
};

// Alternating ridge sweeps on the observed entries of the table, in place.
// Entries with a degenerate normal system fall back to ridge 1e-6.
void als_sweeps(Matrix& u_hat, Matrix& v_hat, const RewardTable& table, int iterations,
                double ridge);

}  // namespace lrb
