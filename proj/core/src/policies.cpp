#include "lrb/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>

#include "lrb/errors.hpp"

namespace lrb {

double gamma_value(GammaSchedule schedule, long n, double hexagon, double constant) {
  if (n < 1) throw std::invalid_argument("gamma_value: n must be >= 1");
  switch (schedule) {
    case GammaSchedule::kSqrt:
      return std::min(1.0, std::sqrt(std::log(static_cast<double>(n) + 1.0) / n));
    case GammaSchedule::kCubeRoot:
      return std::min(1.0, std::cbrt(std::log(static_cast<double>(n) + 1.0) / n));
    case GammaSchedule::kHexagonAware:
      if (!(hexagon > 0.0))
        throw std::invalid_argument("gamma_value: schedule needs a positive threshold");
      return std::min(1.0, std::sqrt(hexagon / static_cast<double>(n)));
    case GammaSchedule::kConstant:
      if (!(constant >= 0.0 && constant <= 1.0))
        throw std::invalid_argument("gamma_value: constant rate must lie in [0,1]");
      return constant;
  }
  throw std::logic_error("gamma_value: unknown schedule");
}

namespace {

// Per-user optimistic linear bandit instances over a shared, possibly
// evolving feature matrix.
class PerUserOful {
public:
  PerUserOful(int num_users, int num_classes, const OfulParams& params)
      : params_(params), num_classes_(num_classes), states_(), sweep_next_(num_users, 0) {
    states_.reserve(num_users);
    for (int b = 0; b < num_users; ++b) states_.emplace_back(num_classes, params);
  }

  int select(int user, const Matrix& features) {
    if (params_.mode == OfulMode::kUnregularized && sweep_next_[user] < features.rows()) {
      // cover the design first so the unregularized gram becomes invertible
      return sweep_next_[user]++;
    }
    return states_[user].select(features, params_);
  }

  void observe(int user, const Matrix& features, int action, double reward) {
    states_[user].update(features.row(action), reward);
    log_[user].push_back({action, reward});
  }

  // Recompute every design matrix from the logged actions under new features.
  void rebuild(const Matrix& features) {
    for (std::size_t b = 0; b < states_.size(); ++b) {
      OfulState fresh(num_classes_, params_);
      for (const auto& [action, reward] : log_[b]) fresh.update(features.row(action), reward);
      states_[b] = std::move(fresh);
    }
  }

  const OfulState& state(int user) const { return states_[user]; }

private:
  OfulParams params_;
  int num_classes_;
  std::vector<OfulState> states_;
  std::vector<int> sweep_next_;
  std::map<int, std::vector<std::pair<int, double>>> log_;
};

void append_session(RunResult& out, const MiniSessionResult& res) {
  for (std::size_t l = 0; l < res.records.size(); ++l) {
    out.records.push_back(res.records[l]);
    out.ledger.add(res.user, res.regret_increments[l]);
  }
}

}  // namespace

RunResult run_rtp_oful(const LatentModel& model, long num_sessions, const PolicySpec& spec,
                       std::uint64_t seed) {
  if (spec.kind != PolicyKind::kRtpOful)
    throw std::invalid_argument("run_rtp_oful: spec kind mismatch");
  const int num_actions = model.num_actions();

  RngStream root(seed);
  RngStream arrival = root.split("arrival");
  RngStream noise = root.split("noise");
  RngStream policy = root.split("policy");

  MomentEstimates moments(num_actions);
  std::optional<Matrix> features;
  PerUserOful oful(model.num_users(), spec.num_classes, spec.oful);
  long explore_sessions = 0;

  RunResult out;
  out.seed = seed;
  for (long n = 1; n <= num_sessions; ++n) {
    const double gamma =
        gamma_value(spec.schedule, n, spec.hexagon, spec.constant_gamma);
    const bool draw = policy.bernoulli(gamma);
    const bool explore = spec.literal_gate ? !draw : draw;

    MiniSessionResult res;
    if (explore) {
      res = run_mini_session(
          model, n, SessionKind::kExplore, gamma,
          [&](int, int) { return policy.next_below(num_actions); }, arrival, noise);
      moments.ingest_session(res.records);
      ++explore_sessions;
      if (explore_sessions >= spec.refresh_warmup) {
        try {
          FeatureEstimate fe = estimate_features(moments, spec.num_classes, spec.rtp);
          features = fe.u_bar;
          if (spec.rebuild_on_refresh) oful.rebuild(*features);
          out.feature_snapshots.emplace_back(n, std::move(fe));
        } catch (const RankDeficientMoments&) {
          // not enough exploration signal yet; keep the previous estimate
        } catch (const std::runtime_error&) {
          // degenerate whitened tensor early on; keep the previous estimate
        }
      }
    } else if (!features) {
      // no estimate yet: uniform fallback, still an exploit-labelled session
      res = run_mini_session(
          model, n, SessionKind::kExploit, gamma,
          [&](int, int) { return policy.next_below(num_actions); }, arrival, noise);
      moments.ingest_session(res.records);
    } else {
      res = run_mini_session(
          model, n, SessionKind::kExploit, gamma,
          [&](int user, int) { return oful.select(user, *features); }, arrival, noise,
          [&](int user, int, int action, double reward) {
            oful.observe(user, *features, action, reward);
          });
      moments.ingest_session(res.records);
    }
    append_session(out, res);
  }
  return out;
}

RunResult run_ucb_per_user(const LatentModel& model, long num_sessions, const PolicySpec& spec,
                           std::uint64_t seed) {
  const int num_actions = model.num_actions();
  const int num_users = model.num_users();

  RngStream root(seed);
  RngStream arrival = root.split("arrival");
  RngStream noise = root.split("noise");

  std::vector<std::vector<long>> counts(num_users, std::vector<long>(num_actions, 0));
  std::vector<std::vector<double>> sums(num_users, std::vector<double>(num_actions, 0.0));
  std::vector<long> steps(num_users, 0);

  const auto choose = [&](int user, int) {
    for (int a = 0; a < num_actions; ++a)
      if (counts[user][a] == 0) return a;
    const double t = static_cast<double>(steps[user] + 1);
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < num_actions; ++a) {
      const double mean = sums[user][a] / counts[user][a];
      const double score =
          mean + spec.ucb_scale * std::sqrt(2.0 * std::log(t) / counts[user][a]);
      if (score > best_score) {
        best_score = score;
        best = a;
      }
    }
    return best;
  };
  const auto observe = [&](int user, int, int action, double reward) {
    ++counts[user][action];
    sums[user][action] += reward;
    ++steps[user];
  };

  RunResult out;
  out.seed = seed;
  for (long n = 1; n <= num_sessions; ++n) {
    const MiniSessionResult res = run_mini_session(model, n, SessionKind::kExploit, 1.0, choose,
                                                   arrival, noise, observe);
    append_session(out, res);
  }
  return out;
}

RunResult run_oracle_oful(const LatentModel& model, long num_sessions, const PolicySpec& spec,
                          std::uint64_t seed) {
  RngStream root(seed);
  RngStream arrival = root.split("arrival");
  RngStream noise = root.split("noise");

  const Matrix& features = model.u;
  PerUserOful oful(model.num_users(), model.num_classes(), spec.oful);

  RunResult out;
  out.seed = seed;
  for (long n = 1; n <= num_sessions; ++n) {
    const MiniSessionResult res = run_mini_session(
        model, n, SessionKind::kExploit, 1.0,
        [&](int user, int) { return oful.select(user, features); }, arrival, noise,
        [&](int user, int, int action, double reward) {
          oful.observe(user, features, action, reward);
        });
    append_session(out, res);
  }
  return out;
}

void als_sweeps(Matrix& u_hat, Matrix& v_hat, const RewardTable& table, int iterations,
                double ridge) {
  const int num_users = table.sum.rows();
  const int num_actions = table.sum.cols();
  const int rank = u_hat.cols();
  if (v_hat.cols() != rank || u_hat.rows() != num_actions || v_hat.rows() != num_users)
    throw std::invalid_argument("als_sweeps: factor shapes do not match the table");

  const auto solve_row = [&](const SymMatrix& normal, std::span<const double> rhs) {
    SymMatrix reg = normal;
    for (int i = 0; i < rank; ++i) reg.at(i, i) += std::max(ridge, 0.0);
    try {
      return solve_spd(reg, rhs);
    } catch (const std::domain_error&) {
      SymMatrix floored = normal;
      for (int i = 0; i < rank; ++i) floored.at(i, i) += 1e-6;
      return solve_spd(floored, rhs);
    }
  };

  std::vector<double> row(rank), rhs(rank);
  for (int sweep = 0; sweep < iterations; ++sweep) {
    for (int b = 0; b < num_users; ++b) {
      SymMatrix normal(rank);
      std::fill(rhs.begin(), rhs.end(), 0.0);
      bool any = false;
      for (int a = 0; a < num_actions; ++a) {
        if (table.count(b, a) <= 0.0) continue;
        any = true;
        const double mean = table.sum(b, a) / table.count(b, a);
        for (int i = 0; i < rank; ++i) row[i] = u_hat(a, i);
        normal.add_outer(row, 1.0);
        for (int i = 0; i < rank; ++i) rhs[i] += row[i] * mean;
      }
      if (!any) continue;
      const std::vector<double> sol = solve_row(normal, rhs);
      for (int i = 0; i < rank; ++i) v_hat(b, i) = sol[i];
    }
    for (int a = 0; a < num_actions; ++a) {
      SymMatrix normal(rank);
      std::fill(rhs.begin(), rhs.end(), 0.0);
      bool any = false;
      for (int b = 0; b < num_users; ++b) {
        if (table.count(b, a) <= 0.0) continue;
        any = true;
        const double mean = table.sum(b, a) / table.count(b, a);
        for (int i = 0; i < rank; ++i) row[i] = v_hat(b, i);
        normal.add_outer(row, 1.0);
        for (int i = 0; i < rank; ++i) rhs[i] += row[i] * mean;
      }
      if (!any) continue;
      const std::vector<double> sol = solve_row(normal, rhs);
      for (int i = 0; i < rank; ++i) u_hat(a, i) = sol[i];
    }
  }
}

RunResult run_als_oful(const LatentModel& model, long num_sessions, const PolicySpec& spec,
                       std::uint64_t seed) {
  const int num_actions = model.num_actions();
  const int num_users = model.num_users();
  const int rank = spec.num_classes;

  RngStream root(seed);
  RngStream arrival = root.split("arrival");
  RngStream noise = root.split("noise");
  RngStream policy = root.split("policy");

  RewardTable table{Matrix(num_users, num_actions), Matrix(num_users, num_actions)};
  Matrix u_hat(num_actions, rank), v_hat(num_users, rank);
  for (double& x : u_hat.flat()) x = spec.als.init_scale * policy.next_gaussian();
  for (double& x : v_hat.flat()) x = spec.als.init_scale * policy.next_gaussian();

  PerUserOful oful(num_users, rank, spec.oful);
  long explore_sessions = 0;
  bool fitted = false;

  RunResult out;
  out.seed = seed;
  for (long n = 1; n <= num_sessions; ++n) {
    const double gamma =
        gamma_value(spec.schedule, n, spec.hexagon, spec.constant_gamma);
    const bool draw = policy.bernoulli(gamma);
    const bool explore = spec.literal_gate ? !draw : draw;

    MiniSessionResult res;
    if (explore) {
      res = run_mini_session(
          model, n, SessionKind::kExplore, gamma,
          [&](int, int) { return policy.next_below(num_actions); }, arrival, noise,
          [&](int user, int, int action, double reward) {
            table.sum(user, action) += reward;
            table.count(user, action) += 1.0;
          });
      ++explore_sessions;
      if (explore_sessions >= spec.refresh_warmup) {
        als_sweeps(u_hat, v_hat, table, spec.als.iterations, spec.als.ridge);
        if (spec.rebuild_on_refresh) oful.rebuild(u_hat);
        fitted = true;
      }
    } else if (!fitted) {
      res = run_mini_session(
          model, n, SessionKind::kExploit, gamma,
          [&](int, int) { return policy.next_below(num_actions); }, arrival, noise);
    } else {
      res = run_mini_session(
          model, n, SessionKind::kExploit, gamma,
          [&](int user, int) { return oful.select(user, u_hat); }, arrival, noise,
          [&](int user, int, int action, double reward) {
            oful.observe(user, u_hat, action, reward);
          });
    }
    append_session(out, res);
  }
  return out;
}

RunResult run_policy(const LatentModel& model, long num_sessions, const PolicySpec& spec,
                     std::uint64_t seed) {
  switch (spec.kind) {
    case PolicyKind::kRtpOful:
      return run_rtp_oful(model, num_sessions, spec, seed);
    case PolicyKind::kUcbPerUser:
      return run_ucb_per_user(model, num_sessions, spec, seed);
    case PolicyKind::kOracleOful:
      return run_oracle_oful(model, num_sessions, spec, seed);
    case PolicyKind::kAlsOful:
      return run_als_oful(model, num_sessions, spec, seed);
  }
  throw std::logic_error("run_policy: unknown policy kind");
}

}  // namespace lrb
