#include "lrb/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "lrb/errors.hpp"

namespace lrb {

namespace {

constexpr double kEigFloor = 1e-12;     // below this the second moment is rank deficient
constexpr double kLambdaFloor = 1e-9;   // below this a recovered factor is junk

FeatureEstimate estimate_impl(const SymMatrix& m2, long sessions, int num_classes,
                              const RtpConfig& cfg, const SymTensor3* m3_full,
                              const MomentEstimates* moments) {
  const int a = m2.dim();
  if (num_classes < 1 || num_classes > a)
    throw std::invalid_argument("estimate_features: class count out of range");

  const EigPairs eig = sym_eig_topk(m2, num_classes);
  if (eig.values.back() <= kEigFloor)
    throw RankDeficientMoments("rank-deficient second moment");

  Matrix whitener(a, num_classes);
  std::vector<double> sqrt_d(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    sqrt_d[c] = std::sqrt(eig.values[c]);
    const double inv = 1.0 / sqrt_d[c];
    for (int i = 0; i < a; ++i) whitener(i, c) = eig.vectors(i, c) * inv;
  }

  const SymTensor3 core = moments != nullptr ? moments->contracted_m3(whitener)
                                             : multilinear_map(*m3_full, whitener);

  RtpConfig rtp_cfg = cfg;
  rtp_cfg.factors = num_classes;
  std::vector<RobustEigPair> pairs = rtp_decompose(core, rtp_cfg);

  FeatureEstimate out;
  out.whitener = whitener;
  out.sessions = sessions;
  out.u_bar = Matrix(a, num_classes);
  out.v_bar.assign(num_classes, 0.0);
  out.v_valid.assign(num_classes, false);
  for (int c = 0; c < num_classes; ++c) {
    const double lambda = pairs[c].lambda;
    if (lambda > kLambdaFloor) {
      // ū_c = λ̂·(Ŵᵀ)†·φ̂ with the pseudo-inverse in its factored form Û·D̂^{1/2}
      for (int i = 0; i < a; ++i) {
        double acc = 0.0;
        for (int j = 0; j < num_classes; ++j)
          acc += eig.vectors(i, j) * sqrt_d[j] * pairs[c].phi[j];
        out.u_bar(i, c) = lambda * acc;
      }
      out.v_bar[c] = 1.0 / (lambda * lambda);
      out.v_valid[c] = true;
    }
    // else: zero column, flagged; a bounded perturbation for the consumer
  }
  out.eigpairs = std::move(pairs);
  return out;
}

}  // namespace

FeatureEstimate estimate_features(const MomentEstimates& moments, int num_classes,
                                  const RtpConfig& cfg) {
  if (moments.sessions() < 1)
    throw std::invalid_argument("estimate_features: no sessions ingested");
  return estimate_impl(moments.m2(), moments.sessions(), num_classes, cfg, nullptr, &moments);
}

FeatureEstimate estimate_features_from_moments(const SymMatrix& m2, const SymTensor3& m3,
                                               long sessions, int num_classes,
                                               const RtpConfig& cfg) {
  if (m3.dim() != m2.dim())
    throw std::invalid_argument("estimate_features: moment dimensions differ");
  return estimate_impl(m2, sessions, num_classes, cfg, &m3, nullptr);
}

namespace {

ColumnAlignment finish_alignment(const Matrix& u_true, const Matrix& u_est,
                                 const std::vector<int>& perm) {
  const int c = u_true.cols();
  const int a = u_true.rows();
  ColumnAlignment out;
  out.perm = perm;
  out.signs.assign(c, 1);
  out.max_err = 0.0;
  for (int i = 0; i < c; ++i) {
    double dp = 0.0, dm = 0.0;
    for (int r = 0; r < a; ++r) {
      const double t = u_true(r, i);
      const double e = u_est(r, perm[i]);
      dp += (t - e) * (t - e);
      dm += (t + e) * (t + e);
    }
    out.signs[i] = dm < dp ? -1 : 1;
    out.max_err = std::max(out.max_err, std::sqrt(std::min(dp, dm)));
  }
  return out;
}

}  // namespace

ColumnAlignment align_columns(const Matrix& u_true, const Matrix& u_est) {
  if (u_true.rows() != u_est.rows() || u_true.cols() != u_est.cols())
    throw std::invalid_argument("align_columns: shape mismatch");
  const int c = u_true.cols();
  if (c > 8)
    throw std::invalid_argument(
        "align_columns: refusing C > 8 (factorial search); use align_columns_greedy");

  const int a = u_true.rows();
  // dist[i][j] = best-sign distance between true column i and estimate column j
  std::vector<std::vector<double>> dist(c, std::vector<double>(c));
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < c; ++j) {
      double dp = 0.0, dm = 0.0;
      for (int r = 0; r < a; ++r) {
        const double t = u_true(r, i);
        const double e = u_est(r, j);
        dp += (t - e) * (t - e);
        dm += (t + e) * (t + e);
      }
      dist[i][j] = std::sqrt(std::min(dp, dm));
    }

  std::vector<int> perm(c);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (int i = 0; i < c; ++i) cost = std::max(cost, dist[i][perm[i]]);
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  return finish_alignment(u_true, u_est, best);
}

ColumnAlignment align_columns_greedy(const Matrix& u_true, const Matrix& u_est) {
  if (u_true.rows() != u_est.rows() || u_true.cols() != u_est.cols())
    throw std::invalid_argument("align_columns_greedy: shape mismatch");
  const int c = u_true.cols();
  const int a = u_true.rows();
  std::vector<std::vector<double>> dist(c, std::vector<double>(c));
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < c; ++j) {
      double dp = 0.0, dm = 0.0;
      for (int r = 0; r < a; ++r) {
        const double t = u_true(r, i);
        const double e = u_est(r, j);
        dp += (t - e) * (t - e);
        dm += (t + e) * (t + e);
      }
      dist[i][j] = std::sqrt(std::min(dp, dm));
    }

  std::vector<int> perm(c, -1);
  std::vector<bool> row_used(c, false), col_used(c, false);
  for (int step = 0; step < c; ++step) {
    double best = std::numeric_limits<double>::infinity();
    int bi = -1, bj = -1;
    for (int i = 0; i < c; ++i) {
      if (row_used[i]) continue;
      for (int j = 0; j < c; ++j) {
        if (col_used[j]) continue;
        if (dist[i][j] < best) {
          best = dist[i][j];
          bi = i;
          bj = j;
        }
      }
    }
    perm[bi] = bj;
    row_used[bi] = true;
    col_used[bj] = true;
  }
  return finish_alignment(u_true, u_est, perm);
}

namespace {

double aleph_constant(const ModelConstants& mc) {
  return 1.0 + 10.0 * (1.0 / mc.sigma_gap + 1.0 / mc.sigma_min) *
                   (1.0 + mc.u_max * mc.u_max * mc.u_max);
}

void check_constants(const ModelConstants& mc) {
  if (!(mc.v_min > 0.0 && mc.sigma_min > 0.0 && mc.sigma_max > 0.0 && mc.sigma_gap > 0.0 &&
        mc.u_max > 0.0 && mc.c1 > 0.0))
    throw std::invalid_argument("model constants must be positive");
  if (mc.sigma_min > mc.sigma_max)
    throw std::invalid_argument("sigma_min must not exceed sigma_max");
}

}  // namespace

double recovery_constant(const ModelConstants& mc, int num_actions, int num_classes) {
  check_constants(mc);
  const double a = num_actions;
  const double c = num_classes;
  const double ms = std::min(mc.sigma_gap, mc.sigma_min);
  const double aleph = aleph_constant(mc);

  const double head = std::pow(c * a / mc.sigma_min, 1.5) *
                      (13.0 * std::sqrt(mc.sigma_max) + 4.0 * std::sqrt(2.0 * ms) +
                       5.0 * (mc.sigma_max / mc.sigma_gap + 1.0 / (2.0 * mc.sigma_max)) * ms) *
                      aleph;
  const double mid = (2.0 * mc.sigma_max / mc.sigma_gap + 1.0 / mc.sigma_max) /
                     (mc.v_min * mc.v_min);
  const double tail = 5.0 * std::sqrt(3.0 / 8.0) *
                      (std::sqrt(mc.sigma_max) + std::sqrt(ms / 2.0)) *
                      std::pow(2.0 * c * a / mc.sigma_min, 3.0) * aleph * aleph * ms;
  return head + mid + tail;
}

double recovery_constant_asymptotic(const ModelConstants& mc, int num_actions, int num_classes) {
  check_constants(mc);
  const double a = num_actions;
  const double c = num_classes;
  return 13.0 * std::sqrt(mc.sigma_max) * std::pow(c * a / mc.sigma_min, 1.5) *
             aleph_constant(mc) +
         (2.0 * mc.sigma_max / mc.sigma_gap + 1.0 / mc.sigma_max) / (mc.v_min * mc.v_min);
}

double recovery_bound(const ModelConstants& mc, int num_actions, int num_classes, long n,
                      std::span<const double> gammas, double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("recovery_bound: delta must lie in (0,1)");
  if (n < 1 || gammas.size() < static_cast<std::size_t>(n))
    throw std::invalid_argument("recovery_bound: need n >= 1 gamma entries");
  double inv_sq_sum = 0.0;
  for (long i = 0; i < n; ++i) inv_sq_sum += 1.0 / (gammas[i] * gammas[i]);

  const double a = num_actions;
  const double c = num_classes;
  const double nn = static_cast<double>(n);
  return recovery_constant(mc, num_actions, num_classes) * std::pow(a, 3.0) *
         std::sqrt(inv_sq_sum * c * std::log(4.0 * a * a * a / delta) / (2.0 * nn * nn));
}

ExplorationThreshold exploration_threshold(const ModelConstants& mc, int num_actions,
                                           int num_classes, double delta,
                                           std::span<const double> v_b, double g_b,
                                           double alpha_star) {
  check_constants(mc);
  if (!(g_b > 0.0))
    throw std::invalid_argument("exploration_threshold: no unique optimal action for user");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("exploration_threshold: delta must lie in (0,1)");

  const double a = num_actions;
  const double c = num_classes;
  const double ms = std::min(mc.sigma_gap, mc.sigma_min);
  const double aleph = aleph_constant(mc);
  const double log2 = std::log(4.0 * a * a / delta);
  const double log3 = std::log(4.0 * a * a * a / delta);
  const double diamond = recovery_constant(mc, num_actions, num_classes);
  const double vb2 = dot(v_b, v_b);

  ExplorationThreshold out;
  out.moment_branch = 2.0 * std::pow(a, 6.0) * log2 / (ms * ms);

  const double rtp_factor = std::pow(a, 9.0) * aleph * aleph * std::pow(c, 5.0) * log3 /
                            (2.0 * mc.c1 * mc.c1 * std::pow(mc.sigma_min, 3.0));
  const double oful_factor = diamond * diamond * std::pow(a, 6.0) * c * c * log3;
  const double inner =
      std::max({2.0 * alpha_star * alpha_star, 8.0 * a * vb2 / (g_b * g_b),
                128.0 * alpha_star * alpha_star * c * mc.u_max * mc.u_max * vb2 / (g_b * g_b) + 0.5});
  out.oful_branch = rtp_factor * oful_factor * inner;
  out.value = std::max(out.moment_branch, out.oful_branch);
  return out;
}

SymMatrix population_m2(const Matrix& u, std::span<const double> weights) {
  const int a = u.rows();
  const int c = u.cols();
  if (static_cast<int>(weights.size()) != c)
    throw std::invalid_argument("population_m2: weight count must equal class count");
  SymMatrix m2(a);
  std::vector<double> col(a);
  for (int k = 0; k < c; ++k) {
    for (int i = 0; i < a; ++i) col[i] = u(i, k);
    m2.add_outer(col, weights[k]);
  }
  return m2;
}

SymTensor3 population_m3(const Matrix& u, std::span<const double> weights) {
  const int a = u.rows();
  const int c = u.cols();
  if (static_cast<int>(weights.size()) != c)
    throw std::invalid_argument("population_m3: weight count must equal class count");
  SymTensor3 m3(a);
  std::vector<double> col(a);
  for (int k = 0; k < c; ++k) {
    for (int i = 0; i < a; ++i) col[i] = u(i, k);
    m3.add_rank1(col, weights[k]);
  }
  return m3;
}

ModelConstants derive_constants(const Matrix& u, const Matrix& v, std::span<const double> beta) {
  const int b = v.rows();
  const int c = u.cols();
  std::vector<double> v_beta(c, 0.0);
  for (int i = 0; i < b; ++i) {
    const double w = beta.empty() ? 1.0 / b : beta[i];
    for (int k = 0; k < c; ++k) v_beta[k] += w * v(i, k);
  }
  const SymMatrix m2 = population_m2(u, v_beta);
  const EigPairs eig = sym_eig_topk(m2, c);

  ModelConstants mc;
  mc.sigma_min = std::numeric_limits<double>::infinity();
  mc.sigma_max = 0.0;
  std::vector<double> sigma(c);
  for (int k = 0; k < c; ++k) {
    sigma[k] = std::sqrt(std::max(0.0, eig.values[k]));
    mc.sigma_min = std::min(mc.sigma_min, sigma[k]);
    mc.sigma_max = std::max(mc.sigma_max, sigma[k]);
  }
  mc.sigma_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < c; ++i)
    for (int j = i + 1; j < c; ++j)
      mc.sigma_gap = std::min(mc.sigma_gap, std::abs(sigma[i] - sigma[j]));

  mc.v_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < b; ++i)
    for (int k = 0; k < c; ++k) mc.v_min = std::min(mc.v_min, v(i, k));

  mc.u_max = 0.0;
  for (const double x : u.flat()) mc.u_max = std::max(mc.u_max, std::abs(x));
  mc.c1 = 1.0;
  return mc;
}

}  // namespace lrb
