#include "lrb/oful.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lrb/errors.hpp"
#include "lrb/rng.hpp"

namespace lrb {

namespace {

constexpr double kSingularTol = 1e-12;

// Cholesky factor of a SymMatrix; throws std::domain_error when not SPD.
std::vector<double> cholesky(const SymMatrix& a) {
  const int n = a.dim();
  std::vector<double> l(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double sum = a(i, j);
      for (int k = 0; k < j; ++k) sum -= l[i * n + k] * l[j * n + k];
      if (i == j) {
        if (sum <= 0.0) throw std::domain_error("cholesky: matrix not positive definite");
        l[i * n + i] = std::sqrt(sum);
      } else {
        l[i * n + j] = sum / l[j * n + j];
      }
    }
  }
  return l;
}

// Solves L y = b in place given the packed factor.
std::vector<double> forward_solve(const std::vector<double>& l, int n, std::span<const double> b) {
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    double sum = b[i];
    for (int k = 0; k < i; ++k) sum -= l[i * n + k] * y[k];
    y[i] = sum / l[i * n + i];
  }
  return y;
}

std::vector<double> backward_solve(const std::vector<double>& l, int n, std::span<const double> y) {
  std::vector<double> x(n);
  for (int i = n - 1; i >= 0; --i) {
    double sum = y[i];
    for (int k = i + 1; k < n; ++k) sum -= l[k * n + i] * x[k];
    x[i] = sum / l[i * n + i];
  }
  return x;
}

}  // namespace

OfulState::OfulState(int dim, const OfulParams& params)
    : dim_(dim), gram_(dim), xy_sum_(dim, 0.0), v_hat_(dim, 0.0) {
  if (dim < 1) throw std::invalid_argument("OfulState: dim must be >= 1");
  if (params.mode == OfulMode::kRegularized) {
    if (!(params.lambda > 0.0))
      throw std::invalid_argument("OfulState: regularized mode needs lambda > 0");
    for (int i = 0; i < dim; ++i) gram_.at(i, i) = params.lambda;
  }
}

void OfulState::update(std::span<const double> feature, double reward) {
  if (static_cast<int>(feature.size()) != dim_)
    throw std::invalid_argument("OfulState::update: feature dimension mismatch");
  gram_.add_outer(feature, 1.0);
  for (int i = 0; i < dim_; ++i) xy_sum_[i] += reward * feature[i];
  ++t_;
  try {
    v_hat_ = solve_spd(gram_, xy_sum_);
  } catch (const std::domain_error&) {
    // Unregularized gram still singular; the estimate stays undefined (zero)
    // until every direction has been covered.
    std::fill(v_hat_.begin(), v_hat_.end(), 0.0);
  }
}

double OfulState::radius(const OfulParams& params, int num_actions) const {
  if (params.mode == OfulMode::kRegularized) {
    const EigPairs eig = sym_eig_topk(gram_, dim_);
    double logdet = 0.0;
    for (const double v : eig.values) logdet += std::log(v);
    const double inside = logdet - dim_ * std::log(params.lambda) + 2.0 * std::log(1.0 / params.delta);
    return params.r_noise * std::sqrt(inside) + std::sqrt(params.lambda) * params.r_theta;
  }
  const double t = static_cast<double>(std::max<long>(t_, 1));
  if (!params.general_radius) {
    const double a = static_cast<double>(num_actions);
    return std::sqrt(4.0 * params.r_noise * params.r_noise *
                     (a * std::log(t) + std::log(a / params.delta)));
  }
  const double c_ratio = 36.0 * params.r_x * params.r_x / params.lambda0;
  const double d2 = 16.0 * params.r_noise * params.r_noise * (1.0 + std::log(1.0 + c_ratio)) *
                    (dim_ * std::log(c_ratio * t) + std::log(1.0 / params.delta)) * std::log(t);
  return std::sqrt(std::max(0.0, d2));
}

double OfulState::mahalanobis(std::span<const double> v, const OfulParams&) const {
  if (static_cast<int>(v.size()) != dim_)
    throw std::invalid_argument("OfulState::mahalanobis: dimension mismatch");
  std::vector<double> diff(dim_);
  for (int i = 0; i < dim_; ++i) diff[i] = v[i] - v_hat_[i];
  double acc = 0.0;
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) acc += diff[i] * gram_(i, j) * diff[j];
  return std::sqrt(std::max(0.0, acc));
}

int OfulState::select(const Matrix& features, const OfulParams& params) const {
  if (features.cols() != dim_)
    throw std::invalid_argument("OfulState::select: feature dimension mismatch");
  const int num_actions = features.rows();
  if (num_actions < 1) throw std::invalid_argument("OfulState::select: no actions");

  std::vector<double> l;
  try {
    l = cholesky(gram_);
  } catch (const std::domain_error&) {
    throw UninitializedDesign("uninitialized design");
  }
  if (params.mode == OfulMode::kUnregularized) {
    // Cholesky succeeding means numerically positive definite, but keep the
    // contract explicit: selection requires a covered design.
    const EigPairs eig = sym_eig_topk(gram_, dim_);
    if (eig.values.back() <= 0.0) throw UninitializedDesign("uninitialized design");
  }

  const double d = radius(params, num_actions);
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < num_actions; ++a) {
    const std::span<const double> u = features.row(a);
    const std::vector<double> y = forward_solve(l, dim_, u);
    const std::vector<double> x = backward_solve(l, dim_, y);  // gram⁻¹·u
    const double score = dot(u, v_hat_) + d * std::sqrt(std::max(0.0, dot(u, x)));
    if (score > best_score) {
      best_score = score;
      best = a;
    }
  }
  return best;
}

namespace {

// ‖G⁻¹‖₂ = 1/σ_min(G) for a C×C block, via the eigenvalues of GᵀG.
// Returns 0 when the block is (numerically) singular.
double inverse_spectral_norm(const Matrix& stacked, std::span<const int> rows) {
  const int c = stacked.cols();
  SymMatrix gtg(c);
  for (int i = 0; i < c; ++i)
    for (int j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (const int r : rows) acc += stacked(r, i) * stacked(r, j);
      gtg.at(i, j) = acc;
    }
  const EigPairs eig = sym_eig_topk(gtg, c);
  const double smax = std::sqrt(std::max(0.0, eig.values.front()));
  const double smin = std::sqrt(std::max(0.0, eig.values.back()));
  if (smin <= kSingularTol * std::max(1.0, smax)) return 0.0;
  return 1.0 / smin;
}

Matrix stack_identity(const Matrix& features) {
  const int a = features.rows();
  const int c = features.cols();
  Matrix stacked(a + c, c);
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < c; ++j) stacked(i, j) = features(i, j);
  for (int j = 0; j < c; ++j) stacked(a + j, j) = 1.0;
  return stacked;
}

}  // namespace

double perturbation_gain(const Matrix& features, int exact_cap) {
  const int c = features.cols();
  if (c > exact_cap)
    throw std::invalid_argument(
        "perturbation_gain: column count above the exact enumeration cap; use "
        "perturbation_gain_sampled");
  const Matrix stacked = stack_identity(features);
  const int rows = stacked.rows();

  std::vector<int> idx(c);
  for (int i = 0; i < c; ++i) idx[i] = i;
  double best = 0.0;
  while (true) {
    best = std::max(best, inverse_spectral_norm(stacked, idx));
    // next combination in lexicographic order
    int k = c - 1;
    while (k >= 0 && idx[k] == rows - c + k) --k;
    if (k < 0) break;
    ++idx[k];
    for (int j = k + 1; j < c; ++j) idx[j] = idx[j - 1] + 1;
  }
  return best;
}

double perturbation_gain_sampled(const Matrix& features, int samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("perturbation_gain_sampled: samples must be >= 1");
  const int c = features.cols();
  const Matrix stacked = stack_identity(features);
  const int rows = stacked.rows();
  RngStream stream = RngStream(seed).split("perturbation_gain");

  double best = inverse_spectral_norm(stacked, [&] {
    // always include the identity block so the result is at least 1
    std::vector<int> id(c);
    for (int i = 0; i < c; ++i) id[i] = rows - c + i;
    return id;
  }());
  std::vector<int> idx(c);
  for (int s = 0; s < samples; ++s) {
    // sample c distinct rows
    for (int i = 0; i < c; ++i) {
      bool fresh;
      do {
        idx[i] = stream.next_below(rows);
        fresh = true;
        for (int j = 0; j < i; ++j) fresh = fresh && idx[j] != idx[i];
      } while (!fresh);
    }
    best = std::max(best, inverse_spectral_norm(stacked, idx));
  }
  return best;
}

double critical_radius(const Matrix& features, std::span<const double> v_circ) {
  const int a = features.rows();
  const int c = features.cols();
  if (static_cast<int>(v_circ.size()) != c)
    throw std::invalid_argument("critical_radius: dimension mismatch");

  std::vector<double> scores(a);
  int star = 0;
  for (int i = 0; i < a; ++i) {
    scores[i] = dot(features.row(i), v_circ);
    if (scores[i] > scores[star]) star = i;
  }
  const double tie_tol = 1e-12 * std::max(1.0, std::abs(scores[star]));
  for (int i = 0; i < a; ++i)
    if (i != star && scores[star] - scores[i] <= tie_tol)
      throw std::invalid_argument("no critical radius (tied optimum)");

  const double alpha = perturbation_gain(features);
  double radius = std::numeric_limits<double>::infinity();
  for (int i = 0; i < a; ++i) {
    if (i == star) continue;
    double dn = 0.0;
    for (int j = 0; j < c; ++j) {
      const double diff = features(star, j) - features(i, j);
      dn += diff * diff;
    }
    dn = std::sqrt(dn);
    if (dn == 0.0) continue;
    radius = std::min(radius, (scores[star] - scores[i]) / (2.0 * alpha * dn));
  }
  return radius;
}

double gap_distortion(std::span<const double> m, const Matrix& features,
                      std::span<const double> v_circ) {
  const int a = features.rows();
  if (static_cast<int>(m.size()) != a)
    throw std::invalid_argument("gap_distortion: reward vector size mismatch");

  int star = 0;
  for (int i = 0; i < a; ++i)
    if (m[i] > m[star]) star = i;

  const double approx_star = dot(features.row(star), v_circ);
  double rho = 1.0;
  for (int i = 0; i < a; ++i) {
    if (i == star) continue;
    const double denom = approx_star - dot(features.row(i), v_circ);
    if (denom <= 0.0) throw std::domain_error("outside robustness regime");
    rho = std::max(rho, (m[star] - m[i]) / denom);
  }
  return rho;
}

double robustness_lambda_floor(const Matrix& features, double r_theta) {
  double rx2 = 0.0;
  for (int i = 0; i < features.rows(); ++i) {
    const auto row = features.row(i);
    rx2 = std::max(rx2, dot(row, row));
  }
  return std::max({1.0, rx2, 1.0 / (4.0 * r_theta * r_theta)});
}

}  // namespace lrb
