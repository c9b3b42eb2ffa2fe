#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lrb/linalg.hpp"

namespace lrb {

enum class OfulMode { kRegularized, kUnregularized };

struct OfulParams {
  double lambda = 1.0;    // ridge weight (ignored in unregularized mode)
  double r_theta = 1.0;   // bound on the parameter norm
  double r_noise = 1.0;   // sub-Gaussian noise scale
  double delta = 0.01;    // confidence level
  OfulMode mode = OfulMode::kRegularized;

  // Unregularized mode: the default confidence radius is the finite-arm form
  // 4R²(A·log t + log(A/δ)); the flag switches to the arm-count-free one,
  // which needs the feature-norm bound r_x and design-eigenvalue floor lambda0.
  bool general_radius = false;
  double r_x = 1.0;
  double lambda0 = 1.0;
};

// Design matrix, response accumulator and ridge estimate for one linear
// bandit instance. Owned by exactly one policy instance.
class OfulState {
public:
  OfulState(int dim, const OfulParams& params);

  // gram += f·fᵀ, responses += reward·f; the estimate is recomputed by a
  // direct solve every update.
  void update(std::span<const double> feature, double reward);

  // Optimistic action: argmax_a ū_aᵀv̂ + D·‖ū_a‖_{gram⁻¹}, the closed form of
  // the joint max over the confidence ellipsoid for finite arms. Ties break
  // to the lowest index. Unregularized mode throws UninitializedDesign until
  // the gram matrix is positive definite.
  int select(const Matrix& features, const OfulParams& params) const;

  // Confidence radius D at the current step.
  double radius(const OfulParams& params, int num_actions) const;

  // ‖v - v̂‖ in the gram norm; the ellipsoid membership test is
  // mahalanobis(v) <= radius(...).
  double mahalanobis(std::span<const double> v, const OfulParams& params) const;

  const SymMatrix& gram() const { return gram_; }
  std::span<const double> xy_sum() const { return xy_sum_; }
  std::span<const double> v_hat() const { return v_hat_; }
  long t() const { return t_; }

private:
  int dim_;
  SymMatrix gram_;
  std::vector<double> xy_sum_;
  std::vector<double> v_hat_;
  long t_ = 0;
};

// Worst-case spectral norm of the inverse over all full-rank C-row
// submatrices of [features; I_C]; bounds how a deviation from linearity
// distorts the parameter estimate. Exact enumeration; refuses column counts
// above `exact_cap`.
double perturbation_gain(const Matrix& features, int exact_cap = 4);
// Sampled-subset lower bound for larger column counts.
double perturbation_gain_sampled(const Matrix& features, int samples, std::uint64_t seed);

// Largest deviation-from-linearity norm under which the linear
// approximation's best arm is provably unchanged. Throws when the optimum is
// tied.
double critical_radius(const Matrix& features, std::span<const double> v_circ);

// Multiplicative distortion between true gaps and gaps of the linear
// approximation; equals 1 in the perfectly realizable case. Throws when some
// approximate gap is nonpositive.
double gap_distortion(std::span<const double> m, const Matrix& features,
                      std::span<const double> v_circ);

// Smallest ridge weight for which the robustness guarantees apply given the
// observed feature norms.
double robustness_lambda_floor(const Matrix& features, double r_theta);

}  // namespace lrb
