#pragma once

#include <span>
#include <vector>

#include "lrb/linalg.hpp"
#include "lrb/moments.hpp"
#include "lrb/rtp.hpp"

namespace lrb {

// Output of the feature-recovery pipeline: estimated per-class mean-reward
// columns, their mixture weights, and the intermediates needed for
// diagnostics and replay.
struct FeatureEstimate {
  Matrix u_bar;                        // A×C estimated class columns
  std::vector<double> v_bar;           // per-class weight λ̂⁻² (0 where invalid)
  std::vector<bool> v_valid;           // false where λ̂ was nonpositive or negligible
  std::vector<RobustEigPair> eigpairs;
  Matrix whitener;                     // A×C
  long sessions = 0;
};

// Separation constants of the model, inputs to the recovery bound and the
// exploration threshold. `c1` is the tensor-method accuracy constant, exposed
// as configuration since no numeric value is published for it.
struct ModelConstants {
  double v_min;
  double sigma_min;
  double sigma_max;
  double sigma_gap;  // minimum spacing between distinct σ_c (infinity when C = 1)
  double u_max;
  double c1 = 1.0;
};

// Whiten the second moment, contract the third moment into an orthogonally
// decomposable core, extract robust eigenpairs, and un-whiten:
//   W = Û D̂^{-1/2},  T̂ = M̂₃(W,W,W),  ū_c = λ̂_c·Û·D̂^{1/2}·φ̂_c,  v̄_c = λ̂_c⁻².
// Throws RankDeficientMoments when the top-k eigenvalues are not all positive.
FeatureEstimate estimate_features(const MomentEstimates& moments, int num_classes,
                                  const RtpConfig& cfg);
FeatureEstimate estimate_features_from_moments(const SymMatrix& m2, const SymTensor3& m3,
                                               long sessions, int num_classes,
                                               const RtpConfig& cfg);

struct ColumnAlignment {
  std::vector<int> perm;   // perm[c] = estimate column matched to true column c
  std::vector<int> signs;  // ±1 per true column
  double max_err;          // max over c of ‖u_true[:,c] - s_c·u_est[:,perm[c]]‖₂
};

// Exact search over all permutations and signs; refuses C > 8.
ColumnAlignment align_columns(const Matrix& u_true, const Matrix& u_est);
// Greedy assignment on the pairwise column-distance matrix, for larger C.
ColumnAlignment align_columns_greedy(const Matrix& u_true, const Matrix& u_est);

// Per-column recovery-error bound after n sessions, and its constant factor.
double recovery_constant(const ModelConstants& mc, int num_actions, int num_classes);
// Leading-order variant of the constant (drops the higher-order terms).
double recovery_constant_asymptotic(const ModelConstants& mc, int num_actions, int num_classes);
double recovery_bound(const ModelConstants& mc, int num_actions, int num_classes, long n,
                      std::span<const double> gammas, double delta);

struct ExplorationThreshold {
  double moment_branch;  // exploration mass needed for the whitening step
  double oful_branch;    // exploration mass needed for per-user robustness
  double value;          // max of the two
};

// Minimum n²/Σγ⁻² after which a user's feature error sits inside the critical
// radius. `v_b` is the user's mixture row, `g_b` its minimum suboptimality
// gap, `alpha_star` the perturbation gain of the true features.
ExplorationThreshold exploration_threshold(const ModelConstants& mc, int num_actions,
                                           int num_classes, double delta,
                                           std::span<const double> v_b, double g_b,
                                           double alpha_star);

// Closed-form population moments Σ_c w_c·u_c u_cᵀ and Σ_c w_c·u_c^⊗3 for
// mixture weights w (typically Σ_b v_{b,c}·β_b).
SymMatrix population_m2(const Matrix& u, std::span<const double> weights);
SymTensor3 population_m3(const Matrix& u, std::span<const double> weights);

// Separation constants measured from ground-truth factors. β defaults to
// uniform when empty.
ModelConstants derive_constants(const Matrix& u, const Matrix& v, std::span<const double> beta);

}  // namespace lrb
