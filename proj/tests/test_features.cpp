#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "common.hpp"
#include "lrb/errors.hpp"
#include "lrb/features.hpp"
#include "lrb/rng.hpp"

using namespace lrb;

namespace {

ModelConstants unit_constants() {
  ModelConstants mc;
  mc.v_min = 1.0;
  mc.sigma_min = 1.0;
  mc.sigma_max = 1.0;
  mc.sigma_gap = 1.0;
  mc.u_max = 1.0;
  mc.c1 = 1.0;
  return mc;
}

}  // namespace

TEST_CASE("population moments are recovered exactly") {
  RngStream stream(71);
  const int A = 6, C = 2;
  Matrix u(A, C);
  for (double& x : u.flat()) x = stream.next_unit();
  const std::vector<double> v_beta = {0.6, 0.4};

  const SymMatrix m2 = population_m2(u, v_beta);
  const SymTensor3 m3 = population_m3(u, v_beta);
  RtpConfig cfg;
  cfg.seed = 11;
  const FeatureEstimate fe = estimate_features_from_moments(m2, m3, 1, C, cfg);

  const ColumnAlignment align = align_columns(u, fe.u_bar);
  CHECK(align.max_err <= 1e-6);
  // positive factors make the sign unambiguous
  for (const int s : align.signs) CHECK(s == 1);
  for (int c = 0; c < C; ++c) {
    CHECK(fe.v_valid[c]);
    CHECK(std::abs(fe.v_bar[align.perm[c]] - v_beta[c]) <= 1e-6);
  }

  // whitening identity ŴᵀM₂Ŵ = I
  for (int i = 0; i < C; ++i)
    for (int j = 0; j < C; ++j) {
      double acc = 0.0;
      for (int r = 0; r < A; ++r)
        for (int s = 0; s < A; ++s) acc += fe.whitener(r, i) * m2(r, s) * fe.whitener(s, j);
      CHECK(acc == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-8));
    }

  // pseudo-inverse identity Ŵᵀ(ÛD̂^{1/2}) = I, with the factored pseudo-inverse
  // reconstructed from whitener and eigenvalues
  const EigPairs eig = sym_eig_topk(m2, C);
  for (int i = 0; i < C; ++i)
    for (int j = 0; j < C; ++j) {
      double acc = 0.0;
      for (int r = 0; r < A; ++r)
        acc += fe.whitener(r, i) * eig.vectors(r, j) * std::sqrt(eig.values[j]);
      CHECK(acc == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-10));
    }
}

TEST_CASE("single-class closed form") {
  RngStream stream(72);
  const int A = 5;
  Matrix u(A, 1);
  for (double& x : u.flat()) x = stream.next_unit();
  const std::vector<double> v_beta = {0.7};

  RtpConfig cfg;
  cfg.seed = 2;
  const FeatureEstimate fe = estimate_features_from_moments(population_m2(u, v_beta),
                                                            population_m3(u, v_beta), 1, 1, cfg);
  for (int i = 0; i < A; ++i) CHECK(std::abs(fe.u_bar(i, 0) - u(i, 0)) <= 1e-8);
  CHECK(std::abs(fe.v_bar[0] - 0.7) <= 1e-8);

  // reconstruction of both moments from the estimate
  const SymMatrix m2_rec = population_m2(fe.u_bar, fe.v_bar);
  const SymMatrix m2 = population_m2(u, v_beta);
  double err = 0.0;
  for (int i = 0; i < A; ++i)
    for (int j = 0; j < A; ++j) err += (m2_rec(i, j) - m2(i, j)) * (m2_rec(i, j) - m2(i, j));
  CHECK(std::sqrt(err) <= 1e-8);
}

TEST_CASE("zero second moment is rank deficient") {
  RtpConfig cfg;
  CHECK_THROWS_AS(estimate_features_from_moments(SymMatrix(4), SymTensor3(4), 1, 2, cfg),
                  RankDeficientMoments);
}

TEST_CASE("estimate from ingested sessions requires data") {
  MomentEstimates est(3);
  RtpConfig cfg;
  CHECK_THROWS_AS(estimate_features(est, 2, cfg), std::invalid_argument);
}

TEST_CASE("column alignment identities") {
  RngStream stream(73);
  const Matrix u = test::random_matrix(stream, 5, 3);

  const ColumnAlignment same = align_columns(u, u);
  CHECK(same.max_err == 0.0);
  for (int c = 0; c < 3; ++c) {
    CHECK(same.perm[c] == c);
    CHECK(same.signs[c] == 1);
  }

  // swap two columns and negate one
  Matrix shuffled(5, 2);
  Matrix u2 = test::random_matrix(stream, 5, 2);
  for (int i = 0; i < 5; ++i) {
    shuffled(i, 0) = -u2(i, 1);
    shuffled(i, 1) = u2(i, 0);
  }
  const ColumnAlignment swapped = align_columns(u2, shuffled);
  CHECK(swapped.max_err == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(swapped.perm[0] == 1);
  CHECK(swapped.perm[1] == 0);
  CHECK(swapped.signs[0] == 1);
  CHECK(swapped.signs[1] == -1);
}

TEST_CASE("alignment error is bounded by the injected perturbation") {
  RngStream stream(74);
  const Matrix u = test::random_matrix(stream, 6, 3);
  Matrix noisy = u;
  const double eps = 1e-3;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> g = test::random_unit_vector(stream, 6);
    for (int i = 0; i < 6; ++i) noisy(i, c) += eps * g[i];
  }
  const ColumnAlignment align = align_columns(u, noisy);
  CHECK(align.max_err >= 0.0);
  CHECK(align.max_err <= eps + 1e-12);
}

TEST_CASE("alignment refuses factorial blow-up but the greedy variant works") {
  const Matrix big(4, 9);
  CHECK_THROWS_AS(align_columns(big, big), std::invalid_argument);
  RngStream stream(75);
  const Matrix u = test::random_matrix(stream, 5, 9);
  const ColumnAlignment greedy = align_columns_greedy(u, u);
  CHECK(greedy.max_err == 0.0);
}

TEST_CASE("aleph constant by direct substitution") {
  // all constants 1: 1 + 10·(1/Γ + 1/σ_min)·(1 + u_max³) = 1 + 10·2·2 = 41
  const ModelConstants mc = unit_constants();
  const double aleph = 1.0 + 10.0 * (1.0 / mc.sigma_gap + 1.0 / mc.sigma_min) *
                                 (1.0 + mc.u_max * mc.u_max * mc.u_max);
  CHECK(aleph == 41.0);
  // the recovery constant embeds it; with all-ones constants and min{Γ,σ}=1
  // the leading-order variant is 13·(CA)^{3/2}·41 + 3
  const double expect_asym = 13.0 * std::pow(6.0, 1.5) * 41.0 + 3.0;
  CHECK(recovery_constant_asymptotic(mc, 3, 2) == doctest::Approx(expect_asym).epsilon(1e-12));
}

TEST_CASE("recovery constant matches an independent formula evaluation") {
  ModelConstants mc;
  mc.v_min = 0.3;
  mc.sigma_min = 0.8;
  mc.sigma_max = 1.4;
  mc.sigma_gap = 0.25;
  mc.u_max = 1.0;
  const int A = 5, C = 2;

  const double ms = std::min(mc.sigma_gap, mc.sigma_min);
  const double aleph = 1.0 + 10.0 * (1.0 / mc.sigma_gap + 1.0 / mc.sigma_min) * 2.0;
  const double want =
      std::pow(C * A / mc.sigma_min, 1.5) *
          (13.0 * std::sqrt(mc.sigma_max) + 4.0 * std::sqrt(2.0 * ms) +
           5.0 * (mc.sigma_max / mc.sigma_gap + 0.5 / mc.sigma_max) * ms) *
          aleph +
      (2.0 * mc.sigma_max / mc.sigma_gap + 1.0 / mc.sigma_max) / (mc.v_min * mc.v_min) +
      5.0 * std::sqrt(0.375) * (std::sqrt(mc.sigma_max) + std::sqrt(ms / 2.0)) *
          std::pow(2.0 * C * A / mc.sigma_min, 3.0) * aleph * aleph * ms;
  CHECK(recovery_constant(mc, A, C) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("recovery bound scales as the square root of the session count") {
  const ModelConstants mc = unit_constants();
  const std::vector<double> gammas(4000, 1.0);
  const double b1 = recovery_bound(mc, 4, 2, 1000, gammas, 0.1);
  const double b4 = recovery_bound(mc, 4, 2, 4000, gammas, 0.1);
  CHECK(b1 > 0.0);
  CHECK(b1 / b4 == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("recovery constant decreases as the spectrum floor rises") {
  ModelConstants mc;
  mc.v_min = 0.2;
  mc.sigma_max = 1.2;
  mc.sigma_gap = 0.15;
  mc.u_max = 1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (const double s : {0.2, 0.4, 0.6, 0.8, 1.0}) {
    mc.sigma_min = s;
    const double d = recovery_constant(mc, 4, 2);
    CHECK(d > 0.0);
    CHECK(d <= prev);
    prev = d;
  }
}

TEST_CASE("exploration threshold is the max of its branches") {
  ModelConstants mc;
  mc.v_min = 0.25;
  mc.sigma_min = 0.7;
  mc.sigma_max = 1.1;
  mc.sigma_gap = 0.2;
  mc.u_max = 1.0;
  const std::vector<double> v_b = {0.6, 0.4};
  const ExplorationThreshold th = exploration_threshold(mc, 4, 2, 0.1, v_b, 0.2, 1.5);
  CHECK(th.value == std::max(th.moment_branch, th.oful_branch));

  // independent evaluation of the moment branch
  const double ms = std::min(mc.sigma_gap, mc.sigma_min);
  const double want_moment = 2.0 * std::pow(4.0, 6.0) * std::log(4.0 * 16.0 / 0.1) / (ms * ms);
  CHECK(th.moment_branch == doctest::Approx(want_moment).epsilon(1e-12));

  // independent evaluation of the robustness branch
  const double aleph = 1.0 + 10.0 * (1.0 / mc.sigma_gap + 1.0 / mc.sigma_min) * 2.0;
  const double l3 = std::log(4.0 * 64.0 / 0.1);
  const double diamond = recovery_constant(mc, 4, 2);
  const double vb2 = 0.6 * 0.6 + 0.4 * 0.4;
  const double inner = std::max({2.0 * 1.5 * 1.5, 8.0 * 4.0 * vb2 / 0.04,
                                 128.0 * 1.5 * 1.5 * 2.0 * vb2 / 0.04 + 0.5});
  const double want_oful = std::pow(4.0, 9.0) * aleph * aleph * 32.0 * l3 /
                               (2.0 * std::pow(mc.sigma_min, 3.0)) *
                           (diamond * diamond * std::pow(4.0, 6.0) * 4.0 * l3) * inner;
  CHECK(th.oful_branch == doctest::Approx(want_oful).epsilon(1e-12));
}

TEST_CASE("exploration threshold monotonicity sweeps") {
  ModelConstants mc;
  mc.v_min = 0.25;
  mc.sigma_min = 0.7;
  mc.sigma_max = 1.1;
  mc.sigma_gap = 0.2;
  mc.u_max = 1.0;
  const std::vector<double> v_b = {0.6, 0.4};

  double prev = 0.0;
  for (const int a : {2, 4, 8}) {
    const double val = exploration_threshold(mc, a, 2, 0.1, v_b, 0.2, 1.5).value;
    CHECK(val >= prev);
    prev = val;
  }

  prev = std::numeric_limits<double>::infinity();
  for (const double g : {0.1, 0.2, 0.4}) {
    const double val = exploration_threshold(mc, 4, 2, 0.1, v_b, g, 1.5).value;
    CHECK(val <= prev);
    prev = val;
  }

  CHECK_THROWS_AS(exploration_threshold(mc, 4, 2, 0.1, v_b, 0.0, 1.5), std::invalid_argument);
}

TEST_CASE("derived constants match their definitions on a hand model") {
  Matrix u(3, 2);
  u(0, 0) = 1.0; u(0, 1) = 0.0;
  u(1, 0) = 0.0; u(1, 1) = 0.5;
  u(2, 0) = 0.2; u(2, 1) = 0.3;
  Matrix v(2, 2);
  v(0, 0) = 0.8; v(0, 1) = 0.2;
  v(1, 0) = 0.4; v(1, 1) = 0.6;
  const std::vector<double> beta = {0.5, 0.5};
  const ModelConstants mc = derive_constants(u, v, beta);
  CHECK(mc.v_min == 0.2);
  CHECK(mc.u_max == 1.0);
  CHECK(mc.sigma_min > 0.0);
  CHECK(mc.sigma_min <= mc.sigma_max);

  // σ values are the square roots of the mixture second moment's eigenvalues
  std::vector<double> v_beta = {0.6, 0.4};
  const EigPairs eig = sym_eig_topk(population_m2(u, v_beta), 2);
  CHECK(mc.sigma_max == doctest::Approx(std::sqrt(eig.values[0])).epsilon(1e-12));
  CHECK(mc.sigma_min == doctest::Approx(std::sqrt(eig.values[1])).epsilon(1e-12));
  CHECK(mc.sigma_gap ==
        doctest::Approx(std::sqrt(eig.values[0]) - std::sqrt(eig.values[1])).epsilon(1e-12));
}

TEST_CASE("single-class constants leave the spectrum gap unconstrained") {
  Matrix u(3, 1);
  u(0, 0) = 0.5; u(1, 0) = 0.25; u(2, 0) = 0.75;
  Matrix v(2, 1);
  v(0, 0) = 1.0; v(1, 0) = 1.0;
  const ModelConstants mc = derive_constants(u, v, {});
  CHECK(std::isinf(mc.sigma_gap));
  CHECK(recovery_constant(mc, 3, 1) > 0.0);  // 1/Γ terms vanish
}

TEST_CASE("estimates converge toward the truth as sessions accumulate") {
  // scaled-down trend check; the full criterion lives in the acceptance suite
  const int A = 6, C = 2;
  Matrix u(A, C);
  RngStream setup(303);
  for (double& x : u.flat()) x = setup.next_unit();
  const std::vector<double> v_beta = {0.55, 0.45};

  const auto median_err = [&](long sessions) {
    std::vector<double> errs;
    for (int rep = 0; rep < 5; ++rep) {
      RngStream run(900 + rep);
      MomentEstimates est(A);
      for (long n = 1; n <= sessions; ++n) {
        std::vector<InteractionRecord> session(3);
        const int c = run.bernoulli(v_beta[0]) ? 0 : 1;
        for (int l = 0; l < 3; ++l) {
          const int a = run.next_below(A);
          session[l] = InteractionRecord{n,    l + 1,  0, a, u(a, c) + 0.05 * run.next_gaussian(),
                                         SessionKind::kExplore, 1.0};
        }
        est.ingest_session(session);
      }
      RtpConfig cfg;
      cfg.seed = 1;
      const FeatureEstimate fe = estimate_features(est, C, cfg);
      errs.push_back(align_columns(u, fe.u_bar).max_err);
    }
    std::sort(errs.begin(), errs.end());
    return errs[errs.size() / 2];
  };

  const double coarse = median_err(500);
  const double fine = median_err(8000);
  CHECK(fine < coarse);
}
