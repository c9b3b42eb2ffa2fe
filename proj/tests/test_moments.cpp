#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "common.hpp"
#include "lrb/moments.hpp"
#include "lrb/rng.hpp"

using namespace lrb;

namespace {

std::vector<InteractionRecord> explore_session(long n, int user, double gamma,
                                               const std::vector<int>& actions,
                                               const std::vector<double>& rewards) {
  std::vector<InteractionRecord> out;
  for (std::size_t l = 0; l < actions.size(); ++l)
    out.push_back(InteractionRecord{n, static_cast<int>(l + 1), user, actions[l], rewards[l],
                                    SessionKind::kExplore, gamma});
  return out;
}

}  // namespace

TEST_CASE("single exploration session deposits the weighted products") {
  // A=2, γ=1, actions (0,1,0), rewards (0.5, 0.4, 0.6):
  // raw second-moment gain at (0,1) is 0.5·0.4·A² = 0.8, raw third-moment gain
  // at (0,1,0) is 0.5·0.4·0.6·A³ = 0.96.
  MomentEstimates est(2);
  est.ingest_session(explore_session(1, 0, 1.0, {0, 1, 0}, {0.5, 0.4, 0.6}));
  CHECK(est.sessions() == 1);

  const SymMatrix m2 = est.m2();
  // symmetrization splits the 0.8 across (0,1) and (1,0)
  CHECK(m2(0, 1) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(m2(1, 0) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(m2(0, 0) == 0.0);
  CHECK(m2(1, 1) == 0.0);

  const SymTensor3 m3 = est.m3();
  // the 6-permutation average spreads 0.96 over the three arrangements of
  // (0,1,0), 0.32 each
  CHECK(m3(0, 1, 0) == doctest::Approx(0.32).epsilon(1e-15));
  CHECK(m3(0, 0, 1) == doctest::Approx(0.32).epsilon(1e-15));
  CHECK(m3(1, 0, 0) == doctest::Approx(0.32).epsilon(1e-15));
  double total = 0.0;
  for (const double x : m3.flat()) total += x;
  CHECK(total == doctest::Approx(0.96).epsilon(1e-12));
}

TEST_CASE("exploit-only history leaves the moments at zero") {
  MomentEstimates est(3);
  for (long n = 1; n <= 5; ++n) {
    std::vector<InteractionRecord> session;
    for (int l = 1; l <= 3; ++l)
      session.push_back(InteractionRecord{n, l, 0, l - 1, 1.0, SessionKind::kExploit, 0.5});
    est.ingest_session(session);
  }
  CHECK(est.sessions() == 5);
  CHECK(est.m2().frobenius_norm() == 0.0);
  CHECK(est.m3().max_abs() == 0.0);
}

TEST_CASE("sessions longer than 3 contribute disjoint triples and drop the tail") {
  MomentEstimates est(2);
  // ℓ = 7: triples (steps 1-3) and (steps 4-6) count, step 7 is discarded
  est.ingest_session(explore_session(1, 0, 1.0, {0, 0, 0, 1, 1, 1, 0},
                                     {1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 99.0}));
  const SymMatrix m2 = est.m2();
  CHECK(m2(0, 0) == doctest::Approx(4.0).epsilon(1e-15));  // 1·1·A²
  CHECK(m2(1, 1) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(m2(0, 1) == 0.0);
  const SymTensor3 m3 = est.m3();
  CHECK(m3(0, 0, 0) == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(m3(1, 1, 1) == doctest::Approx(8.0).epsilon(1e-15));
}

TEST_CASE("rejections: bad gamma, bad action, short or inconsistent sessions") {
  MomentEstimates est(2);
  CHECK_THROWS_AS(est.ingest_session(explore_session(1, 0, 0.0, {0, 0, 0}, {1, 1, 1})),
                  std::invalid_argument);
  CHECK_THROWS_AS(est.ingest_session(explore_session(1, 0, 1.5, {0, 0, 0}, {1, 1, 1})),
                  std::invalid_argument);
  CHECK_THROWS_AS(est.ingest_session(explore_session(1, 0, 0.5, {0, 2, 0}, {1, 1, 1})),
                  std::invalid_argument);
  CHECK_THROWS_AS(est.ingest_session(explore_session(1, 0, 0.5, {0, 1}, {1, 1})),
                  std::invalid_argument);
  std::vector<InteractionRecord> mixed = explore_session(1, 0, 0.5, {0, 1, 0}, {1, 1, 1});
  mixed[2].user = 1;
  CHECK_THROWS_AS(est.ingest_session(mixed), std::invalid_argument);
  CHECK(est.sessions() == 0);
}

TEST_CASE("monte carlo estimate matches the mixture closed form") {
  // Fixed tiny model; closed form computed by direct summation over (b, c).
  const int A = 3, B = 2, C = 2;
  Matrix u(A, C), v(B, C);
  RngStream setup(99);
  for (double& x : u.flat()) x = setup.next_unit();
  v(0, 0) = 0.8; v(0, 1) = 0.2;
  v(1, 0) = 0.3; v(1, 1) = 0.7;
  const std::vector<double> beta = {0.5, 0.5};

  std::vector<double> v_beta(C, 0.0);
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) v_beta[c] += beta[b] * v(b, c);

  const double gamma = 0.5;
  const long sessions = 100000;
  RngStream run(1234);
  MomentEstimates est(A);
  for (long n = 1; n <= sessions; ++n) {
    if (!run.bernoulli(gamma)) {
      std::vector<InteractionRecord> idle(3);
      for (int l = 0; l < 3; ++l)
        idle[l] = InteractionRecord{n, l + 1, 0, 0, 0.0, SessionKind::kExploit, gamma};
      est.ingest_session(idle);
      continue;
    }
    const int b = run.bernoulli(beta[0]) ? 0 : 1;
    std::vector<double> row = {v(b, 0), v(b, 1)};
    const int c = run.categorical(row);
    std::vector<int> actions(3);
    std::vector<double> rewards(3);
    for (int l = 0; l < 3; ++l) {
      actions[l] = run.next_below(A);
      rewards[l] = u(actions[l], c);  // noise-free keeps the tolerance tight
    }
    est.ingest_session(explore_session(n, b, gamma, actions, rewards));
  }

  const std::vector<double> gammas(sessions, gamma);
  const ConcentrationBounds cb = concentration_bounds(sessions, gammas, 0.05, A);
  const SymMatrix m2 = est.m2();
  const SymTensor3 m3 = est.m3();
  for (int i = 0; i < A; ++i)
    for (int j = 0; j < A; ++j) {
      double want = 0.0;
      for (int c = 0; c < C; ++c) want += v_beta[c] * u(i, c) * u(j, c);
      CHECK(std::abs(m2(i, j) - want) <= 3.0 * cb.m2_entry);
    }
  for (int i = 0; i < A; ++i)
    for (int j = 0; j < A; ++j)
      for (int k = 0; k < A; ++k) {
        double want = 0.0;
        for (int c = 0; c < C; ++c) want += v_beta[c] * u(i, c) * u(j, c) * u(k, c);
        CHECK(std::abs(m3(i, j, k) - want) <= 3.0 * cb.m3_entry);
      }
}

TEST_CASE("norm deviation stays within the concentration bound across replications") {
  const int A = 3;
  Matrix u(A, 2);
  RngStream setup(5);
  for (double& x : u.flat()) x = setup.next_unit();
  const std::vector<double> v_beta = {0.55, 0.45};

  const double delta = 0.2;
  const long sessions = 2000;
  const int reps = 50;
  int exceed = 0;
  for (int rep = 0; rep < reps; ++rep) {
    RngStream run(1000 + rep);
    MomentEstimates est(A);
    for (long n = 1; n <= sessions; ++n) {
      const int c = run.bernoulli(v_beta[0]) ? 0 : 1;
      std::vector<int> actions(3);
      std::vector<double> rewards(3);
      for (int l = 0; l < 3; ++l) {
        actions[l] = run.next_below(A);
        rewards[l] = u(actions[l], c);
      }
      est.ingest_session(explore_session(n, 0, 1.0, actions, rewards));
    }
    const std::vector<double> gammas(sessions, 1.0);
    const ConcentrationBounds cb = concentration_bounds(sessions, gammas, delta, A);
    // operator norm bounded by the Frobenius norm of the deviation
    const SymMatrix m2 = est.m2();
    double dev = 0.0;
    for (int i = 0; i < A; ++i)
      for (int j = 0; j < A; ++j) {
        double want = 0.0;
        for (int c = 0; c < 2; ++c) want += v_beta[c] * u(i, c) * u(j, c);
        dev += (m2(i, j) - want) * (m2(i, j) - want);
      }
    if (std::sqrt(dev) > cb.m2_norm) ++exceed;
  }
  CHECK(static_cast<double>(exceed) / reps <= delta);
}

TEST_CASE("concentration bound formulas") {
  const std::vector<double> one = {1.0};
  const ConcentrationBounds cb = concentration_bounds(1, one, 0.5, 2);
  // A³·√(Σγ⁻²·log(4A²/δ)/(2n²)) with A=2, n=1, δ=0.5 → 8·√(log(32)/2)
  const double expected = 8.0 * std::sqrt(std::log(32.0) / 2.0);
  CHECK(cb.m2_norm == doctest::Approx(expected).epsilon(1e-14));
  CHECK(cb.m2_norm == doctest::Approx(10.531).epsilon(1e-3));

  // constant γ and 4× the sessions halves both bounds
  const std::vector<double> gammas(4000, 1.0);
  const ConcentrationBounds small = concentration_bounds(1000, gammas, 0.1, 3);
  const ConcentrationBounds large = concentration_bounds(4000, gammas, 0.1, 3);
  CHECK(small.m2_norm == doctest::Approx(2.0 * large.m2_norm).epsilon(1e-12));
  CHECK(small.m3_norm == doctest::Approx(2.0 * large.m3_norm).epsilon(1e-12));

  // ratio identity e3/e2 = A^{3/2}·√(log(4A³/δ)/log(4A²/δ))
  const double a = 3.0, delta = 0.1;
  const double want_ratio = std::pow(a, 1.5) * std::sqrt(std::log(4.0 * a * a * a / delta) /
                                                         std::log(4.0 * a * a / delta));
  CHECK(large.m3_norm / large.m2_norm == doctest::Approx(want_ratio).epsilon(1e-12));

  CHECK_THROWS_AS(concentration_bounds(1, one, 1.5, 2), std::invalid_argument);
  CHECK_THROWS_AS(concentration_bounds(0, one, 0.5, 2), std::invalid_argument);
  CHECK_THROWS_AS(concentration_bounds(2, one, 0.5, 2), std::invalid_argument);
}

TEST_CASE("moments stay exactly symmetric after arbitrary ingests") {
  RngStream stream(42);
  MomentEstimates est(4);
  for (long n = 1; n <= 60; ++n) {
    std::vector<int> actions(3);
    std::vector<double> rewards(3);
    for (int l = 0; l < 3; ++l) {
      actions[l] = stream.next_below(4);
      rewards[l] = stream.next_gaussian();
    }
    est.ingest_session(explore_session(n, 0, 0.7, actions, rewards));
  }
  const SymMatrix m2 = est.m2();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(m2(i, j) == m2(j, i));
  const SymTensor3 m3 = est.m3();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) {
        CHECK(m3(i, j, k) == m3(j, i, k));
        CHECK(m3(i, j, k) == m3(k, j, i));
      }
}

TEST_CASE("contracted third moment agrees with materialize-then-map") {
  RngStream stream(43);
  MomentEstimates est(4);
  for (long n = 1; n <= 40; ++n) {
    std::vector<int> actions(3);
    std::vector<double> rewards(3);
    for (int l = 0; l < 3; ++l) {
      actions[l] = stream.next_below(4);
      rewards[l] = stream.next_unit();
    }
    est.ingest_session(explore_session(n, 0, 1.0, actions, rewards));
  }
  const Matrix w = test::random_matrix(stream, 4, 2);
  const SymTensor3 direct = est.contracted_m3(w);
  const SymTensor3 two_step = multilinear_map(est.m3(), w);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        CHECK(direct(i, j, k) == doctest::Approx(two_step(i, j, k)).epsilon(1e-12));
}
