#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "common.hpp"
#include "lrb/linalg.hpp"
#include "lrb/rng.hpp"

using namespace lrb;

namespace {

Eigen::MatrixXd to_eigen(const SymMatrix& m) {
  Eigen::MatrixXd out(m.dim(), m.dim());
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) out(i, j) = m(i, j);
  return out;
}

}  // namespace

TEST_CASE("identity eigendecomposition") {
  SymMatrix m(2);
  m.at(0, 0) = 1.0;
  m.at(1, 1) = 1.0;
  const EigPairs eig = sym_eig_topk(m, 2);
  CHECK(eig.values[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eig.values[1] == doctest::Approx(1.0).epsilon(1e-12));
  // columns orthonormal
  const double d01 = eig.vectors(0, 0) * eig.vectors(0, 1) + eig.vectors(1, 0) * eig.vectors(1, 1);
  CHECK(std::abs(d01) < 1e-8);
}

TEST_CASE("diagonal case picks the largest eigenvalue and axis") {
  SymMatrix m(2);
  m.at(0, 0) = 3.0;
  m.at(1, 1) = 1.0;
  const EigPairs eig = sym_eig_topk(m, 1);
  CHECK(eig.values[0] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(std::abs(std::abs(eig.vectors(0, 0)) - 1.0) < 1e-12);
  CHECK(std::abs(eig.vectors(1, 0)) < 1e-12);
  CHECK(eig.vectors(0, 0) > 0.0);  // sign convention
}

TEST_CASE("random 5x5 matches a dense eigensolver oracle") {
  RngStream stream(2024);
  const SymMatrix m = test::random_sym_matrix(stream, 5);
  const EigPairs eig = sym_eig_topk(m, 5);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle(to_eigen(m));
  REQUIRE(oracle.info() == Eigen::Success);
  // oracle sorts ascending
  for (int c = 0; c < 5; ++c)
    CHECK(eig.values[c] == doctest::Approx(oracle.eigenvalues()(4 - c)).epsilon(1e-8));

  for (int c = 0; c < 5; ++c) {
    // residual ‖Mv − λv‖ ≤ 1e-8·max(1,|λ|)
    std::vector<double> v(5), mv(5, 0.0);
    for (int i = 0; i < 5; ++i) v[i] = eig.vectors(i, c);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) mv[i] += m(i, j) * v[j];
    double res = 0.0;
    for (int i = 0; i < 5; ++i) res += (mv[i] - eig.values[c] * v[i]) * (mv[i] - eig.values[c] * v[i]);
    CHECK(std::sqrt(res) <= 1e-8 * std::max(1.0, std::abs(eig.values[c])));
  }
}

TEST_CASE("full eigendecomposition reconstructs the matrix") {
  RngStream stream(7);
  const SymMatrix m = test::random_sym_matrix(stream, 6, 2.0);
  const EigPairs eig = sym_eig_topk(m, 6);
  double err = 0.0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      double acc = 0.0;
      for (int c = 0; c < 6; ++c) acc += eig.values[c] * eig.vectors(i, c) * eig.vectors(j, c);
      err += (acc - m(i, j)) * (acc - m(i, j));
    }
  CHECK(std::sqrt(err) < 1e-7);
}

TEST_CASE("k out of range is rejected") {
  SymMatrix m(3);
  CHECK_THROWS_AS(sym_eig_topk(m, 4), std::invalid_argument);
  CHECK_THROWS_AS(sym_eig_topk(m, 0), std::invalid_argument);
}

TEST_CASE("multilinear map with the identity is the identity") {
  RngStream stream(3);
  const SymTensor3 t = test::random_sym_tensor(stream, 4);
  const SymTensor3 out = multilinear_map(t, Matrix::identity(4));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) CHECK(out(i, j, k) == doctest::Approx(t(i, j, k)).epsilon(1e-14));
}

TEST_CASE("multilinear map factors over rank-1 tensors") {
  RngStream stream(4);
  std::vector<double> u = {0.3, -1.2, 0.7};
  SymTensor3 t(3);
  t.add_rank1(u, 1.0);
  const Matrix w = test::random_matrix(stream, 3, 2);
  const SymTensor3 out = multilinear_map(t, w);
  const std::vector<double> wu = mat_tvec(w, u);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        CHECK(out(i, j, k) == doctest::Approx(wu[i] * wu[j] * wu[k]).epsilon(1e-12));
}

TEST_CASE("multilinear map matches the brute-force triple sum") {
  RngStream stream(5);
  const SymTensor3 t = test::random_sym_tensor(stream, 3);
  const Matrix w = test::random_matrix(stream, 3, 2);
  const SymTensor3 out = multilinear_map(t, w);
  for (int i1 = 0; i1 < 2; ++i1)
    for (int i2 = 0; i2 < 2; ++i2)
      for (int i3 = 0; i3 < 2; ++i3) {
        double acc = 0.0;
        for (int j1 = 0; j1 < 3; ++j1)
          for (int j2 = 0; j2 < 3; ++j2)
            for (int j3 = 0; j3 < 3; ++j3)
              acc += t(j1, j2, j3) * w(j1, i1) * w(j2, i2) * w(j3, i3);
        CHECK(out(i1, i2, i3) == doctest::Approx(acc).epsilon(1e-12));
      }
}

TEST_CASE("multilinear maps compose") {
  RngStream stream(6);
  const SymTensor3 t = test::random_sym_tensor(stream, 4);
  const Matrix w1 = test::random_matrix(stream, 4, 3);
  const Matrix w2 = test::random_matrix(stream, 3, 2);
  const SymTensor3 two_step = multilinear_map(multilinear_map(t, w1), w2);
  const SymTensor3 one_step = multilinear_map(t, matmul(w1, w2));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        CHECK(two_step(i, j, k) == doctest::Approx(one_step(i, j, k)).epsilon(1e-10));
}

TEST_CASE("dimension mismatch is rejected") {
  const SymTensor3 t(3);
  CHECK_THROWS_AS(multilinear_map(t, Matrix(4, 2)), std::invalid_argument);
}

TEST_CASE("tensor contraction on basis tensors") {
  SymTensor3 t(3);
  std::vector<double> e1 = {1.0, 0.0, 0.0};
  t.add_rank1(e1, 1.0);

  const TensorContraction c1 = tensor_contract(t, e1);
  CHECK(c1.scalar == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(c1.vec[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(c1.vec[1] == 0.0);

  std::vector<double> e2 = {0.0, 1.0, 0.0};
  const TensorContraction c2 = tensor_contract(t, e2);
  CHECK(c2.scalar == 0.0);
  CHECK(norm2(c2.vec) == 0.0);
}

TEST_CASE("tensor contraction matches the brute-force double sum") {
  RngStream stream(8);
  const SymTensor3 t = test::random_sym_tensor(stream, 4);
  const std::vector<double> theta = test::random_unit_vector(stream, 4);
  const TensorContraction c = tensor_contract(t, theta);
  for (int i = 0; i < 4; ++i) {
    double acc = 0.0;
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) acc += t(i, j, k) * theta[j] * theta[k];
    CHECK(c.vec[i] == doctest::Approx(acc).epsilon(1e-12));
  }
}

TEST_CASE("tensor contraction demands a unit vector") {
  const SymTensor3 t(2);
  std::vector<double> bad = {1.0, 1.0};
  CHECK_THROWS_AS(tensor_contract(t, bad), std::invalid_argument);
}

TEST_CASE("operator norm of a rank-1 tensor is its weight") {
  SymTensor3 t(3);
  std::vector<double> e1 = {1.0, 0.0, 0.0};
  t.add_rank1(e1, 2.5);
  CHECK(tensor_op_norm(t) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("operator norm of the zero tensor is zero") {
  CHECK(tensor_op_norm(SymTensor3(3)) == 0.0);
}

TEST_CASE("operator norm matches a dense grid search on the circle") {
  RngStream stream(9);
  const SymTensor3 t = test::random_sym_tensor(stream, 2);
  double grid_best = 0.0;
  const int points = 100000;
  for (int p = 0; p < points; ++p) {
    const double angle = 2.0 * 3.14159265358979323846 * p / points;
    const double th[2] = {std::cos(angle), std::sin(angle)};
    double val = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) val += t(i, j, k) * th[i] * th[j] * th[k];
    grid_best = std::max(grid_best, std::abs(val));
  }
  CHECK(tensor_op_norm(t, 50) == doctest::Approx(grid_best).epsilon(1e-4));
}

TEST_CASE("operator norm scales absolutely homogeneously") {
  RngStream stream(10);
  SymTensor3 t = test::random_sym_tensor(stream, 3);
  const double base = tensor_op_norm(t);
  SymTensor3 scaled = t;
  scaled.scale(-2.0);
  CHECK(tensor_op_norm(scaled) == doctest::Approx(2.0 * base).epsilon(1e-8));
}

TEST_CASE("operator norm is nondecreasing in restarts") {
  RngStream stream(11);
  const SymTensor3 t = test::random_sym_tensor(stream, 4);
  double prev = 0.0;
  for (const int restarts : {1, 2, 5, 10, 20}) {
    const double v = tensor_op_norm(t, restarts);
    CHECK(v >= prev - 1e-15);
    prev = v;
  }
}

TEST_CASE("solve_spd inverts a positive definite system") {
  RngStream stream(12);
  SymMatrix a(3);
  const Matrix g = test::random_matrix(stream, 3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j <= i; ++j) {
      double acc = i == j ? 1.0 : 0.0;  // shift keeps it PD
      for (int k = 0; k < 3; ++k) acc += g(i, k) * g(j, k);
      a.at(i, j) = acc;
    }
  const std::vector<double> x_true = {1.0, -2.0, 0.5};
  std::vector<double> b(3, 0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) b[i] += a(i, j) * x_true[j];
  const std::vector<double> x = solve_spd(a, b);
  for (int i = 0; i < 3; ++i) CHECK(x[i] == doctest::Approx(x_true[i]).epsilon(1e-10));

  SymMatrix indef(2);
  indef.at(0, 0) = -1.0;
  CHECK_THROWS_AS(solve_spd(indef, std::vector<double>{1.0, 1.0}), std::domain_error);
}

TEST_CASE("symmetric tensor storage is exactly permutation invariant") {
  RngStream stream(13);
  const SymTensor3 t = test::random_sym_tensor(stream, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      for (int k = 0; k < 5; ++k) {
        CHECK(t(i, j, k) == t(j, i, k));
        CHECK(t(i, j, k) == t(k, j, i));
        CHECK(t(i, j, k) == t(i, k, j));
      }
}
