#pragma once

// Shared helpers for the test suites: seeded random objects built on the
// library's own stream type, plus conversions to Eigen for oracle checks.

#include <vector>

#include "lrb/linalg.hpp"
#include "lrb/rng.hpp"

namespace lrb::test {

inline SymMatrix random_sym_matrix(RngStream& stream, int dim, double scale = 1.0) {
  SymMatrix m(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j) m.at(i, j) = scale * (2.0 * stream.next_unit() - 1.0);
  return m;
}

inline SymTensor3 random_sym_tensor(RngStream& stream, int dim, double scale = 1.0) {
  SymTensor3 t(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j)
      for (int k = 0; k <= j; ++k) t.set_sym(i, j, k, scale * (2.0 * stream.next_unit() - 1.0));
  return t;
}

inline Matrix random_matrix(RngStream& stream, int rows, int cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& x : m.flat()) x = scale * (2.0 * stream.next_unit() - 1.0);
  return m;
}

inline std::vector<double> random_unit_vector(RngStream& stream, int dim) {
  std::vector<double> v(dim);
  double nrm = 0.0;
  do {
    for (double& x : v) x = stream.next_gaussian();
    nrm = norm2(v);
  } while (nrm < 1e-12);
  for (double& x : v) x /= nrm;
  return v;
}

// Orthonormal basis columns from the eigenvectors of a random symmetric
// matrix.
inline Matrix random_orthonormal(RngStream& stream, int dim, int cols) {
  const SymMatrix m = random_sym_matrix(stream, dim);
  return sym_eig_topk(m, cols).vectors;
}

}  // namespace lrb::test
