#include "lrb/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lrb/errors.hpp"
#include "lrb/rng.hpp"

namespace lrb {

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

std::vector<double> mat_vec(const Matrix& m, std::span<const double> x) {
  if (static_cast<int>(x.size()) != m.cols()) throw std::invalid_argument("mat_vec: size mismatch");
  std::vector<double> y(m.rows(), 0.0);
  for (int i = 0; i < m.rows(); ++i) {
    double acc = 0.0;
    for (int j = 0; j < m.cols(); ++j) acc += m(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

std::vector<double> mat_tvec(const Matrix& m, std::span<const double> x) {
  if (static_cast<int>(x.size()) != m.rows()) throw std::invalid_argument("mat_tvec: size mismatch");
  std::vector<double> y(m.cols(), 0.0);
  for (int i = 0; i < m.rows(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (int j = 0; j < m.cols(); ++j) y[j] += m(i, j) * xi;
  }
  return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

void SymMatrix::scale(double c) {
  for (double& x : tri_) x *= c;
}

void SymMatrix::add_scaled(const SymMatrix& other, double c) {
  if (other.dim_ != dim_) throw std::invalid_argument("SymMatrix::add_scaled: dim mismatch");
  for (std::size_t i = 0; i < tri_.size(); ++i) tri_[i] += c * other.tri_[i];
}

void SymMatrix::add_outer(std::span<const double> v, double c) {
  if (static_cast<int>(v.size()) != dim_) throw std::invalid_argument("SymMatrix::add_outer: size mismatch");
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j <= i; ++j) tri_[index(i, j)] += c * v[i] * v[j];
}

double SymMatrix::frobenius_norm() const {
  double acc = 0.0;
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) {
      const double x = (*this)(i, j);
      acc += x * x;
    }
  return std::sqrt(acc);
}

Matrix SymMatrix::to_dense() const {
  Matrix m(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) m(i, j) = (*this)(i, j);
  return m;
}

SymMatrix SymMatrix::from_dense_symmetrized(int dim, std::span<const double> dense) {
  if (dense.size() != static_cast<std::size_t>(dim) * dim)
    throw std::invalid_argument("SymMatrix::from_dense_symmetrized: size mismatch");
  SymMatrix m(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j) {
      const double lo = dense[static_cast<std::size_t>(i) * dim + j];
      const double hi = dense[static_cast<std::size_t>(j) * dim + i];
      // already-symmetric input round-trips bit-exactly
      m.at(i, j) = lo == hi ? lo : 0.5 * (lo + hi);
    }
  return m;
}

namespace {

inline std::size_t t3_index(int dim, int i, int j, int k) {
  return (static_cast<std::size_t>(i) * dim + j) * dim + k;
}

// Writes v to every permutation of (i,j,k).
void write_all_perms(std::vector<double>& data, int dim, int i, int j, int k, double v) {
  data[t3_index(dim, i, j, k)] = v;
  data[t3_index(dim, i, k, j)] = v;
  data[t3_index(dim, j, i, k)] = v;
  data[t3_index(dim, j, k, i)] = v;
  data[t3_index(dim, k, i, j)] = v;
  data[t3_index(dim, k, j, i)] = v;
}

}  // namespace

void SymTensor3::set_sym(int i, int j, int k, double v) {
  write_all_perms(data_, dim_, i, j, k, v);
}

void SymTensor3::scale(double c) {
  for (double& x : data_) x *= c;
}

void SymTensor3::add_scaled(const SymTensor3& other, double c) {
  if (other.dim_ != dim_) throw std::invalid_argument("SymTensor3::add_scaled: dim mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += c * other.data_[i];
}

void SymTensor3::add_rank1(std::span<const double> v, double c) {
  if (static_cast<int>(v.size()) != dim_) throw std::invalid_argument("SymTensor3::add_rank1: size mismatch");
  // One canonical product per index class keeps the update exactly symmetric.
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j <= i; ++j)
      for (int k = 0; k <= j; ++k) {
        const double incr = ((c * v[i]) * v[j]) * v[k];
        const double nv = data_[t3_index(dim_, i, j, k)] + incr;
        write_all_perms(data_, dim_, i, j, k, nv);
      }
}

double SymTensor3::max_abs() const {
  double m = 0.0;
  for (const double x : data_) m = std::max(m, std::abs(x));
  return m;
}

SymTensor3 SymTensor3::from_dense_symmetrized(int dim, std::span<const double> dense) {
  if (dense.size() != static_cast<std::size_t>(dim) * dim * dim)
    throw std::invalid_argument("SymTensor3::from_dense_symmetrized: size mismatch");
  SymTensor3 t(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j)
      for (int k = 0; k <= j; ++k) {
        const double p0 = dense[t3_index(dim, i, j, k)];
        const double p1 = dense[t3_index(dim, i, k, j)];
        const double p2 = dense[t3_index(dim, j, i, k)];
        const double p3 = dense[t3_index(dim, j, k, i)];
        const double p4 = dense[t3_index(dim, k, i, j)];
        const double p5 = dense[t3_index(dim, k, j, i)];
        // already-symmetric input round-trips bit-exactly
        const double val = (p0 == p1 && p0 == p2 && p0 == p3 && p0 == p4 && p0 == p5)
                               ? p0
                               : (p0 + p1 + p2 + p3 + p4 + p5) / 6.0;
        write_all_perms(t.data_, dim, i, j, k, val);
      }
  return t;
}

namespace {

constexpr int kJacobiMaxSweeps = 100;

double offdiag_norm(const std::vector<double>& a, int n) {
  double acc = 0.0;
  for (int p = 0; p < n; ++p)
    for (int q = p + 1; q < n; ++q) acc += 2.0 * a[p * n + q] * a[p * n + q];
  return std::sqrt(acc);
}

}  // namespace

EigPairs sym_eig_topk(const SymMatrix& m, int k) {
  const int n = m.dim();
  if (k < 1 || k > n) throw std::invalid_argument("sym_eig_topk: k out of range");

  std::vector<double> a(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i * n + j] = m(i, j);
  std::vector<double> v(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) v[i * n + i] = 1.0;

  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[i * n + i]));
  scale = std::max(scale, offdiag_norm(a, n));
  const double tol = 1e-15 * std::max(1.0, scale);

  bool converged = false;
  for (int sweep = 0; sweep < kJacobiMaxSweeps && !converged; ++sweep) {
    if (offdiag_norm(a, n) <= tol) {
      converged = true;
      break;
    }
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) <= 1e-300) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        const double theta = 0.5 * (aqq - app) / apq;
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;  // avoids overflow in theta²
        } else {
          t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (int i = 0; i < n; ++i) {
          const double aip = a[i * n + p];
          const double aiq = a[i * n + q];
          a[i * n + p] = c * aip - s * aiq;
          a[i * n + q] = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          const double api = a[p * n + i];
          const double aqi = a[q * n + i];
          a[p * n + i] = c * api - s * aqi;
          a[q * n + i] = s * api + c * aqi;
        }
        for (int i = 0; i < n; ++i) {
          const double vip = v[i * n + p];
          const double viq = v[i * n + q];
          v[i * n + p] = c * vip - s * viq;
          v[i * n + q] = s * vip + c * viq;
        }
      }
    }
  }
  if (!converged && offdiag_norm(a, n) > tol) {
    // Accept near-converged states that still satisfy the residual contract.
    const double off = offdiag_norm(a, n);
    if (off > 1e-9 * std::max(1.0, scale))
      throw ConvergenceError("sym_eig_topk: Jacobi sweeps exhausted", off);
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return a[x * n + x] > a[y * n + y]; });

  EigPairs out;
  out.values.resize(k);
  out.vectors = Matrix(n, k);
  for (int c = 0; c < k; ++c) {
    const int src = order[c];
    out.values[c] = a[src * n + src];
    int sign_idx = -1;
    for (int i = 0; i < n; ++i) {
      if (std::abs(v[i * n + src]) > 1e-12) {
        sign_idx = i;
        break;
      }
    }
    const double sgn = (sign_idx >= 0 && v[sign_idx * n + src] < 0.0) ? -1.0 : 1.0;
    for (int i = 0; i < n; ++i) out.vectors(i, c) = sgn * v[i * n + src];
  }
  return out;
}

SymTensor3 multilinear_map(const SymTensor3& t, const Matrix& w) {
  const int a = t.dim();
  const int b = w.cols();
  if (w.rows() != a) throw std::invalid_argument("multilinear_map: row count of W must equal tensor dim");

  // Contract one mode at a time; symmetrize at the end since the staged sums
  // are only symmetric up to rounding.
  std::vector<double> s1(static_cast<std::size_t>(a) * a * b, 0.0);  // [j1][j2][i3]
  for (int j1 = 0; j1 < a; ++j1)
    for (int j2 = 0; j2 < a; ++j2) {
      const std::size_t base_out = (static_cast<std::size_t>(j1) * a + j2) * b;
      for (int j3 = 0; j3 < a; ++j3) {
        const double tv = t(j1, j2, j3);
        if (tv == 0.0) continue;
        for (int i3 = 0; i3 < b; ++i3) s1[base_out + i3] += tv * w(j3, i3);
      }
    }

  std::vector<double> s2(static_cast<std::size_t>(a) * b * b, 0.0);  // [j1][i2][i3]
  for (int j1 = 0; j1 < a; ++j1)
    for (int j2 = 0; j2 < a; ++j2) {
      const std::size_t base_in = (static_cast<std::size_t>(j1) * a + j2) * b;
      for (int i2 = 0; i2 < b; ++i2) {
        const double wj = w(j2, i2);
        if (wj == 0.0) continue;
        const std::size_t base_out = (static_cast<std::size_t>(j1) * b + i2) * b;
        for (int i3 = 0; i3 < b; ++i3) s2[base_out + i3] += wj * s1[base_in + i3];
      }
    }

  std::vector<double> dense(static_cast<std::size_t>(b) * b * b, 0.0);
  for (int j1 = 0; j1 < a; ++j1)
    for (int i1 = 0; i1 < b; ++i1) {
      const double wj = w(j1, i1);
      if (wj == 0.0) continue;
      for (int i2 = 0; i2 < b; ++i2) {
        const std::size_t base_in = (static_cast<std::size_t>(j1) * b + i2) * b;
        const std::size_t base_out = (static_cast<std::size_t>(i1) * b + i2) * b;
        for (int i3 = 0; i3 < b; ++i3) dense[base_out + i3] += wj * s2[base_in + i3];
      }
    }
  return SymTensor3::from_dense_symmetrized(b, dense);
}

TensorContraction tensor_contract(const SymTensor3& t, std::span<const double> theta) {
  const int d = t.dim();
  if (static_cast<int>(theta.size()) != d) throw std::invalid_argument("tensor_contract: dim mismatch");
  const double nrm = norm2(theta);
  if (std::abs(nrm - 1.0) > 1e-10) throw std::invalid_argument("tensor_contract: theta must be unit norm");

  TensorContraction out;
  out.vec.assign(d, 0.0);
  for (int i = 0; i < d; ++i) {
    double acc = 0.0;
    for (int j = 0; j < d; ++j) {
      const double tj = theta[j];
      if (tj == 0.0) continue;
      double inner = 0.0;
      for (int k = 0; k < d; ++k) inner += t(i, j, k) * theta[k];
      acc += tj * inner;
    }
    out.vec[i] = acc;
  }
  out.scalar = dot(out.vec, theta);
  return out;
}

double tensor_op_norm(const SymTensor3& t, int restarts, std::uint64_t seed) {
  if (restarts < 1) throw std::invalid_argument("tensor_op_norm: restarts must be >= 1");
  const int d = t.dim();
  const RngStream root = RngStream(seed).split("tensor_op_norm");

  double best = 0.0;
  for (int r = 0; r < restarts; ++r) {
    RngStream stream = root.split(static_cast<std::uint64_t>(r));
    std::vector<double> theta(d);
    double nrm = 0.0;
    do {
      for (double& x : theta) x = stream.next_gaussian();
      nrm = norm2(theta);
    } while (nrm < 1e-12);
    for (double& x : theta) x /= nrm;

    for (int it = 0; it < kOpNormMaxIters; ++it) {
      TensorContraction c = tensor_contract(t, theta);
      const double vn = norm2(c.vec);
      if (vn < 1e-14) break;
      double delta = 0.0;
      for (int i = 0; i < d; ++i) {
        const double nthi = c.vec[i] / vn;
        delta += (nthi - theta[i]) * (nthi - theta[i]);
        theta[i] = nthi;
      }
      if (std::sqrt(delta) < kOpNormThetaTol) break;
    }
    best = std::max(best, std::abs(tensor_contract(t, theta).scalar));
  }
  return best;
}

std::vector<double> solve_spd(const SymMatrix& a, std::span<const double> b) {
  const int n = a.dim();
  if (static_cast<int>(b.size()) != n) throw std::invalid_argument("solve_spd: size mismatch");
  // Cholesky a = L Lᵀ
  std::vector<double> l(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double sum = a(i, j);
      for (int k = 0; k < j; ++k) sum -= l[i * n + k] * l[j * n + k];
      if (i == j) {
        if (sum <= 0.0) throw std::domain_error("solve_spd: matrix not positive definite");
        l[i * n + i] = std::sqrt(sum);
      } else {
        l[i * n + j] = sum / l[j * n + j];
      }
    }
  }
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    double sum = b[i];
    for (int k = 0; k < i; ++k) sum -= l[i * n + k] * y[k];
    y[i] = sum / l[i * n + i];
  }
  std::vector<double> x(n);
  for (int i = n - 1; i >= 0; --i) {
    double sum = y[i];
    for (int k = i + 1; k < n; ++k) sum -= l[k * n + i] * x[k];
    x[i] = sum / l[i * n + i];
  }
  return x;
}

}  // namespace lrb
