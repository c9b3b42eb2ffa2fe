#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace lrb {

// Dense row-major matrix, the general-purpose container for feature blocks,
// eigenvector stacks and whiteners.
class Matrix {
public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, 0.0) {}

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::span<const double> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }
  std::span<const double> flat() const { return data_; }
  std::span<double> flat() { return data_; }

  static Matrix identity(int n);

private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
std::vector<double> mat_vec(const Matrix& m, std::span<const double> x);
// y = Mᵀx
std::vector<double> mat_tvec(const Matrix& m, std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);

// Symmetric matrix with packed lower-triangular storage, so entries (i,j) and
// (j,i) are the same memory and symmetry holds exactly.
class SymMatrix {
public:
  SymMatrix() = default;
  explicit SymMatrix(int dim) : dim_(dim), tri_(static_cast<std::size_t>(dim) * (dim + 1) / 2, 0.0) {}

  double operator()(int i, int j) const { return tri_[index(i, j)]; }
  double& at(int i, int j) { return tri_[index(i, j)]; }

  int dim() const { return dim_; }

  void scale(double c);
  void add_scaled(const SymMatrix& other, double c);
  // M += c · v vᵀ
  void add_outer(std::span<const double> v, double c);

  double frobenius_norm() const;
  Matrix to_dense() const;

  // Averages x and xᵀ entrywise; the canonical way to build one from a
  // possibly asymmetric accumulation.
  static SymMatrix from_dense_symmetrized(int dim, std::span<const double> dense);

private:
  std::size_t index(int i, int j) const {
    if (i < j) { const int t = i; i = j; j = t; }
    return static_cast<std::size_t>(i) * (i + 1) / 2 + j;
  }

  int dim_ = 0;
  std::vector<double> tri_;
};

// Symmetric third-order tensor, dense d³ storage. All mutators write every
// index permutation of the affected entry, so the six-fold symmetry is exact.
class SymTensor3 {
public:
  SymTensor3() = default;
  explicit SymTensor3(int dim)
      : dim_(dim), data_(static_cast<std::size_t>(dim) * dim * dim, 0.0) {}

  double operator()(int i, int j, int k) const {
    return data_[(static_cast<std::size_t>(i) * dim_ + j) * dim_ + k];
  }

  int dim() const { return dim_; }
  std::span<const double> flat() const { return data_; }

  void set_sym(int i, int j, int k, double v);
  void scale(double c);
  void add_scaled(const SymTensor3& other, double c);
  // T += c · v⊗v⊗v
  void add_rank1(std::span<const double> v, double c);

  double max_abs() const;

  // Averages the 6 permuted entries of each index class.
  static SymTensor3 from_dense_symmetrized(int dim, std::span<const double> dense);

private:
  int dim_ = 0;
  std::vector<double> data_;
};

// Eigenvalues sorted descending with the matching orthonormal eigenvectors as
// columns. Column signs follow the first-nonzero-coordinate-positive rule.
struct EigPairs {
  std::vector<double> values;
  Matrix vectors;  // dim × k
};

// Top-k eigenpairs of a symmetric matrix by cyclic Jacobi. Deterministic for
// a fixed input. Throws ConvergenceError if the off-diagonal mass does not
// vanish within the sweep cap.
EigPairs sym_eig_topk(const SymMatrix& m, int k);

// output[i1,i2,i3] = Σ_{j1,j2,j3} T[j1,j2,j3] W[j1,i1] W[j2,i2] W[j3,i3]
SymTensor3 multilinear_map(const SymTensor3& t, const Matrix& w);

struct TensorContraction {
  std::vector<double> vec;  // T(I, θ, θ)
  double scalar;            // T(θ, θ, θ)
};

// Power-iteration kernel; requires ‖θ‖₂ = 1 within 1e-10.
TensorContraction tensor_contract(const SymTensor3& t, std::span<const double> theta);

inline constexpr int kOpNormRestarts = 20;
inline constexpr int kOpNormMaxIters = 200;
inline constexpr double kOpNormThetaTol = 1e-10;

// Multi-start power-iteration estimate of max_{‖θ‖=1} |T(θ,θ,θ)|. A lower
// bound on the true operator norm, nondecreasing in the restart count.
double tensor_op_norm(const SymTensor3& t, int restarts = kOpNormRestarts,
                      std::uint64_t seed = 0x5eedULL);

// Cholesky solve of (symmetric positive definite) a·x = b. Throws
// std::domain_error when a pivot is not positive.
std::vector<double> solve_spd(const SymMatrix& a, std::span<const double> b);

}  // namespace lrb
