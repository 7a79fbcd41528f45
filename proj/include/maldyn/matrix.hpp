#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace maldyn {

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }

  DenseMatrix transposed() const;

  /// True when every entry is finite.
  bool all_finite() const noexcept;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

/// aᵀ·b without materializing the transpose.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

namespace linalg {

struct SymmetricEigen {
  std::vector<double> values;  // descending
  DenseMatrix vectors;         // column j pairs with values[j]
};

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
SymmetricEigen jacobi_eigen(const DenseMatrix& symmetric, double tol = 1e-15, int max_sweeps = 100);

/// Modified Gram-Schmidt over the columns of m, in place. Columns that collapse
/// to (numerically) zero are left as zero and the function returns the rank found.
std::size_t orthonormalize_columns(DenseMatrix& m);

/// Solves spd·x = b by Cholesky. Throws Error(InvalidArgument) if spd is not
/// positive definite.
std::vector<double> cholesky_solve(const DenseMatrix& spd, std::span<const double> b);

}  // namespace linalg
}  // namespace maldyn
