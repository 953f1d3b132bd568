#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace hitchin {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;
using RVector = std::vector<double>;

struct Triplet {
  std::size_t row;
  std::size_t col;
  cplx value;
};

/// Compressed-row sparse matrix with complex entries. Duplicate triplets are
/// summed on assembly, so the stored pattern has unique (row, column) pairs.
class SparseOperator {
 public:
  SparseOperator() = default;
  SparseOperator(std::size_t rows, std::size_t cols, std::vector<Triplet> entries);

  static SparseOperator identity(std::size_t n, cplx scale = 1.0);
  static SparseOperator diagonal(std::span<const cplx> d);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nonzeros() const { return values_.size(); }
  bool square() const { return rows_ == cols_; }

  CVector apply(std::span<const cplx> x) const;
  CVector apply_adjoint(std::span<const cplx> x) const;

  // Entry lookup; zero when the pattern has no such entry.
  cplx at(std::size_t row, std::size_t col) const;

  std::vector<Triplet> triplets() const;
  std::vector<std::vector<cplx>> to_dense() const;

  bool is_real(double tol = 0.0) const;
  bool is_symmetric(double rel_tol = 1e-12) const;  // A == A^T (not A^H)
  double max_abs() const;

  // Sum of two operators of equal shape.
  SparseOperator operator+(const SparseOperator& other) const;
  SparseOperator scaled(cplx s) const;
  SparseOperator adjoint() const;
  // Product A^H A, used for normal equations.
  SparseOperator gram() const;

  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::size_t>& col_idx() const { return col_idx_; }
  const std::vector<cplx>& values() const { return values_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<cplx> values_;
};

using Preconditioner = std::function<CVector(std::span<const cplx>)>;

struct SolveOptions {
  double rel_tol = 1e-10;
  std::size_t max_iter = 0;  // 0 -> 10 * dimension
  std::size_t restart = 40;  // GMRES Krylov dimension
  Preconditioner preconditioner;  // identity when empty
};

struct SolveStats {
  std::size_t iterations = 0;
  double rel_residual = 0.0;
  bool used_cg = false;
};

/// Solves A x = b. Real symmetric operators go through preconditioned CG;
/// everything else through restarted, right-preconditioned GMRES. The returned
/// solution always satisfies |Ax - b| / |b| <= rel_tol (checked explicitly).
CVector solve_sparse(const SparseOperator& A, std::span<const cplx> b,
                     const SolveOptions& opts = {}, SolveStats* stats = nullptr);

/// Sparse Cholesky of the real part of a symmetric operator, wrapped as a
/// preconditioner. Throws SingularOperator if the real part is not positive
/// definite.
Preconditioner make_cholesky_preconditioner(const SparseOperator& A);
Preconditioner make_jacobi_preconditioner(const SparseOperator& A);

class DenseSymmetric {
 public:
  DenseSymmetric() = default;
  explicit DenseSymmetric(std::size_t n) : n_(n), a_(n * n, 0.0) {}
  // Throws DimensionMismatch when the input is not square or fails the
  // symmetry invariant (1e-12 relative).
  explicit DenseSymmetric(const std::vector<std::vector<double>>& rows);

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  double frobenius() const;
  double trace() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

struct SymmetricEigen {
  RVector values;                  // ascending
  std::vector<RVector> vectors;    // vectors[k] pairs with values[k]
};

/// Cyclic Jacobi rotations.
SymmetricEigen eig_symmetric(const DenseSymmetric& M);

struct SingularSubspace {
  RVector singular_values;          // nondecreasing, length k + extra
  std::vector<CVector> vectors;     // first k right singular vectors, orthonormal
};

/// Smallest right singular subspace of A (rows >= cols) by shift-inverted
/// block subspace iteration on A^H A. `extra` additional singular values past
/// the k-th are returned so callers can measure spectral gaps.
SingularSubspace smallest_singular_subspace(const SparseOperator& A, std::size_t k,
                                            std::size_t extra = 1,
                                            unsigned seed = 12345);

// Small helpers shared across modules.
double norm2(std::span<const cplx> x);
double norm_inf(std::span<const cplx> x);
cplx dot(std::span<const cplx> a, std::span<const cplx> b);  // sum conj(a_i) b_i

}  // namespace hitchin
