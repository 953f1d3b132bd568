#include "hitchin/numerics.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <string>

#include "hitchin/errors.hpp"

namespace hitchin {

namespace {

using EigenSparseC = Eigen::SparseMatrix<cplx>;
using EigenSparseR = Eigen::SparseMatrix<double>;

EigenSparseC to_eigen(const SparseOperator& A) {
  std::vector<Eigen::Triplet<cplx>> t;
  t.reserve(A.nonzeros());
  for (std::size_t r = 0; r < A.rows(); ++r)
    for (std::size_t p = A.row_ptr()[r]; p < A.row_ptr()[r + 1]; ++p)
      t.emplace_back(static_cast<int>(r), static_cast<int>(A.col_idx()[p]), A.values()[p]);
  EigenSparseC m(static_cast<int>(A.rows()), static_cast<int>(A.cols()));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

void axpy(cplx a, std::span<const cplx> x, std::span<cplx> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

}  // namespace

double norm2(std::span<const cplx> x) {
  double s = 0.0;
  for (const auto& v : x) s += std::norm(v);
  return std::sqrt(s);
}

double norm_inf(std::span<const cplx> x) {
  double m = 0.0;
  for (const auto& v : x) m = std::max(m, std::abs(v));
  return m;
}

cplx dot(std::span<const cplx> a, std::span<const cplx> b) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

// ---------------------------------------------------------------------------
// SparseOperator

SparseOperator::SparseOperator(std::size_t rows, std::size_t cols, std::vector<Triplet> entries)
    : rows_(rows), cols_(cols) {
  for (const auto& t : entries) {
    if (t.row >= rows || t.col >= cols)
      throw DimensionMismatch("triplet (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                              ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  row_ptr_.assign(rows + 1, 0);
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i;
    cplx sum = 0.0;
    while (j < entries.size() && entries[j].row == entries[i].row && entries[j].col == entries[i].col)
      sum += entries[j++].value;
    col_idx_.push_back(entries[i].col);
    values_.push_back(sum);
    row_ptr_[entries[i].row + 1]++;
    i = j;
  }
  for (std::size_t r = 0; r < rows; ++r) row_ptr_[r + 1] += row_ptr_[r];
}

SparseOperator SparseOperator::identity(std::size_t n, cplx scale) {
  std::vector<Triplet> t;
  t.reserve(n);
  for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, scale});
  return SparseOperator(n, n, std::move(t));
}

SparseOperator SparseOperator::diagonal(std::span<const cplx> d) {
  std::vector<Triplet> t;
  t.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) t.push_back({i, i, d[i]});
  return SparseOperator(d.size(), d.size(), std::move(t));
}

CVector SparseOperator::apply(std::span<const cplx> x) const {
  if (x.size() != cols_) throw DimensionMismatch("apply: vector length");
  CVector y(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    cplx s = 0.0;
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) s += values_[p] * x[col_idx_[p]];
    y[r] = s;
  }
  return y;
}

CVector SparseOperator::apply_adjoint(std::span<const cplx> x) const {
  if (x.size() != rows_) throw DimensionMismatch("apply_adjoint: vector length");
  CVector y(cols_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p)
      y[col_idx_[p]] += std::conj(values_[p]) * x[r];
  return y;
}

cplx SparseOperator::at(std::size_t row, std::size_t col) const {
  auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[row]);
  auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[row + 1]);
  auto it = std::lower_bound(first, last, col);
  if (it == last || *it != col) return 0.0;
  return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

std::vector<Triplet> SparseOperator::triplets() const {
  std::vector<Triplet> t;
  t.reserve(values_.size());
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) t.push_back({r, col_idx_[p], values_[p]});
  return t;
}

std::vector<std::vector<cplx>> SparseOperator::to_dense() const {
  std::vector<std::vector<cplx>> d(rows_, std::vector<cplx>(cols_, 0.0));
  for (const auto& t : triplets()) d[t.row][t.col] = t.value;
  return d;
}

bool SparseOperator::is_real(double tol) const {
  return std::all_of(values_.begin(), values_.end(),
                     [tol](const cplx& v) { return std::abs(v.imag()) <= tol; });
}

bool SparseOperator::is_symmetric(double rel_tol) const {
  if (!square()) return false;
  const double scale = std::max(max_abs(), 1e-300);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p)
      if (std::abs(values_[p] - at(col_idx_[p], r)) > rel_tol * scale) return false;
  return true;
}

double SparseOperator::max_abs() const {
  double m = 0.0;
  for (const auto& v : values_) m = std::max(m, std::abs(v));
  return m;
}

SparseOperator SparseOperator::operator+(const SparseOperator& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_) throw DimensionMismatch("operator+");
  auto t = triplets();
  auto o = other.triplets();
  t.insert(t.end(), o.begin(), o.end());
  return SparseOperator(rows_, cols_, std::move(t));
}

SparseOperator SparseOperator::scaled(cplx s) const {
  SparseOperator out = *this;
  for (auto& v : out.values_) v *= s;
  return out;
}

SparseOperator SparseOperator::adjoint() const {
  std::vector<Triplet> t;
  t.reserve(values_.size());
  for (const auto& e : triplets()) t.push_back({e.col, e.row, std::conj(e.value)});
  return SparseOperator(cols_, rows_, std::move(t));
}

SparseOperator SparseOperator::gram() const {
  // (A^H A)_{ij} = sum_r conj(A_ri) A_rj, accumulated row by row.
  std::vector<std::map<std::size_t, cplx>> acc(cols_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p)
      for (std::size_t q = row_ptr_[r]; q < row_ptr_[r + 1]; ++q)
        acc[col_idx_[p]][col_idx_[q]] += std::conj(values_[p]) * values_[q];
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < cols_; ++i)
    for (const auto& [j, v] : acc[i]) t.push_back({i, j, v});
  return SparseOperator(cols_, cols_, std::move(t));
}

// ---------------------------------------------------------------------------
// Preconditioners

Preconditioner make_jacobi_preconditioner(const SparseOperator& A) {
  CVector inv(A.rows());
  for (std::size_t i = 0; i < A.rows(); ++i) {
    const cplx d = A.at(i, i);
    inv[i] = std::abs(d) > 0.0 ? 1.0 / d : 1.0;
  }
  return [inv](std::span<const cplx> x) {
    CVector y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = inv[i] * x[i];
    return y;
  };
}

Preconditioner make_cholesky_preconditioner(const SparseOperator& A) {
  if (!A.square()) throw DimensionMismatch("cholesky preconditioner needs a square operator");
  // Factor sign * Re(A) so that negative definite operators work too.
  double diag_sum = 0.0;
  for (std::size_t i = 0; i < A.rows(); ++i) diag_sum += A.at(i, i).real();
  const double sign = diag_sum < 0.0 ? -1.0 : 1.0;
  std::vector<Eigen::Triplet<double>> t;
  for (const auto& e : A.triplets())
    t.emplace_back(static_cast<int>(e.row), static_cast<int>(e.col), sign * e.value.real());
  EigenSparseR m(static_cast<int>(A.rows()), static_cast<int>(A.cols()));
  m.setFromTriplets(t.begin(), t.end());
  auto llt = std::make_shared<Eigen::SimplicialLLT<EigenSparseR>>(m);
  if (llt->info() != Eigen::Success)
    throw SingularOperator("real part is not definite; Cholesky failed");
  return [llt, sign](std::span<const cplx> x) {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::VectorXd re(n), im(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      re[i] = x[static_cast<std::size_t>(i)].real();
      im[i] = x[static_cast<std::size_t>(i)].imag();
    }
    Eigen::VectorXd yr = llt->solve(re);
    Eigen::VectorXd yi = llt->solve(im);
    CVector y(x.size());
    for (Eigen::Index i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = sign * cplx(yr[i], yi[i]);
    return y;
  };
}

// ---------------------------------------------------------------------------
// Krylov solvers

namespace {

CVector apply_prec(const Preconditioner& P, std::span<const cplx> x) {
  if (!P) return CVector(x.begin(), x.end());
  return P(x);
}

// Preconditioned CG for a real symmetric definite operator of either sign.
// Runs on sign * A with a preconditioner sign chosen to be positive; returns
// false on breakdown so the caller can fall back to GMRES.
bool conjugate_gradient(const SparseOperator& A, std::span<const cplx> b, CVector& x,
                        const SolveOptions& opts, std::size_t max_iter, SolveStats& stats) {
  const double bnorm = norm2(b);
  x.assign(b.size(), 0.0);
  CVector r(b.begin(), b.end());
  const double sign = dot(r, A.apply(r)).real() < 0.0 ? -1.0 : 1.0;
  for (auto& v : r) v *= sign;
  CVector z = apply_prec(opts.preconditioner, r);
  cplx rz = dot(r, z);
  const double psign = rz.real() < 0.0 ? -1.0 : 1.0;
  for (auto& v : z) v *= psign;
  rz *= psign;
  CVector p = z;
  for (std::size_t it = 0; it < max_iter; ++it) {
    CVector Ap = A.apply(p);
    for (auto& v : Ap) v *= sign;
    const double pAp = dot(p, Ap).real();
    if (!(pAp > 0.0) || !(rz.real() > 0.0)) return false;
    const cplx alpha = rz / pAp;
    axpy(alpha, p, x);
    axpy(-alpha, Ap, r);
    stats.iterations = it + 1;
    if (norm2(r) / bnorm <= 0.5 * opts.rel_tol) return true;
    z = apply_prec(opts.preconditioner, r);
    for (auto& v : z) v *= psign;
    const cplx rz_new = dot(r, z);
    const cplx beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
  }
  return true;
}

void gmres(const SparseOperator& A, std::span<const cplx> b, CVector& x, const SolveOptions& opts,
           std::size_t max_iter, SolveStats& stats) {
  const std::size_t n = b.size();
  const std::size_t m = std::max<std::size_t>(1, std::min(opts.restart, n));
  const double bnorm = norm2(b);
  std::size_t total = 0;
  while (total < max_iter) {
    CVector r(b.begin(), b.end());
    const CVector Ax = A.apply(x);
    for (std::size_t i = 0; i < n; ++i) r[i] -= Ax[i];
    const double beta = norm2(r);
    if (beta / bnorm <= 0.5 * opts.rel_tol) return;
    std::vector<CVector> V;
    std::vector<CVector> Z;  // preconditioned directions (right preconditioning)
    V.reserve(m + 1);
    Z.reserve(m);
    std::vector<std::vector<cplx>> H(m + 1, std::vector<cplx>(m, 0.0));
    std::vector<cplx> cs(m), sn(m), g(m + 1, 0.0);
    g[0] = beta;
    V.emplace_back(n);
    for (std::size_t i = 0; i < n; ++i) V[0][i] = r[i] / beta;
    std::size_t j = 0;
    bool done = false;
    for (; j < m && total < max_iter; ++j, ++total) {
      Z.push_back(apply_prec(opts.preconditioner, V[j]));
      CVector w = A.apply(Z[j]);
      for (std::size_t i = 0; i <= j; ++i) {  // modified Gram-Schmidt
        H[i][j] = dot(V[i], w);
        axpy(-H[i][j], V[i], w);
      }
      const double hnext = norm2(w);
      H[j + 1][j] = hnext;
      for (std::size_t i = 0; i < j; ++i) {  // apply previous Givens rotations
        const cplx t = std::conj(cs[i]) * H[i][j] + std::conj(sn[i]) * H[i + 1][j];
        H[i + 1][j] = -sn[i] * H[i][j] + cs[i] * H[i + 1][j];
        H[i][j] = t;
      }
      const double denom = std::hypot(std::abs(H[j][j]), hnext);
      if (denom == 0.0) throw SingularOperator("GMRES breakdown: zero Krylov column");
      cs[j] = H[j][j] / denom;
      sn[j] = hnext / denom;
      H[j][j] = denom;
      H[j + 1][j] = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = std::conj(cs[j]) * g[j];
      stats.iterations = total + 1;
      if (std::abs(g[j + 1]) / bnorm <= 0.5 * opts.rel_tol || hnext == 0.0) {
        ++j;
        ++total;
        done = true;
        break;
      }
      V.emplace_back(n);
      for (std::size_t i = 0; i < n; ++i) V[j + 1][i] = w[i] / hnext;
    }
    // Back substitution for the Krylov coefficients.
    std::vector<cplx> y(j, 0.0);
    for (std::size_t ii = j; ii-- > 0;) {
      cplx s = g[ii];
      for (std::size_t k = ii + 1; k < j; ++k) s -= H[ii][k] * y[k];
      if (std::abs(H[ii][ii]) == 0.0) throw SingularOperator("GMRES breakdown: singular Hessenberg");
      y[ii] = s / H[ii][ii];
    }
    for (std::size_t k = 0; k < j; ++k) axpy(y[k], Z[k], x);
    if (done) return;
  }
}

}  // namespace

CVector solve_sparse(const SparseOperator& A, std::span<const cplx> b, const SolveOptions& opts,
                     SolveStats* stats_out) {
  if (!A.square()) throw DimensionMismatch("solve_sparse needs a square operator");
  if (b.size() != A.rows()) throw DimensionMismatch("solve_sparse: right-hand side length");
  SolveStats stats;
  const std::size_t n = A.rows();
  const std::size_t max_iter = opts.max_iter ? opts.max_iter : 10 * n;
  const double bnorm = norm2(b);
  CVector x(n, 0.0);
  if (bnorm == 0.0) {
    if (stats_out) *stats_out = stats;
    return x;
  }
  bool solved = false;
  if (A.is_real() && A.is_symmetric(1e-13)) {
    stats.used_cg = true;
    solved = conjugate_gradient(A, b, x, opts, max_iter, stats);
  }
  if (!solved) {
    stats.used_cg = false;
    x.assign(n, 0.0);
    gmres(A, b, x, opts, max_iter, stats);
  }
  CVector r = A.apply(x);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  stats.rel_residual = norm2(r) / bnorm;
  if (stats_out) *stats_out = stats;
  if (!std::isfinite(stats.rel_residual))
    throw SingularOperator("non-finite residual; operator is singular or badly scaled");
  if (stats.rel_residual > opts.rel_tol)
    throw NonConvergence("relative residual " + std::to_string(stats.rel_residual) + " after " +
                         std::to_string(stats.iterations) + " iterations");
  return x;
}

// ---------------------------------------------------------------------------
// Dense symmetric eigenproblem

DenseSymmetric::DenseSymmetric(const std::vector<std::vector<double>>& rows) : n_(rows.size()) {
  a_.resize(n_ * n_);
  double scale = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    if (rows[i].size() != n_) throw DimensionMismatch("DenseSymmetric: matrix is not square");
    for (std::size_t j = 0; j < n_; ++j) {
      a_[i * n_ + j] = rows[i][j];
      scale = std::max(scale, std::abs(rows[i][j]));
    }
  }
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j)
      if (std::abs(a_[i * n_ + j] - a_[j * n_ + i]) > 1e-12 * scale)
        throw DimensionMismatch("DenseSymmetric: matrix is not symmetric");
}

double DenseSymmetric::frobenius() const {
  double s = 0.0;
  for (double v : a_) s += v * v;
  return std::sqrt(s);
}

double DenseSymmetric::trace() const {
  double s = 0.0;
  for (std::size_t i = 0; i < n_; ++i) s += a_[i * n_ + i];
  return s;
}

SymmetricEigen eig_symmetric(const DenseSymmetric& M) {
  const std::size_t n = M.size();
  std::vector<double> a(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] = 0.5 * (M(i, j) + M(j, i));
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  auto A = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };

  const double fro = std::max(M.frobenius(), 1e-300);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += A(i, j) * A(i, j);
    if (std::sqrt(off) <= 1e-16 * fro) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = A(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {  // columns p, q
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {  // rows p, q
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p], vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return A(i, i) < A(j, j); });
  SymmetricEigen out;
  for (std::size_t idx : order) {
    out.values.push_back(A(idx, idx));
    RVector col(n);
    for (std::size_t k = 0; k < n; ++k) col[k] = v[k * n + idx];
    out.vectors.push_back(std::move(col));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Smallest singular subspace

SingularSubspace smallest_singular_subspace(const SparseOperator& A, std::size_t k, std::size_t extra,
                                            unsigned seed) {
  const std::size_t n = A.cols();
  if (A.rows() < n) throw DimensionMismatch("smallest_singular_subspace needs rows >= cols");
  if (k == 0 || k >= n) throw DimensionMismatch("smallest_singular_subspace: need 0 < k < cols");
  const std::size_t want = std::min(n, k + extra);
  const std::size_t block = std::min(n, want + 3);

  EigenSparseC N = to_eigen(A.gram());
  double diag_max = 0.0;
  for (int i = 0; i < N.rows(); ++i) diag_max = std::max(diag_max, std::abs(N.coeff(i, i)));
  // A tiny positive shift keeps the factorization defined for exactly singular A.
  double shift = 1e-13 * std::max(diag_max, 1.0);
  Eigen::SimplicialLDLT<EigenSparseC> ldlt;
  for (int attempt = 0; attempt < 6; ++attempt, shift *= 100.0) {
    EigenSparseC S = N;
    for (int i = 0; i < S.rows(); ++i) S.coeffRef(i, i) += shift;
    ldlt.compute(S);
    if (ldlt.info() == Eigen::Success) break;
  }
  if (ldlt.info() != Eigen::Success) throw SingularOperator("normal-equation factorization failed");

  const EigenSparseC Ae = to_eigen(A);
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXcd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(block));
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    for (Eigen::Index i = 0; i < X.rows(); ++i) X(i, j) = cplx(nd(rng), nd(rng));

  Eigen::VectorXd sigma_prev = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(block), -1.0);
  Eigen::VectorXd sigma;
  bool converged = false;
  for (int it = 0; it < 60; ++it) {
    Eigen::MatrixXcd Y = ldlt.solve(X);
    // Orthonormalize twice for stability.
    for (int pass = 0; pass < 2; ++pass) {
      Eigen::HouseholderQR<Eigen::MatrixXcd> qr(Y);
      Y = qr.householderQ() * Eigen::MatrixXcd::Identity(Y.rows(), Y.cols());
    }
    const Eigen::MatrixXcd AY = Ae * Y;
    const Eigen::MatrixXcd G = AY.adjoint() * AY;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
    X = Y * es.eigenvectors();
    sigma = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    // Recompute singular values directly from ||A x|| for relative accuracy.
    const Eigen::MatrixXcd AX = Ae * X;
    for (Eigen::Index j = 0; j < sigma.size(); ++j) sigma[j] = AX.col(j).norm();
    double change = 0.0;
    const double top = std::max(sigma[static_cast<Eigen::Index>(want - 1)], 1e-300);
    for (std::size_t j = 0; j < want; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      change = std::max(change, std::abs(sigma[jj] - sigma_prev[jj]) / top);
    }
    if (change < 1e-12 && it > 0) {
      converged = true;
      break;
    }
    sigma_prev = sigma;
  }
  if (!converged) throw NonConvergence("subspace iteration did not settle");

  // Sort Ritz pairs by singular value (eigen solver order may differ after
  // recomputation from ||Ax||).
  std::vector<Eigen::Index> order(static_cast<std::size_t>(block));
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(block); ++j) order[static_cast<std::size_t>(j)] = j;
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return sigma[a] < sigma[b]; });

  SingularSubspace out;
  for (std::size_t j = 0; j < want; ++j) out.singular_values.push_back(sigma[order[j]]);
  for (std::size_t j = 0; j < k; ++j) {
    CVector v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = X(static_cast<Eigen::Index>(i), order[j]);
    out.vectors.push_back(std::move(v));
  }
  return out;
}

}  // namespace hitchin
