#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <map>
#include <random>

#include "hitchin/errors.hpp"
#include "hitchin/goldman.hpp"
#include "support.hpp"

using namespace hitchin;
using hitchin::testing::mesh_at;
using hitchin::testing::reference_field;

namespace {

constexpr cplx kI(0.0, 1.0);

DifferentialField zero_cubic(const Mesh& m) { return {3, Chirality::Holomorphic, CVector(m.num_vertices(), 0.0)}; }

const AffineSphereData& fuchsian(int level) {
  static std::map<int, AffineSphereData> cache;
  auto it = cache.find(level);
  if (it == cache.end()) {
    const Mesh& m = mesh_at(level);
    auto s = make_affine_sphere_data(m, zero_cubic(m), conjugate(zero_cubic(m)), WangMode::Real);
    s.derivatives = std::make_shared<const DerivativeOperators>(derivative_operators(m));
    it = cache.emplace(level, std::move(s)).first;
  }
  return it->second;
}

const HolomorphicBasis& basis(int level, int weight) {
  static std::map<std::pair<int, int>, HolomorphicBasis> cache;
  const auto key = std::make_pair(level, weight);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, holomorphic_basis(mesh_at(level), weight)).first;
  return it->second;
}

const std::vector<RealTangent>& real_basis(int level) {
  static std::map<int, std::vector<RealTangent>> cache;
  auto it = cache.find(level);
  if (it == cache.end())
    it = cache.emplace(level, fuchsian_real_basis(fuchsian(level), basis(level, 2), basis(level, 3))).first;
  return it->second;
}

DifferentialField scaled(const DifferentialField& f, cplx s) {
  DifferentialField out = f;
  for (auto& x : out.values) x *= s;
  return out;
}

// Cubic base point on the real locus and its complex-mode solution.
const AffineSphereData& off_locus(int level) {
  static std::map<int, AffineSphereData> cache;
  auto it = cache.find(level);
  if (it == cache.end()) {
    const Mesh& m = mesh_at(level);
    const auto q = scaled(basis(level, 3).fields[0], 0.1);
    it = cache.emplace(level, solve_wang(m, q, conjugate(q), WangMode::Complex)).first;
  }
  return it->second;
}

std::vector<DifferentialField> cubic_directions(int level, std::size_t count) {
  std::vector<DifferentialField> out;
  for (std::size_t k = 0; out.size() < count; ++k) {
    out.push_back(basis(level, 3).fields[k]);
    if (out.size() < count) out.push_back(scaled(basis(level, 3).fields[k], kI));
  }
  return out;
}

int count_positive(const DenseSymmetric& g) {
  int n = 0;
  for (double e : eig_symmetric(g).values) n += e > 0.0;
  return n;
}

DenseSymmetric symmetric_part(const std::vector<std::vector<double>>& g) {
  DenseSymmetric s(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) s(i, j) = 0.5 * (g[i][j] + g[j][i]);
  return s;
}

}  // namespace

TEST(PairOmega, AntisymmetricAndBilinear) {
  const Mesh& m = mesh_at(1);
  const auto& b = real_basis(1);
  const TangentRep x = b[0].left + b[7].right, y = b[0].right + b[6].left + b[9].right;
  const cplx xy = pair_omega(x, y, m);
  EXPECT_EQ(pair_omega(x, y, m), -pair_omega(y, x, m));
  EXPECT_EQ(pair_omega(x, x, m), 0.0);
  const cplx s(0.7, -1.3);
  EXPECT_LT(std::abs(pair_omega(s * x + y, y, m) - s * xy), 1e-14 * std::abs(xy));
}

TEST(PairOmega, RejectsForeignMesh) {
  const auto& b = real_basis(1);
  EXPECT_THROW(pair_omega(b[0].left, b[0].right, mesh_at(2)), MeshMismatch);
  EXPECT_THROW(pair_omega(b[0].left, real_basis(2)[0].right, mesh_at(1)), MeshMismatch);
}

TEST(PairOmega, IntegrandIdentitiesHoldPointwise) {
  const Mesh& m = mesh_at(2);
  const auto& f = fuchsian(2);
  const auto psi = basis(2, 2).fields[1];
  const auto phi = reference_field(m, 2, {0.0, cplx(0.5, 1.0), 0.3});
  const auto al = basis(2, 3).fields[0];
  const auto be = reference_field(m, 3, {cplx(0.5, 1.0), 0.0, 0.0, 0.7});
  const auto t7 = fuchsian_tangent(f, Direction::BarQuadratic, conjugate(psi));
  const auto t8 = fuchsian_tangent(f, Direction::Quadratic, phi);
  const auto t9 = fuchsian_tangent(f, Direction::Cubic, al);
  const auto t10 = fuchsian_tangent(f, Direction::BarCubic, conjugate(be));
  CVector quad(m.num_vertices()), cub(m.num_vertices());
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    const double l = m.lambda0[v];
    quad[v] = -std::conj(psi.values[v]) * phi.values[v] / l;
    cub[v] = 2.0 * al.values[v] * std::conj(be.values[v]) / (l * l);
    EXPECT_LT(std::abs(wedge_trace(t7, t8, v) - quad[v]), 1e-15 * (1.0 + std::abs(quad[v])));
    EXPECT_LT(std::abs(wedge_trace(t9, t10, v) - cub[v]), 1e-15 * (1.0 + std::abs(cub[v])));
    for (const auto* a : {&t7, &t8})
      for (const auto* b : {&t9, &t10}) EXPECT_EQ(wedge_trace(*a, *b, v), 0.0);
  }
  // The same quadrature on the scalar integrands.
  const cplx q = cplx(0.0, -2.0) * integrate(m, quad, Measure::Chart);
  const cplx c = cplx(0.0, -2.0) * integrate(m, cub, Measure::Chart);
  EXPECT_LT(std::abs(pair_omega(t7, t8, m) - q), 1e-10 * std::abs(q));
  EXPECT_LT(std::abs(pair_omega(t9, t10, m) - c), 1e-10 * std::abs(c));
  EXPECT_GT(std::abs(q), 0.1);
  EXPECT_GT(std::abs(c), 0.1);
  EXPECT_LT(std::abs(pair_omega(t7 + t8, t9 + t10, m)), 1e-10 * std::abs(c));
}

TEST(ApplyJ, SquaresToMinusIdentity) {
  const auto& v = real_basis(1)[4];
  const RealTangent jj = apply_J(apply_J(v));
  for (std::size_t x = 0; x < v.left.p.size(); ++x) {
    EXPECT_EQ(jj.left.p[x], -v.left.p[x]);
    EXPECT_EQ(jj.left.r[x], -v.left.r[x]);
    EXPECT_EQ(jj.right.p[x], -v.right.p[x]);
    EXPECT_EQ(jj.right.r[x], -v.right.r[x]);
  }
  const RealTangent zero{"0", zero_tangent(mesh_at(1)), zero_tangent(mesh_at(1))};
  const RealTangent jz = apply_J(zero);
  for (std::size_t x = 0; x < jz.left.p.size(); ++x) EXPECT_EQ(jz.left.p[x].norm() + jz.right.r[x].norm(), 0.0);
}

TEST(ApplyJ, SignOfMetricMatchesClosedForm) {
  // omega(v, Jv) = 4 int |psi|^2 / lambda0 dxdy and -8 int |alpha|^2 / lambda0^2 dxdy.
  const Mesh& m = mesh_at(2);
  const auto& b = real_basis(2);
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& psi = basis(2, 2).fields[k];
    const double expected = 4.0 * weighted_inner(m, psi, psi).real();
    for (std::size_t j : {2 * k, 2 * k + 1}) {
      const cplx w = omega(b[j], apply_J(b[j]), m);
      EXPECT_GT(w.real(), 0.0);
      EXPECT_LT(std::abs(w - expected), 1e-10 * expected);
    }
  }
  for (std::size_t k = 0; k < 5; ++k) {
    const auto& al = basis(2, 3).fields[k];
    const double expected = -8.0 * weighted_inner(m, al, al).real();
    for (std::size_t j : {6 + 2 * k, 7 + 2 * k}) {
      const cplx w = omega(b[j], apply_J(b[j]), m);
      EXPECT_LT(w.real(), 0.0);
      EXPECT_LT(std::abs(w - expected), 1e-10 * std::abs(expected));
    }
  }
}

TEST(Gram, SignatureAndBlockStructure) {
  const GramReport r = gram_signature(mesh_at(2), basis(2, 2), basis(2, 3));
  EXPECT_EQ(r.n_plus, 6);
  EXPECT_EQ(r.n_minus, 10);
  EXPECT_EQ(r.n_zero, 0);
  EXPECT_EQ(r.labels.size(), 16u);
  EXPECT_EQ(r.labels[0], "q0");
  EXPECT_EQ(r.labels[7], "ic0");
  EXPECT_GE(r.min_abs_eigenvalue, r.gap_threshold);
  EXPECT_LE(r.block_residual, 1e-9);
  EXPECT_LE(r.compatibility_residual, 1e-9);
  EXPECT_LE(r.imaginary_residual, 1e-12);
  double biggest = 0.0;
  for (const auto& row : r.gram)
    for (double x : row) biggest = std::max(biggest, std::abs(x));
  EXPECT_LE(r.symmetry_residual, 1e-9 * biggest);
}

TEST(Gram, RescalingBasisScalesGram) {
  HolomorphicBasis q = basis(2, 2), c = basis(2, 3);
  for (auto* b : {&q, &c})
    for (auto& f : b->fields) f = scaled(f, 2.0);
  const GramReport a = gram_signature(mesh_at(2), basis(2, 2), basis(2, 3));
  const GramReport r = gram_signature(mesh_at(2), q, c);
  EXPECT_EQ(r.n_plus, 6);
  EXPECT_EQ(r.n_minus, 10);
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j) EXPECT_NEAR(r.gram[i][j], 4.0 * a.gram[i][j], 1e-12);
}

TEST(Gram, SignatureInvariantUnderChangeOfBasis) {
  const GramReport a = gram_signature(mesh_at(1), basis(1, 2), basis(1, 3));
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    Eigen::MatrixXd g(16, 16), p(16, 16);
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j) {
        g(i, j) = a.gram[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        p(i, j) = (i == j ? 3.0 : 0.0) + u(rng);
      }
    ASSERT_GT(std::abs(p.determinant()), 1e-3);
    const Eigen::MatrixXd h = p.transpose() * g * p;
    std::vector<std::vector<double>> rows(16, std::vector<double>(16));
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j) rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = h(i, j);
    EXPECT_EQ(count_positive(symmetric_part(rows)), 6);
  }
}

TEST(Gram, DuplicateDirectionIsDegenerate) {
  HolomorphicBasis q = basis(1, 2);
  q.fields[1] = q.fields[0];
  EXPECT_THROW(gram_signature(mesh_at(1), q, basis(1, 3)), DegenerateGram);
}

TEST(Gram, ReportCarriesVerdicts) {
  const GramReport r = gram_signature(mesh_at(1), basis(1, 2), basis(1, 3));
  const std::string text = format_gram_report(r);
  for (const char* key : {"mesh_checksum = ", "row 15 = ", "eigenvalues = ", "n_plus = 6", "n_minus = 10",
                          "verdict signature = (6, 10) expected (6, 10) pass", "verdict compatibility",
                          "verdict lagrangian"})
    EXPECT_NE(text.find(key), std::string::npos) << key;
}

TEST(Fuchsian, CompatibilityAndLagrangianAreExact) {
  const auto& b = real_basis(2);
  const PairingCheck c = compatibility_residual(b, mesh_at(2));
  EXPECT_EQ(c.pairs, 120u);
  EXPECT_LE(c.residual, 1e-9);
  // Left factors populate P(1,2), P(2,3) or R(3,1) only, so their pairwise
  // integrand has zero diagonal and vanishes identically.
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      for (std::size_t v = 0; v < mesh_at(2).num_vertices(); v += 5) {
        ASSERT_EQ(wedge_trace(b[i].left, b[j].left, v), 0.0);
        ASSERT_EQ(wedge_trace(b[i].right, b[j].right, v), 0.0);
      }
  EXPECT_EQ(lagrangian_residual(b, mesh_at(2)).residual, 0.0);
}

TEST(Fuchsian, InvolutionLeavesPairingsUnchanged) {
  const auto& f = fuchsian(1);
  std::vector<RealTangent> a, b;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& al = basis(1, 3).fields[k];
    a.push_back(cubic_direction(f, al, "a"));
    b.push_back(cubic_direction(f, scaled(al, -1.0), "b"));
  }
  EXPECT_EQ(involution_discrepancy(a, b, mesh_at(1)).residual, 0.0);
}

TEST(Fuchsian, ExactTermsDoNotChangeClosedPairings) {
  // Adding d_D xi to one argument changes the pairing by discretization
  // error only, since the other argument is closed.
  double previous = INFINITY;
  for (int level = 1; level <= 3; ++level) {
    const Mesh& m = mesh_at(level);
    const auto& f = fuchsian(level);
    const auto d = assemble_D(f);
    const auto phi = reference_field(m, 2, {1.0, cplx(0.0, 0.5)}), al = reference_field(m, 3, {1.0});
    std::vector<Mat3> xi(m.num_vertices(), Mat3::Zero());
    for (std::size_t v = 0; v < xi.size(); ++v) {
      const double l = m.lambda0[v], sv = std::norm(al.values[v]) / (l * l * l);
      xi[v](0, 0) = xi[v](2, 2) = sv;
      xi[v](1, 1) = -2.0 * sv;
      xi[v](0, 2) = phi.values[v];
      xi[v](2, 0) = std::conj(phi.values[v]) / (l * l);
    }
    const TangentRep exact = covariant_derivative(d, xi);
    const auto closed = fuchsian_tangent(f, Direction::Quadratic, reference_field(m, 2, {0.3, 1.0})) +
                        fuchsian_tangent(f, Direction::BarCubic, conjugate(reference_field(m, 3, {0.0, 1.0})));
    const auto other = fuchsian_tangent(f, Direction::BarQuadratic, conjugate(reference_field(m, 2, {0.3, 1.0}))) +
                       fuchsian_tangent(f, Direction::Cubic, reference_field(m, 3, {0.0, 1.0}));
    const double change = std::abs(pair_omega(exact, closed, m)) / std::abs(pair_omega(other, closed, m));
    std::printf("level %d relative change %.3e\n", level, change);
    EXPECT_LT(change, previous / 2.0) << level;
    previous = change;
  }
}

TEST(OffLocus, LagrangianResidualShrinksWithStep) {
  const auto dirs = cubic_directions(1, 4);
  double previous = INFINITY;
  for (double dt : {2e-2, 1e-2, 5e-3}) {
    const PairingCheck c = check_lagrangian(off_locus(1), dirs, dt);
    EXPECT_EQ(c.pairs, 6u);
    EXPECT_LE(c.residual, 1e-4);
    EXPECT_LT(c.residual, previous / 3.0) << dt;
    previous = c.residual;
  }
}

TEST(OffLocus, CompatibilityResidualShrinksWithStep) {
  const auto dirs = cubic_directions(1, 4);
  const double a = check_compatibility(off_locus(1), dirs, 1e-2).residual;
  const double b = check_compatibility(off_locus(1), dirs, 5e-3).residual;
  EXPECT_LE(b, 1e-4);
  EXPECT_LT(b, a / 3.0);
}

TEST(OffLocus, InvolutionPreservesPairings) {
  EXPECT_LE(check_involution(off_locus(1), cubic_directions(1, 3), 5e-3).residual, 1e-6);
}

TEST(OffLocus, RejectsRealModeAndBadStep) {
  const auto q = scaled(basis(1, 3).fields[0], 0.1);
  const auto real = solve_wang(mesh_at(1), q, conjugate(q), WangMode::Real);
  EXPECT_THROW(cubic_path_tangents(real, cubic_directions(1, 1), 1e-2), DimensionMismatch);
  EXPECT_THROW(cubic_path_tangents(off_locus(1), cubic_directions(1, 1), 0.0), DimensionMismatch);
}

TEST(OffLocus, PathTangentsApproachFuchsianClosedForms) {
  // At Q0 = 0 the finite-difference cubic tangents are the closed forms up to
  // O(dt^2).
  const Mesh& m = mesh_at(1);
  const auto z = solve_wang(m, zero_cubic(m), conjugate(zero_cubic(m)), WangMode::Complex);
  const auto al = basis(1, 3).fields[2];
  const auto fd = cubic_path_tangents(z, {al}, 1e-3)[0];
  const auto cf = cubic_direction(fuchsian(1), al, "c");
  const double g = std::abs(omega(cf, apply_J(cf), m));
  EXPECT_LT(std::abs(omega(fd, apply_J(fd), m) - omega(cf, apply_J(cf), m)), 1e-5 * g);
}
