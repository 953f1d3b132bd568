#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <string>

#include "hitchin/differentials.hpp"
#include "hitchin/errors.hpp"
#include "support.hpp"

using namespace hitchin;
using hitchin::testing::mesh_at;

namespace {

const HolomorphicBasis& basis_at(int level, int weight) {
  static std::map<std::pair<int, int>, HolomorphicBasis> cache;
  const auto key = std::make_pair(level, weight);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, holomorphic_basis(mesh_at(level), weight)).first;
  return it->second;
}

DifferentialField random_field(const Mesh& m, int weight, Chirality c, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  CVector dofs(m.num_dofs());
  for (auto& x : dofs) x = {g(rng), g(rng)};
  return field_from_dofs(m, weight, c, dofs);
}

// Field sampled from chart polynomial coefficients on an arbitrary mesh.
DifferentialField sample_polynomial(const Mesh& m, int weight, const CVector& c, double scale) {
  CVector dofs(m.num_dofs());
  for (std::size_t d = 0; d < dofs.size(); ++d)
    dofs[d] = evaluate_chart_polynomial(c, scale, m.z[static_cast<std::size_t>(m.copies[d][0])]);
  return field_from_dofs(m, weight, Chirality::Holomorphic, dofs);
}

// Rows whose stencil touches an identified vertex.
bool patch_touches_seam(const Mesh& m, int v) {
  for (const auto& e : build_patch(m, v, 2))
    if (m.on_boundary[static_cast<std::size_t>(e.vertex)]) return true;
  return false;
}

}  // namespace

TEST(Cocycle, FieldFromDofsIsCompatible) {
  const auto& m = mesh_at(1);
  for (int k : {2, 3})
    for (auto c : {Chirality::Holomorphic, Chirality::Antiholomorphic})
      EXPECT_LT(cocycle_residual(m, random_field(m, k, c, 7u + static_cast<unsigned>(k))), 1e-13);
}

TEST(Cocycle, DetectsGlobalPolynomial) {
  const auto& m = mesh_at(1);
  DifferentialField f{3, Chirality::Holomorphic, CVector(m.num_vertices())};
  for (std::size_t v = 0; v < f.values.size(); ++v) f.values[v] = m.z[v] * m.z[v];
  EXPECT_GT(cocycle_residual(m, f), 1e-2);
}

TEST(Dbar, ZeroFieldMapsToZero) {
  const auto& m = mesh_at(1);
  const auto op = dbar_operator(m, 3);
  const CVector r = op.stencil.apply(CVector(m.num_dofs(), 0.0));
  EXPECT_EQ(norm_inf(r), 0.0);
}

TEST(Dbar, GlobalPolynomialResidualSitsAtSeams) {
  const auto& m = mesh_at(1);
  for (int k : {2, 3}) {
    const auto op = dbar_operator(m, k);
    for (int power : {1, 2, 3}) {
      CVector dofs(m.num_dofs());
      for (std::size_t d = 0; d < dofs.size(); ++d) dofs[d] = std::pow(m.z[static_cast<std::size_t>(m.copies[d][0])], power);
      const CVector r = op.stencil.apply(dofs);
      double seam = 0.0, interior = 0.0;
      for (std::size_t v = 0; v < r.size(); ++v) {
        const double x = std::abs(r[v]) * op.row_weight[v];
        if (patch_touches_seam(m, static_cast<int>(v)))
          seam = std::max(seam, x);
        else
          interior = std::max(interior, x);
      }
      EXPECT_GT(seam, 1e4 * interior) << "k=" << k << " z^" << power;
    }
  }
}

TEST(Dbar, RejectsUnsupportedWeight) {
  EXPECT_THROW(dbar_operator(mesh_at(0), 4), DimensionMismatch);
  EXPECT_THROW(seam_dbar_operator(mesh_at(0), 1), DimensionMismatch);
}

TEST(Basis, DimensionsAndGap) {
  for (int level : {2, 3}) {
    EXPECT_EQ(basis_at(level, 2).fields.size(), 3u);
    EXPECT_EQ(basis_at(level, 3).fields.size(), 5u);
    EXPECT_GE(basis_at(level, 2).gap_ratio, 1e3);
    EXPECT_GE(basis_at(level, 3).gap_ratio, 1e3);
  }
}

TEST(Basis, OrthonormalInWeightedProduct) {
  const auto& m = mesh_at(2);
  for (int k : {2, 3}) {
    const auto& b = basis_at(2, k);
    for (std::size_t i = 0; i < b.fields.size(); ++i)
      for (std::size_t j = 0; j < b.fields.size(); ++j)
        EXPECT_NEAR(std::abs(weighted_inner(m, b.fields[i], b.fields[j]) - (i == j ? 1.0 : 0.0)), 0.0, 1e-9);
  }
}

TEST(Basis, DbarResidualSmallAndDecreasing) {
  for (int k : {2, 3}) {
    const auto& coarse = basis_at(2, k);
    const auto& fine = basis_at(3, k);
    double worst_coarse = 0.0, worst_fine = 0.0;
    for (double r : coarse.residuals) worst_coarse = std::max(worst_coarse, r);
    for (double r : fine.residuals) worst_fine = std::max(worst_fine, r);
    EXPECT_LE(worst_fine, 1e-3) << "k=" << k;
    EXPECT_LT(worst_fine, 0.5 * worst_coarse) << "k=" << k;
  }
}

TEST(Basis, SeamCocycleHolds) {
  for (int k : {2, 3}) {
    EXPECT_LT(basis_at(2, k).cocycle_error, 1e-8);
    EXPECT_LT(basis_at(3, k).cocycle_error, 1e-8);
    for (const auto& f : basis_at(2, k).fields) EXPECT_LT(cocycle_residual(mesh_at(2), f), 1e-12);
  }
}

TEST(Basis, KernelSpanStableUnderRefinement) {
  // Project each level-2 field, resampled on the level-3 mesh, onto the
  // level-3 span; the leftover must be tiny.
  const auto& fine = mesh_at(3);
  for (int k : {2, 3}) {
    const auto& b2 = basis_at(2, k);
    const auto& b3 = basis_at(3, k);
    for (const auto& c : b2.chart_coefficients) {
      DifferentialField f = sample_polynomial(fine, k, c, b2.chart_scale);
      for (const auto& g : b3.fields) {
        const cplx p = weighted_inner(fine, f, g);
        for (std::size_t v = 0; v < f.values.size(); ++v) f.values[v] -= p * g.values[v];
      }
      EXPECT_LT(std::sqrt(weighted_inner(fine, f, f).real()), 1e-6);
    }
  }
}

TEST(Basis, L2NormIsRefinementCauchy) {
  const auto& b = basis_at(3, 3);
  for (const auto& c : b.chart_coefficients) {
    double norms[3];
    for (int level = 0; level < 3; ++level) {
      const DifferentialField f = sample_polynomial(mesh_at(level + 1), 3, c, b.chart_scale);
      norms[level] = std::sqrt(weighted_inner(mesh_at(level + 1), f, f).real());
    }
    const double d1 = std::abs(norms[1] - norms[0]), d2 = std::abs(norms[2] - norms[1]);
    EXPECT_GE(d1, 2.0 * d2);
  }
}

TEST(Basis, FileRoundTripIsBitExact) {
  const auto& m = mesh_at(1);
  const HolomorphicBasis b = holomorphic_basis(m, 3);
  const std::string path = ::testing::TempDir() + "basis_roundtrip.txt";
  save_basis(b, m, path);
  const HolomorphicBasis r = load_basis(path, m);
  ASSERT_EQ(r.fields.size(), b.fields.size());
  EXPECT_EQ(r.gap_ratio, b.gap_ratio);
  EXPECT_EQ(r.chart_scale, b.chart_scale);
  for (std::size_t f = 0; f < b.fields.size(); ++f) {
    EXPECT_EQ(r.fields[f].values, b.fields[f].values);
    EXPECT_EQ(r.chart_coefficients[f], b.chart_coefficients[f]);
    EXPECT_EQ(r.residuals[f], b.residuals[f]);
  }
  const std::string again = path + ".2";
  save_basis(r, m, again);
  std::ifstream a(path), c(again);
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}), std::string(std::istreambuf_iterator<char>(c), {}));
  std::remove(again.c_str());
  EXPECT_THROW(load_basis(path, mesh_at(0)), MeshMismatch);
  std::remove(path.c_str());
}

TEST(Pairing, ZeroAndBilinear) {
  const auto& m = mesh_at(0);
  const auto q1 = random_field(m, 3, Chirality::Holomorphic, 1);
  const auto q2 = random_field(m, 3, Chirality::Antiholomorphic, 2);
  CVector lambda(m.num_vertices());
  for (std::size_t v = 0; v < lambda.size(); ++v) lambda[v] = m.lambda0[v];
  DifferentialField zero{3, Chirality::Holomorphic, CVector(m.num_vertices(), 0.0)};
  EXPECT_EQ(norm_inf(pairing_h(zero, q2, lambda)), 0.0);

  const cplx s(1.5, -0.25), t(-0.5, 2.0);
  DifferentialField sq1 = q1, tq2 = q2;
  for (auto& x : sq1.values) x *= s;
  for (auto& x : tq2.values) x *= t;
  const CVector base = pairing_h(q1, q2, lambda), scaled = pairing_h(sq1, tq2, lambda);
  for (std::size_t v = 0; v < base.size(); ++v) EXPECT_LT(std::abs(scaled[v] - s * t * base[v]), 1e-12 * (1 + std::abs(base[v])));
}

TEST(Pairing, NormalizationAtFuchsianPoint) {
  // h(dz^3, dzbar^3) at the origin, where lambda0 = 4.
  const auto& m = mesh_at(0);
  DifferentialField one{3, Chirality::Holomorphic, CVector(m.num_vertices(), 1.0)};
  const CVector lambda(m.num_vertices(), 4.0);
  const CVector h = pairing_h(one, conjugate(one), lambda);
  EXPECT_DOUBLE_EQ(h[0].real(), kDefaultPairingConstant / 64.0);
}

TEST(Pairing, SelfPairingRealNonnegative) {
  const auto& m = mesh_at(0);
  CVector lambda(m.num_vertices());
  for (std::size_t v = 0; v < lambda.size(); ++v) lambda[v] = m.lambda0[v];
  for (unsigned seed = 0; seed < 5; ++seed) {
    const auto q = random_field(m, 3, Chirality::Holomorphic, seed);
    for (const auto& x : pairing_h(q, conjugate(q), lambda)) {
      EXPECT_EQ(x.imag(), 0.0);
      EXPECT_GE(x.real(), 0.0);
    }
  }
}

TEST(Pairing, RejectsWrongChirality) {
  const auto& m = mesh_at(0);
  const auto q = random_field(m, 3, Chirality::Holomorphic, 3);
  CVector lambda(m.num_vertices(), 1.0);
  EXPECT_THROW(pairing_h(q, q, lambda), DimensionMismatch);
}

TEST(Conjugate, InvolutionAndZero) {
  const auto& m = mesh_at(0);
  const auto q = random_field(m, 2, Chirality::Holomorphic, 4);
  const auto cc = conjugate(conjugate(q));
  EXPECT_EQ(cc.values, q.values);
  EXPECT_EQ(cc.chirality, q.chirality);
  EXPECT_EQ(conjugate(q).chirality, Chirality::Antiholomorphic);
  DifferentialField zero{3, Chirality::Holomorphic, CVector(m.num_vertices(), 0.0)};
  EXPECT_EQ(norm_inf(conjugate(zero).values), 0.0);
  // The conjugate of a compatible field obeys the conjugate cocycle.
  EXPECT_LT(cocycle_residual(m, conjugate(q)), 1e-13);
}
