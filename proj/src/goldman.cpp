#include "hitchin/goldman.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "hitchin/errors.hpp"

namespace hitchin {

namespace {

constexpr cplx kI(0.0, 1.0);

void check_mesh(const TangentRep& t, const Mesh& m) {
  if (t.mesh != &m || t.p.size() != m.num_vertices() || t.r.size() != m.num_vertices())
    throw MeshMismatch("tangent does not live on the quadrature mesh");
}

// L + R and J(L + R) = iL - iR, the two forms every real pairing needs.
struct Combined {
  TangentRep plain;
  TangentRep rotated;
};

std::vector<Combined> combine(const std::vector<RealTangent>& ts) {
  std::vector<Combined> out;
  out.reserve(ts.size());
  for (const auto& t : ts) {
    const RealTangent j = apply_J(t);
    out.push_back({t.left + t.right, j.left + j.right});
  }
  return out;
}

DifferentialField negated(const DifferentialField& f) {
  DifferentialField out = f;
  for (auto& x : out.values) x = -x;
  return out;
}

AffineSphereData with_derivatives(const AffineSphereData& s) {
  AffineSphereData out = s;
  if (!out.derivatives) out.derivatives = std::make_shared<const DerivativeOperators>(derivative_operators(*s.mesh));
  return out;
}

}  // namespace

cplx pair_omega(const TangentRep& a, const TangentRep& b, const Mesh& m) {
  check_mesh(a, m);
  check_mesh(b, m);
  CVector f(m.num_vertices());
  for (std::size_t v = 0; v < f.size(); ++v) f[v] = wedge_trace(a, b, v);
  return cplx(0.0, -2.0) * integrate(m, f, Measure::Chart);
}

RealTangent apply_J(const RealTangent& v) { return {v.label, kI * v.left, -kI * v.right}; }

cplx omega(const RealTangent& u, const RealTangent& v, const Mesh& m) {
  return pair_omega(u.left + u.right, v.left + v.right, m);
}

RealTangent quadratic_direction(const AffineSphereData& f, const DifferentialField& psi, std::string label) {
  return {std::move(label), fuchsian_tangent(f, Direction::BarQuadratic, conjugate(psi)),
          fuchsian_tangent(f, Direction::Quadratic, psi)};
}

RealTangent cubic_direction(const AffineSphereData& f, const DifferentialField& alpha, std::string label) {
  return {std::move(label), fuchsian_tangent(f, Direction::Cubic, alpha),
          fuchsian_tangent(f, Direction::BarCubic, conjugate(alpha))};
}

std::vector<RealTangent> fuchsian_real_basis(const AffineSphereData& fuchsian, const HolomorphicBasis& quadratic,
                                             const HolomorphicBasis& cubic) {
  if (quadratic.weight != 2 || cubic.weight != 3) throw DimensionMismatch("bases of the wrong weight");
  const AffineSphereData f = with_derivatives(fuchsian);
  std::vector<RealTangent> out;
  auto rotated = [](const DifferentialField& x) {
    DifferentialField y = x;
    for (auto& c : y.values) c *= kI;
    return y;
  };
  for (std::size_t k = 0; k < quadratic.fields.size(); ++k) {
    out.push_back(quadratic_direction(f, quadratic.fields[k], "q" + std::to_string(k)));
    out.push_back(quadratic_direction(f, rotated(quadratic.fields[k]), "iq" + std::to_string(k)));
  }
  for (std::size_t k = 0; k < cubic.fields.size(); ++k) {
    out.push_back(cubic_direction(f, cubic.fields[k], "c" + std::to_string(k)));
    out.push_back(cubic_direction(f, rotated(cubic.fields[k]), "ic" + std::to_string(k)));
  }
  return out;
}

GramReport gram_from_tangents(const Mesh& m, const std::vector<RealTangent>& ts, std::size_t quadratic_count) {
  const std::size_t n = ts.size();
  GramReport rep;
  rep.level = m.level;
  rep.mesh_checksum = mesh_checksum(m);
  for (const auto& t : ts) rep.labels.push_back(t.label);
  const auto c = combine(ts);
  rep.gram.assign(n, std::vector<double>(n, 0.0));
  double biggest = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const cplx w = pair_omega(c[i].plain, c[j].rotated, m);
      rep.gram[i][j] = w.real();
      rep.imaginary_residual = std::max(rep.imaginary_residual, std::abs(w.imag()));
      biggest = std::max(biggest, std::abs(w.real()));
    }
  DenseSymmetric sym(n);
  double block = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      sym(i, j) = 0.5 * (rep.gram[i][j] + rep.gram[j][i]);
      rep.symmetry_residual = std::max(rep.symmetry_residual, std::abs(rep.gram[i][j] - rep.gram[j][i]));
      if ((i < quadratic_count) != (j < quadratic_count)) block = std::max(block, std::abs(rep.gram[i][j]));
    }
  rep.block_residual = biggest > 0.0 ? block / biggest : 0.0;
  rep.eigenvalues = eig_symmetric(sym).values;
  rep.gap_threshold = 1e3 * std::max(rep.symmetry_residual, DBL_EPSILON * biggest);
  rep.min_abs_eigenvalue = INFINITY;
  for (double e : rep.eigenvalues) {
    rep.min_abs_eigenvalue = std::min(rep.min_abs_eigenvalue, std::abs(e));
    if (std::abs(e) < rep.gap_threshold)
      ++rep.n_zero;
    else
      ++(e > 0.0 ? rep.n_plus : rep.n_minus);
  }
  rep.compatibility_residual = compatibility_residual(ts, m).residual;
  rep.lagrangian_residual = lagrangian_residual(ts, m).residual;
  return rep;
}

GramReport gram_signature(const Mesh& m, const HolomorphicBasis& quadratic, const HolomorphicBasis& cubic) {
  const DifferentialField z{3, Chirality::Holomorphic, CVector(m.num_vertices(), 0.0)};
  const auto f = make_affine_sphere_data(m, z, conjugate(z), WangMode::Real);
  GramReport rep = gram_from_tangents(m, fuchsian_real_basis(f, quadratic, cubic), 2 * quadratic.fields.size());
  if (rep.n_zero > 0)
    throw DegenerateGram(std::to_string(rep.n_zero) + " eigenvalues below " + std::to_string(rep.gap_threshold) +
                         "; the mesh is too coarse");
  return rep;
}

PairingCheck compatibility_residual(const std::vector<RealTangent>& ts, const Mesh& m) {
  const auto c = combine(ts);
  PairingCheck out;
  double worst = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = i; j < c.size(); ++j) {
      out.scale = std::max(out.scale, std::abs(pair_omega(c[i].plain, c[j].rotated, m)));
      if (j == i) continue;
      const cplx a = pair_omega(c[i].rotated, c[j].rotated, m), b = pair_omega(c[i].plain, c[j].plain, m);
      worst = std::max(worst, std::abs(a - b));
      ++out.pairs;
    }
  out.residual = out.scale > 0.0 ? worst / out.scale : worst;
  return out;
}

PairingCheck lagrangian_residual(const std::vector<RealTangent>& ts, const Mesh& m) {
  PairingCheck out;
  double worst = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i)
    for (std::size_t j = 0; j < ts.size(); ++j) {
      out.scale = std::max(out.scale, std::abs(pair_omega(ts[i].left, ts[j].right, m)));
      if (j <= i) continue;
      worst = std::max({worst, std::abs(pair_omega(ts[i].left, ts[j].left, m)),
                        std::abs(pair_omega(ts[i].right, ts[j].right, m))});
      ++out.pairs;
    }
  out.residual = out.scale > 0.0 ? worst / out.scale : worst;
  return out;
}

std::vector<RealTangent> cubic_path_tangents(const AffineSphereData& base, const std::vector<DifferentialField>& dirs,
                                             double dt) {
  if (base.mode != WangMode::Complex) throw DimensionMismatch("path tangents need a complex-mode state");
  if (!(dt > 0.0)) throw DimensionMismatch("path tangents need dt > 0");
  const AffineSphereData b = with_derivatives(base);
  WangOptions o;
  o.steps = 1;
  auto shifted = [](const DifferentialField& f, const DifferentialField& d, double s) {
    DifferentialField out = f;
    for (std::size_t v = 0; v < out.values.size(); ++v) out.values[v] += s * d.values[v];
    return out;
  };
  auto connection = [&](const DifferentialField& q1, const DifferentialField& qbar2) {
    return assemble_D(continue_wang(b, q1, qbar2, o));
  };
  std::vector<RealTangent> out;
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    const DifferentialField& a = dirs[k];
    const DifferentialField abar = conjugate(a);
    RealTangent t;
    t.label = "dir" + std::to_string(k);
    t.left = path_tangent(connection(shifted(b.q1, a, -dt), b.qbar2), connection(shifted(b.q1, a, dt), b.qbar2), dt);
    t.right =
        path_tangent(connection(b.q1, shifted(b.qbar2, abar, -dt)), connection(b.q1, shifted(b.qbar2, abar, dt)), dt);
    out.push_back(std::move(t));
  }
  return out;
}

PairingCheck check_lagrangian(const AffineSphereData& base, const std::vector<DifferentialField>& dirs, double dt) {
  return lagrangian_residual(cubic_path_tangents(base, dirs, dt), *base.mesh);
}

PairingCheck check_compatibility(const AffineSphereData& base, const std::vector<DifferentialField>& dirs, double dt) {
  return compatibility_residual(cubic_path_tangents(base, dirs, dt), *base.mesh);
}

PairingCheck involution_discrepancy(const std::vector<RealTangent>& a, const std::vector<RealTangent>& b,
                                    const Mesh& m) {
  if (a.size() != b.size()) throw DimensionMismatch("involution check needs matching tangent lists");
  const auto ca = combine(a), cb = combine(b);
  PairingCheck out;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i; j < a.size(); ++j) {
      const cplx ja = pair_omega(ca[i].plain, ca[j].rotated, m), jb = pair_omega(cb[i].plain, cb[j].rotated, m);
      const cplx pa = pair_omega(ca[i].plain, ca[j].plain, m), pb = pair_omega(cb[i].plain, cb[j].plain, m);
      out.scale = std::max(out.scale, std::abs(ja));
      worst = std::max({worst, std::abs(ja - jb), std::abs(pa - pb)});
      ++out.pairs;
    }
  out.residual = out.scale > 0.0 ? worst / out.scale : worst;
  return out;
}

PairingCheck check_involution(const AffineSphereData& base, const std::vector<DifferentialField>& dirs, double dt) {
  const Mesh& m = *base.mesh;
  const auto minus = solve_wang(m, negated(base.q1), negated(base.qbar2), base.mode, {}, nullptr, base.laplacian,
                                &base.lambda_base, base.pairing_constant);
  std::vector<DifferentialField> flipped;
  for (const auto& d : dirs) flipped.push_back(negated(d));
  return involution_discrepancy(cubic_path_tangents(base, dirs, dt), cubic_path_tangents(minus, flipped, dt), m);
}

std::string format_gram_report(const GramReport& r) {
  std::ostringstream out;
  char buf[256];
  out << "[gram]\n";
  out << "level = " << r.level << "\n";
  std::snprintf(buf, sizeof(buf), "mesh_checksum = %016llx\n", static_cast<unsigned long long>(r.mesh_checksum));
  out << buf;
  out << "labels =";
  for (const auto& l : r.labels) out << " " << l;
  out << "\n";
  for (std::size_t i = 0; i < r.gram.size(); ++i) {
    out << "row " << i << " =";
    for (double x : r.gram[i]) {
      std::snprintf(buf, sizeof(buf), " %.17g", x);
      out << buf;
    }
    out << "\n";
  }
  out << "eigenvalues =";
  for (double e : r.eigenvalues) {
    std::snprintf(buf, sizeof(buf), " %.17g", e);
    out << buf;
  }
  out << "\n";
  std::snprintf(buf, sizeof(buf), "n_plus = %d\nn_minus = %d\nn_zero = %d\n", r.n_plus, r.n_minus, r.n_zero);
  out << buf;
  std::snprintf(buf, sizeof(buf),
                "gap_threshold = %.6e\nmin_abs_eigenvalue = %.6e\nsymmetry_residual = %.6e\n"
                "imaginary_residual = %.6e\nblock_residual = %.6e\ncompatibility_residual = %.6e\n"
                "lagrangian_residual = %.6e\n",
                r.gap_threshold, r.min_abs_eigenvalue, r.symmetry_residual, r.imaginary_residual, r.block_residual,
                r.compatibility_residual, r.lagrangian_residual);
  out << buf;
  const bool sig = r.n_plus == 6 && r.n_minus == 10 && r.n_zero == 0;
  std::snprintf(buf, sizeof(buf), "verdict signature = (%d, %d) expected (6, 10) %s\n", r.n_plus, r.n_minus,
                sig ? "pass" : "fail");
  out << buf;
  std::snprintf(buf, sizeof(buf), "verdict compatibility = %.3e threshold 1e-09 %s\n", r.compatibility_residual,
                r.compatibility_residual <= 1e-9 ? "pass" : "fail");
  out << buf;
  std::snprintf(buf, sizeof(buf), "verdict lagrangian = %.3e threshold 1e-09 %s\n", r.lagrangian_residual,
                r.lagrangian_residual <= 1e-9 ? "pass" : "fail");
  out << buf;
  return out.str();
}

}  // namespace hitchin
