#include "hitchin/surface.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <queue>
#include <utility>

#include "hitchin/errors.hpp"

namespace hitchin {

namespace {

constexpr double kPi = std::numbers::pi;

// Disk automorphism sending p to 0.
Mobius to_origin(cplx p) { return Mobius{1.0, -p, -std::conj(p), 1.0}; }

cplx hyperbolic_midpoint(cplx a, cplx b) {
  const Mobius phi = to_origin(a);
  const cplx bb = phi(b);
  const double r = std::abs(bb);
  if (r == 0.0) return a;
  const double half = std::tanh(0.5 * std::atanh(r));
  return phi.inverse()(bb / r * half);
}

Mobius translation(double phi, double length) {
  const double ch = std::cosh(0.5 * length), sh = std::sinh(0.5 * length);
  const cplx e = std::polar(1.0, 0.5 * phi);
  const Mobius R{e, 0.0, 0.0, std::conj(e)};
  const Mobius T{ch, sh, sh, ch};
  return R * T * R.inverse();
}

std::pair<int, int> edge_key(int a, int b) { return a < b ? std::make_pair(a, b) : std::make_pair(b, a); }

}  // namespace

// ---------------------------------------------------------------------------
// Domain

FuchsianDomain build_bolza_domain() {
  FuchsianDomain d;
  // Circumradius R of the regular octagon with angle pi/4: cosh R = cot^2(pi/8).
  const double cot = 1.0 / std::tan(kPi / 8.0);
  const double R = std::acosh(cot * cot);
  d.corner_radius = std::tanh(0.5 * R);
  // Inradius rho: cosh rho = 1 + sqrt 2; opposite sides are 2 rho apart.
  d.translation_length = 2.0 * std::acosh(1.0 + std::sqrt(2.0));
  for (int k = 0; k < 8; ++k) d.corners[static_cast<std::size_t>(k)] = std::polar(d.corner_radius, k * kPi / 4.0 + kPi / 8.0);
  for (int j = 0; j < 4; ++j) {
    const Mobius g = translation(j * kPi / 4.0, d.translation_length);
    d.generators[static_cast<std::size_t>(j)] = real_from_disk(g);
    d.side_maps[static_cast<std::size_t>(2 * j)] = disk_from_real(d.generators[static_cast<std::size_t>(j)]);
    d.side_maps[static_cast<std::size_t>(2 * j + 1)] = d.side_maps[static_cast<std::size_t>(2 * j)].inverse();
  }
  return d;
}

std::array<Mobius, 4> FuchsianDomain::standard_generators() const {
  const Mobius& g0 = side_map(0);
  const Mobius& g1i = side_map(3);
  const Mobius& g2 = side_map(4);
  const Mobius& g3 = side_map(6);
  return {g0, g3, g2 * g1i, g0 * g3 * g1i};
}

Mobius FuchsianDomain::relation_word() const {
  const auto [a, b, c, d] = standard_generators();
  return a * b * a.inverse() * b.inverse() * c * d * c.inverse() * d.inverse();
}

std::array<double, 8> FuchsianDomain::interior_angles() const {
  std::array<double, 8> out{};
  for (int k = 0; k < 8; ++k) {
    const cplx p = corners[static_cast<std::size_t>(k)];
    const Mobius phi = to_origin(p);
    // phi'(p) is real and positive, so directions at p are those of phi(q).
    const cplx prev = phi(corners[static_cast<std::size_t>((k + 7) % 8)]);
    const cplx next = phi(corners[static_cast<std::size_t>((k + 1) % 8)]);
    double ang = std::abs(std::arg(prev / next));
    out[static_cast<std::size_t>(k)] = ang;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mesh construction

CVector Mesh::expand(std::span<const cplx> dof_values) const {
  CVector out(z.size());
  for (std::size_t v = 0; v < z.size(); ++v) out[v] = dof_values[static_cast<std::size_t>(dof[v])];
  return out;
}

RVector Mesh::expand(std::span<const double> dof_values) const {
  RVector out(z.size());
  for (std::size_t v = 0; v < z.size(); ++v) out[v] = dof_values[static_cast<std::size_t>(dof[v])];
  return out;
}

namespace {

void refine(Mesh& m) {
  std::map<std::pair<int, int>, int> boundary_side;
  for (const auto& e : m.boundary) boundary_side[edge_key(e.v0, e.v1)] = e.side;
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    const auto key = edge_key(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const cplx za = m.z[static_cast<std::size_t>(a)], zb = m.z[static_cast<std::size_t>(b)];
    const cplx p = boundary_side.count(key) ? hyperbolic_midpoint(za, zb) : 0.5 * (za + zb);
    m.z.push_back(p);
    const int idx = static_cast<int>(m.z.size()) - 1;
    midpoint.emplace(key, idx);
    return idx;
  };
  std::vector<std::array<int, 3>> tris;
  tris.reserve(4 * m.triangles.size());
  for (const auto& t : m.triangles) {
    const int a = t[0], b = t[1], c = t[2];
    const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
    tris.push_back({a, ab, ca});
    tris.push_back({ab, b, bc});
    tris.push_back({ca, bc, c});
    tris.push_back({ab, bc, ca});
  }
  m.triangles = std::move(tris);
  std::vector<BoundaryEdge> edges;
  edges.reserve(2 * m.boundary.size());
  for (const auto& e : m.boundary) {
    const int mm = midpoint.at(edge_key(e.v0, e.v1));
    edges.push_back({e.v0, mm, e.side, -1, -1});
    edges.push_back({mm, e.v1, e.side, -1, -1});
  }
  m.boundary = std::move(edges);
}

void pair_boundary(Mesh& m, const FuchsianDomain& d) {
  std::vector<std::vector<int>> by_side(8);
  for (std::size_t i = 0; i < m.boundary.size(); ++i) by_side[static_cast<std::size_t>(m.boundary[i].side)].push_back(static_cast<int>(i));
  for (auto& e : m.boundary) {
    const int map = FuchsianDomain::map_from_side(e.side);
    const Mobius& g = d.side_map(map);
    const cplx p0 = g(m.z[static_cast<std::size_t>(e.v0)]);
    const cplx p1 = g(m.z[static_cast<std::size_t>(e.v1)]);
    e.map = map;
    for (int f : by_side[static_cast<std::size_t>((e.side + 4) % 8)]) {
      const auto& fe = m.boundary[static_cast<std::size_t>(f)];
      // Pairings reverse the boundary orientation.
      if (std::abs(p0 - m.z[static_cast<std::size_t>(fe.v1)]) < 1e-9 &&
          std::abs(p1 - m.z[static_cast<std::size_t>(fe.v0)]) < 1e-9) {
        e.partner = f;
        break;
      }
    }
    if (e.partner < 0) throw MeshFormatError("boundary edge on side " + std::to_string(e.side) + " has no partner");
  }
}

}  // namespace

Mesh build_mesh(const FuchsianDomain& domain, int level) {
  if (level < 0) throw MeshFormatError("negative refinement level");
  Mesh m;
  m.level = level;
  m.z.push_back(0.0);
  for (const auto& c : domain.corners) m.z.push_back(c);
  // Corner k is vertex k+1; side j runs from corner j-1 to corner j.
  for (int j = 0; j < 8; ++j) {
    const int a = 1 + (j + 7) % 8, b = 1 + j;
    m.triangles.push_back({0, a, b});
    m.boundary.push_back({a, b, j, -1, -1});
  }
  for (int r = 0; r < kBaseRefinements + level; ++r) refine(m);
  pair_boundary(m, domain);
  finalize_mesh(m, domain);
  const double min_angle = min_chart_angle_degrees(m);
  if (min_angle < 15.0)
    throw MeshQualityFailure("minimum chart angle " + std::to_string(min_angle) + " deg below 15 deg");
  return m;
}

void finalize_mesh(Mesh& m, const FuchsianDomain& d) {
  const std::size_t n = m.z.size();
  m.side_maps = d.side_maps;
  m.corners = d.corners;
  m.lambda0.assign(n, 0.0);
  m.area.assign(n, 0.0);
  m.neighbors.assign(n, {});
  m.on_boundary.assign(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    const double r2 = std::norm(m.z[v]);
    if (!(r2 < 1.0)) throw MeshFormatError("vertex outside the open disk");
    m.lambda0[v] = 4.0 / ((1.0 - r2) * (1.0 - r2));
  }
  for (const auto& t : m.triangles) {
    for (int i : t)
      if (i < 0 || static_cast<std::size_t>(i) >= n) throw MeshFormatError("triangle index out of range");
    const cplx e1 = m.z[static_cast<std::size_t>(t[1])] - m.z[static_cast<std::size_t>(t[0])];
    const cplx e2 = m.z[static_cast<std::size_t>(t[2])] - m.z[static_cast<std::size_t>(t[0])];
    const double a = 0.5 * (std::conj(e1) * e2).imag();
    if (!(a > 0.0)) throw MeshFormatError("triangle with non-positive orientation");
    for (int k = 0; k < 3; ++k) {
      m.area[static_cast<std::size_t>(t[static_cast<std::size_t>(k)])] += a / 3.0;
      const int u = t[static_cast<std::size_t>(k)], w = t[static_cast<std::size_t>((k + 1) % 3)];
      m.neighbors[static_cast<std::size_t>(u)].push_back(w);
      m.neighbors[static_cast<std::size_t>(w)].push_back(u);
    }
  }
  for (auto& nb : m.neighbors) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }

  // Identification graph: z[target] = map(z[source]).
  struct Link {
    int target;
    Mobius map;
  };
  std::vector<std::vector<Link>> links(n);
  for (std::size_t i = 0; i < m.boundary.size(); ++i) {
    const auto& e = m.boundary[i];
    if (e.partner < 0 || static_cast<std::size_t>(e.partner) >= m.boundary.size() || e.map < 0 || e.map >= 8)
      throw MeshFormatError("incomplete identification table");
    const auto& f = m.boundary[static_cast<std::size_t>(e.partner)];
    if (f.partner != static_cast<int>(i)) throw MeshFormatError("identification table is not symmetric");
    m.on_boundary[static_cast<std::size_t>(e.v0)] = m.on_boundary[static_cast<std::size_t>(e.v1)] = 1;
    const Mobius& g = d.side_map(e.map);
    const std::array<std::pair<int, int>, 2> ends{{{e.v0, f.v1}, {e.v1, f.v0}}};
    for (const auto& [src, dst] : ends) {
      if (std::abs(g(m.z[static_cast<std::size_t>(src)]) - m.z[static_cast<std::size_t>(dst)]) > 1e-9)
        throw MeshFormatError("identified endpoints do not match under the side map");
      links[static_cast<std::size_t>(src)].push_back({dst, g});
      links[static_cast<std::size_t>(dst)].push_back({src, g.inverse()});
    }
  }

  m.dof.assign(n, -1);
  m.to_rep.assign(n, Mobius{});
  m.copies.clear();
  for (std::size_t v = 0; v < n; ++v) {
    if (m.dof[v] >= 0) continue;
    const int id = static_cast<int>(m.copies.size());
    m.copies.push_back({static_cast<int>(v)});
    m.dof[v] = id;
    std::queue<int> q;
    q.push(static_cast<int>(v));
    while (!q.empty()) {
      const int s = q.front();
      q.pop();
      for (const auto& l : links[static_cast<std::size_t>(s)]) {
        // to_rep(target) = to_rep(source) o map^{-1}
        const Mobius cand = m.to_rep[static_cast<std::size_t>(s)] * l.map.inverse();
        if (m.dof[static_cast<std::size_t>(l.target)] < 0) {
          m.dof[static_cast<std::size_t>(l.target)] = id;
          m.to_rep[static_cast<std::size_t>(l.target)] = cand;
          m.copies.back().push_back(l.target);
          q.push(l.target);
        } else if ((cand * m.to_rep[static_cast<std::size_t>(l.target)].inverse()).distance_to_pm_identity() > 1e-8) {
          throw MeshFormatError("identification maps are inconsistent around a vertex");
        }
      }
    }
  }
  m.dof_mass.assign(m.copies.size(), 0.0);
  for (std::size_t v = 0; v < n; ++v) m.dof_mass[static_cast<std::size_t>(m.dof[v])] += m.lambda0[v] * m.area[v];
}

double min_chart_angle_degrees(const Mesh& m) {
  double best = 180.0;
  for (const auto& t : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      const cplx p = m.z[static_cast<std::size_t>(t[static_cast<std::size_t>(k)])];
      const cplx a = m.z[static_cast<std::size_t>(t[static_cast<std::size_t>((k + 1) % 3)])] - p;
      const cplx b = m.z[static_cast<std::size_t>(t[static_cast<std::size_t>((k + 2) % 3)])] - p;
      best = std::min(best, std::abs(std::arg(b / a)) * 180.0 / kPi);
    }
  }
  return best;
}

double identification_error(const Mesh& m, const FuchsianDomain& d) {
  double err = 0.0;
  for (const auto& e : m.boundary) {
    const auto& f = m.boundary[static_cast<std::size_t>(e.partner)];
    const Mobius& g = d.side_map(e.map);
    err = std::max(err, std::abs(g(m.z[static_cast<std::size_t>(e.v0)]) - m.z[static_cast<std::size_t>(f.v1)]));
    err = std::max(err, std::abs(g(m.z[static_cast<std::size_t>(e.v1)]) - m.z[static_cast<std::size_t>(f.v0)]));
  }
  return err;
}

// ---------------------------------------------------------------------------
// Laplacian

Laplacian laplacian(const Mesh& m) {
  std::vector<Triplet> t;
  t.reserve(9 * m.triangles.size());
  for (const auto& tri : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      const int i = tri[static_cast<std::size_t>((k + 1) % 3)], j = tri[static_cast<std::size_t>((k + 2) % 3)];
      const cplx p = m.z[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])];
      const cplx a = m.z[static_cast<std::size_t>(i)] - p, b = m.z[static_cast<std::size_t>(j)] - p;
      const double cot = (std::conj(a) * b).real() / (std::conj(a) * b).imag();
      const double w = 0.5 * cot;
      const auto di = static_cast<std::size_t>(m.dof[static_cast<std::size_t>(i)]);
      const auto dj = static_cast<std::size_t>(m.dof[static_cast<std::size_t>(j)]);
      // Weak Laplacian W = -K.
      t.push_back({di, dj, w});
      t.push_back({dj, di, w});
      t.push_back({di, di, -w});
      t.push_back({dj, dj, -w});
    }
  }
  Laplacian lap;
  lap.weak = SparseOperator(m.num_dofs(), m.num_dofs(), std::move(t));
  lap.mass = m.dof_mass;
  return lap;
}

CVector Laplacian::apply(std::span<const cplx> u) const {
  CVector y = weak.apply(u);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] /= mass[i];
  return y;
}

RVector laplacian_low_spectrum(const Laplacian& lap, std::size_t count) {
  const auto n = static_cast<Eigen::Index>(lap.mass.size());
  std::vector<Eigen::Triplet<double>> kt, st;
  for (const auto& e : lap.weak.triplets()) {
    kt.emplace_back(static_cast<int>(e.row), static_cast<int>(e.col), -e.value.real());
    st.emplace_back(static_cast<int>(e.row), static_cast<int>(e.col), -e.value.real());
  }
  for (Eigen::Index i = 0; i < n; ++i) st.emplace_back(static_cast<int>(i), static_cast<int>(i), lap.mass[static_cast<std::size_t>(i)]);
  Eigen::SparseMatrix<double> K(n, n), S(n, n);
  K.setFromTriplets(kt.begin(), kt.end());
  S.setFromTriplets(st.begin(), st.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(S);
  if (solver.info() != Eigen::Success) throw SingularOperator("K + M factorization failed");
  Eigen::VectorXd M(n);
  for (Eigen::Index i = 0; i < n; ++i) M[i] = lap.mass[static_cast<std::size_t>(i)];

  const auto block = static_cast<Eigen::Index>(count + 4);
  Eigen::MatrixXd X(n, block);
  for (Eigen::Index j = 0; j < block; ++j)
    for (Eigen::Index i = 0; i < n; ++i) X(i, j) = std::sin(0.37 * static_cast<double>(i + 1) * static_cast<double>(j + 1)) + 0.1 * static_cast<double>(j == 0);
  Eigen::VectorXd prev = Eigen::VectorXd::Constant(block, -1.0), vals;
  for (int it = 0; it < 500; ++it) {
    Eigen::MatrixXd Y = solver.solve(M.asDiagonal() * X);
    const Eigen::MatrixXd Kr = Y.transpose() * K * Y;
    const Eigen::MatrixXd Mr = Y.transpose() * M.asDiagonal() * Y;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Kr + Kr.transpose()), 0.5 * (Mr + Mr.transpose()));
    X = Y * es.eigenvectors();
    vals = es.eigenvalues();
    if ((vals.head(static_cast<Eigen::Index>(count)) - prev.head(static_cast<Eigen::Index>(count))).cwiseAbs().maxCoeff() <
        1e-11 * std::max(1.0, vals.head(static_cast<Eigen::Index>(count)).cwiseAbs().maxCoeff()))
      break;
    prev = vals;
  }
  RVector out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = vals[static_cast<Eigen::Index>(i)];
  return out;
}

// ---------------------------------------------------------------------------
// Patches and derivatives

std::vector<PatchEntry> build_patch(const Mesh& m, int center, int rings) {
  std::vector<PatchEntry> out;
  std::vector<int> ring_of;
  std::map<int, bool> seen_dof;
  out.push_back({center, Mobius{}, m.z[static_cast<std::size_t>(center)]});
  ring_of.push_back(0);
  seen_dof[m.dof[static_cast<std::size_t>(center)]] = true;
  for (std::size_t head = 0; head < out.size(); ++head) {
    if (ring_of[head] >= rings) continue;
    const int w = out[head].vertex;
    const Mobius H = out[head].to_center;
    for (int c : m.copies[static_cast<std::size_t>(m.dof[static_cast<std::size_t>(w)])]) {
      const Mobius Hc = H * m.copy_map(c, w);
      for (int x : m.neighbors[static_cast<std::size_t>(c)]) {
        const int dx = m.dof[static_cast<std::size_t>(x)];
        if (seen_dof[dx]) continue;
        seen_dof[dx] = true;
        out.push_back({x, Hc, Hc(m.z[static_cast<std::size_t>(x)])});
        ring_of.push_back(ring_of[head] + 1);
      }
    }
  }
  return out;
}

DerivativeStencil fit_stencil(std::span<const cplx> positions, cplx center, int degree) {
  double h = 0.0;
  for (const auto& p : positions) h = std::max(h, std::abs(p - center));
  if (h == 0.0) h = 1.0;
  // Monomials x^a y^b with a + b <= degree; columns 1 and 2 are x and y.
  std::vector<std::pair<int, int>> mono;
  for (int s = 0; s <= degree; ++s)
    for (int a = s; a >= 0; --a) mono.emplace_back(a, s - a);
  const auto rows = static_cast<Eigen::Index>(positions.size());
  const auto cols = static_cast<Eigen::Index>(mono.size());
  if (rows < cols) throw SingularOperator("patch too small for the requested fit degree");
  Eigen::MatrixXd V(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const cplx q = (positions[static_cast<std::size_t>(i)] - center) / h;
    for (Eigen::Index j = 0; j < cols; ++j)
      V(i, j) = std::pow(q.real(), mono[static_cast<std::size_t>(j)].first) * std::pow(q.imag(), mono[static_cast<std::size_t>(j)].second);
  }
  const Eigen::MatrixXd P = V.completeOrthogonalDecomposition().pseudoInverse();
  DerivativeStencil s;
  s.dz.resize(positions.size());
  s.dzbar.resize(positions.size());
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double dx = P(1, i) / h, dy = P(2, i) / h;
    s.dz[static_cast<std::size_t>(i)] = 0.5 * cplx(dx, -dy);
    s.dzbar[static_cast<std::size_t>(i)] = 0.5 * cplx(dx, dy);
  }
  return s;
}

PolynomialFit fit_polynomial(std::span<const cplx> positions, cplx center, int degree) {
  PolynomialFit fit;
  double h = 0.0;
  for (const auto& p : positions) h = std::max(h, std::abs(p - center));
  fit.scale = h > 0.0 ? h : 1.0;
  for (int s = 0; s <= degree; ++s)
    for (int b = 0; b <= s; ++b) fit.monomials.emplace_back(s - b, b);
  const auto rows = static_cast<Eigen::Index>(positions.size());
  const auto cols = static_cast<Eigen::Index>(fit.monomials.size());
  if (rows < cols) throw SingularOperator("patch too small for the requested fit degree");
  Eigen::MatrixXcd V(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const cplx q = (positions[static_cast<std::size_t>(i)] - center) / fit.scale;
    for (Eigen::Index j = 0; j < cols; ++j) {
      const auto [a, b] = fit.monomials[static_cast<std::size_t>(j)];
      V(i, j) = std::pow(q, a) * std::pow(std::conj(q), b);
    }
  }
  const Eigen::MatrixXcd P = V.completeOrthogonalDecomposition().pseudoInverse();
  fit.coefficients.assign(static_cast<std::size_t>(cols), std::vector<cplx>(static_cast<std::size_t>(rows)));
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) fit.coefficients[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = P(j, i);
  return fit;
}

DerivativeOperators derivative_operators(const Mesh& m) {
  std::vector<Triplet> tz, tzb;
  const std::size_t n = m.num_vertices();
  for (std::size_t v = 0; v < n; ++v) {
    const auto patch = build_patch(m, static_cast<int>(v), 2);
    std::vector<cplx> pos;
    pos.reserve(patch.size());
    for (const auto& e : patch) pos.push_back(e.position);
    const auto st = fit_stencil(pos, m.z[v], 2);
    for (std::size_t i = 0; i < patch.size(); ++i) {
      const auto col = static_cast<std::size_t>(m.dof[static_cast<std::size_t>(patch[i].vertex)]);
      tz.push_back({v, col, st.dz[i]});
      tzb.push_back({v, col, st.dzbar[i]});
    }
  }
  return {SparseOperator(n, m.num_dofs(), std::move(tz)), SparseOperator(n, m.num_dofs(), std::move(tzb))};
}

// ---------------------------------------------------------------------------
// Quadrature

cplx integrate(const Mesh& m, std::span<const cplx> f, Measure measure) {
  if (f.size() != m.num_vertices()) throw DimensionMismatch("integrate: expected one value per chart vertex");
  cplx s = 0.0;
  for (std::size_t v = 0; v < f.size(); ++v) {
    const double w = measure == Measure::Hyperbolic ? m.area[v] * m.lambda0[v] : m.area[v];
    s += w * f[v];
  }
  return s;
}

}  // namespace hitchin
