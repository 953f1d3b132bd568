#include "hitchin/connections.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "hitchin/errors.hpp"

namespace hitchin {

namespace {

const double kSqrt2 = std::numbers::sqrt2;

// d_z log lambda0 and d_zbar log lambda0 for lambda0 = 4 / (1 - |z|^2)^2.
cplx dlog_lambda0(cplx z) { return 2.0 * std::conj(z) / (1.0 - std::norm(z)); }
cplx dbarlog_lambda0(cplx z) { return 2.0 * z / (1.0 - std::norm(z)); }
double lambda0_at(cplx z) { return 4.0 / std::pow(1.0 - std::norm(z), 2); }

// Per-vertex first derivatives of u and of log(lambda_base / lambda0).
struct MetricDerivatives {
  CVector du, dbu, dl, dbl;
};

MetricDerivatives metric_derivatives(const AffineSphereData& s) {
  const Mesh& m = *s.mesh;
  std::shared_ptr<const DerivativeOperators> ops = s.derivatives;
  if (!ops) ops = std::make_shared<const DerivativeOperators>(derivative_operators(m));
  CVector logratio = s.density_ratio();
  bool trivial = true;
  for (auto& x : logratio) {
    if (x != cplx(1.0)) trivial = false;
    x = std::log(x);
  }
  MetricDerivatives d;
  d.du = ops->dz.apply(s.u);
  d.dbu = ops->dzbar.apply(s.u);
  if (trivial) {
    d.dl.assign(m.num_vertices(), 0.0);
    d.dbl.assign(m.num_vertices(), 0.0);
  } else {
    d.dl = ops->dz.apply(logratio);
    d.dbl = ops->dzbar.apply(logratio);
  }
  return d;
}

// Local data at one vertex.
struct PointData {
  cplx lambda, lambda_base, alpha, betabar, u;
  cplx p;       // d_z log lambda
  cplx pbar;    // d_zbar log lambda
  cplx p_base;  // d_z log lambda_base
  cplx dbu;     // d_zbar u
};

PointData point_data(const AffineSphereData& s, const MetricDerivatives& d, std::size_t v) {
  const Mesh& m = *s.mesh;
  PointData q;
  q.u = s.u[static_cast<std::size_t>(m.dof[v])];
  q.lambda_base = s.lambda_base[v];
  q.lambda = std::exp(2.0 * q.u) * q.lambda_base;
  q.alpha = s.q1.values[v];
  q.betabar = s.qbar2.values[v];
  q.p_base = d.dl[v] + dlog_lambda0(m.z[v]);
  q.p = 2.0 * d.du[v] + q.p_base;
  q.pbar = 2.0 * d.dbu[v] + d.dbl[v] + dbarlog_lambda0(m.z[v]);
  q.dbu = d.dbu[v];
  return q;
}

void fill(const PointData& q, Model model, Mat3& az, Mat3& azb) {
  az.setZero();
  azb.setZero();
  switch (model) {
    case Model::Standard:
      az(0, 0) = -q.p;
      az(0, 2) = q.alpha / kSqrt2;
      az(1, 0) = 1.0;
      az(2, 1) = 1.0;
      az(2, 2) = q.p;
      azb(0, 1) = q.lambda / 2.0;
      azb(1, 2) = q.lambda / 2.0;
      azb(2, 0) = 2.0 * kSqrt2 * q.betabar / (q.lambda * q.lambda);
      break;
    case Model::Dual:
      azb(0, 0) = -q.pbar;
      azb(0, 2) = q.betabar / kSqrt2;
      azb(1, 0) = 1.0;
      azb(2, 1) = 1.0;
      azb(2, 2) = q.pbar;
      az(0, 1) = q.lambda / 2.0;
      az(1, 2) = q.lambda / 2.0;
      az(2, 0) = 2.0 * kSqrt2 * q.alpha / (q.lambda * q.lambda);
      break;
    case Model::Fixed: {
      const cplx e2 = std::exp(2.0 * q.u);
      az(0, 0) = -q.p_base;
      az(0, 2) = q.alpha * std::exp(-4.0 * q.u) / kSqrt2;
      az(1, 0) = e2;
      az(2, 1) = e2;
      az(2, 2) = q.p_base;
      azb(0, 0) = 2.0 * q.dbu;
      azb(2, 2) = -2.0 * q.dbu;
      azb(0, 1) = q.lambda_base / 2.0;
      azb(1, 2) = q.lambda_base / 2.0;
      azb(2, 0) = 2.0 * kSqrt2 * q.betabar / (q.lambda_base * q.lambda_base);
      break;
    }
  }
}

// A = W .* F + B entrywise, with W and B analytic in z and phi = 2u, and F
// smooth across the surface; F is what gets interpolated along edges.
struct Background {
  Mat3 wz, bz, wzb, bzb;
};

Background background(Model model, cplx z, cplx phi) {
  const double l = lambda0_at(z);
  const cplx dl = dlog_lambda0(z), dbl = dbarlog_lambda0(z);
  const cplx e = std::exp(phi), e2 = std::exp(-2.0 * phi);
  Background g{Mat3::Ones(), Mat3::Zero(), Mat3::Ones(), Mat3::Zero()};
  // Cubic differentials grow like lambda0^{3/2} towards the boundary of the
  // disk; their hyperbolic size is what varies slowly.
  Mat3& w = model == Model::Dual ? g.wz : g.wzb;
  Mat3& v = model == Model::Dual ? g.wzb : g.wz;
  w(0, 1) = w(1, 2) = l;
  w(2, 0) = 1.0 / std::sqrt(l);
  v(0, 2) = l * std::sqrt(l);
  // Powers of e^phi, phi = 2u, as they enter each model.
  if (model == Model::Fixed) {
    v(1, 0) = v(2, 1) = e;
    v(0, 2) *= e2;
  } else {
    w(0, 1) *= e;
    w(1, 2) *= e;
    w(2, 0) *= e2;
  }
  if (model == Model::Dual) {
    g.bzb(0, 0) = -dbl;
    g.bzb(2, 2) = dbl;
  } else {
    g.bz(0, 0) = -dl;
    g.bz(2, 2) = dl;
  }
  return g;
}

// Component of A in the chart w = h(z) at a point z, for A given in the z
// chart: T A T^-1 - dT T^-1 divided by the derivative of the coordinate.
Mat3 transport_component(Frame frame, bool zbar_part, const Mat3& a, const Mobius& h, cplx z) {
  const cplx den = h.c * z + h.d;
  cplx hp = h.derivative(z), k = -2.0 * h.c / den;  // k = h'' / h'
  const bool antiholomorphic = frame == Frame::Antiholomorphic;
  if (antiholomorphic) k = std::conj(k);
  const Mat3 t = frame_transition(frame, hp);
  Mat3 out = t * a * t.inverse();
  if (zbar_part == antiholomorphic) {
    out(0, 0) += k;
    out(2, 2) -= k;
  }
  return out / (zbar_part ? std::conj(hp) : hp);
}

Mat3 smooth_factor(const Mat3& a, const Mat3& w, const Mat3& b) { return (a - b).cwiseQuotient(w); }

Frame frame_of(Model model) { return model == Model::Dual ? Frame::Antiholomorphic : Frame::Holomorphic; }

Mat3 expm(const Mat3& x) { return x.exp(); }

double max_entry(const Mat3& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace

Mat3 frame_transition(Frame frame, cplx g) {
  if (frame == Frame::Antiholomorphic) g = std::conj(g);
  Mat3 t = Mat3::Zero();
  t(0, 0) = 1.0 / g;
  t(1, 1) = 1.0;
  t(2, 2) = g;
  return t;
}

DiscreteConnection assemble_D(const AffineSphereData& s, Model model, double solved_tolerance) {
  if (!s.mesh) throw DimensionMismatch("assemble_D: state has no mesh");
  if (solved_tolerance >= 0.0) {
    const double g = norm_inf(residual_G(s));
    if (!(g <= solved_tolerance))
      throw UnsolvedState("max |G| = " + std::to_string(g) + " exceeds " + std::to_string(solved_tolerance));
  }
  const Mesh& m = *s.mesh;
  const MetricDerivatives d = metric_derivatives(s);
  DiscreteConnection c;
  c.mesh = &m;
  c.frame = frame_of(model);
  c.model = model;
  c.a_z.resize(m.num_vertices());
  c.a_zbar.resize(m.num_vertices());
  for (std::size_t v = 0; v < m.num_vertices(); ++v) fill(point_data(s, d, v), model, c.a_z[v], c.a_zbar[v]);
  c.slopes.resize(m.num_vertices());
  c.potential.resize(m.num_vertices());
  c.potential_weight = model == Model::Fixed ? 0.5 : -0.5;
  std::vector<cplx> pos, pz, pzb;
  std::vector<Mat3> fz, fzb;
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    const auto patch = build_patch(m, static_cast<int>(v), 2);
    pos.clear();
    fz.clear();
    fzb.clear();
    pz.clear();
    pzb.clear();
    for (const auto& e : patch) {
      const auto w = static_cast<std::size_t>(e.vertex);
      const Background g = background(model, e.position, 2.0 * s.u[static_cast<std::size_t>(m.dof[w])]);
      pos.push_back(e.position);
      const cplx hp = e.to_center.derivative(m.z[w]);
      pz.push_back(2.0 * d.du[w] / hp);
      pzb.push_back(2.0 * d.dbu[w] / std::conj(hp));
      fz.push_back(smooth_factor(transport_component(c.frame, false, c.a_z[w], e.to_center, m.z[w]), g.wz, g.bz));
      fzb.push_back(smooth_factor(transport_component(c.frame, true, c.a_zbar[w], e.to_center, m.z[w]), g.wzb, g.bzb));
    }
    const auto st = fit_stencil(pos, m.z[v], 2);
    auto& sl = c.slopes[v];
    for (auto& x : sl) x.setZero();
    auto& pot = c.potential[v];
    pot = {2.0 * s.u[static_cast<std::size_t>(m.dof[v])], 2.0 * d.du[v], 2.0 * d.dbu[v], 0.0, 0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < patch.size(); ++i) {
      sl[0] += st.dz[i] * fz[i];
      sl[1] += st.dzbar[i] * fz[i];
      sl[2] += st.dz[i] * fzb[i];
      sl[3] += st.dzbar[i] * fzb[i];
      pot[3] += st.dz[i] * pz[i];
      pot[4] += st.dzbar[i] * pz[i];
      pot[5] += st.dz[i] * pzb[i];
      pot[6] += st.dzbar[i] * pzb[i];
    }
  }
  return c;
}

DiscreteConnection zero_connection(const Mesh& m, Frame frame) {
  DiscreteConnection c;
  c.mesh = &m;
  c.frame = frame;
  c.a_z.assign(m.num_vertices(), Mat3::Zero());
  c.a_zbar.assign(m.num_vertices(), Mat3::Zero());
  return c;
}

double max_trace(const DiscreteConnection& d) {
  double worst = 0.0;
  for (std::size_t v = 0; v < d.a_z.size(); ++v)
    worst = std::max(worst, std::abs(d.a_z[v].trace()) + std::abs(d.a_zbar[v].trace()));
  return worst;
}

double gauge_defect(const AffineSphereData& s, Model target) {
  if (target == Model::Standard) return 0.0;
  const Mesh& m = *s.mesh;
  const MetricDerivatives d = metric_derivatives(s);
  // Gauge matrix at a chart point near vertex v, with u and the density ratio
  // continued to first order from the vertex.
  auto gauge = [&](std::size_t v, cplx z) -> Mat3 {
    const cplx dz = z - m.z[v];
    const cplx u = s.u[static_cast<std::size_t>(m.dof[v])] + d.du[v] * dz + d.dbu[v] * std::conj(dz);
    const cplx ratio = (s.lambda_base[v] / m.lambda0[v]) * std::exp(d.dl[v] * dz + d.dbl[v] * std::conj(dz));
    const cplx lambda_base = ratio * lambda0_at(z);
    const cplx lambda = std::exp(2.0 * u) * lambda_base;
    Mat3 g = Mat3::Zero();
    if (target == Model::Dual) {
      g(0, 2) = lambda / 2.0;
      g(1, 1) = 1.0;
      g(2, 0) = 2.0 / lambda;
    } else {
      // Standard -> Dual -> Fixed composes to diag(lambda_base / lambda, 1, lambda / lambda_base).
      g(0, 0) = lambda_base / lambda;
      g(1, 1) = 1.0;
      g(2, 2) = lambda / lambda_base;
    }
    return g;
  };
  // Fourth order central differences.
  const double h = 1e-4;
  auto diff = [&](std::size_t v, cplx z, cplx step) -> Mat3 {
    return (8.0 * (gauge(v, z + step) - gauge(v, z - step)) - (gauge(v, z + 2.0 * step) - gauge(v, z - 2.0 * step))) /
           (12.0 * h);
  };
  double worst = 0.0, scale = 0.0;
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    const cplx z = m.z[v];
    const Mat3 gx = diff(v, z, h), gy = diff(v, z, cplx(0, h));
    const Mat3 dgz = 0.5 * (gx - cplx(0, 1) * gy), dgzb = 0.5 * (gx + cplx(0, 1) * gy);
    const Mat3 g = gauge(v, z), gi = g.inverse();
    const PointData q = point_data(s, d, v);
    Mat3 az, azb, tz, tzb;
    fill(q, Model::Standard, az, azb);
    fill(q, target, tz, tzb);
    const Mat3 ez = g * az * gi - dgz * gi - tz;
    const Mat3 ezb = g * azb * gi - dgzb * gi - tzb;
    worst = std::max({worst, max_entry(ez), max_entry(ezb)});
    scale = std::max({scale, max_entry(tz), max_entry(tzb)});
  }
  return worst / scale;
}

Mat3 edge_transport(const DiscreteConnection& c, int a, int b) {
  const auto ia = static_cast<std::size_t>(a), ib = static_cast<std::size_t>(b);
  const cplx za = c.mesh->z[ia], zb = c.mesh->z[ib];
  const cplx dz = zb - za, dzb = std::conj(dz);
  // Cubic Hermite data of phi = 2u along the edge.
  cplx phi_a = 0.0, phi_b = 0.0, phi_m = 0.0, dphi_hermite = 0.0, dphi_exact = 0.0;
  if (!c.potential.empty()) {
    const auto& pa = c.potential[ia];
    const auto& pb = c.potential[ib];
    auto slope = [&](const std::array<cplx, 7>& p) { return p[1] * dz + p[2] * dzb; };
    auto curve = [&](const std::array<cplx, 7>& p) {
      return (p[3] * dz + p[4] * dzb) * dz + (p[5] * dz + p[6] * dzb) * dzb;
    };
    const cplx sa = slope(pa), sb = slope(pb);
    phi_a = pa[0];
    phi_b = pb[0];
    phi_m = 0.5 * (phi_a + phi_b) + (sa - sb) / 8.0;
    dphi_hermite = 0.5 * (sa + sb) + (curve(pa) - curve(pb)) / 8.0;
    dphi_exact = 1.5 * (phi_b - phi_a) - 0.25 * (sa + sb);
  }
  Mat3 mz, mzb;
  if (c.model) {
    const Background ga = background(*c.model, za, phi_a), gb = background(*c.model, zb, phi_b),
                     gm = background(*c.model, 0.5 * (za + zb), phi_m);
    Mat3 fz = 0.5 * (smooth_factor(c.a_z[ia], ga.wz, ga.bz) + smooth_factor(c.a_z[ib], gb.wz, gb.bz));
    Mat3 fzb = 0.5 * (smooth_factor(c.a_zbar[ia], ga.wzb, ga.bzb) + smooth_factor(c.a_zbar[ib], gb.wzb, gb.bzb));
    if (!c.slopes.empty()) {
      const auto& sa = c.slopes[ia];
      const auto& sb = c.slopes[ib];
      fz += (dz * (sa[0] - sb[0]) + dzb * (sa[1] - sb[1])) / 8.0;
      fzb += (dz * (sa[2] - sb[2]) + dzb * (sa[3] - sb[3])) / 8.0;
    }
    mz = fz.cwiseProduct(gm.wz) + gm.bz;
    mzb = fzb.cwiseProduct(gm.wzb) + gm.bzb;
  } else {
    mz = 0.5 * (c.a_z[ia] + c.a_z[ib]);
    mzb = 0.5 * (c.a_zbar[ia] + c.a_zbar[ib]);
  }
  const Mat3 xa = c.a_z[ia] * dz + c.a_zbar[ia] * dzb;
  const Mat3 xb = c.a_z[ib] * dz + c.a_zbar[ib] * dzb;
  Mat3 xm = mz * dz + mzb * dzb;
  // Swap the Hermite midpoint of dphi(edge) in the diagonal for the
  // derivative of the Hermite interpolant of phi, which Simpson's rule
  // integrates exactly.
  const cplx fix = c.potential_weight * (dphi_exact - dphi_hermite);
  xm(0, 0) += fix;
  xm(2, 2) -= fix;
  return expm(-(xa + 4.0 * xm + xb) / 6.0 - (xa * xb - xb * xa) / 12.0);
}

RVector curvature_residual(const DiscreteConnection& c) {
  const Mesh& m = *c.mesh;
  RVector out(m.triangles.size());
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& tri = m.triangles[t];
    const Mat3 h = edge_transport(c, tri[2], tri[0]) * edge_transport(c, tri[1], tri[2]) * edge_transport(c, tri[0], tri[1]);
    const cplx e1 = m.z[static_cast<std::size_t>(tri[1])] - m.z[static_cast<std::size_t>(tri[0])];
    const cplx e2 = m.z[static_cast<std::size_t>(tri[2])] - m.z[static_cast<std::size_t>(tri[0])];
    const double area = 0.5 * std::abs((std::conj(e1) * e2).imag());
    const Eigen::JacobiSVD<Mat3> svd(h - Mat3::Identity());
    out[t] = svd.singularValues()(0) / area;
  }
  return out;
}

namespace {

// Shortest chart-edge path from `from` to `to` that only touches side
// vertices at its end points.
std::vector<int> shortest_path(const Mesh& m, int from, int to) {
  const std::size_t n = m.num_vertices();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<int> prev(n, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[static_cast<std::size_t>(from)] = 0.0;
  pq.push({0.0, from});
  while (!pq.empty()) {
    const auto [dv, v] = pq.top();
    pq.pop();
    const auto iv = static_cast<std::size_t>(v);
    if (dv > dist[iv]) continue;
    if (v == to) break;
    if (v != from && m.on_boundary[iv]) continue;
    for (int w : m.neighbors[iv]) {
      const auto iw = static_cast<std::size_t>(w);
      const double nd = dv + std::abs(m.z[iw] - m.z[iv]);
      if (nd < dist[iw]) {
        dist[iw] = nd;
        prev[iw] = v;
        pq.push({nd, w});
      }
    }
  }
  if (prev[static_cast<std::size_t>(to)] < 0 && to != from)
    throw PathNotFound("no chart path from vertex " + std::to_string(from) + " to vertex " + std::to_string(to));
  std::vector<int> path;
  for (int v = to; v >= 0; v = prev[static_cast<std::size_t>(v)]) path.push_back(v);
  return {path.rbegin(), path.rend()};
}

int nearest_vertex(const Mesh& m, cplx z, bool boundary_only) {
  int best = -1;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    if (boundary_only && !m.on_boundary[v]) continue;
    const double dd = std::abs(m.z[v] - z);
    if (dd < bd) {
      bd = dd;
      best = static_cast<int>(v);
    }
  }
  return best;
}

Mat3 path_transport(const DiscreteConnection& c, const std::vector<int>& path) {
  Mat3 p = Mat3::Identity();
  for (std::size_t i = 0; i + 1 < path.size(); ++i) p = edge_transport(c, path[i], path[i + 1]) * p;
  return p;
}

}  // namespace

GeneratorPaths generator_paths(const Mesh& m, int base) {
  GeneratorPaths g;
  if (base < 0) base = nearest_vertex(m, 0.0, false);
  if (base < 0 || static_cast<std::size_t>(base) >= m.num_vertices() || m.on_boundary[static_cast<std::size_t>(base)])
    throw PathNotFound("base vertex must be an interior chart vertex");
  g.base = base;
  for (int j = 0; j < 4; ++j) {
    // Side j is centred on the ray at angle j pi / 4; g_j = side_maps[2j]
    // carries side j + 4 onto it.
    const Mobius& gj = m.side_maps[static_cast<std::size_t>(2 * j)];
    const cplx dir = std::polar(1.0, j * std::numbers::pi / 4.0);
    int exit = -1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < m.num_vertices(); ++v) {
      if (!m.on_boundary[v]) continue;
      const double off = std::abs(std::arg(m.z[v] / dir));
      if (off < best) {
        best = off;
        exit = static_cast<int>(v);
      }
    }
    const cplx partner = gj.inverse()(m.z[static_cast<std::size_t>(exit)]);
    const int entry = nearest_vertex(m, partner, true);
    if (std::abs(m.z[static_cast<std::size_t>(entry)] - partner) > 1e-9)
      throw PathNotFound("side " + std::to_string(j) + " midpoint has no identified partner vertex");
    g.outbound[static_cast<std::size_t>(j)] = shortest_path(m, base, exit);
    g.inbound[static_cast<std::size_t>(j)] = shortest_path(m, entry, base);
  }
  return g;
}

Mat3 side_holonomy(const DiscreteConnection& c, const GeneratorPaths& paths, int j) {
  if (j < 0 || j > 3) throw PathNotFound("side pairing index must be 0..3");
  const auto& out = paths.outbound[static_cast<std::size_t>(j)];
  const auto& in = paths.inbound[static_cast<std::size_t>(j)];
  const Mobius& gj = c.mesh->side_maps[static_cast<std::size_t>(2 * j)];
  // The exit vertex is g_j(entry); components in the chart at the entry
  // vertex are T^-1 times those at the exit vertex.
  const Mat3 jump = frame_transition(c.frame, gj.derivative(c.mesh->z[static_cast<std::size_t>(in.front())])).inverse();
  const Mat3 loop = path_transport(c, in) * jump * path_transport(c, out);
  // Transport along the loop realizes rho(g_j)^-1 for the homomorphism
  // convention used by holonomy().
  return loop.inverse();
}

namespace {

// Letters of the standard generators as side pairing sequences (+j for g_j,
// -(j+1) for g_j^-1), in product order.
std::vector<int> expand_letter(char letter) {
  switch (letter) {
    case 'a': return {0};
    case 'b': return {3};
    case 'c': return {2, -2};
    case 'd': return {0, 3, -2};
    default: break;
  }
  if (letter >= 'A' && letter <= 'D') {
    std::vector<int> f = expand_letter(static_cast<char>(letter - 'A' + 'a'));
    std::vector<int> inv;
    for (auto it = f.rbegin(); it != f.rend(); ++it) inv.push_back(*it >= 0 ? -(*it + 1) : -*it - 1);
    return inv;
  }
  throw PathNotFound(std::string("unknown generator letter '") + letter + "'");
}

}  // namespace

HolonomyMatrix holonomy(const DiscreteConnection& c, const GeneratorPaths& paths, const std::string& word) {
  std::array<Mat3, 4> g, gi;
  for (int j = 0; j < 4; ++j) {
    g[static_cast<std::size_t>(j)] = side_holonomy(c, paths, j);
    gi[static_cast<std::size_t>(j)] = g[static_cast<std::size_t>(j)].inverse();
  }
  Mat3 h = Mat3::Identity();
  for (char ch : word)
    for (int k : expand_letter(ch)) h = h * (k >= 0 ? g[static_cast<std::size_t>(k)] : gi[static_cast<std::size_t>(-k - 1)]);
  return {h, word, paths.base};
}

Eigen::Matrix3d irr_embed(const SL2R& m) {
  const double a = m[0], b = m[1], c = m[2], d = m[3];
  Eigen::Matrix3d r;
  r << a * a, a * b, b * b, 2 * a * c, a * d + b * c, 2 * b * d, c * c, c * d, d * d;
  return r;
}

SL2R standard_generator_matrix(const FuchsianDomain& dom, char letter) {
  auto mul = [](const SL2R& x, const SL2R& y) -> SL2R {
    return {x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3], x[2] * y[0] + x[3] * y[2], x[2] * y[1] + x[3] * y[3]};
  };
  auto inv = [](const SL2R& x) -> SL2R { return {x[3], -x[1], -x[2], x[0]}; };
  SL2R r{1, 0, 0, 1};
  for (int k : expand_letter(letter))
    r = mul(r, k >= 0 ? dom.generators[static_cast<std::size_t>(k)] : inv(dom.generators[static_cast<std::size_t>(-k - 1)]));
  return r;
}

TangentRep zero_tangent(const Mesh& m) {
  return {&m, std::vector<Mat3>(m.num_vertices(), Mat3::Zero()), std::vector<Mat3>(m.num_vertices(), Mat3::Zero())};
}

TangentRep operator+(const TangentRep& a, const TangentRep& b) {
  if (a.mesh != b.mesh) throw MeshMismatch("tangents live on different meshes");
  TangentRep out = a;
  for (std::size_t v = 0; v < out.p.size(); ++v) {
    out.p[v] += b.p[v];
    out.r[v] += b.r[v];
  }
  return out;
}

TangentRep operator*(cplx s, const TangentRep& a) {
  TangentRep out = a;
  for (std::size_t v = 0; v < out.p.size(); ++v) {
    out.p[v] *= s;
    out.r[v] *= s;
  }
  return out;
}

TangentRep fuchsian_tangent(const AffineSphereData& s, Direction dir, const DifferentialField& f) {
  const Mesh& m = *s.mesh;
  if (norm_inf(s.u) != 0.0 || norm_inf(s.q1.values) != 0.0 || norm_inf(s.qbar2.values) != 0.0)
    throw UnsolvedState("closed-form tangents need the Fuchsian point");
  for (std::size_t v = 0; v < m.num_vertices(); ++v)
    if (s.lambda_base[v] != m.lambda0[v]) throw UnsolvedState("closed-form tangents need lambda_base = lambda0");
  const int weight = (dir == Direction::Quadratic || dir == Direction::BarQuadratic) ? 2 : 3;
  const Chirality chir =
      (dir == Direction::Quadratic || dir == Direction::Cubic) ? Chirality::Holomorphic : Chirality::Antiholomorphic;
  if (f.weight != weight || f.chirality != chir || f.values.size() != m.num_vertices())
    throw DimensionMismatch("field does not match the tangent direction");

  TangentRep t = zero_tangent(m);
  CVector udot(m.num_dofs(), 0.0);
  if (weight == 3) {
    // d/dt G along (t Q1dot, 0) or (0, t Q2dot) is (1/4) dh/dt e^{-4u}, and
    // dh/dt pairs the direction with the opposite (zero) cubic differential.
    CVector rhs(m.num_dofs());
    for (std::size_t d = 0; d < rhs.size(); ++d) {
      const auto v = static_cast<std::size_t>(m.copies[d][0]);
      const cplx l = s.lambda_base[v];
      const cplx dh = dir == Direction::Cubic ? f.values[v] * s.qbar2.values[v] : s.q1.values[v] * f.values[v];
      rhs[d] = -0.25 * s.pairing_constant * dh / (l * l * l) * std::exp(-4.0 * s.u[d]);
    }
    udot = solve_sparse(linearize_L(s), rhs);
  }
  const DerivativeOperators ops = s.derivatives ? *s.derivatives : derivative_operators(m);
  const CVector du = weight == 3 ? ops.dz.apply(udot) : CVector(m.num_vertices(), 0.0);
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    const cplx x = f.values[v];
    const double l0 = m.lambda0[v];
    Mat3& p = t.p[v];
    Mat3& r = t.r[v];
    switch (dir) {
      case Direction::BarQuadratic:
        r(1, 0) = r(2, 1) = x / l0;
        break;
      case Direction::Quadratic:
        p(0, 1) = p(1, 2) = x / 2.0;
        break;
      case Direction::Cubic:
      case Direction::BarCubic: {
        const cplx ud = udot[static_cast<std::size_t>(m.dof[v])];
        p(0, 0) = -2.0 * du[v];
        p(2, 2) = 2.0 * du[v];
        r(0, 1) = r(1, 2) = ud * l0;
        if (dir == Direction::Cubic)
          p(0, 2) = x / kSqrt2;
        else
          r(2, 0) = 2.0 * kSqrt2 * x / (l0 * l0);
        break;
      }
    }
  }
  return t;
}

TangentRep path_tangent(const DiscreteConnection& minus, const DiscreteConnection& plus, double dt) {
  if (minus.mesh != plus.mesh) throw MeshMismatch("path tangent endpoints live on different meshes");
  if (minus.frame != Frame::Holomorphic || plus.frame != Frame::Holomorphic)
    throw DimensionMismatch("path tangents are taken in the holomorphic frame");
  TangentRep t = zero_tangent(*minus.mesh);
  for (std::size_t v = 0; v < t.p.size(); ++v) {
    t.p[v] = (plus.a_z[v] - minus.a_z[v]) / (2.0 * dt);
    t.r[v] = (plus.a_zbar[v] - minus.a_zbar[v]) / (2.0 * dt);
  }
  return t;
}

cplx wedge_trace(const TangentRep& a, const TangentRep& b, std::size_t v) {
  return (a.p[v] * b.r[v]).trace() - (b.p[v] * a.r[v]).trace();
}

namespace {

// Derivatives at every chart vertex of a matrix field given per chart
// vertex. `form` selects how neighbor values are carried into the center
// chart: 0 for sections of End(E), 1 for dz components, 2 for dzbar ones.
struct MatrixDerivatives {
  std::vector<Mat3> dz, dzbar;
};

MatrixDerivatives matrix_derivatives(const Mesh& m, Frame frame, const std::vector<Mat3>& f, int form) {
  MatrixDerivatives out;
  out.dz.assign(m.num_vertices(), Mat3::Zero());
  out.dzbar.assign(m.num_vertices(), Mat3::Zero());
  std::vector<cplx> pos;
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    const auto patch = build_patch(m, static_cast<int>(v), 2);
    pos.clear();
    for (const auto& e : patch) pos.push_back(e.position);
    const auto st = fit_stencil(pos, m.z[v], 2);
    for (std::size_t i = 0; i < patch.size(); ++i) {
      const auto w = static_cast<std::size_t>(patch[i].vertex);
      Mat3 x = f[w];
      const Mobius& h = patch[i].to_center;
      if (h.b != 0.0 || h.c != 0.0 || h.a != h.d) {
        const cplx hp = h.derivative(m.z[w]);
        const Mat3 t = frame_transition(frame, hp);
        x = t * x * t.inverse();
        if (form == 1) x /= hp;
        if (form == 2) x /= std::conj(hp);
      }
      out.dz[v] += st.dz[i] * x;
      out.dzbar[v] += st.dzbar[i] * x;
    }
  }
  return out;
}

}  // namespace

double closedness_residual(const DiscreteConnection& base, const TangentRep& t) {
  const Mesh& m = *base.mesh;
  if (t.mesh != &m) throw MeshMismatch("tangent and connection live on different meshes");
  const MatrixDerivatives dp = matrix_derivatives(m, base.frame, t.p, 1);
  const MatrixDerivatives dr = matrix_derivatives(m, base.frame, t.r, 2);
  double worst = 0.0, scale = 0.0;
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    const Mat3 az = base.a_z[v], azb = base.a_zbar[v];
    const Mat3 c = dr.dz[v] - dp.dzbar[v] + (az * t.r[v] - t.r[v] * az) - (azb * t.p[v] - t.p[v] * azb);
    worst = std::max(worst, c.norm());
    scale = std::max(scale, t.p[v].norm() + t.r[v].norm());
  }
  return scale > 0.0 ? worst / scale : 0.0;
}

TangentRep covariant_derivative(const DiscreteConnection& base, const std::vector<Mat3>& xi) {
  const Mesh& m = *base.mesh;
  const MatrixDerivatives dx = matrix_derivatives(m, base.frame, xi, 0);
  TangentRep t = zero_tangent(m);
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    t.p[v] = dx.dz[v] + base.a_z[v] * xi[v] - xi[v] * base.a_z[v];
    t.r[v] = dx.dzbar[v] + base.a_zbar[v] * xi[v] - xi[v] * base.a_zbar[v];
  }
  return t;
}

std::string format_holonomy(const std::vector<HolonomyMatrix>& hol, int level) {
  std::ostringstream out;
  char buf[256];
  out << "[holonomy]\n";
  for (const auto& h : hol) {
    const cplx tr = h.matrix.trace();
    const double det = std::abs(h.matrix.determinant() - 1.0);
    std::snprintf(buf, sizeof(buf), "word=%s trace_re=%.12e trace_im=%.12e det_residual=%.3e level=%d base=%d\n",
                  h.word.c_str(), tr.real(), tr.imag(), det, level, h.base);
    out << buf;
  }
  return out.str();
}

}  // namespace hitchin
