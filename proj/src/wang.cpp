#include "hitchin/wang.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "hitchin/errors.hpp"

namespace hitchin {

namespace {

std::size_t rep(const Mesh& m, std::size_t d) { return static_cast<std::size_t>(m.copies[d][0]); }

// (1 - t) a + t b.
DifferentialField blend(const DifferentialField& a, const DifferentialField& b, double t) {
  DifferentialField out = b;
  for (std::size_t v = 0; v < out.values.size(); ++v) out.values[v] = (1.0 - t) * a.values[v] + t * b.values[v];
  return out;
}

void check_inputs(const Mesh& m, const DifferentialField& q1, const DifferentialField& qbar2, WangMode mode) {
  if (q1.weight != 3 || qbar2.weight != 3 || q1.chirality != Chirality::Holomorphic ||
      qbar2.chirality != Chirality::Antiholomorphic)
    throw DimensionMismatch("Wang data must be a (dz^3, dzbar^3) pair");
  if (q1.values.size() != m.num_vertices() || qbar2.values.size() != m.num_vertices())
    throw DimensionMismatch("Wang data does not match the mesh");
  for (const auto* f : {&q1, &qbar2}) {
    const double r = cocycle_residual(m, *f);
    if (r > 1e-8) throw CocycleViolation("cubic differential violates the cocycle by " + std::to_string(r));
  }
  if (mode == WangMode::Real) {
    const double scale = std::max(norm_inf(q1.values), 1.0);
    for (std::size_t v = 0; v < q1.values.size(); ++v)
      if (std::abs(qbar2.values[v] - std::conj(q1.values[v])) > 1e-14 * scale)
        throw DimensionMismatch("real mode needs Qbar2 = conjugate(Q1)");
  }
}

}  // namespace

CVector AffineSphereData::pairing() const {
  const Mesh& m = *mesh;
  CVector h(m.num_dofs());
  for (std::size_t d = 0; d < h.size(); ++d) {
    const std::size_t v = rep(m, d);
    const cplx l = lambda_base[v];
    h[d] = pairing_constant * q1.values[v] * qbar2.values[v] / (l * l * l);
  }
  return h;
}

CVector AffineSphereData::density_ratio() const {
  const Mesh& m = *mesh;
  CVector r(m.num_dofs());
  for (std::size_t d = 0; d < r.size(); ++d) r[d] = lambda_base[rep(m, d)] / m.lambda0[rep(m, d)];
  return r;
}

AffineSphereData make_affine_sphere_data(const Mesh& m, const DifferentialField& q1, const DifferentialField& qbar2,
                                         WangMode mode, std::shared_ptr<const Laplacian> lap) {
  AffineSphereData s;
  s.mesh = &m;
  s.laplacian = lap ? std::move(lap) : std::make_shared<const Laplacian>(laplacian(m));
  s.lambda_base.assign(m.lambda0.begin(), m.lambda0.end());
  s.q1 = q1;
  s.qbar2 = qbar2;
  s.u.assign(m.num_dofs(), 0.0);
  s.mode = mode;
  return s;
}

CVector residual_G(const AffineSphereData& s) {
  const CVector h = s.pairing(), ratio = s.density_ratio();
  CVector g = s.laplacian->apply(s.u);
  for (std::size_t d = 0; d < g.size(); ++d) {
    const cplx u = s.u[d];
    g[d] = g[d] / ratio[d] - std::exp(2.0 * u) + 0.25 * h[d] * std::exp(-4.0 * u) + 1.0;
  }
  return g;
}

namespace {

CVector multiplier(const AffineSphereData& s) {
  const CVector h = s.pairing();
  CVector c(h.size());
  for (std::size_t d = 0; d < c.size(); ++d) c[d] = 2.0 * std::exp(2.0 * s.u[d]) + std::exp(-4.0 * s.u[d]) * h[d];
  return c;
}

}  // namespace

SparseOperator linearize_L(const AffineSphereData& s) {
  const CVector c = multiplier(s), ratio = s.density_ratio();
  std::vector<Triplet> t = s.laplacian->weak.triplets();
  for (auto& e : t) e.value /= s.laplacian->mass[e.row] * ratio[e.row];
  for (std::size_t d = 0; d < c.size(); ++d) t.push_back({d, d, -c[d]});
  return SparseOperator(c.size(), c.size(), std::move(t));
}

SparseOperator linearize_L_weak(const AffineSphereData& s) {
  const CVector c = multiplier(s), ratio = s.density_ratio();
  std::vector<Triplet> t = s.laplacian->weak.triplets();
  for (std::size_t d = 0; d < c.size(); ++d) t.push_back({d, d, -c[d] * ratio[d] * s.laplacian->mass[d]});
  SparseOperator op(c.size(), c.size(), std::move(t));
  if (s.mode == WangMode::Real) {
    // Drop round-off imaginary parts so the real symmetric path (CG) applies.
    std::vector<Triplet> r = op.triplets();
    for (auto& e : r) e.value = e.value.real();
    op = SparseOperator(c.size(), c.size(), std::move(r));
  }
  return op;
}

namespace {

// Newton at fixed data. Returns false when the residual stops contracting.
bool newton(AffineSphereData& s, double t, const WangOptions& o, WangReport& rep) {
  int stalled = 0;
  double previous = INFINITY;
  for (int it = 0; it <= o.max_newton; ++it) {
    const CVector g = residual_G(s);
    const double r = norm_inf(g);
    rep.history.push_back({t, it, r, 0});
    if (!std::isfinite(r)) return false;
    if (r <= o.tolerance) return true;
    stalled = r >= previous ? stalled + 1 : 0;
    if (stalled >= 3 || it == o.max_newton) return false;
    previous = r;

    const SparseOperator a = linearize_L_weak(s);
    const CVector ratio = s.density_ratio();
    CVector rhs(g.size());
    for (std::size_t d = 0; d < g.size(); ++d) rhs[d] = -g[d] * ratio[d] * s.laplacian->mass[d];
    SolveOptions so;
    so.rel_tol = 1e-10;
    SolveStats stats;
    CVector delta;
    try {
      try {
        so.preconditioner = make_cholesky_preconditioner(a);
      } catch (const SingularOperator&) {
        // Indefinite real part: far from the real locus, fall back to Jacobi.
        so.preconditioner = make_jacobi_preconditioner(a);
      }
      delta = solve_sparse(a, rhs, so, &stats);
    } catch (const NonConvergence& e) {
      throw SingularLinearization(std::string("linearized operator: ") + e.what());
    } catch (const SingularOperator& e) {
      throw SingularLinearization(std::string("linearized operator: ") + e.what());
    }
    rep.history.back().linear_iterations = stats.iterations;
    for (std::size_t d = 0; d < delta.size(); ++d) {
      s.u[d] += delta[d];
      if (s.mode == WangMode::Real) s.u[d] = s.u[d].real();
    }
  }
  return false;
}

// Newton continuation from data (a1, a2), where s is solved, to (b1, b2).
void run_continuation(AffineSphereData& s, const DifferentialField& a1, const DifferentialField& a2,
                      const DifferentialField& b1, const DifferentialField& b2, const WangOptions& o,
                      WangReport* report) {
  WangReport rep;
  rep.mode = s.mode;
  double t = 0.0, dt = 1.0 / o.steps;
  while (t < 1.0) {
    const double next = std::min(1.0, t + dt);
    const CVector saved = s.u;
    s.q1 = blend(a1, b1, next);
    s.qbar2 = blend(a2, b2, next);
    if (newton(s, next, o, rep)) {
      t = next;
      rep.continuation.push_back(t);
      continue;
    }
    s.u = saved;
    if (++rep.halvings > o.max_halvings)
      throw NewtonDivergence("residual failed to contract at t = " + std::to_string(next) + " after " +
                             std::to_string(o.max_halvings) + " step halvings");
    dt *= 0.5;
  }
  rep.final_residual = rep.history.back().residual;
  rep.min_re_u = INFINITY;
  rep.max_re_u = -INFINITY;
  for (const auto& x : s.u) {
    rep.min_re_u = std::min(rep.min_re_u, x.real());
    rep.max_re_u = std::max(rep.max_re_u, x.real());
    rep.max_abs_im_u = std::max(rep.max_abs_im_u, std::abs(x.imag()));
  }
  if (report) *report = rep;
}

}  // namespace

AffineSphereData solve_wang(const Mesh& m, const DifferentialField& q1, const DifferentialField& qbar2, WangMode mode,
                            const WangOptions& o, WangReport* report, std::shared_ptr<const Laplacian> lap,
                            const CVector* lambda_base, double pairing_constant) {
  check_inputs(m, q1, qbar2, mode);
  if (o.steps < 1) throw DimensionMismatch("solve_wang: at least one continuation step");
  AffineSphereData s = make_affine_sphere_data(m, q1, qbar2, mode, std::move(lap));
  s.pairing_constant = pairing_constant;
  if (lambda_base) {
    if (lambda_base->size() != m.num_vertices()) throw DimensionMismatch("lambda_base does not match the mesh");
    if (mode == WangMode::Real)
      for (const auto& l : *lambda_base)
        if (l.imag() != 0.0) throw DimensionMismatch("real mode needs a real metric density");
    s.lambda_base = *lambda_base;
  }
  const DifferentialField z1{3, Chirality::Holomorphic, CVector(m.num_vertices(), 0.0)};
  const DifferentialField z2{3, Chirality::Antiholomorphic, CVector(m.num_vertices(), 0.0)};
  run_continuation(s, z1, z2, q1, qbar2, o, report);
  return s;
}

AffineSphereData continue_wang(const AffineSphereData& start, const DifferentialField& q1,
                               const DifferentialField& qbar2, const WangOptions& o, WangReport* report) {
  if (!start.mesh) throw DimensionMismatch("continue_wang: start state has no mesh");
  check_inputs(*start.mesh, q1, qbar2, start.mode);
  if (o.steps < 1) throw DimensionMismatch("continue_wang: at least one continuation step");
  AffineSphereData s = start;
  run_continuation(s, start.q1, start.qbar2, q1, qbar2, o, report);
  return s;
}

std::string format_report(const WangReport& r) {
  std::ostringstream out;
  char buf[160];
  out << "[wang]\n";
  out << "mode = " << (r.mode == WangMode::Real ? "real" : "complex") << "\n";
  std::snprintf(buf, sizeof(buf), "final_residual = %.6e\nmin_re_u = %.12e\nmax_re_u = %.12e\nmax_abs_im_u = %.3e\n",
                r.final_residual, r.min_re_u, r.max_re_u, r.max_abs_im_u);
  out << buf;
  out << "halvings = " << r.halvings << "\n";
  out << "continuation =";
  for (double t : r.continuation) {
    std::snprintf(buf, sizeof(buf), " %.6g", t);
    out << buf;
  }
  out << "\n";
  for (const auto& h : r.history) {
    std::snprintf(buf, sizeof(buf), "newton t=%.6g iter=%d residual=%.6e linear_iterations=%zu\n", h.t, h.iteration,
                  h.residual, h.linear_iterations);
    out << buf;
  }
  return out.str();
}

}  // namespace hitchin
