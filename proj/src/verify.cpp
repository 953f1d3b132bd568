#include "hitchin/verify.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "hitchin/errors.hpp"

namespace hitchin {

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& s) {
  double x = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(x))
    throw ConfigParseError(key + ": not a number: '" + s + "'");
  return x;
}

long to_int(const std::string& key, const std::string& s) {
  long x = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ConfigParseError(key + ": not an integer: '" + s + "'");
  return x;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigParseError("line " + std::to_string(number) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key == "level") {
      c.level = static_cast<int>(to_int(key, value));
    } else if (key == "wang_tolerance") {
      c.wang_tolerance = to_double(key, value);
    } else if (key == "continuation_steps") {
      c.continuation_steps = static_cast<int>(to_int(key, value));
    } else if (key == "dt") {
      c.dt.clear();
      for (const auto& x : split(value, ',')) c.dt.push_back(to_double(key, x));
    } else if (key == "q") {
      c.q.clear();
      for (const auto& term : split(value, ',')) {
        const auto parts = split(term, ':');
        if (parts.size() < 2 || parts.size() > 3) throw ConfigParseError("q: expected index:re[:im], got '" + term + "'");
        c.q.push_back({static_cast<int>(to_int(key, parts[0])),
                       cplx(to_double(key, parts[1]), parts.size() == 3 ? to_double(key, parts[2]) : 0.0)});
      }
    } else if (key == "directions") {
      c.directions = static_cast<int>(to_int(key, value));
    } else if (key == "seed") {
      const long s = to_int(key, value);
      if (s < 0) throw ConfigParseError("seed must be non-negative");
      c.seed = static_cast<unsigned>(s);
    } else if (key == "out") {
      c.out = value;
    } else if (key == "pairing_constant") {
      c.pairing_constant = to_double(key, value);
    } else {
      throw ConfigParseError("line " + std::to_string(number) + ": unknown key '" + key + "'");
    }
  }
  validate_config(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigParseError("cannot read config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

void validate_config(const RunConfig& c) {
  if (c.level < 0 || c.level > 5) throw ConfigParseError("level " + std::to_string(c.level) + " outside 0..5");
  if (!(c.wang_tolerance > 0.0)) throw ConfigParseError("wang_tolerance must be positive");
  if (c.continuation_steps < 1) throw ConfigParseError("continuation_steps must be at least 1");
  if (c.dt.empty()) throw ConfigParseError("dt needs at least one step");
  for (std::size_t i = 0; i < c.dt.size(); ++i) {
    if (!(c.dt[i] > 0.0)) throw ConfigParseError("dt steps must be positive");
    if (i > 0 && std::abs(c.dt[i] - 0.5 * c.dt[i - 1]) > 1e-12 * c.dt[i - 1])
      throw ConfigParseError("each dt step must be half of the previous one");
  }
  if (c.q.empty()) throw ConfigParseError("q needs at least one term");
  for (const auto& t : c.q) {
    if (t.index < 0 || t.index >= holomorphic_dimension(3)) throw ConfigParseError("q: basis index outside 0..4");
    if (t.amplitude == 0.0) throw ConfigParseError("q: zero amplitude");
  }
  if (c.directions < 1 || c.directions > 2 * holomorphic_dimension(3))
    throw ConfigParseError("directions outside 1..10");
  if (c.out.empty()) throw ConfigParseError("out must not be empty");
  if (!(c.pairing_constant > 0.0)) throw ConfigParseError("pairing_constant must be positive");
}

std::string format_config(const RunConfig& c) {
  std::ostringstream out;
  char buf[96];
  out << "level = " << c.level << "\n";
  std::snprintf(buf, sizeof(buf), "wang_tolerance = %.17g\n", c.wang_tolerance);
  out << buf << "continuation_steps = " << c.continuation_steps << "\ndt =";
  for (std::size_t i = 0; i < c.dt.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s %.17g", i ? "," : "", c.dt[i]);
    out << buf;
  }
  out << "\nq =";
  for (std::size_t i = 0; i < c.q.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s %d:%.17g:%.17g", i ? "," : "", c.q[i].index, c.q[i].amplitude.real(),
                  c.q[i].amplitude.imag());
    out << buf;
  }
  out << "\ndirections = " << c.directions << "\nseed = " << c.seed << "\nout = " << c.out << "\n";
  std::snprintf(buf, sizeof(buf), "pairing_constant = %.17g\n", c.pairing_constant);
  out << buf;
  return out.str();
}

// ---------------------------------------------------------------------------
// Checks and reports

Check make_check(std::string module, std::string operation, std::string criterion, std::string claim,
                 double measured, std::string relation, double threshold) {
  Check c{std::move(module), std::move(operation), std::move(criterion), std::move(claim), measured,
          std::move(relation), threshold, false};
  if (std::isnan(measured))
    c.passed = false;
  else if (c.relation == "<=")
    c.passed = measured <= threshold;
  else if (c.relation == ">=")
    c.passed = measured >= threshold;
  else if (c.relation == "<")
    c.passed = measured < threshold;
  else if (c.relation == ">")
    c.passed = measured > threshold;
  else if (c.relation == "==")
    c.passed = measured == threshold;
  else
    throw DimensionMismatch("unknown relation " + c.relation);
  return c;
}

bool SuiteResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::string format_suite(const SuiteResult& s) {
  std::ostringstream out;
  char buf[160];
  out << "[suite]\nname = " << s.name << "\nstatus = " << (s.passed() ? "pass" : "fail") << "\n";
  for (const auto& [k, v] : s.values) out << k << " = " << v << "\n";
  for (const auto& p : s.series) {
    std::snprintf(buf, sizeof(buf), "series = %s %d %.6g %.17g\n", p.metric.c_str(), p.level, p.dt, p.value);
    out << buf;
  }
  for (const auto& c : s.checks) {
    std::snprintf(buf, sizeof(buf), "measured=%.6e %s %.6e", c.measured, c.relation.c_str(), c.threshold);
    out << "check = " << (c.passed ? "pass" : "fail") << " module=" << c.module << " operation=" << c.operation
        << " criterion=" << (c.criterion.empty() ? "-" : c.criterion) << " " << buf << " claim=\"" << c.claim
        << "\"\n";
  }
  if (!s.attachment.empty()) out << s.attachment;
  return out.str();
}

// ---------------------------------------------------------------------------
// Workspace

namespace {

const FuchsianDomain& bolza() {
  static const FuchsianDomain d = build_bolza_domain();
  return d;
}

DifferentialField zero_field(const Mesh& m, int weight, Chirality chirality) {
  return {weight, chirality, CVector(m.num_vertices(), 0.0)};
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

Workspace::Workspace(RunConfig config) : config_(std::move(config)) { validate_config(config_); }

WangOptions Workspace::wang_options() const {
  WangOptions o;
  o.steps = config_.continuation_steps;
  o.tolerance = config_.wang_tolerance;
  return o;
}

const Mesh& Workspace::mesh(int level) {
  auto it = meshes_.find(level);
  if (it == meshes_.end()) it = meshes_.emplace(level, build_mesh(bolza(), level)).first;
  return it->second;
}

std::shared_ptr<const Laplacian> Workspace::laplacian(int level) {
  auto& p = laplacians_[level];
  if (!p) p = std::make_shared<const Laplacian>(hitchin::laplacian(mesh(level)));
  return p;
}

std::shared_ptr<const DerivativeOperators> Workspace::derivatives(int level) {
  auto& p = derivatives_[level];
  if (!p) p = std::make_shared<const DerivativeOperators>(derivative_operators(mesh(level)));
  return p;
}

const HolomorphicBasis& Workspace::basis(int weight) {
  auto it = bases_.find(weight);
  if (it == bases_.end()) it = bases_.emplace(weight, holomorphic_basis(mesh(config_.level), weight)).first;
  return it->second;
}

DifferentialField Workspace::field(int level, int weight, const std::vector<CubicTerm>& terms) {
  const Mesh& m = mesh(level);
  const HolomorphicBasis& b = basis(weight);
  DifferentialField f = zero_field(m, weight, Chirality::Holomorphic);
  for (const auto& t : terms)
    for (std::size_t v = 0; v < f.values.size(); ++v)
      f.values[v] += t.amplitude * evaluate_chart_polynomial(b.chart_coefficients[static_cast<std::size_t>(t.index)],
                                                             b.chart_scale, m.z[v]);
  return field_from_dofs(m, weight, Chirality::Holomorphic, dof_values(m, f));
}

const AffineSphereData& Workspace::fuchsian(int level) {
  auto it = fuchsian_.find(level);
  if (it == fuchsian_.end()) {
    const Mesh& m = mesh(level);
    const auto z = zero_field(m, 3, Chirality::Holomorphic);
    auto s = make_affine_sphere_data(m, z, conjugate(z), WangMode::Real, laplacian(level));
    s.pairing_constant = config_.pairing_constant;
    s.derivatives = derivatives(level);
    it = fuchsian_.emplace(level, std::move(s)).first;
  }
  return it->second;
}

const AffineSphereData& Workspace::solved(int level, WangMode mode) {
  const auto key = std::make_pair(level, static_cast<int>(mode));
  auto it = solved_.find(key);
  if (it == solved_.end()) {
    const auto q = base_cubic(level);
    auto s = solve_wang(mesh(level), q, conjugate(q), mode, wang_options(), nullptr, laplacian(level), nullptr,
                        config_.pairing_constant);
    s.derivatives = derivatives(level);
    it = solved_.emplace(key, std::move(s)).first;
  }
  return it->second;
}

const GeneratorPaths& Workspace::paths(int level) {
  auto it = paths_.find(level);
  if (it == paths_.end()) it = paths_.emplace(level, generator_paths(mesh(level))).first;
  return it->second;
}

// ---------------------------------------------------------------------------
// Suites

namespace {

// Two consecutive levels ending at the configured one (0, 1 at level 0).
std::vector<int> level_pair(int level) { return level == 0 ? std::vector<int>{0, 1} : std::vector<int>{level - 1, level}; }

double max_of(const RVector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

double fro(const Mat3& m) { return m.norm(); }

}  // namespace

SuiteResult mesh_suite(Workspace& ws) {
  SuiteResult r{"mesh", {}, {}, {}, {}};
  const int level = ws.config().level;
  const Mesh& m = ws.mesh(level);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(mesh_checksum(m)));
  r.values = {{"level", std::to_string(level)},
              {"vertices", std::to_string(m.num_vertices())},
              {"triangles", std::to_string(m.triangles.size())},
              {"dofs", std::to_string(m.num_dofs())},
              {"mesh_checksum", buf}};
  r.checks.push_back(make_check("surface", "build_mesh", "", "triangles keep a minimum angle",
                                min_chart_angle_degrees(m), ">=", 15.0));
  r.checks.push_back(make_check("surface", "build_mesh", "", "identified sides match under the side pairings",
                                identification_error(m, bolza()), "<=", 1e-9));
  const auto lap = ws.laplacian(level);
  const RVector low = laplacian_low_spectrum(*lap, 2);
  r.values.push_back({"laplacian_low_spectrum", num(low[0]) + " " + num(low[1])});
  r.checks.push_back(make_check("surface", "laplacian", "", "constants span the kernel of the Laplacian",
                                std::abs(low[0]), "<=", 1e-8));
  return r;
}

SuiteResult basis_suite(Workspace& ws) {
  SuiteResult r{"basis", {}, {}, {}, {}};
  for (int weight : {2, 3}) {
    const HolomorphicBasis& b = ws.basis(weight);
    const std::string w = std::to_string(weight);
    r.values.push_back({"dimension_" + w, std::to_string(b.fields.size())});
    r.values.push_back({"gap_ratio_" + w, num(b.gap_ratio)});
    r.values.push_back({"cocycle_error_" + w, num(b.cocycle_error)});
    r.checks.push_back(make_check("differentials", "holomorphic_basis", "dimensions",
                                  "holomorphic " + w + "-differentials have dimension " +
                                      std::to_string(holomorphic_dimension(weight)),
                                  static_cast<double>(b.fields.size()), "==", holomorphic_dimension(weight)));
    r.checks.push_back(make_check("differentials", "holomorphic_basis", "dimensions",
                                  "singular value gap above the kernel of d-bar on K^" + w, b.gap_ratio, ">=", 1e3));
    double res = 0.0;
    for (double x : b.residuals) res = std::max(res, x);
    r.values.push_back({"max_dbar_residual_" + w, num(res)});
  }
  return r;
}

SuiteResult fuchsian_suite(Workspace& ws) {
  SuiteResult r{"fuchsian", {}, {}, {}, {}};
  const int level = ws.config().level;
  const auto levels = level_pair(level);
  std::vector<double> curv, pert, trace_err, relation;
  for (int l : levels) {
    const auto d = assemble_D(ws.fuchsian(l));
    curv.push_back(max_of(curvature_residual(d)));
    AffineSphereData p = ws.fuchsian(l);
    for (auto& u : p.u) u += 0.01;
    pert.push_back(max_of(curvature_residual(assemble_D(p, Model::Standard, -1.0))));
    double worst = 0.0;
    for (char c : std::string("abcd")) {
      const double ref = irr_embed(standard_generator_matrix(bolza(), c)).trace();
      const cplx t = holonomy(d, ws.paths(l), std::string(1, c)).matrix.trace();
      worst = std::max(worst, std::abs(t - ref) / ref);
      if (l == level) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%.17g %.17g reference %.17g", t.real(), t.imag(), ref);
        r.values.push_back({std::string("trace_") + c, buf});
      }
    }
    trace_err.push_back(worst);
    relation.push_back(fro(holonomy(d, ws.paths(l), kRelationWord).matrix - Mat3::Identity()));
    r.series.push_back({"fuchsian_curvature", l, 0.0, curv.back()});
    r.series.push_back({"perturbed_curvature", l, 0.0, pert.back()});
    r.series.push_back({"fuchsian_trace_error", l, 0.0, trace_err.back()});
    r.series.push_back({"relation_word_residual", l, 0.0, relation.back()});
  }
  r.checks.push_back(make_check("connections", "curvature_residual", "flatness-oracle",
                                "curvature at the Fuchsian point falls by 2 per level", curv[0] / curv[1], ">=", 2.0));
  r.checks.push_back(make_check("connections", "curvature_residual", "flatness-oracle",
                                "curvature with u + 0.01 does not fall under refinement", pert[1] / pert[0], ">=",
                                1.0));
  r.checks.push_back(make_check("connections", "holonomy", "holonomy-oracle",
                                "generator traces match the symmetric square of the Fuchsian generators",
                                trace_err[1], "<=", 0.02));
  r.checks.push_back(make_check("connections", "holonomy", "holonomy-oracle",
                                "generator trace error falls by 2 per level", trace_err[0] / trace_err[1], ">=", 2.0));
  r.checks.push_back(make_check("connections", "holonomy", "holonomy-oracle", "relation word holonomy is the identity",
                                relation[1], "<=", 1e-3));
  r.checks.push_back(make_check("connections", "holonomy", "holonomy-oracle",
                                "relation word residual falls by 2 per level", relation[0] / relation[1], ">=", 2.0));
  return r;
}

SuiteResult solver_suite(Workspace& ws) {
  SuiteResult r{"solver", {}, {}, {}, {}};
  const int level = ws.config().level;
  const Mesh& m = ws.mesh(level);
  const double c = ws.config().pairing_constant;

  // Q = 0 is solved by u = 0 without a single update.
  {
    const auto z = zero_field(m, 3, Chirality::Holomorphic);
    WangReport rep;
    const auto s = solve_wang(m, z, conjugate(z), WangMode::Real, ws.wang_options(), &rep, ws.laplacian(level),
                              nullptr, c);
    int updates = 0;
    for (const auto& h : rep.history) updates = std::max(updates, h.iteration);
    r.checks.push_back(make_check("wang", "solve_wang", "wang-solver", "Q = 0 converges in one Newton step",
                                  updates, "<=", 1.0));
    r.checks.push_back(make_check("wang", "solve_wang", "wang-solver", "Q = 0 gives u = 0", norm_inf(s.u), "==", 0.0));
  }

  // Constant coefficients: alpha = sqrt(kappa / c) lambda0^{3/2} makes the
  // pairing constant, and u is the root of -e^{2t} + kappa e^{-4t} / 4 + 1.
  {
    double worst = 0.0;
    for (double kappa : {0.5, 3.0, 40.0}) {
      DifferentialField q = zero_field(m, 3, Chirality::Holomorphic);
      for (std::size_t v = 0; v < q.values.size(); ++v) q.values[v] = std::sqrt(kappa / c) * std::pow(m.lambda0[v], 1.5);
      auto s = make_affine_sphere_data(m, q, conjugate(q), WangMode::Real, ws.laplacian(level));
      s.pairing_constant = c;
      for (int it = 0; it < 40 && norm_inf(residual_G(s)) > 1e-13; ++it) {
        const CVector g = residual_G(s), ratio = s.density_ratio();
        CVector rhs(g.size());
        for (std::size_t d = 0; d < g.size(); ++d) rhs[d] = -g[d] * ratio[d] * s.laplacian->mass[d];
        SolveOptions so;
        so.preconditioner = make_jacobi_preconditioner(linearize_L_weak(s));
        const CVector delta = solve_sparse(linearize_L_weak(s), rhs, so);
        for (std::size_t d = 0; d < delta.size(); ++d) s.u[d] = (s.u[d] + delta[d]).real();
      }
      auto f = [kappa](double t) { return -std::exp(2 * t) + 0.25 * kappa * std::exp(-4 * t) + 1.0; };
      double lo = 0.0, hi = 5.0;
      for (int i = 0; i < 200; ++i) (f(0.5 * (lo + hi)) > 0 ? lo : hi) = 0.5 * (lo + hi);
      const double root = 0.5 * (lo + hi);
      for (const auto& u : s.u) worst = std::max(worst, std::abs(u - root));
    }
    r.checks.push_back(make_check("wang", "linearize_L", "wang-solver",
                                  "constant-coefficient Newton solution matches the scalar root", worst, "<=", 1e-10));
  }

  // Real-mode solution at Q0.
  {
    const auto& s = ws.solved(level, WangMode::Real);
    double lo = INFINITY;
    for (const auto& u : s.u) lo = std::min(lo, u.real());
    r.values.push_back({"min_u", num(lo)});
    r.values.push_back({"final_residual", num(norm_inf(residual_G(s)))});
    r.checks.push_back(make_check("wang", "solve_wang", "wang-solver", "real-mode solutions are nonnegative", lo, ">=",
                                  -1e-8));
  }

  // Finite-difference order of the linearization.
  {
    std::mt19937 rng(ws.config().seed);
    std::uniform_real_distribution<double> g(-1.0, 1.0);
    auto s = ws.solved(level, WangMode::Real);
    for (auto& u : s.u) u += 0.1 * g(rng);
    CVector v(m.num_dofs());
    for (auto& x : v) x = g(rng);
    const CVector g0 = residual_G(s), lv = linearize_L(s).apply(v);
    double err[2];
    const double eps[2] = {1e-3, 1e-4};
    for (int i = 0; i < 2; ++i) {
      auto t = s;
      for (std::size_t d = 0; d < v.size(); ++d) t.u[d] += eps[i] * v[d];
      const CVector g1 = residual_G(t);
      err[i] = 0.0;
      for (std::size_t d = 0; d < v.size(); ++d) err[i] = std::max(err[i], std::abs(g1[d] - g0[d] - eps[i] * lv[d]));
    }
    r.checks.push_back(make_check("wang", "linearize_L", "wang-solver",
                                  "linearization passes the finite-difference order test", std::log10(err[0] / err[1]),
                                  ">=", 1.9));
  }
  return r;
}

SuiteResult connection_suite(Workspace& ws) {
  SuiteResult r{"connection", {}, {}, {}, {}};
  const int level = ws.config().level;
  const auto& s = ws.solved(level, WangMode::Real);
  r.checks.push_back(make_check("connections", "assemble_D", "",
                                "the antidiagonal isomorphism carries the standard form to the dual form",
                                gauge_defect(s, Model::Dual), "<=", 1e-9));
  r.checks.push_back(make_check("connections", "assemble_D", "",
                                "the diagonal isomorphism carries the standard form to the fixed-bundle form",
                                gauge_defect(s, Model::Fixed), "<=", 1e-9));
  const auto d = assemble_D(s);
  r.checks.push_back(make_check("connections", "assemble_D", "", "connection is traceless", max_trace(d), "<=", 1e-10));
  double det = 0.0;
  for (char c : std::string("abcd")) {
    const Mat3 h = holonomy(d, ws.paths(level), std::string(1, c)).matrix;
    det = std::max(det, std::abs(h.determinant() - 1.0));
  }
  r.checks.push_back(make_check("connections", "holonomy", "", "holonomy is unimodular", det, "<=", 1e-8));

  // The median over triangles isolates the smooth Wang-residual part of the
  // curvature from the first-order spikes at the octagon corners, which
  // dominate the max. A wrong pairing constant leaves a plateau.
  const auto levels = level_pair(level);
  std::vector<double> median;
  for (int l : levels) {
    const RVector c = curvature_residual(assemble_D(ws.solved(l, WangMode::Real)));
    std::vector<double> v(c.begin(), c.end());
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    median.push_back(v[v.size() / 2]);
    r.series.push_back({"solved_curvature_max", l, 0.0, max_of(c)});
    r.series.push_back({"solved_curvature_median", l, 0.0, median.back()});
  }
  r.checks.push_back(make_check("connections", "curvature_residual", "flatness-oracle",
                                "curvature of the solved state vanishes under refinement (median falls by 2 per level)",
                                median[0] / median[1], ">=", 2.0));
  return r;
}

namespace {

// Pointwise and integrated closed-form pairings over basis fields.
struct ClosedFormResult {
  double pointwise = 0.0;
  double integral = 0.0;
  double mixed = 0.0;
};

ClosedFormResult closed_form_pairings(Workspace& ws, const AffineSphereData& f) {
  const Mesh& m = *f.mesh;
  const auto& q = ws.basis(2).fields;
  const auto& c = ws.basis(3).fields;
  ClosedFormResult out;
  double pscale = 0.0, iscale = 0.0, pworst = 0.0, iworst = 0.0;
  auto compare = [&](const TangentRep& a, const TangentRep& b, auto scalar) {
    CVector s(m.num_vertices());
    for (std::size_t v = 0; v < s.size(); ++v) {
      s[v] = scalar(v);
      pscale = std::max(pscale, std::abs(s[v]));
      pworst = std::max(pworst, std::abs(wedge_trace(a, b, v) - s[v]));
    }
    const cplx ref = cplx(0.0, -2.0) * integrate(m, s, Measure::Chart);
    iscale = std::max(iscale, std::abs(ref));
    iworst = std::max(iworst, std::abs(pair_omega(a, b, m) - ref));
  };
  for (const auto& psi : q)
    for (const auto& phi : q)
      compare(fuchsian_tangent(f, Direction::BarQuadratic, conjugate(psi)), fuchsian_tangent(f, Direction::Quadratic, phi),
              [&](std::size_t v) { return -std::conj(psi.values[v]) * phi.values[v] / m.lambda0[v]; });
  for (const auto& al : c)
    for (const auto& be : c)
      compare(fuchsian_tangent(f, Direction::Cubic, al), fuchsian_tangent(f, Direction::BarCubic, conjugate(be)),
              [&](std::size_t v) {
                return 2.0 * al.values[v] * std::conj(be.values[v]) / (m.lambda0[v] * m.lambda0[v]);
              });
  double mixed = 0.0;
  for (const auto& psi : q)
    for (const auto& al : c) {
      const auto a = fuchsian_tangent(f, Direction::BarQuadratic, conjugate(psi)) +
                     fuchsian_tangent(f, Direction::Quadratic, psi);
      const auto b = fuchsian_tangent(f, Direction::Cubic, al) + fuchsian_tangent(f, Direction::BarCubic, conjugate(al));
      mixed = std::max(mixed, std::abs(pair_omega(a, b, m)));
    }
  out.pointwise = pworst / pscale;
  out.integral = iworst / iscale;
  out.mixed = mixed / iscale;
  return out;
}

// Largest pointwise |tr(L_i ^ L_j)| and |tr(R_i ^ R_j)| relative to the
// largest |tr(L_i ^ R_j)|.
double pointwise_lagrangian(const std::vector<RealTangent>& ts) {
  double worst = 0.0, scale = 0.0;
  const std::size_t n = ts.front().left.p.size();
  for (std::size_t i = 0; i < ts.size(); ++i)
    for (std::size_t j = 0; j < ts.size(); ++j)
      for (std::size_t v = 0; v < n; ++v) {
        scale = std::max(scale, std::abs(wedge_trace(ts[i].left, ts[j].right, v)));
        if (j > i)
          worst = std::max({worst, std::abs(wedge_trace(ts[i].left, ts[j].left, v)),
                            std::abs(wedge_trace(ts[i].right, ts[j].right, v))});
      }
  return worst / scale;
}

}  // namespace

SuiteResult goldman_suite(Workspace& ws) {
  SuiteResult r{"goldman", {}, {}, {}, {}};
  const RunConfig& cfg = ws.config();
  const int level = cfg.level;
  const Mesh& m = ws.mesh(level);

  // Fuchsian point: closed forms.
  const auto& f = ws.fuchsian(level);
  const auto basis = fuchsian_real_basis(f, ws.basis(2), ws.basis(3));
  const GramReport g = gram_from_tangents(m, basis, 2 * ws.basis(2).fields.size());
  r.attachment = format_gram_report(g);
  r.values.push_back({"signature", "(" + std::to_string(g.n_plus) + ", " + std::to_string(g.n_minus) + ")"});
  r.checks.push_back(make_check("goldman", "gram_signature", "signature", "omega(., J.) has 6 positive directions",
                                g.n_plus, "==", 6));
  r.checks.push_back(make_check("goldman", "gram_signature", "signature", "omega(., J.) has 10 negative directions",
                                g.n_minus, "==", 10));
  r.checks.push_back(make_check("goldman", "gram_signature", "signature", "omega(., J.) is nondegenerate", g.n_zero,
                                "==", 0));
  r.checks.push_back(make_check("goldman", "gram_signature", "signature",
                                "smallest |eigenvalue| is 1e3 above the symmetry residual and rounding",
                                g.min_abs_eigenvalue, ">=", g.gap_threshold));
  r.checks.push_back(make_check("goldman", "gram_signature", "", "quadratic and cubic directions are orthogonal",
                                g.block_residual, "<=", 1e-9));
  r.checks.push_back(make_check("goldman", "check_compatibility", "compatibility-fuchsian",
                                "omega(Ju, Jv) = omega(u, v) over all basis pairs", g.compatibility_residual, "<=",
                                1e-9));

  const ClosedFormResult cf = closed_form_pairings(ws, f);
  r.checks.push_back(make_check("goldman", "pair_omega", "pairing-closed-forms",
                                "wedge-trace integrands equal the scalar closed forms pointwise", cf.pointwise, "<=",
                                1e-10));
  r.checks.push_back(make_check("goldman", "pair_omega", "pairing-closed-forms",
                                "paired representatives equal the integrated closed forms", cf.integral, "<=", 1e-10));
  r.checks.push_back(make_check("goldman", "pair_omega", "pairing-closed-forms",
                                "quadratic and cubic directions pair to zero", cf.mixed, "<=", 1e-10));

  double qmin = INFINITY, cmax = -INFINITY;
  for (std::size_t i = 0; i < basis.size(); ++i)
    (i < 6 ? qmin : cmax) = i < 6 ? std::min(qmin, g.gram[i][i]) : std::max(cmax, g.gram[i][i]);
  r.checks.push_back(make_check("goldman", "apply_J", "sign-definiteness",
                                "omega(v, Jv) > 0 on quadratic directions", qmin, ">", 0.0));
  r.checks.push_back(make_check("goldman", "apply_J", "sign-definiteness", "omega(v, Jv) < 0 on cubic directions",
                                cmax, "<", 0.0));
  r.checks.push_back(make_check("goldman", "check_lagrangian", "lagrangian",
                                "left factors pair to zero pointwise at the Fuchsian point",
                                pointwise_lagrangian(basis), "<=", 1e-14));

  // Fuchsian involution: flipping the cubic directions.
  {
    std::vector<RealTangent> a, b;
    for (const auto& al : ws.basis(3).fields) {
      DifferentialField neg = al;
      for (auto& x : neg.values) x = -x;
      a.push_back(cubic_direction(f, al, "a"));
      b.push_back(cubic_direction(f, neg, "b"));
    }
    r.checks.push_back(make_check("goldman", "check_involution", "involution",
                                  "Q -> -Q preserves pairings at the Fuchsian point",
                                  involution_discrepancy(a, b, m).residual, "==", 0.0));
  }

  // Off the Fuchsian locus: finite-difference tangents at (c, Q0, conj Q0).
  std::vector<CubicTerm> dirs_terms;
  for (int k = 0; k < cfg.directions; ++k) dirs_terms.push_back({k / 2, k % 2 ? cplx(0.0, 1.0) : cplx(1.0, 0.0)});
  auto directions = [&](int l) {
    std::vector<DifferentialField> out;
    for (const auto& t : dirs_terms) out.push_back(ws.field(l, 3, {t}));
    return out;
  };
  const double dt_min = cfg.dt.back();
  std::vector<double> lag_dt, com_dt;
  std::vector<RealTangent> finest;
  for (double dt : cfg.dt) {
    auto ts = cubic_path_tangents(ws.solved(level, WangMode::Complex), directions(level), dt);
    lag_dt.push_back(lagrangian_residual(ts, m).residual);
    com_dt.push_back(compatibility_residual(ts, m).residual);
    r.series.push_back({"lagrangian_residual", level, dt, lag_dt.back()});
    r.series.push_back({"compatibility_residual", level, dt, com_dt.back()});
    if (dt == dt_min) finest = std::move(ts);
  }
  const int coarse = level_pair(level)[0] == level ? level + 1 : level - 1;
  double lag_coarse = 0.0, com_coarse = 0.0;
  {
    const auto ts = cubic_path_tangents(ws.solved(coarse, WangMode::Complex), directions(coarse), dt_min);
    lag_coarse = lagrangian_residual(ts, ws.mesh(coarse)).residual;
    com_coarse = compatibility_residual(ts, ws.mesh(coarse)).residual;
    r.series.push_back({"lagrangian_residual", coarse, dt_min, lag_coarse});
    r.series.push_back({"compatibility_residual", coarse, dt_min, com_coarse});
  }
  // With the coarse level above the configured one (level 0), compare in
  // refinement order.
  auto level_ratio = [&](double at_level, double at_coarse) {
    return coarse < level ? at_coarse / at_level : at_level / at_coarse;
  };
  for (const auto& [name, crit, op, at_dt, at_coarse] :
       {std::tuple{"omega(u, v) vanishes on Q1-only and on Qbar2-only variations", "lagrangian", "check_lagrangian",
                   lag_dt, lag_coarse},
        std::tuple{"omega(Ju, Jv) = omega(u, v) on the cubic block off the Fuchsian locus", "compatibility-off-locus",
                   "check_compatibility", com_dt, com_coarse}}) {
    r.checks.push_back(make_check("goldman", op, crit, std::string(name) + " (finest dt)", at_dt.back(), "<=", 1e-4));
    for (std::size_t i = 1; i < at_dt.size(); ++i)
      r.checks.push_back(make_check("goldman", op, crit, std::string(name) + ": falls by 3 when dt halves",
                                    at_dt[i - 1] / at_dt[i], ">=", 3.0));
    r.checks.push_back(make_check("goldman", op, crit, std::string(name) + ": falls by 2 per mesh level",
                                  level_ratio(at_dt.back(), at_coarse), ">=", 2.0));
  }

  // Involution off the locus.
  {
    const auto& base = ws.solved(level, WangMode::Complex);
    DifferentialField q1 = base.q1, qbar2 = base.qbar2;
    for (auto& x : q1.values) x = -x;
    for (auto& x : qbar2.values) x = -x;
    auto minus = solve_wang(m, q1, qbar2, WangMode::Complex, ws.wang_options(), nullptr, base.laplacian, nullptr,
                            cfg.pairing_constant);
    minus.derivatives = base.derivatives;
    auto flipped = directions(level);
    for (auto& d : flipped)
      for (auto& x : d.values) x = -x;
    const auto other = cubic_path_tangents(minus, flipped, dt_min);
    r.checks.push_back(make_check("goldman", "check_involution", "involution",
                                  "Q -> -Q preserves pairings off the Fuchsian locus",
                                  involution_discrepancy(finest, other, m).residual, "<=", 1e-6));
  }
  return r;
}

}  // namespace hitchin
