#include "hitchin/differentials.hpp"

#include <Eigen/Dense>

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hitchin/errors.hpp"

namespace hitchin {

namespace {

cplx ipow(cplx x, int k) {
  cplx r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

}  // namespace

CVector cocycle_factors(const Mesh& m, int weight, Chirality chirality) {
  CVector f(m.num_vertices());
  for (std::size_t v = 0; v < f.size(); ++v) {
    // alpha_rep(h z) h'(z)^k = alpha_v(z) with h = to_rep[v].
    cplx d = m.to_rep[v].derivative(m.z[v]);
    if (chirality == Chirality::Antiholomorphic) d = std::conj(d);
    f[v] = ipow(d, weight);
  }
  return f;
}

DifferentialField field_from_dofs(const Mesh& m, int weight, Chirality chirality, std::span<const cplx> dofs) {
  if (dofs.size() != m.num_dofs()) throw DimensionMismatch("field_from_dofs: expected one value per dof");
  DifferentialField out{weight, chirality, CVector(m.num_vertices())};
  const CVector f = cocycle_factors(m, weight, chirality);
  for (std::size_t v = 0; v < f.size(); ++v) out.values[v] = dofs[static_cast<std::size_t>(m.dof[v])] * f[v];
  return out;
}

CVector dof_values(const Mesh& m, const DifferentialField& field) {
  CVector out(m.num_dofs());
  for (std::size_t d = 0; d < out.size(); ++d) out[d] = field.values[static_cast<std::size_t>(m.copies[d][0])];
  return out;
}

double cocycle_residual(const Mesh& m, const DifferentialField& field) {
  if (field.values.size() != m.num_vertices()) throw DimensionMismatch("cocycle_residual: field size");
  const CVector f = cocycle_factors(m, field.weight, field.chirality);
  const double scale = norm_inf(field.values);
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  for (std::size_t v = 0; v < f.size(); ++v) {
    const cplx rep = field.values[static_cast<std::size_t>(m.copies[static_cast<std::size_t>(m.dof[v])][0])];
    worst = std::max(worst, std::abs(field.values[v] - rep * f[v]));
  }
  return worst / scale;
}

SparseOperator DbarOperator::weighted() const {
  std::vector<Triplet> t = stencil.triplets();
  for (auto& e : t) e.value *= row_weight[e.row] / col_weight[e.col];
  return SparseOperator(stencil.rows(), stencil.cols(), std::move(t));
}

DbarOperator dbar_operator(const Mesh& m, int weight) {
  if (weight != 2 && weight != 3) throw DimensionMismatch("dbar_operator: weight must be 2 or 3");
  DbarOperator op;
  op.weight = weight;
  const std::size_t n = m.num_vertices();
  std::vector<Triplet> t;
  for (std::size_t v = 0; v < n; ++v) {
    const auto patch = build_patch(m, static_cast<int>(v), 2);
    std::vector<cplx> pos;
    pos.reserve(patch.size());
    for (const auto& e : patch) pos.push_back(e.position);
    const auto st = fit_stencil(pos, m.z[v], 3);
    for (std::size_t i = 0; i < patch.size(); ++i) {
      const auto w = static_cast<std::size_t>(patch[i].vertex);
      // Coefficient seen in the center chart: alpha_w / H'(z_w)^k, and
      // alpha_w = alpha_rep h_w'(z_w)^k.
      const cplx transport = ipow(m.to_rep[w].derivative(m.z[w]) / patch[i].to_center.derivative(m.z[w]), weight);
      t.push_back({v, static_cast<std::size_t>(m.dof[w]), st.dzbar[i] * transport});
    }
  }
  op.stencil = SparseOperator(n, m.num_dofs(), std::move(t));
  op.row_weight.resize(n);
  for (std::size_t v = 0; v < n; ++v) op.row_weight[v] = std::sqrt(m.area[v] * std::pow(m.lambda0[v], -weight));
  op.col_weight.resize(m.num_dofs());
  for (std::size_t d = 0; d < m.num_dofs(); ++d) {
    const auto rep = static_cast<std::size_t>(m.copies[d][0]);
    op.col_weight[d] = std::sqrt(std::pow(m.lambda0[rep], -weight) * m.dof_mass[d]);
  }
  return op;
}

cplx evaluate_chart_polynomial(std::span<const cplx> c, double scale, cplx z) {
  const cplx q = z / scale;
  cplx s = 0.0;
  for (std::size_t j = c.size(); j-- > 0;) s = s * q + c[j];
  return s;
}

SeamOperator seam_dbar_operator(const Mesh& m, int weight, int degree) {
  if (weight != 2 && weight != 3) throw DimensionMismatch("seam_dbar_operator: weight must be 2 or 3");
  if (degree < 1) throw DimensionMismatch("seam_dbar_operator: degree must be positive");
  SeamOperator op;
  op.weight = weight;
  const auto nv = static_cast<Eigen::Index>(m.num_vertices());
  // Coarse meshes cannot resolve high degree polynomials: the sampled
  // monomials become numerically dependent. Keep four vertices per trial
  // function.
  degree = std::min<int>(degree, static_cast<int>(nv / 4) - 1);
  if (degree < 1) throw KernelGapFailure("mesh too coarse for a polynomial trial space");
  op.degree = degree;
  op.scale = std::abs(m.corners[0]);
  const auto cols = static_cast<Eigen::Index>(degree + 1);

  // Weighted samples of the monomials; R from a QR factorization turns them
  // into an orthonormal basis of the trial space.
  Eigen::MatrixXcd S(nv, cols);
  for (Eigen::Index v = 0; v < nv; ++v) {
    const auto vv = static_cast<std::size_t>(v);
    const double w = std::sqrt(m.area[vv] * std::pow(m.lambda0[vv], 1 - weight));
    const cplx q = m.z[vv] / op.scale;
    cplx p = w;
    for (Eigen::Index j = 0; j < cols; ++j) {
      S(v, j) = p;
      p *= q;
    }
  }
  const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(S);
  const Eigen::MatrixXcd R = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  const Eigen::MatrixXcd Rinv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXcd::Identity(cols, cols));

  // Seam samples: hyperbolically equispaced points on sides 4..7.
  const int per_side = 2 * std::max(64, degree);
  struct Sample {
    cplx z;
    int map;
    double w;
  };
  std::vector<Sample> samples;
  for (int side = 4; side < 8; ++side) {
    const cplx a = m.corners[static_cast<std::size_t>((side + 7) % 8)];
    const cplx b = m.corners[static_cast<std::size_t>(side)];
    const Mobius phi{1.0, -a, -std::conj(a), 1.0};
    const cplx bb = phi(b);
    const double len = 2.0 * std::atanh(std::abs(bb));
    const Mobius back = phi.inverse();
    for (int i = 0; i <= per_side; ++i) {
      const double t = static_cast<double>(i) / per_side;
      const cplx z = back(bb / std::abs(bb) * std::tanh(0.5 * t * len));
      const double lam = 4.0 / std::pow(1.0 - std::norm(z), 2);
      const double ds = len / per_side * ((i == 0 || i == per_side) ? 0.5 : 1.0);
      samples.push_back({z, FuchsianDomain::map_from_side(side), std::sqrt(std::pow(lam, -weight) * ds)});
    }
  }
  const auto rows = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXcd J(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    const Mobius& g = m.side_maps[static_cast<std::size_t>(s.map)];
    const cplx gp = ipow(g.derivative(s.z), weight);
    const cplx q1 = g(s.z) / op.scale, q0 = s.z / op.scale;
    cplx p1 = 1.0, p0 = 1.0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      J(i, j) = s.w * (p1 * gp - p0);
      p1 *= q1;
      p0 *= q0;
    }
  }
  const Eigen::MatrixXcd B = J * Rinv;
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(rows * cols));
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      t.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), B(i, j)});
  op.weighted = SparseOperator(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), std::move(t));
  op.to_monomial.assign(static_cast<std::size_t>(cols), std::vector<cplx>(static_cast<std::size_t>(cols)));
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < cols; ++i) op.to_monomial[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = Rinv(i, j);
  return op;
}

cplx weighted_inner(const Mesh& m, const DifferentialField& f, const DifferentialField& g) {
  if (f.weight != g.weight) throw DimensionMismatch("weighted_inner: weights differ");
  cplx s = 0.0;
  for (std::size_t v = 0; v < m.num_vertices(); ++v)
    s += m.area[v] * std::pow(m.lambda0[v], 1 - f.weight) * f.values[v] * std::conj(g.values[v]);
  return s;
}

double dbar_residual(const Mesh& m, const DbarOperator& dbar, const DifferentialField& field) {
  const CVector r = dbar.stencil.apply(dof_values(m, field));
  double num = 0.0;
  for (std::size_t v = 0; v < r.size(); ++v) num += dbar.row_weight[v] * dbar.row_weight[v] * std::norm(r[v]);
  const double den = std::sqrt(weighted_inner(m, field, field).real());
  return den > 0.0 ? std::sqrt(num) / den : 0.0;
}

HolomorphicBasis holomorphic_basis(const Mesh& m, int weight, int degree) {
  const SeamOperator seam = seam_dbar_operator(m, weight, degree);
  const auto dim = static_cast<std::size_t>(holomorphic_dimension(weight));
  const SingularSubspace sv = smallest_singular_subspace(seam.weighted, dim, 1);
  HolomorphicBasis basis;
  basis.weight = weight;
  basis.chart_scale = seam.scale;
  basis.singular_values = sv.singular_values;
  basis.gap_ratio = sv.singular_values[dim] / std::max(sv.singular_values[dim - 1], 1e-300);
  if (basis.gap_ratio < 10.0)
    throw KernelGapFailure("singular value gap " + std::to_string(basis.gap_ratio) + " below 10 for weight " +
                           std::to_string(weight));
  const std::size_t ncoef = seam.to_monomial.size();
  for (const auto& y : sv.vectors) {
    CVector c(ncoef, 0.0);
    for (std::size_t j = 0; j < ncoef; ++j)
      for (std::size_t i = 0; i < ncoef; ++i) c[i] += seam.to_monomial[j][i] * y[j];
    basis.chart_coefficients.push_back(std::move(c));
  }
  // Modified Gram-Schmidt on the coefficient vectors in the weighted product
  // of the sampled fields, applied twice.
  auto sample = [&](const CVector& c) {
    CVector dofs(m.num_dofs());
    for (std::size_t d = 0; d < dofs.size(); ++d)
      dofs[d] = evaluate_chart_polynomial(c, seam.scale, m.z[static_cast<std::size_t>(m.copies[d][0])]);
    return field_from_dofs(m, weight, Chirality::Holomorphic, dofs);
  };
  for (int pass = 0; pass < 2; ++pass) {
    basis.fields.clear();
    for (std::size_t i = 0; i < basis.chart_coefficients.size(); ++i) {
      auto& ci = basis.chart_coefficients[i];
      DifferentialField fi = sample(ci);
      for (std::size_t j = 0; j < i; ++j) {
        const cplx proj = weighted_inner(m, fi, basis.fields[j]);
        for (std::size_t q = 0; q < ci.size(); ++q) ci[q] -= proj * basis.chart_coefficients[j][q];
        for (std::size_t v = 0; v < fi.values.size(); ++v) fi.values[v] -= proj * basis.fields[j].values[v];
      }
      const double nrm = std::sqrt(weighted_inner(m, fi, fi).real());
      for (auto& x : ci) x /= nrm;
      for (auto& x : fi.values) x /= nrm;
      basis.fields.push_back(std::move(fi));
    }
  }
  // Seam mismatch of the chart polynomials at identified boundary vertices.
  for (const auto& c : basis.chart_coefficients) {
    double worst = 0.0, scale = 0.0;
    for (const auto& e : m.boundary) {
      const cplx z = m.z[static_cast<std::size_t>(e.v0)];
      const Mobius& g = m.side_maps[static_cast<std::size_t>(e.map)];
      const cplx a0 = evaluate_chart_polynomial(c, seam.scale, z);
      const cplx a1 = evaluate_chart_polynomial(c, seam.scale, g(z)) * ipow(g.derivative(z), weight);
      const double nat = std::pow(m.lambda0[static_cast<std::size_t>(e.v0)], -0.5 * weight);
      worst = std::max(worst, std::abs(a1 - a0) * nat);
      scale = std::max(scale, std::abs(a0) * nat);
    }
    basis.cocycle_error = std::max(basis.cocycle_error, worst / scale);
  }
  const DbarOperator op = dbar_operator(m, weight);
  for (const auto& f : basis.fields) basis.residuals.push_back(dbar_residual(m, op, f));
  return basis;
}

CVector pairing_h(const DifferentialField& q1, const DifferentialField& qbar2, std::span<const cplx> lambda,
                  double constant) {
  if (q1.weight != 3 || qbar2.weight != 3) throw DimensionMismatch("pairing_h expects cubic differentials");
  if (q1.chirality != Chirality::Holomorphic || qbar2.chirality != Chirality::Antiholomorphic)
    throw DimensionMismatch("pairing_h expects (dz^3, dzbar^3) chiralities");
  if (q1.values.size() != qbar2.values.size() || lambda.size() != q1.values.size())
    throw DimensionMismatch("pairing_h: size mismatch");
  CVector out(q1.values.size());
  for (std::size_t v = 0; v < out.size(); ++v) {
    const cplx l = lambda[v];
    out[v] = constant * q1.values[v] * qbar2.values[v] / (l * l * l);
  }
  return out;
}

DifferentialField conjugate(const DifferentialField& f) {
  DifferentialField out{f.weight,
                        f.chirality == Chirality::Holomorphic ? Chirality::Antiholomorphic : Chirality::Holomorphic,
                        CVector(f.values.size())};
  for (std::size_t v = 0; v < f.values.size(); ++v) out.values[v] = std::conj(f.values[v]);
  return out;
}

std::uint64_t mesh_checksum(const Mesh& m) {
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  feed(&m.level, sizeof(m.level));
  for (const auto& p : m.z) {
    const double re = p.real(), im = p.imag();
    feed(&re, sizeof(re));
    feed(&im, sizeof(im));
  }
  for (const auto& t : m.triangles) feed(t.data(), sizeof(int) * 3);
  return h;
}

void save_basis(const HolomorphicBasis& b, const Mesh& m, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw MeshFormatError("cannot open " + path + " for writing");
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, mesh_checksum(m));
  out << "hitchin-basis 1\n";
  out << "weight " << b.weight << "\n";
  out << "chirality dz\n";
  out << "mesh_checksum " << buf << "\n";
  out << "vertices " << m.num_vertices() << "\n";
  out << "fields " << b.fields.size() << "\n";
  out << "gap_ratio ";
  std::snprintf(buf, sizeof(buf), "%a", b.gap_ratio);
  out << buf << "\nsingular_values";
  for (double s : b.singular_values) {
    std::snprintf(buf, sizeof(buf), " %a", s);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "%a %a", b.chart_scale, b.cocycle_error);
  out << "\nchart_scale_cocycle " << buf << "\n";
  out << "chart_terms " << (b.chart_coefficients.empty() ? 0 : b.chart_coefficients[0].size()) << "\n";
  for (std::size_t f = 0; f < b.fields.size(); ++f) {
    std::snprintf(buf, sizeof(buf), "%a", b.residuals[f]);
    out << "field " << f << " residual " << buf << "\n";
    if (!b.chart_coefficients.empty())
      for (const auto& x : b.chart_coefficients[f]) {
        std::snprintf(buf, sizeof(buf), "%a %a\n", x.real(), x.imag());
        out << buf;
      }
    for (const auto& x : b.fields[f].values) {
      std::snprintf(buf, sizeof(buf), "%a %a\n", x.real(), x.imag());
      out << buf;
    }
  }
  if (!out) throw MeshFormatError("write failed for " + path);
}

HolomorphicBasis load_basis(const std::string& path, const Mesh& m) {
  std::ifstream in(path);
  if (!in) throw MeshFormatError("cannot open " + path);
  auto expect = [&](const std::string& key) {
    std::string k;
    in >> k;
    if (k != key) throw MeshFormatError("basis file: expected '" + key + "', got '" + k + "'");
  };
  auto read_hex = [&]() {
    std::string s;
    in >> s;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0') throw MeshFormatError("basis file: bad number '" + s + "'");
    return v;
  };
  HolomorphicBasis b;
  int version = 0;
  expect("hitchin-basis");
  in >> version;
  if (version != 1) throw MeshFormatError("basis file: unsupported version");
  expect("weight");
  in >> b.weight;
  expect("chirality");
  std::string chir;
  in >> chir;
  expect("mesh_checksum");
  std::string sum;
  in >> sum;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, mesh_checksum(m));
  if (sum != buf) throw MeshMismatch("basis file was computed on a different mesh");
  std::size_t nv = 0, nf = 0;
  expect("vertices");
  in >> nv;
  if (nv != m.num_vertices()) throw MeshMismatch("basis file vertex count differs from mesh");
  expect("fields");
  in >> nf;
  expect("gap_ratio");
  b.gap_ratio = read_hex();
  expect("singular_values");
  for (std::size_t i = 0; i <= nf; ++i) b.singular_values.push_back(read_hex());
  expect("chart_scale_cocycle");
  b.chart_scale = read_hex();
  b.cocycle_error = read_hex();
  std::size_t nc = 0;
  expect("chart_terms");
  in >> nc;
  auto read_complex = [&]() {
    const double re = read_hex();
    const double im = read_hex();
    return cplx{re, im};
  };
  for (std::size_t f = 0; f < nf; ++f) {
    expect("field");
    std::size_t idx = 0;
    in >> idx;
    expect("residual");
    b.residuals.push_back(read_hex());
    if (nc > 0) {
      CVector c(nc);
      for (auto& x : c) x = read_complex();
      b.chart_coefficients.push_back(std::move(c));
    }
    DifferentialField field{b.weight, chir == "dz" ? Chirality::Holomorphic : Chirality::Antiholomorphic, CVector(nv)};
    for (auto& x : field.values) x = read_complex();
    b.fields.push_back(std::move(field));
  }
  if (!in) throw MeshFormatError("basis file truncated");
  std::string extra;
  if (in >> extra) throw MeshFormatError("basis file has trailing data");
  return b;
}

}  // namespace hitchin
