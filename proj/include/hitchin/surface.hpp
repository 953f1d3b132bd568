#pragma once

#include <array>
#include <string>
#include <vector>

#include "hitchin/mobius.hpp"
#include "hitchin/numerics.hpp"

namespace hitchin {

// Regular hyperbolic octagon with interior angles pi/4 in the Poincare disk,
// sides paired by four translations. Side j has its midpoint at angle j*pi/4
// and runs from corner j-1 to corner j; corner k sits at angle k*pi/4 + pi/8.
struct FuchsianDomain {
  std::array<cplx, 8> corners;
  double corner_radius = 0.0;
  double translation_length = 0.0;
  // generators[j] maps side j+4 onto side j (upper half plane matrices).
  std::array<SL2R, 4> generators;
  // Disk maps: side_map(2j) = g_j, side_map(2j+1) = g_j^{-1}.
  std::array<Mobius, 8> side_maps;

  const Mobius& side_map(int idx) const { return side_maps[static_cast<std::size_t>(idx)]; }
  // Map index carrying side s onto its partner side.
  static int map_from_side(int side) { return side >= 4 ? 2 * (side - 4) : 2 * side + 1; }
  // Standard generators a, b, c, d with [a, b][c, d] = 1.
  std::array<Mobius, 4> standard_generators() const;
  // Disk map of the product a b a^-1 b^-1 c d c^-1 d^-1.
  Mobius relation_word() const;
  // Hyperbolic interior angle at each corner.
  std::array<double, 8> interior_angles() const;
};

FuchsianDomain build_bolza_domain();

struct BoundaryEdge {
  int v0 = -1, v1 = -1;  // chart vertices, in boundary order (octagon traversed counterclockwise)
  int side = -1;         // octagon side 0..7
  int partner = -1;      // index of the identified boundary edge
  int map = -1;          // side map index sending this edge onto the partner
};

// Triangulated octagon. Chart vertices that are identified by the side
// pairings share one degree of freedom (dof); to_rep[v] maps the chart
// position of v to that of the representative copy of its dof.
struct Mesh {
  int level = 0;
  std::vector<cplx> z;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary;

  // Derived data, rebuilt deterministically from the fields above and the
  // domain.
  std::array<Mobius, 8> side_maps;
  std::array<cplx, 8> corners;
  std::vector<double> lambda0;  // 4 / (1 - |z|^2)^2
  std::vector<double> area;     // lumped chart area (one third of incident triangles)
  std::vector<int> dof;
  std::vector<Mobius> to_rep;
  std::vector<std::vector<int>> copies;  // chart vertices per dof, representative first
  std::vector<double> dof_mass;          // hyperbolic lumped mass per dof
  std::vector<std::vector<int>> neighbors;
  std::vector<char> on_boundary;

  std::size_t num_vertices() const { return z.size(); }
  std::size_t num_dofs() const { return copies.size(); }
  // Map from the chart of `from` to the chart of `to` (same dof).
  Mobius copy_map(int from, int to) const { return to_rep[static_cast<std::size_t>(to)].inverse() * to_rep[static_cast<std::size_t>(from)]; }
  // Per-vertex values of a dof vector.
  CVector expand(std::span<const cplx> dof_values) const;
  RVector expand(std::span<const double> dof_values) const;
};

// Number of internal midpoint refinements applied to the 8-triangle fan at
// level 0. Each further level refines once more.
inline constexpr int kBaseRefinements = 3;

Mesh build_mesh(const FuchsianDomain& domain, int level);

// Recomputes lambda0, areas, dof identification and adjacency from z,
// triangles and the boundary table. Throws MeshFormatError when the table is
// inconsistent.
void finalize_mesh(Mesh& mesh, const FuchsianDomain& domain);

double min_chart_angle_degrees(const Mesh& mesh);
// Largest mismatch |map(z_v0) - z_partner_end| over identified edges.
double identification_error(const Mesh& mesh, const FuchsianDomain& domain);

// Discrete Laplace-Beltrami operator on dofs: Delta = M^{-1} W with W the
// (symmetric, negative semidefinite) weak Laplacian and M the lumped
// hyperbolic mass.
struct Laplacian {
  SparseOperator weak;  // W = -K, K the cotangent stiffness
  RVector mass;
  CVector apply(std::span<const cplx> u) const;
};

Laplacian laplacian(const Mesh& mesh);

// Lowest eigenvalues of -Delta (generalized problem K v = mu M v), ascending.
RVector laplacian_low_spectrum(const Laplacian& lap, std::size_t count);

// Neighborhood of a vertex assembled across identified edges: every entry is
// a chart vertex w together with the map carrying the chart of w into the
// chart of the center vertex.
struct PatchEntry {
  int vertex;
  Mobius to_center;
  cplx position;  // to_center(z[w])
};

std::vector<PatchEntry> build_patch(const Mesh& mesh, int center, int rings);

// Weights w_i such that sum_i w_i f(p_i) approximates df/dz and df/dzbar at
// `center`, from a least-squares polynomial fit of the given total degree.
struct DerivativeStencil {
  std::vector<cplx> dz, dzbar;
};

DerivativeStencil fit_stencil(std::span<const cplx> positions, cplx center, int degree);

// Least-squares fit by complex monomials zeta^a conj(zeta)^b (a + b <= degree)
// in the scaled coordinate zeta = (p - center) / scale. coefficients[m][i] is
// the weight of sample i in the coefficient of monomial m.
struct PolynomialFit {
  std::vector<std::pair<int, int>> monomials;
  double scale = 1.0;
  std::vector<std::vector<cplx>> coefficients;
};

PolynomialFit fit_polynomial(std::span<const cplx> positions, cplx center, int degree);

// Least-squares quadratic fit over the two-ring patch. Rows are chart
// vertices, columns are dofs (scalar functions on the surface).
struct DerivativeOperators {
  SparseOperator dz;
  SparseOperator dzbar;
};

DerivativeOperators derivative_operators(const Mesh& mesh);

enum class Measure { Chart, Hyperbolic };

// Integral of per-vertex values f: sum over triangles of chart area times the
// mean of f over its corners (times lambda0 for the hyperbolic measure).
cplx integrate(const Mesh& mesh, std::span<const cplx> f, Measure measure);

// Versioned binary cache. Reloading reproduces the vertex coordinates bit for
// bit and the derived data deterministically.
void save_mesh(const Mesh& mesh, const std::string& path);
Mesh load_mesh(const std::string& path, const FuchsianDomain& domain);

}  // namespace hitchin
