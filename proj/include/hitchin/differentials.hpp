#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hitchin/numerics.hpp"
#include "hitchin/surface.hpp"

namespace hitchin {

// alpha dz^k (Holomorphic) or alpha dzbar^k (Antiholomorphic).
enum class Chirality { Holomorphic, Antiholomorphic };

// Per chart vertex coefficients of a k-differential. Copies of one dof carry
// coefficients related by the tensor cocycle: alpha(g z) g'(z)^k = alpha(z),
// with conj(g')^k for the antiholomorphic chirality.
struct DifferentialField {
  int weight = 3;
  Chirality chirality = Chirality::Holomorphic;
  CVector values;
};

// Factor f_v with alpha_v = alpha_rep * f_v for the copy v of a dof.
CVector cocycle_factors(const Mesh& mesh, int weight, Chirality chirality);

DifferentialField field_from_dofs(const Mesh& mesh, int weight, Chirality chirality,
                                  std::span<const cplx> dof_values);
// Representative coefficients (one per dof).
CVector dof_values(const Mesh& mesh, const DifferentialField& field);

// Largest |alpha_c - alpha_rep f_c| over copies, relative to the largest
// coefficient magnitude (0 for the zero field).
double cocycle_residual(const Mesh& mesh, const DifferentialField& field);

// Discrete d-bar on K^k over dof coefficients. `stencil` maps representative
// coefficients to the dzbar derivative at every chart vertex, evaluated in
// that vertex's chart after transporting neighbor coefficients by the
// cocycle (a least-squares cubic fit over the two-ring). Row weights measure
// the result in the natural norm of K^k (x) Kbar; column weights are the
// lambda0^(1-k) weighted L2 masses of the dofs.
struct DbarOperator {
  int weight = 3;
  SparseOperator stencil;
  RVector row_weight;  // sqrt(A_v lambda0_v^-k)
  RVector col_weight;  // sqrt(lambda0_rep^-k * hyperbolic mass)
  SparseOperator weighted() const;
};

DbarOperator dbar_operator(const Mesh& mesh, int weight);

// d-bar restricted to fields that are holomorphic polynomials in the octagon
// chart, alpha(z) = sum_j c_j (z / r)^j with r the corner radius. Inside the
// octagon dzbar alpha = 0 exactly, so the only d-bar content sits on the
// seams: rows sample the cocycle mismatch alpha(g z) g'(z)^k - alpha(z) at
// points z on sides 4..7 (g the side pairing), weighted by
// sqrt(lambda0^-k ds). Columns are orthonormalized in the weighted L2 product
// of the mesh, so singular values are relative to the field norm. The degree
// is capped at a quarter of the vertex count.
struct SeamOperator {
  int weight = 3;
  int degree = 0;
  double scale = 1.0;
  SparseOperator weighted;                  // rows x (degree + 1), dense pattern
  std::vector<std::vector<cplx>> to_monomial;  // column j -> monomial coefficients
};

inline constexpr int kDefaultTrialDegree = 120;
SeamOperator seam_dbar_operator(const Mesh& mesh, int weight, int degree = kDefaultTrialDegree);

cplx evaluate_chart_polynomial(std::span<const cplx> coefficients, double scale, cplx z);

// Natural-norm d-bar residual of a holomorphic-chirality field divided by its
// weighted L2 norm.
double dbar_residual(const Mesh& mesh, const DbarOperator& dbar, const DifferentialField& field);

// Weighted L2 product sum_v A_v lambda0_v^(1-k) f_v conj(g_v).
cplx weighted_inner(const Mesh& mesh, const DifferentialField& f, const DifferentialField& g);

struct HolomorphicBasis {
  int weight = 3;
  std::vector<DifferentialField> fields;
  // Chart polynomial of each field (see SeamOperator).
  double chart_scale = 1.0;
  std::vector<CVector> chart_coefficients;
  RVector singular_values;  // dimension + 1 smallest, nondecreasing
  double gap_ratio = 0.0;   // sigma_{dim+1} / sigma_dim
  RVector residuals;        // dbar_residual per field (mesh stencil)
  double cocycle_error = 0.0;  // largest relative seam mismatch of the chart polynomials
};

// Complex dimension of holomorphic k-differentials on a genus 2 surface.
inline int holomorphic_dimension(int weight) { return (2 * weight - 1); }

// Kernel of the seam d-bar operator via smallest_singular_subspace, then
// orthonormalized in the weighted L2 product. Throws KernelGapFailure when
// the gap ratio is below 10.
HolomorphicBasis holomorphic_basis(const Mesh& mesh, int weight, int degree = kDefaultTrialDegree);

// Pointwise pairing h(Q1, Qbar2) = c * alpha * betabar / lambda^3 of a cubic
// and a conjugate-cubic differential for the per-vertex density lambda. The
// flatness of the connection fixes c = 16, i.e. 2 (2/lambda)^3.
inline constexpr double kDefaultPairingConstant = 16.0;
CVector pairing_h(const DifferentialField& q1, const DifferentialField& qbar2, std::span<const cplx> lambda,
                  double constant = kDefaultPairingConstant);

DifferentialField conjugate(const DifferentialField& field);

// FNV-1a hash over vertex coordinates, triangles and level.
std::uint64_t mesh_checksum(const Mesh& mesh);

// Structured text with hexadecimal floats, so reload is bit exact.
void save_basis(const HolomorphicBasis& basis, const Mesh& mesh, const std::string& path);
HolomorphicBasis load_basis(const std::string& path, const Mesh& mesh);

}  // namespace hitchin
