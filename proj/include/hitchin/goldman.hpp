#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hitchin/connections.hpp"

namespace hitchin {

// Complex Goldman pairing: integral of tr(P1 R2 - P2 R1) dz ^ dzbar with
// dz ^ dzbar = -2i dx dy, by the lumped chart quadrature. Throws MeshMismatch
// unless both tangents live on `mesh`.
cplx pair_omega(const TangentRep& a, const TangentRep& b, const Mesh& mesh);

// Real tangent at a point of the real locus, kept as its two complexified
// factors: `left` varies (c1, Q1), `right` varies (cbar2, Qbar2). The tangent
// of the connection is left + right.
struct RealTangent {
  std::string label;
  TangentRep left;
  TangentRep right;
};

// (L, R) -> (iL, -iR).
RealTangent apply_J(const RealTangent& v);

// pair_omega(L_u + R_u, L_v + R_v).
cplx omega(const RealTangent& u, const RealTangent& v, const Mesh& mesh);

// Closed forms at the Fuchsian point. Quadratic direction with holomorphic
// quadratic psi: left = BarQuadratic(conj psi), right = Quadratic(psi).
// Cubic direction alpha: left = Cubic(alpha), right = BarCubic(conj alpha).
RealTangent quadratic_direction(const AffineSphereData& fuchsian, const DifferentialField& psi, std::string label);
RealTangent cubic_direction(const AffineSphereData& fuchsian, const DifferentialField& alpha, std::string label);

// The 16 real directions psi_k, i psi_k (k < 3), then alpha_k, i alpha_k
// (k < 5), labelled q0, iq0, ..., c0, ic0, ...
std::vector<RealTangent> fuchsian_real_basis(const AffineSphereData& fuchsian, const HolomorphicBasis& quadratic,
                                             const HolomorphicBasis& cubic);

struct GramReport {
  int level = 0;
  std::uint64_t mesh_checksum = 0;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> gram;  // omega(v_i, J v_j), as computed
  RVector eigenvalues;                    // of the symmetric part, ascending
  int n_plus = 0;
  int n_minus = 0;
  int n_zero = 0;
  double gap_threshold = 0.0;         // |eigenvalue| below this counts as zero
  double min_abs_eigenvalue = 0.0;
  double symmetry_residual = 0.0;     // max |G - G^T|
  double imaginary_residual = 0.0;    // max |Im omega(v_i, J v_j)|
  double block_residual = 0.0;        // max quadratic-cubic entry / max |G|
  double compatibility_residual = 0.0;  // see compatibility_residual
  double lagrangian_residual = 0.0;     // see lagrangian_residual
};

// Gram matrix of omega(., J.) on fuchsian_real_basis. Eigenvalues with
// magnitude below 1e3 times max(symmetry residual, eps max|G|) count as
// zero; any such eigenvalue throws DegenerateGram.
GramReport gram_signature(const Mesh& mesh, const HolomorphicBasis& quadratic, const HolomorphicBasis& cubic);

// The same from prepared tangents; the first `quadratic_count` are the
// quadratic directions.
GramReport gram_from_tangents(const Mesh& mesh, const std::vector<RealTangent>& tangents,
                              std::size_t quadratic_count);

// A residual relative to a scale taken from the same tangents.
struct PairingCheck {
  double residual = 0.0;
  double scale = 0.0;
  std::size_t pairs = 0;
};

// max |omega(Ju, Jv) - omega(u, v)| over unordered pairs, relative to
// max |omega(u, Jv)|.
PairingCheck compatibility_residual(const std::vector<RealTangent>& tangents, const Mesh& mesh);

// max of |pair_omega(L_i, L_j)| and |pair_omega(R_i, R_j)| over i < j,
// relative to max |pair_omega(L_i, R_j)|.
PairingCheck lagrangian_residual(const std::vector<RealTangent>& tangents, const Mesh& mesh);

// Central-difference tangents of the standard connection at a solved
// complex-mode state on the real locus (qbar2 = conj q1): left along
// q1 + s alpha, right along qbar2 + s conj(alpha), s = +-dt. Each stencil
// point is a single-step Newton continuation from `base`. Throws
// DimensionMismatch for a real-mode base.
std::vector<RealTangent> cubic_path_tangents(const AffineSphereData& base, const std::vector<DifferentialField>& directions,
                                             double dt);

PairingCheck check_lagrangian(const AffineSphereData& base, const std::vector<DifferentialField>& directions, double dt);
PairingCheck check_compatibility(const AffineSphereData& base, const std::vector<DifferentialField>& directions, double dt);

// Largest change of omega(u_i, u_j) and omega(u_i, J u_j) between tangents
// at (c, Q0) and the sign-flipped tangents at (c, -Q0), relative to
// max |omega(u_i, J u_j)|. The lists pair up index by index.
PairingCheck involution_discrepancy(const std::vector<RealTangent>& at_q0, const std::vector<RealTangent>& at_minus_q0,
                                    const Mesh& mesh);

// Solves at (c, -Q0) and compares cubic_path_tangents along alpha at Q0 with
// those along -alpha at -Q0.
PairingCheck check_involution(const AffineSphereData& base, const std::vector<DifferentialField>& directions, double dt);

// key = value text with the full matrix, eigenvalues, residuals, checksum and
// verdict lines.
std::string format_gram_report(const GramReport& report);

}  // namespace hitchin
