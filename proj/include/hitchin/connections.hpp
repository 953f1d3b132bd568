#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hitchin/differentials.hpp"
#include "hitchin/mobius.hpp"
#include "hitchin/wang.hpp"

namespace hitchin {

using Mat3 = Eigen::Matrix3cd;

// Local frame of the rank 3 bundle: (dz, 1, 1/dz) for K + O + K^-1 of the
// holomorphic structure, (dzbar, 1, 1/dzbar) for the conjugate one.
enum class Frame { Holomorphic, Antiholomorphic };

// Components b = T a of a section when the chart changes by w = g(z), with
// T = diag(1/g', 1, g') (conjugated for the antiholomorphic frame).
Mat3 frame_transition(Frame frame, cplx derivative);

// The three gauge-equivalent forms of the affine sphere connection: on
// K + O + K^-1 of c1 (Standard), on the conjugate bundle after the
// antidiagonal isomorphism (Dual), and on the bundle of the base metric
// lambda_base (Fixed). On the real locus the second coordinate is zbar.
enum class Model { Standard, Dual, Fixed };

// D = d + A_z dz + A_zbar dzbar per chart vertex, in the octagon chart.
// Connections assembled from a state remember their model, so transport can
// evaluate the lambda0 dependence of A exactly between vertices.
struct DiscreteConnection {
  const Mesh* mesh = nullptr;
  Frame frame = Frame::Holomorphic;
  std::vector<Mat3> a_z;
  std::vector<Mat3> a_zbar;
  std::optional<Model> model;
  // d/dz and d/dzbar of the smooth factors of A_z, then of A_zbar.
  std::vector<std::array<Mat3, 4>> slopes;
  // phi = 2u per vertex with its fitted jet (phi_z, phi_zbar, then their
  // z and zbar derivatives). The diagonal of A carries potential_weight * dphi
  // plus a part free of exact differentials; transport integrates the dphi
  // part exactly, so the models stay gauge equivalent edge by edge.
  std::vector<std::array<cplx, 7>> potential;
  double potential_weight = 0.0;
};

// Standard form, with lambda = e^{2u} lambda_base and p = d_z log lambda:
//   A_z    = [[-p, 0, alpha/sqrt2], [1, 0, 0], [0, 1, p]]
//   A_zbar = [[0, lambda/2, 0], [0, 0, lambda/2], [2 sqrt2 betabar / lambda^2, 0, 0]]
// Derivatives of u come from the mesh derivative operators, those of
// lambda0 are analytic. Throws UnsolvedState when max |G| exceeds
// solved_tolerance (pass a negative tolerance to skip the check).
DiscreteConnection assemble_D(const AffineSphereData& sigma, Model model = Model::Standard,
                              double solved_tolerance = 1e-8);

DiscreteConnection zero_connection(const Mesh& mesh, Frame frame = Frame::Holomorphic);

// Largest |tr A_z| + |tr A_zbar| over vertices.
double max_trace(const DiscreteConnection& d);

// Pointwise check of the gauge identity A' = G A G^-1 - dG G^-1 carrying the
// standard form onto `target`, with dG from fourth order central differences of
// lambda0 and the mesh derivatives of u. Returns the largest entry defect
// relative to the largest entry of A'.
double gauge_defect(const AffineSphereData& sigma, Model target);

// Parallel transport along the chart segment from vertex a to vertex b: a
// fourth order Magnus step exp(-(X_a + 4 X_m + X_b) / 6 - [X_a, X_b] / 12),
// X = A_z dz + A_zbar dzbar. At the midpoint, A is the model's lambda0
// background times the cubic Hermite interpolant of the remaining factors
// (the plain average without a model).
Mat3 edge_transport(const DiscreteConnection& d, int a, int b);

// Per triangle |H - I|_2 / chart area, H the transport around the triangle.
RVector curvature_residual(const DiscreteConnection& d);

// Closed loops for the side pairings g_0..g_3: base vertex -> vertex at the
// midpoint of side j -> (identified) vertex on side j + 4 -> base vertex.
// Paths are shortest chart-edge paths and never cross a side.
struct GeneratorPaths {
  int base = -1;
  std::array<std::vector<int>, 4> outbound;  // base ... exit vertex on side j
  std::array<std::vector<int>, 4> inbound;   // entry vertex on side j+4 ... base
};

// Throws PathNotFound when the base vertex cannot reach a side.
GeneratorPaths generator_paths(const Mesh& mesh, int base_vertex = -1);

// Holonomy of the side pairing g_j, normalized so that j -> rho(g_j) is a
// homomorphism of the group generated by the side pairings.
Mat3 side_holonomy(const DiscreteConnection& d, const GeneratorPaths& paths, int j);

struct HolonomyMatrix {
  Mat3 matrix;
  std::string word;
  int base = -1;
};

// Words over a, b, c, d (standard generators) and A, B, C, D (inverses),
// with a = g0, b = g3, c = g2 g1^-1, d = g0 g3 g1^-1. Throws PathNotFound for
// any other letter.
HolonomyMatrix holonomy(const DiscreteConnection& d, const GeneratorPaths& paths, const std::string& word);

inline const std::string kRelationWord = "abABcdCD";

// Symmetric square of an SL(2) matrix in the basis (x^2, xy, y^2).
Eigen::Matrix3d irr_embed(const SL2R& a);

// The same generators as 2x2 matrices, from the domain's side pairings
// (upper half-plane model).
SL2R standard_generator_matrix(const FuchsianDomain& domain, char letter);

// End-valued 1-form P dz + R dzbar per chart vertex, in the holomorphic frame.
struct TangentRep {
  const Mesh* mesh = nullptr;
  std::vector<Mat3> p;
  std::vector<Mat3> r;
};

TangentRep zero_tangent(const Mesh& mesh);
TangentRep operator+(const TangentRep& a, const TangentRep& b);
TangentRep operator*(cplx s, const TangentRep& a);

// Closed-form tangents at the Fuchsian point:
//   BarQuadratic (psibar dzbar^2): R(2,1) = R(3,2) = psibar / lambda0
//   Quadratic (phi dz^2):          P(1,2) = P(2,3) = phi / 2
//   Cubic (alpha dz^3):            P(1,3) = alpha / sqrt2, plus udot terms
//   BarCubic (betabar dzbar^3):    R(3,1) = 2 sqrt2 betabar / lambda0^2, plus udot terms
// For the cubic directions udot solves L udot = -d/dt G, which is assembled
// and solved; at the Fuchsian point the right-hand side vanishes.
enum class Direction { BarQuadratic, Quadratic, Cubic, BarCubic };

// Throws UnsolvedState if sigma is not the Fuchsian point and
// DimensionMismatch if the field does not match the direction.
TangentRep fuchsian_tangent(const AffineSphereData& fuchsian, Direction direction, const DifferentialField& field);

// Central difference (plus - minus) / (2 dt) of two assembled connections.
TangentRep path_tangent(const DiscreteConnection& minus, const DiscreteConnection& plus, double dt);

// tr(P1 R2 - P2 R1) at vertex v; the wedge is this times dz ^ dzbar.
cplx wedge_trace(const TangentRep& a, const TangentRep& b, std::size_t v);

// d_D of the tangent, dR/dz - dP/dzbar + [A_z, R] - [A_zbar, P], from
// cocycle-transported quadratic fits over two-ring patches. Returns the
// largest Frobenius norm relative to max(|P| + |R|).
double closedness_residual(const DiscreteConnection& base, const TangentRep& tangent);

// d_D xi = (dxi/dz + [A_z, xi]) dz + (dxi/dzbar + [A_zbar, xi]) dzbar for a
// section xi of End(E), using the same fits.
TangentRep covariant_derivative(const DiscreteConnection& base, const std::vector<Mat3>& xi);

std::string format_holonomy(const std::vector<HolonomyMatrix>& hol, int level);

}  // namespace hitchin
