#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hitchin/differentials.hpp"
#include "hitchin/numerics.hpp"
#include "hitchin/surface.hpp"

namespace hitchin {

// Real: Qbar2 = conjugate(Q1) and u is real. Complex: independent Q1, Qbar2
// near the real locus and complex u.
enum class WangMode { Real, Complex };

// State sigma of the Wang equation
//   Delta_h u - e^{2u} + h(Q1, Qbar2) e^{-4u} / 4 + 1 = 0,
// with h = lambda_base |dz|^2. lambda_base is a per-vertex density, lambda0 at
// the Fuchsian point or a (complex) rescaling of it; Delta_h is then
// (lambda0 / lambda_base) Delta0. u lives on dofs.
struct AffineSphereData {
  const Mesh* mesh = nullptr;
  std::shared_ptr<const Laplacian> laplacian;
  // Optional; connection assembly builds them when absent.
  std::shared_ptr<const DerivativeOperators> derivatives;
  CVector lambda_base;  // per chart vertex
  DifferentialField q1;
  DifferentialField qbar2;
  CVector u;  // per dof
  WangMode mode = WangMode::Real;
  double pairing_constant = kDefaultPairingConstant;

  // h(Q1, Qbar2) at the representative of every dof.
  CVector pairing() const;
  // lambda_base / lambda0 at the representative of every dof.
  CVector density_ratio() const;
};

// State with u = 0. Shares the Laplacian when one is passed in.
AffineSphereData make_affine_sphere_data(const Mesh& mesh, const DifferentialField& q1,
                                         const DifferentialField& qbar2, WangMode mode,
                                         std::shared_ptr<const Laplacian> lap = nullptr);

CVector residual_G(const AffineSphereData& sigma);

// L v = Delta_h v - (2 e^{2u} + e^{-4u} h) v, as a dof operator.
SparseOperator linearize_L(const AffineSphereData& sigma);

// Weak form of L: diag(lambda_base / lambda0) M L, complex symmetric, and
// real symmetric negative definite in real mode.
SparseOperator linearize_L_weak(const AffineSphereData& sigma);

struct WangOptions {
  int steps = 8;          // continuation Q <- (k / N) Q_target
  int max_halvings = 4;
  double tolerance = 1e-9;  // on max |G|
  int max_newton = 40;      // per continuation step
};

struct NewtonRecord {
  double t = 0.0;  // continuation parameter
  int iteration = 0;
  double residual = 0.0;  // max |G| before the update
  std::size_t linear_iterations = 0;
};

struct WangReport {
  WangMode mode = WangMode::Real;
  std::vector<NewtonRecord> history;
  std::vector<double> continuation;  // accepted t values
  int halvings = 0;
  double final_residual = 0.0;
  double min_re_u = 0.0;
  double max_re_u = 0.0;
  double max_abs_im_u = 0.0;
};

// Newton continuation from u = 0. Throws CocycleViolation for inputs that are
// not cocycle compatible, DimensionMismatch for real mode without conjugate
// data, NewtonDivergence when the residual stops contracting (after the
// allowed step halvings) and SingularLinearization when a linear solve breaks
// down.
AffineSphereData solve_wang(const Mesh& mesh, const DifferentialField& q1, const DifferentialField& qbar2,
                            WangMode mode, const WangOptions& options = {}, WangReport* report = nullptr,
                            std::shared_ptr<const Laplacian> lap = nullptr, const CVector* lambda_base = nullptr,
                            double pairing_constant = kDefaultPairingConstant);

// Newton continuation from the solved state `start` to nearby data along the
// straight segment between the two data sets; same options and errors as
// solve_wang. Mode, metric density and Laplacian are taken from `start`.
AffineSphereData continue_wang(const AffineSphereData& start, const DifferentialField& q1,
                               const DifferentialField& qbar2, const WangOptions& options = {},
                               WangReport* report = nullptr);

// Structured text record of a solve.
std::string format_report(const WangReport& report);

}  // namespace hitchin
