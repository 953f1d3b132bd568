#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hitchin/goldman.hpp"

namespace hitchin {

// One term amplitude * (cubic basis field `index`) of the base point Q0.
struct CubicTerm {
  int index = 0;
  cplx amplitude = 0.0;
};

// Flat `key = value` configuration; '#' starts a comment. Keys:
//   level               mesh level, 0..5
//   wang_tolerance      Newton stopping tolerance on max |G|
//   continuation_steps  Newton continuation steps from Q = 0
//   dt                  finite-difference steps, comma separated, each
//                       half of the previous
//   q                   base point terms index:re[:im], comma separated
//   directions          real cubic directions for the off-locus checks, 1..10
//   seed                seed of the random test vectors
//   out                 parent directory of run directories
//   pairing_constant    debug override of the constant in h(Q1, Qbar2)
struct RunConfig {
  int level = 2;
  double wang_tolerance = 1e-9;
  int continuation_steps = 8;
  std::vector<double> dt = {1e-2, 5e-3};
  std::vector<CubicTerm> q = {{0, 0.1}};
  int directions = 10;
  unsigned seed = 1;
  std::string out = "runs";
  double pairing_constant = kDefaultPairingConstant;
};

// Throw ConfigParseError on unknown keys, malformed values or values out of
// range.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
void validate_config(const RunConfig& config);
std::string format_config(const RunConfig& config);

// A verified claim with its measurement. `criterion` names the acceptance
// criterion the check belongs to (empty for module invariants).
struct Check {
  std::string module;
  std::string operation;
  std::string criterion;
  std::string claim;
  double measured = 0.0;
  std::string relation;  // "<=", ">=", "<", ">", "=="
  double threshold = 0.0;
  bool passed = false;
};

Check make_check(std::string module, std::string operation, std::string criterion, std::string claim,
                 double measured, std::string relation, double threshold);

// A point of a refinement study, exported to CSV by the report command.
struct SeriesPoint {
  std::string metric;
  int level = 0;
  double dt = 0.0;  // 0 when the metric has no step
  double value = 0.0;
};

struct SuiteResult {
  std::string name;
  std::vector<Check> checks;
  std::vector<std::pair<std::string, std::string>> values;
  std::vector<SeriesPoint> series;
  std::string attachment;  // verbatim records such as the Gram report
  bool passed() const;
};

// Deterministic report body (no timestamps).
std::string format_suite(const SuiteResult& suite);

// Meshes, bases and solved states shared by the suites, built on demand.
// Fields at every level are sampled from the chart polynomials of the
// bases at the configured level, so refinement series compare the same data.
class Workspace {
 public:
  explicit Workspace(RunConfig config);

  const RunConfig& config() const { return config_; }
  WangOptions wang_options() const;
  const Mesh& mesh(int level);
  std::shared_ptr<const Laplacian> laplacian(int level);
  std::shared_ptr<const DerivativeOperators> derivatives(int level);
  const HolomorphicBasis& basis(int weight);  // at the configured level
  // sum_k c_k (basis field k) sampled on `level`, exact on the cocycle.
  DifferentialField field(int level, int weight, const std::vector<CubicTerm>& terms);
  DifferentialField base_cubic(int level) { return field(level, 3, config_.q); }
  const AffineSphereData& fuchsian(int level);
  const AffineSphereData& solved(int level, WangMode mode);  // at Q0
  const GeneratorPaths& paths(int level);

 private:
  RunConfig config_;
  std::map<int, Mesh> meshes_;
  std::map<int, std::shared_ptr<const Laplacian>> laplacians_;
  std::map<int, std::shared_ptr<const DerivativeOperators>> derivatives_;
  std::map<int, HolomorphicBasis> bases_;
  std::map<int, AffineSphereData> fuchsian_;
  std::map<std::pair<int, int>, AffineSphereData> solved_;
  std::map<int, GeneratorPaths> paths_;
};

// The suites of verify-all, in order. Module errors propagate.
SuiteResult mesh_suite(Workspace& ws);
SuiteResult basis_suite(Workspace& ws);
SuiteResult fuchsian_suite(Workspace& ws);
SuiteResult solver_suite(Workspace& ws);
SuiteResult connection_suite(Workspace& ws);
SuiteResult goldman_suite(Workspace& ws);

struct SuiteEntry {
  const char* name;
  SuiteResult (*run)(Workspace&);
};
inline constexpr SuiteEntry kSuites[] = {
    {"mesh", mesh_suite},         {"basis", basis_suite},           {"fuchsian", fuchsian_suite},
    {"solver", solver_suite},     {"connection", connection_suite}, {"goldman", goldman_suite},
};

}  // namespace hitchin
