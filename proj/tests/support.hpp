#pragma once

#include <map>

#include "hitchin/differentials.hpp"
#include "hitchin/surface.hpp"

namespace hitchin::testing {

inline const FuchsianDomain& domain() {
  static const FuchsianDomain d = build_bolza_domain();
  return d;
}

// Meshes are deterministic and expensive at high levels, so tests share them.
inline const Mesh& mesh_at(int level) {
  static std::map<int, Mesh> cache;
  auto it = cache.find(level);
  if (it == cache.end()) it = cache.emplace(level, build_mesh(domain(), level)).first;
  return it->second;
}

// Bases are only unique up to a unitary change, so fields that must agree
// across levels are sampled from the chart polynomials of one level 2 basis.
inline const HolomorphicBasis& reference_basis(int weight) {
  static std::map<int, HolomorphicBasis> cache;
  auto it = cache.find(weight);
  if (it == cache.end()) it = cache.emplace(weight, holomorphic_basis(mesh_at(2), weight)).first;
  return it->second;
}

inline DifferentialField reference_field(const Mesh& mesh, int weight, std::initializer_list<cplx> coords) {
  const HolomorphicBasis& b = reference_basis(weight);
  DifferentialField f{weight, Chirality::Holomorphic, CVector(mesh.num_vertices(), 0.0)};
  std::size_t i = 0;
  for (const cplx c : coords) {
    for (std::size_t v = 0; v < f.values.size(); ++v)
      f.values[v] += c * evaluate_chart_polynomial(b.chart_coefficients[i], b.chart_scale, mesh.z[v]);
    ++i;
  }
  return f;
}

}  // namespace hitchin::testing
