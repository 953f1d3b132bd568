#pragma once

#include <array>
#include <cmath>
#include <complex>

namespace hitchin {

using cplx = std::complex<double>;

// Real 2x2 matrix {a, b, c, d} acting on the upper half plane.
using SL2R = std::array<double, 4>;

// Linear fractional map z -> (a z + b) / (c z + d). Matrices are kept at
// determinant one so that derivative() is 1 / (c z + d)^2.
struct Mobius {
  cplx a{1.0}, b{0.0}, c{0.0}, d{1.0};

  cplx operator()(cplx z) const { return (a * z + b) / (c * z + d); }
  cplx derivative(cplx z) const {
    const cplx den = c * z + d;
    return (a * d - b * c) / (den * den);
  }
  // Composition: (*this)(other(z)).
  Mobius operator*(const Mobius& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }
  Mobius inverse() const {
    const cplx det = a * d - b * c;
    return {d / det, -b / det, -c / det, a / det};
  }
  cplx trace() const { return a + d; }
  // max |entry - (+-identity)|, whichever sign is closer.
  double distance_to_pm_identity() const {
    auto dist = [&](double s) {
      return std::max({std::abs(a - s), std::abs(b), std::abs(c), std::abs(d - s)});
    };
    return std::min(dist(1.0), dist(-1.0));
  }
};

// Cayley transform between the upper half plane (w) and the disk (z):
// z = (w - i) / (w + i).
inline Mobius disk_from_real(const SL2R& m) {
  const cplx i(0.0, 1.0);
  const Mobius C{1.0, -i, 1.0, i};
  const Mobius A{m[0], m[1], m[2], m[3]};
  Mobius r = C * A * C.inverse();
  const cplx s = std::sqrt(r.a * r.d - r.b * r.c);
  return {r.a / s, r.b / s, r.c / s, r.d / s};
}

inline SL2R real_from_disk(const Mobius& t) {
  const cplx i(0.0, 1.0);
  const Mobius C{1.0, -i, 1.0, i};
  Mobius r = C.inverse() * t * C;
  const cplx s = std::sqrt(r.a * r.d - r.b * r.c);
  return {(r.a / s).real(), (r.b / s).real(), (r.c / s).real(), (r.d / s).real()};
}

}  // namespace hitchin
