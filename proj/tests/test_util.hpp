#pragma once

#include "pddpm/types.hpp"

#include <functional>

namespace pddpm::testutil {

/// Central-difference gradient of a scalar function of a channel stack.
inline Planes fd_gradient(const std::function<double(const Planes&)>& f, const Planes& x,
                          double step = 1e-4) {
  Planes grad = zeros_like(x);
  Planes probe = x;
  for (std::size_t c = 0; c < x.size(); ++c)
    for (Eigen::Index r = 0; r < x[c].rows(); ++r)
      for (Eigen::Index cc = 0; cc < x[c].cols(); ++cc) {
        const double saved = probe[c](r, cc);
        probe[c](r, cc) = saved + step;
        const double hi = f(probe);
        probe[c](r, cc) = saved - step;
        const double lo = f(probe);
        probe[c](r, cc) = saved;
        grad[c](r, cc) = (hi - lo) / (2.0 * step);
      }
  return grad;
}

/// Central-difference v^T J for a vector-valued map, via d/de [v . F(x + e u)]
/// probed one coordinate at a time: (v^T J)_i = v . dF/dx_i.
inline Planes fd_vjp(const std::function<Planes(const Planes&)>& f, const Planes& x,
                     const Planes& v, double step = 1e-4) {
  return fd_gradient([&](const Planes& p) { return dot(f(p), v); }, x, step);
}

inline double relative_error(const Planes& got, const Planes& want) {
  double diff = 0.0, ref = 0.0;
  for (std::size_t c = 0; c < got.size(); ++c) {
    diff += (got[c] - want[c]).square().sum();
    ref += want[c].square().sum();
  }
  return std::sqrt(diff) / std::max(std::sqrt(ref), 1e-300);
}

}  // namespace pddpm::testutil
