#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace pddpm {

/// One image channel, H rows by W columns.
using Plane = Eigen::ArrayXXd;

/// Channel stack; all planes share the same footprint.
using Planes = std::vector<Plane>;

// Error taxonomy; the CLI maps these onto exit codes (2/2/3/4).
class ParamError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ShapeError : public ParamError {
 public:
  using ParamError::ParamError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Planes zeros_like(const Planes& x) {
  Planes out;
  out.reserve(x.size());
  for (const Plane& p : x) out.push_back(Plane::Zero(p.rows(), p.cols()));
  return out;
}

inline Planes constant_planes(Eigen::Index h, Eigen::Index w, std::size_t c, double value) {
  return Planes(c, Plane::Constant(h, w, value));
}

inline bool same_shape(const Planes& a, const Planes& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t c = 0; c < a.size(); ++c)
    if (a[c].rows() != b[c].rows() || a[c].cols() != b[c].cols()) return false;
  return true;
}

inline double dot(const Planes& a, const Planes& b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += (a[c] * b[c]).sum();
  return s;
}

inline double squared_norm(const Planes& a) { return dot(a, a); }

inline std::size_t element_count(const Planes& a) {
  std::size_t n = 0;
  for (const Plane& p : a) n += static_cast<std::size_t>(p.size());
  return n;
}

inline bool all_finite(const Planes& a) {
  for (const Plane& p : a)
    if (!p.isFinite().all()) return false;
  return true;
}

inline Eigen::VectorXd flatten(const Planes& a) {
  Eigen::VectorXd v(element_count(a));
  Eigen::Index k = 0;
  for (const Plane& p : a)
    for (Eigen::Index r = 0; r < p.rows(); ++r)
      for (Eigen::Index c = 0; c < p.cols(); ++c) v[k++] = p(r, c);
  return v;
}

}  // namespace pddpm
