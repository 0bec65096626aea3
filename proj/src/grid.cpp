#include "pddpm/grid.hpp"

#include <algorithm>
#include <cmath>

namespace pddpm {

std::pair<Plane, Plane> make_coordinates(Eigen::Index h, Eigen::Index w) {
  if (h < 1 || w < 1) throw ParamError("grid dimensions must be positive");
  Plane ci(h, w), cj(h, w);
  for (Eigen::Index r = 0; r < h; ++r) {
    const double vi = h == 1 ? 0.0 : static_cast<double>(r) / static_cast<double>(h - 1);
    for (Eigen::Index c = 0; c < w; ++c) {
      ci(r, c) = vi;
      cj(r, c) = w == 1 ? 0.0 : static_cast<double>(c) / static_cast<double>(w - 1);
    }
  }
  return {std::move(ci), std::move(cj)};
}

ImageGrid make_grid(Planes data) {
  if (data.empty()) throw ParamError("image needs at least one channel");
  auto [ci, cj] = make_coordinates(data[0].rows(), data[0].cols());
  return ImageGrid{std::move(data), std::move(ci), std::move(cj)};
}

Planes positional_encode(const Plane& gamma, int degree) {
  if (degree < 1) throw ParamError("encoding degree must be positive");
  Planes out;
  out.reserve(2 * static_cast<std::size_t>(degree));
  double scale = 1.0;
  for (int k = 0; k < degree; ++k) {
    out.push_back((scale * gamma).sin());
    out.push_back((scale * gamma).cos());
    scale *= 2.0;
  }
  return out;
}

PositionalEncoding encode_coordinates(const Plane& coord_i, const Plane& coord_j, int degree) {
  if (degree == 0) return PositionalEncoding{};  // encoding disabled
  return PositionalEncoding{degree, positional_encode(coord_i, degree),
                            positional_encode(coord_j, degree)};
}

UpsampleKernel upsample_kernel_from_string(const std::string& s) {
  if (s == "bilinear") return UpsampleKernel::bilinear;
  if (s == "nearest") return UpsampleKernel::nearest;
  throw ParamError("unknown upsample kernel: " + s);
}

std::string to_string(UpsampleKernel k) {
  return k == UpsampleKernel::bilinear ? "bilinear" : "nearest";
}

Plane downsample2x(const Plane& p) {
  if (p.rows() % 2 != 0 || p.cols() % 2 != 0)
    throw ShapeError("downsample2x needs even dimensions");
  Plane out(p.rows() / 2, p.cols() / 2);
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    for (Eigen::Index c = 0; c < out.cols(); ++c)
      out(r, c) = 0.25 * (p(2 * r, 2 * c) + p(2 * r, 2 * c + 1) + p(2 * r + 1, 2 * c) +
                          p(2 * r + 1, 2 * c + 1));
  return out;
}

ImageGrid downsample2x(const ImageGrid& g) {
  ImageGrid out;
  out.data.reserve(g.data.size());
  for (const Plane& p : g.data) out.data.push_back(downsample2x(p));
  out.coord_i = downsample2x(g.coord_i);
  out.coord_j = downsample2x(g.coord_j);
  return out;
}

Plane downsample2x_adjoint(const Plane& p) {
  Plane out(p.rows() * 2, p.cols() * 2);
  for (Eigen::Index r = 0; r < p.rows(); ++r)
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      const double v = 0.25 * p(r, c);
      out(2 * r, 2 * c) = v;
      out(2 * r, 2 * c + 1) = v;
      out(2 * r + 1, 2 * c) = v;
      out(2 * r + 1, 2 * c + 1) = v;
    }
  return out;
}

Plane downsample_levels(const Plane& p, int levels) {
  Plane out = p;
  for (int l = 0; l < levels; ++l) out = downsample2x(out);
  return out;
}

Planes downsample_levels(const Planes& x, int levels) {
  Planes out;
  out.reserve(x.size());
  for (const Plane& p : x) out.push_back(downsample_levels(p, levels));
  return out;
}

Planes downsample_levels_adjoint(const Planes& x, int levels) {
  Planes out = x;
  for (int l = 0; l < levels; ++l)
    for (Plane& p : out) p = downsample2x_adjoint(p);
  return out;
}

namespace {

struct InterpAxis {
  std::vector<Eigen::Index> lo;
  std::vector<double> frac;
};

InterpAxis corner_aligned_axis(Eigen::Index in_size, Eigen::Index out_size) {
  InterpAxis ax;
  ax.lo.resize(out_size);
  ax.frac.resize(out_size);
  for (Eigen::Index k = 0; k < out_size; ++k) {
    const double pos = in_size == 1 ? 0.0
                                    : static_cast<double>(k) * static_cast<double>(in_size - 1) /
                                          static_cast<double>(out_size - 1);
    Eigen::Index lo = static_cast<Eigen::Index>(std::floor(pos));
    lo = std::min(lo, in_size - 2 >= 0 ? in_size - 2 : Eigen::Index{0});
    ax.lo[k] = lo;
    ax.frac[k] = in_size == 1 ? 0.0 : pos - static_cast<double>(lo);
  }
  return ax;
}

}  // namespace

Plane upsample2x(const Plane& p, UpsampleKernel kernel) {
  const Eigen::Index h = p.rows(), w = p.cols();
  Plane out(2 * h, 2 * w);
  if (kernel == UpsampleKernel::nearest) {
    for (Eigen::Index r = 0; r < 2 * h; ++r)
      for (Eigen::Index c = 0; c < 2 * w; ++c) out(r, c) = p(r / 2, c / 2);
    return out;
  }
  const InterpAxis rows = corner_aligned_axis(h, 2 * h);
  const InterpAxis cols = corner_aligned_axis(w, 2 * w);
  for (Eigen::Index r = 0; r < 2 * h; ++r) {
    const Eigen::Index r0 = rows.lo[r];
    const Eigen::Index r1 = h == 1 ? r0 : r0 + 1;
    const double fr = rows.frac[r];
    for (Eigen::Index c = 0; c < 2 * w; ++c) {
      const Eigen::Index c0 = cols.lo[c];
      const Eigen::Index c1 = w == 1 ? c0 : c0 + 1;
      const double fc = cols.frac[c];
      out(r, c) = (1.0 - fr) * ((1.0 - fc) * p(r0, c0) + fc * p(r0, c1)) +
                  fr * ((1.0 - fc) * p(r1, c0) + fc * p(r1, c1));
    }
  }
  // Restore the channel mean; plain corner-aligned interpolation biases it
  // through the uneven edge weights.
  out += p.mean() - out.mean();
  return out;
}

ImageGrid upsample2x(const ImageGrid& g, UpsampleKernel kernel) {
  ImageGrid out;
  out.data.reserve(g.data.size());
  for (const Plane& p : g.data) out.data.push_back(upsample2x(p, kernel));
  out.coord_i = upsample2x(g.coord_i, kernel).min(1.0).max(0.0);
  out.coord_j = upsample2x(g.coord_j, kernel).min(1.0).max(0.0);
  return out;
}

ImageGrid random_resize(const ImageGrid& g, const std::vector<int>& ladder, Rng& rng) {
  if (ladder.empty()) throw ParamError("resolution ladder is empty");
  for (int entry : ladder) {
    if (entry < 1 || g.height() % entry != 0) throw ParamError("ladder entry unreachable by 2x halving");
    const Eigen::Index factor = g.height() / entry;
    if ((factor & (factor - 1)) != 0) throw ParamError("ladder entry unreachable by 2x halving");
    Eigen::Index width = g.width();
    for (Eigen::Index f = factor; f > 1; f /= 2) {
      if (width % 2 != 0) throw ParamError("ladder entry unreachable by 2x halving");
      width /= 2;
    }
  }
  const int pick = ladder[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(ladder.size()) - 1))];
  ImageGrid out = g;
  while (out.height() > pick) out = downsample2x(out);
  return out;
}

ImageGrid random_crop(const ImageGrid& g, int size, Rng& rng) {
  if (size < 1 || size > g.height() || size > g.width())
    throw ParamError("crop size exceeds grid");
  const int r0 = rng.uniform_int(0, static_cast<int>(g.height()) - size);
  const int c0 = rng.uniform_int(0, static_cast<int>(g.width()) - size);
  ImageGrid out;
  out.data.reserve(g.data.size());
  for (const Plane& p : g.data) out.data.push_back(p.block(r0, c0, size, size));
  out.coord_i = g.coord_i.block(r0, c0, size, size);
  out.coord_j = g.coord_j.block(r0, c0, size, size);
  return out;
}

}  // namespace pddpm
