#pragma once

#include "pddpm/rng.hpp"
#include "pddpm/types.hpp"

#include <utility>
#include <vector>

namespace pddpm {

/// Image with attached normalized coordinate fields. Pixel values of
/// training data live in [-1, 1]; coordinates in [0, 1].
struct ImageGrid {
  Planes data;
  Plane coord_i;  // row coordinate, constant along each row
  Plane coord_j;  // column coordinate

  Eigen::Index height() const { return coord_i.rows(); }
  Eigen::Index width() const { return coord_i.cols(); }
  std::size_t channels() const { return data.size(); }
};

/// coord_i(r, c) = r / (H-1) (zero when H == 1), coord_j symmetric.
std::pair<Plane, Plane> make_coordinates(Eigen::Index h, Eigen::Index w);

/// Wraps a channel stack with fresh full-frame coordinates.
ImageGrid make_grid(Planes data);

/// 4L-channel sinusoidal expansion of the two coordinate fields (Fig. 2's
/// 2 x 2 x L conditioning channels).
struct PositionalEncoding {
  int degree = 0;  // L
  Planes enc_i;    // 2L planes: sin(2^0 g), cos(2^0 g), ..., cos(2^(L-1) g)
  Planes enc_j;
};

/// [sin(2^0 g), cos(2^0 g), sin(2^1 g), cos(2^1 g), ...], arguments in radians.
Planes positional_encode(const Plane& gamma, int degree);

PositionalEncoding encode_coordinates(const Plane& coord_i, const Plane& coord_j, int degree);

enum class UpsampleKernel { bilinear, nearest };
UpsampleKernel upsample_kernel_from_string(const std::string& s);
std::string to_string(UpsampleKernel k);

/// 2x2 block average; requires even H and W. Linear in the data.
Plane downsample2x(const Plane& p);
ImageGrid downsample2x(const ImageGrid& g);

/// Exact adjoint of downsample2x: each coarse value spread as value/4 onto
/// its 2x2 block.
Plane downsample2x_adjoint(const Plane& p);

/// Applies downsample2x `levels` times.
Plane downsample_levels(const Plane& p, int levels);
Planes downsample_levels(const Planes& x, int levels);

/// Applies the adjoint `levels` times (outermost level first).
Planes downsample_levels_adjoint(const Planes& x, int levels);

/// Doubles both dimensions. The bilinear kernel interpolates with corner
/// alignment and then restores the input's channel mean, so the 2x pyramid
/// is mean-exact; nearest duplicates each pixel into a 2x2 block.
Plane upsample2x(const Plane& p, UpsampleKernel kernel = UpsampleKernel::bilinear);
ImageGrid upsample2x(const ImageGrid& g, UpsampleKernel kernel = UpsampleKernel::bilinear);

/// Picks a ladder entry uniformly at random and downsamples to it; identity
/// when the entry matches g's resolution. Ladder entries are heights reached
/// from g by repeated 2x halving.
ImageGrid random_resize(const ImageGrid& g, const std::vector<int>& ladder, Rng& rng);

/// size x size sub-grid at a uniformly random offset. The crop keeps the
/// original coordinate values of the region so patches retain absolute
/// position.
ImageGrid random_crop(const ImageGrid& g, int size, Rng& rng);

}  // namespace pddpm
