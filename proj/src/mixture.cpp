#include "pddpm/mixture.hpp"

#include <cmath>

namespace pddpm {

void GaussianMixtureData::validate() const {
  if (components.empty()) throw ParamError("mixture needs at least one component");
  double total = 0.0;
  for (const auto& c : components) {
    if (c.weight < 0.0) throw ParamError("mixture weights must be nonnegative");
    if (c.variance < 0.0) throw ParamError("mixture variances must be nonnegative");
    if (c.mean.size() != channels || c.mean[0].rows() != finest_h || c.mean[0].cols() != finest_w)
      throw ShapeError("mixture mean does not match the finest resolution");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ParamError("mixture weights must sum to 1");
}

int level_for_resolution(const GaussianMixtureData& data, Eigen::Index h, Eigen::Index w) {
  Eigen::Index ch = data.finest_h, cw = data.finest_w;
  int level = 0;
  while (ch > h || cw > w) {
    if (ch % 2 != 0 || cw % 2 != 0) throw ShapeError("resolution not on the 2x ladder");
    ch /= 2;
    cw /= 2;
    ++level;
  }
  if (ch != h || cw != w) throw ShapeError("resolution not on the 2x ladder");
  return level;
}

Planes component_mean_at_level(const MixtureComponent& c, int level) {
  return downsample_levels(c.mean, level);
}

double component_variance_at_level(const MixtureComponent& c, int level) {
  return c.variance / std::pow(4.0, level);
}

Planes mixture_mean(const GaussianMixtureData& data, int level) {
  Planes mean = constant_planes(data.finest_h >> level, data.finest_w >> level, data.channels, 0.0);
  for (const auto& c : data.components) {
    const Planes m = component_mean_at_level(c, level);
    for (std::size_t ch = 0; ch < mean.size(); ++ch) mean[ch] += c.weight * m[ch];
  }
  return mean;
}

Planes mixture_variance(const GaussianMixtureData& data, int level) {
  // second moment minus squared mean, per pixel
  const Planes mean = mixture_mean(data, level);
  Planes var = constant_planes(data.finest_h >> level, data.finest_w >> level, data.channels, 0.0);
  for (const auto& c : data.components) {
    const Planes m = component_mean_at_level(c, level);
    const double v = component_variance_at_level(c, level);
    for (std::size_t ch = 0; ch < var.size(); ++ch) var[ch] += c.weight * (v + m[ch].square());
  }
  for (std::size_t ch = 0; ch < var.size(); ++ch) var[ch] -= mean[ch].square();
  return var;
}

Planes sample_mixture(const GaussianMixtureData& data, int level, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t pick = data.components.size() - 1;
  for (std::size_t k = 0; k < data.components.size(); ++k) {
    acc += data.components[k].weight;
    if (u < acc) {
      pick = k;
      break;
    }
  }
  const MixtureComponent& comp = data.components[pick];
  Planes x = component_mean_at_level(comp, level);
  const double sd = std::sqrt(component_variance_at_level(comp, level));
  if (sd > 0.0)
    for (Plane& p : x) p += sd * rng.normal_plane(p.rows(), p.cols());
  return x;
}

ImageGrid sample_grid(const GaussianMixtureData& data, Rng& rng) {
  return make_grid(sample_mixture(data, 0, rng));
}

namespace {

Plane gaussian_bump(Eigen::Index h, Eigen::Index w, double cy, double cx, double radius) {
  auto [ci, cj] = make_coordinates(h, w);
  return (-((ci - cy).square() + (cj - cx).square()) / (2.0 * radius * radius)).exp();
}

}  // namespace

GaussianMixtureData make_point_mass(Eigen::Index h, Eigen::Index w, std::size_t channels,
                                    double amplitude) {
  // smooth asymmetric pattern; values stay within [-amplitude, amplitude]
  const Plane pattern = amplitude * (gaussian_bump(h, w, 0.35, 0.35, 0.18) -
                                     gaussian_bump(h, w, 0.70, 0.65, 0.22));
  GaussianMixtureData data;
  data.finest_h = h;
  data.finest_w = w;
  data.channels = channels;
  data.components.push_back({1.0, Planes(channels, pattern), 0.0});
  data.validate();
  return data;
}

GaussianMixtureData make_gaussian_blob(Eigen::Index h, Eigen::Index w, std::size_t channels,
                                       double amplitude, double variance) {
  const Plane pattern = amplitude * gaussian_bump(h, w, 0.5, 0.5, 0.25);
  GaussianMixtureData data;
  data.finest_h = h;
  data.finest_w = w;
  data.channels = channels;
  data.components.push_back({1.0, Planes(channels, pattern), variance});
  data.validate();
  return data;
}

GaussianMixtureData make_two_mixture(Eigen::Index h, Eigen::Index w, std::size_t channels,
                                     double amplitude, double variance) {
  const Plane pattern = amplitude * gaussian_bump(h, w, 0.3, 0.3, 0.2);
  GaussianMixtureData data;
  data.finest_h = h;
  data.finest_w = w;
  data.channels = channels;
  data.components.push_back({0.5, Planes(channels, pattern), variance});
  data.components.push_back({0.5, Planes(channels, Plane(-pattern)), variance});
  data.validate();
  return data;
}

GaussianMixtureData make_checkerboard(Eigen::Index h, Eigen::Index w, std::size_t channels,
                                      double amplitude, double variance) {
  const Eigen::Index cell = std::max<Eigen::Index>(1, h / 4);
  Plane pattern(h, w);
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c)
      pattern(r, c) = ((r / cell + c / cell) % 2 == 0 ? amplitude : -amplitude);
  GaussianMixtureData data;
  data.finest_h = h;
  data.finest_w = w;
  data.channels = channels;
  data.components.push_back({1.0, Planes(channels, pattern), variance});
  data.validate();
  return data;
}

GaussianMixtureData make_unit_gaussian(Eigen::Index h, Eigen::Index w, std::size_t channels) {
  GaussianMixtureData data;
  data.finest_h = h;
  data.finest_w = w;
  data.channels = channels;
  data.components.push_back({1.0, constant_planes(h, w, channels, 0.0), 1.0});
  data.validate();
  return data;
}

GaussianMixtureData make_toy_dataset(const std::string& name, Eigen::Index h, Eigen::Index w,
                                     std::size_t channels, double amplitude, double variance) {
  if (name == "point_mass") return make_point_mass(h, w, channels, amplitude);
  if (name == "gaussian_blob") return make_gaussian_blob(h, w, channels, amplitude, variance);
  if (name == "two_mixture") return make_two_mixture(h, w, channels, amplitude, variance);
  if (name == "checkerboard") return make_checkerboard(h, w, channels, amplitude, variance);
  if (name == "unit_gaussian") return make_unit_gaussian(h, w, channels);
  throw ParamError("unknown toy dataset: " + name);
}

}  // namespace pddpm
