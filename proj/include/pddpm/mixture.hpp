#pragma once

#include "pddpm/grid.hpp"
#include "pddpm/rng.hpp"
#include "pddpm/types.hpp"

#include <string>
#include <vector>

namespace pddpm {

/// Mixture component with isotropic covariance variance * I (pixel-value^2
/// units). Scalar covariance keeps every 2x block-average marginal closed
/// form: level l has mean D^l(mu) and covariance (variance / 4^l) * I.
struct MixtureComponent {
  double weight = 1.0;
  Planes mean;      // finest-resolution image
  double variance = 0.0;
};

struct GaussianMixtureData {
  std::vector<MixtureComponent> components;
  Eigen::Index finest_h = 0;
  Eigen::Index finest_w = 0;
  std::size_t channels = 1;

  void validate() const;
};

/// Number of 2x downsamplings from the finest resolution to (h, w);
/// ShapeError when (h, w) is not on the dyadic ladder.
int level_for_resolution(const GaussianMixtureData& data, Eigen::Index h, Eigen::Index w);

/// Component moments at a ladder level.
Planes component_mean_at_level(const MixtureComponent& c, int level);
double component_variance_at_level(const MixtureComponent& c, int level);

/// Mixture mean and per-pixel variance at a level (moments combined
/// analytically across components).
Planes mixture_mean(const GaussianMixtureData& data, int level);
Planes mixture_variance(const GaussianMixtureData& data, int level);

/// Draws x0 from the mixture at the given level.
Planes sample_mixture(const GaussianMixtureData& data, int level, Rng& rng);

/// Finest-resolution draw with fresh full-frame coordinates attached.
ImageGrid sample_grid(const GaussianMixtureData& data, Rng& rng);

// Built-in toy datasets (deterministic patterns; sampling uses the caller's
// seeded rng).
GaussianMixtureData make_point_mass(Eigen::Index h, Eigen::Index w, std::size_t channels,
                                    double amplitude);
GaussianMixtureData make_gaussian_blob(Eigen::Index h, Eigen::Index w, std::size_t channels,
                                       double amplitude, double variance);
GaussianMixtureData make_two_mixture(Eigen::Index h, Eigen::Index w, std::size_t channels,
                                     double amplitude, double variance);
GaussianMixtureData make_checkerboard(Eigen::Index h, Eigen::Index w, std::size_t channels,
                                      double amplitude, double variance);
GaussianMixtureData make_unit_gaussian(Eigen::Index h, Eigen::Index w, std::size_t channels);

/// Factory keyed by the config-file dataset name.
GaussianMixtureData make_toy_dataset(const std::string& name, Eigen::Index h, Eigen::Index w,
                                     std::size_t channels, double amplitude, double variance);

}  // namespace pddpm
