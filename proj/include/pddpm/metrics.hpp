#pragma once

#include "pddpm/mixture.hpp"
#include "pddpm/rng.hpp"
#include "pddpm/sampler.hpp"
#include "pddpm/types.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace pddpm {

/// Pixel-weighted sampling-cost accounting. All totals are exact integers.
struct LevelCost {
  int resolution = 0;
  std::int64_t steps = 0;
  std::uint64_t pixel_weighted_nfe = 0;  // steps * H * W
};

struct CostReport {
  std::vector<LevelCost> levels;
  std::uint64_t total_pyramidal = 0;
  std::uint64_t total_full = 0;  // reference steps * finest H * W
  double speedup_ratio = 0.0;
};

CostReport nfe_cost(const SamplerConfig& cfg, int t_full_reference);

/// Mean over random unit directions of the 1-D 2-Wasserstein distance
/// between the projected empirical distributions (sorted-match formula;
/// unequal sample counts are compared through interpolated quantiles).
double sliced_wasserstein(const std::vector<Eigen::VectorXd>& samples_a,
                          const std::vector<Eigen::VectorXd>& samples_b, int n_projections,
                          Rng& rng);

/// Max-abs error of the empirical mean and per-pixel variance against the
/// mixture's analytic moments at a ladder level.
std::pair<double, double> gaussian_moment_error(const std::vector<Planes>& samples,
                                                const GaussianMixtureData& target, int level);

/// 10 log10(range^2 / MSE); +infinity for identical images.
double psnr(const Planes& a, const Planes& b, double range);

/// Mean local SSIM over 8x8 uniform windows (stride 1), averaged across
/// channels; C1 = (0.01 range)^2, C2 = (0.03 range)^2.
double ssim(const Planes& a, const Planes& b, double range);

}  // namespace pddpm
