#include "pddpm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pddpm {

CostReport nfe_cost(const SamplerConfig& cfg, int t_full_reference) {
  cfg.validate();
  if (t_full_reference < 1) throw ParamError("reference step count must be positive");
  CostReport report;
  for (std::size_t level = 0; level < cfg.ladder.size(); ++level) {
    LevelCost cost;
    cost.resolution = cfg.ladder[level];
    cost.steps = level == 0 ? cfg.t_full : cfg.refine_steps();
    cost.pixel_weighted_nfe = static_cast<std::uint64_t>(cost.steps) *
                              static_cast<std::uint64_t>(cost.resolution) *
                              static_cast<std::uint64_t>(cost.resolution);
    report.total_pyramidal += cost.pixel_weighted_nfe;
    report.levels.push_back(cost);
  }
  const std::uint64_t finest = static_cast<std::uint64_t>(cfg.ladder.back());
  report.total_full = static_cast<std::uint64_t>(t_full_reference) * finest * finest;
  report.speedup_ratio =
      static_cast<double>(report.total_full) / static_cast<double>(report.total_pyramidal);
  return report;
}

namespace {

std::vector<double> project_and_sort(const std::vector<Eigen::VectorXd>& samples,
                                     const Eigen::VectorXd& direction) {
  std::vector<double> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out[i] = direction.dot(samples[i]);
  std::sort(out.begin(), out.end());
  return out;
}

double quantile(const std::vector<double>& sorted, double q) {
  // interpolated empirical quantile at q in [0, 1]
  const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return (1.0 - frac) * sorted[lo] + frac * sorted[hi];
}

}  // namespace

double sliced_wasserstein(const std::vector<Eigen::VectorXd>& samples_a,
                          const std::vector<Eigen::VectorXd>& samples_b, int n_projections,
                          Rng& rng) {
  if (samples_a.empty() || samples_b.empty()) throw ParamError("sample sets must be nonempty");
  if (n_projections < 1) throw ParamError("need at least one projection");
  const Eigen::Index dim = samples_a[0].size();
  if (samples_b[0].size() != dim) throw ShapeError("sample dimensionality mismatch");

  double total = 0.0;
  for (int k = 0; k < n_projections; ++k) {
    Eigen::VectorXd direction(dim);
    for (Eigen::Index i = 0; i < dim; ++i) direction[i] = rng.normal();
    direction /= direction.norm();

    const std::vector<double> pa = project_and_sort(samples_a, direction);
    const std::vector<double> pb = project_and_sort(samples_b, direction);

    double sq = 0.0;
    if (pa.size() == pb.size()) {
      for (std::size_t i = 0; i < pa.size(); ++i) sq += (pa[i] - pb[i]) * (pa[i] - pb[i]);
      sq /= static_cast<double>(pa.size());
    } else {
      const std::size_t m = std::max(pa.size(), pb.size());
      for (std::size_t i = 0; i < m; ++i) {
        const double q = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
        const double d = quantile(pa, q) - quantile(pb, q);
        sq += d * d;
      }
      sq /= static_cast<double>(m);
    }
    total += std::sqrt(sq);
  }
  return total / n_projections;
}

std::pair<double, double> gaussian_moment_error(const std::vector<Planes>& samples,
                                                const GaussianMixtureData& target, int level) {
  if (samples.empty()) throw ParamError("sample set is empty");
  const Planes target_mean = mixture_mean(target, level);
  const Planes target_var = mixture_variance(target, level);
  if (!same_shape(samples[0], target_mean))
    throw ShapeError("samples do not match the target level resolution");

  const double n = static_cast<double>(samples.size());
  Planes mean = zeros_like(target_mean);
  for (const Planes& s : samples)
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += s[c] / n;

  Planes var = zeros_like(target_mean);
  if (samples.size() > 1) {
    for (const Planes& s : samples)
      for (std::size_t c = 0; c < var.size(); ++c) var[c] += (s[c] - mean[c]).square() / (n - 1.0);
  }

  double mean_err = 0.0, var_err = 0.0;
  for (std::size_t c = 0; c < mean.size(); ++c) {
    mean_err = std::max(mean_err, (mean[c] - target_mean[c]).abs().maxCoeff());
    var_err = std::max(var_err, (var[c] - target_var[c]).abs().maxCoeff());
  }
  return {mean_err, var_err};
}

double psnr(const Planes& a, const Planes& b, double range) {
  if (!same_shape(a, b)) throw ShapeError("image shape mismatch");
  if (!(range > 0.0)) throw ParamError("range must be positive");
  double mse = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) mse += (a[c] - b[c]).square().sum();
  mse /= static_cast<double>(element_count(a));
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(range * range / mse);
}

double ssim(const Planes& a, const Planes& b, double range) {
  if (!same_shape(a, b)) throw ShapeError("image shape mismatch");
  if (!(range > 0.0)) throw ParamError("range must be positive");
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);
  const Eigen::Index h = a[0].rows(), w = a[0].cols();
  const Eigen::Index win = std::min<Eigen::Index>(8, std::min(h, w));
  const double n = static_cast<double>(win * win);

  double total = 0.0;
  for (std::size_t ch = 0; ch < a.size(); ++ch) {
    double channel_total = 0.0;
    int windows = 0;
    for (Eigen::Index r = 0; r + win <= h; ++r)
      for (Eigen::Index c = 0; c + win <= w; ++c) {
        const auto wa = a[ch].block(r, c, win, win);
        const auto wb = b[ch].block(r, c, win, win);
        const double ma = wa.mean(), mb = wb.mean();
        const double va = (wa - ma).square().sum() / n;
        const double vb = (wb - mb).square().sum() / n;
        const double cov = ((wa - ma) * (wb - mb)).sum() / n;
        channel_total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                         ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++windows;
      }
    total += channel_total / windows;
  }
  return total / static_cast<double>(a.size());
}

}  // namespace pddpm
