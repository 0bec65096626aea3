#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pddpm/metrics.hpp"

#include <cmath>

using namespace pddpm;

namespace {

SamplerConfig cost_config(int t_full, int t_scaled, double delta, std::vector<int> ladder) {
  SamplerConfig cfg;
  const NoiseSchedule base = make_schedule(ScheduleKind::linear, std::max(t_full, t_scaled),
                                           1e-4, 0.02, SigmaVariant::beta);
  cfg.schedule_f = respace(base, t_full);
  cfg.schedule_s = respace(base, t_scaled);
  cfg.t_full = t_full;
  cfg.t_scaled = t_scaled;
  cfg.delta_ts = delta;
  cfg.ladder = std::move(ladder);
  return cfg;
}

}  // namespace

TEST_CASE("pixel-weighted cost of the base configuration") {
  const SamplerConfig cfg = cost_config(1000, 100, 0.3, {8, 16, 32});
  const CostReport report = nfe_cost(cfg, 1000);
  REQUIRE(report.levels.size() == 3);
  CHECK(report.levels[0].pixel_weighted_nfe == 1000ull * 64);
  CHECK(report.levels[1].pixel_weighted_nfe == 30ull * 256);
  CHECK(report.levels[2].pixel_weighted_nfe == 30ull * 1024);
  CHECK(report.total_pyramidal == 102400ull);
  CHECK(report.total_full == 1024000ull);
  CHECK(report.speedup_ratio == 10.0);
}

TEST_CASE("single-level ladder with matching reference gives ratio one") {
  const SamplerConfig cfg = cost_config(100, 100, 0.3, {16});
  const CostReport report = nfe_cost(cfg, 100);
  CHECK(report.total_pyramidal == report.total_full);
  CHECK(report.speedup_ratio == 1.0);
}

TEST_CASE("short full pass with small delta approaches the paper's regime") {
  const SamplerConfig cfg = cost_config(100, 100, 0.1, {8, 16, 32});
  const CostReport report = nfe_cost(cfg, 1000);
  CHECK(report.total_pyramidal == 100ull * 64 + 10ull * 256 + 10ull * 1024);
  CHECK(report.total_pyramidal == 19200ull);
  CHECK(report.speedup_ratio == doctest::Approx(53.333).epsilon(1e-3));
}

TEST_CASE("totals are sums of their parts and the sweep decreases") {
  double previous = 1e18;
  for (int i = 1; i <= 5; ++i) {
    const SamplerConfig cfg = cost_config(1000, 100, 0.1 * i, {8, 16, 32});
    const CostReport report = nfe_cost(cfg, 1000);
    std::uint64_t sum = 0;
    for (const LevelCost& level : report.levels) sum += level.pixel_weighted_nfe;
    CHECK(sum == report.total_pyramidal);
    CHECK(report.speedup_ratio < previous);
    previous = report.speedup_ratio;
  }
}

TEST_CASE("sliced wasserstein is zero on identical sets and symmetric") {
  Rng rng(1);
  std::vector<Eigen::VectorXd> a;
  for (int i = 0; i < 50; ++i) a.push_back(Eigen::VectorXd::Random(16));
  Rng r1(7), r2(7);
  CHECK(sliced_wasserstein(a, a, 16, r1) == 0.0);

  std::vector<Eigen::VectorXd> b;
  for (int i = 0; i < 50; ++i) b.push_back(Eigen::VectorXd::Random(16));
  Rng r3(9), r4(9);
  CHECK(sliced_wasserstein(a, b, 16, r3) ==
        doctest::Approx(sliced_wasserstein(b, a, 16, r4)).epsilon(1e-12));
}

TEST_CASE("sliced wasserstein between two point masses is their distance") {
  std::vector<Eigen::VectorXd> a{Eigen::VectorXd::Constant(1, 0.0)};
  std::vector<Eigen::VectorXd> b{Eigen::VectorXd::Constant(1, 3.5)};
  Rng rng(2);
  CHECK(sliced_wasserstein(a, b, 8, rng) == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("sliced wasserstein recovers a unit shift in one dimension") {
  Rng rng(5);
  std::vector<Eigen::VectorXd> a, b;
  for (int i = 0; i < 10000; ++i) {
    a.push_back(Eigen::VectorXd::Constant(1, rng.normal()));
    b.push_back(Eigen::VectorXd::Constant(1, rng.normal() + 1.0));
  }
  Rng proj(11);
  CHECK(sliced_wasserstein(a, b, 64, proj) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("sliced wasserstein validates inputs") {
  std::vector<Eigen::VectorXd> a{Eigen::VectorXd::Zero(4)};
  std::vector<Eigen::VectorXd> b{Eigen::VectorXd::Zero(5)};
  Rng rng(1);
  CHECK_THROWS_AS(sliced_wasserstein(a, b, 4, rng), ShapeError);
  CHECK_THROWS_AS(sliced_wasserstein({}, a, 4, rng), ParamError);
}

TEST_CASE("moment errors concentrate on direct draws") {
  const GaussianMixtureData target = make_gaussian_blob(8, 8, 1, 0.6, 0.5);
  Rng rng(3);
  std::vector<Planes> samples;
  for (int i = 0; i < 10000; ++i) samples.push_back(sample_mixture(target, 0, rng));
  const auto [mean_err, var_err] = gaussian_moment_error(samples, target, 0);
  CHECK(mean_err < 0.05);
  CHECK(var_err < 0.1);
}

TEST_CASE("moment errors for degenerate sample sets") {
  const GaussianMixtureData target = make_unit_gaussian(4, 4, 1);
  const Planes mean = mixture_mean(target, 0);
  const std::vector<Planes> all_mean(100, mean);
  const auto [mean_err, var_err] = gaussian_moment_error(all_mean, target, 0);
  CHECK(mean_err == 0.0);
  CHECK(var_err == doctest::Approx(1.0).epsilon(1e-12));

  // point-mass target with exact samples: both errors vanish
  const GaussianMixtureData point = make_point_mass(4, 4, 1, 0.8);
  const std::vector<Planes> exact(10, mixture_mean(point, 0));
  const auto [m2, v2] = gaussian_moment_error(exact, point, 0);
  CHECK(m2 == 0.0);
  CHECK(v2 == 0.0);

  CHECK_THROWS_AS(gaussian_moment_error({}, target, 0), ParamError);
}

TEST_CASE("psnr identities") {
  Rng rng(4);
  const Planes a{rng.normal_plane(8, 8)};
  CHECK(std::isinf(psnr(a, a, 2.0)));

  const Planes base{Plane::Constant(8, 8, 0.1)};
  const Planes shifted{Plane::Constant(8, 8, 0.1 + 0.2)};  // range/10 apart
  CHECK(psnr(base, shifted, 2.0) == doctest::Approx(20.0).epsilon(1e-12));

  CHECK_THROWS_AS(psnr(a, Planes{Plane::Zero(4, 4)}, 2.0), ShapeError);
  CHECK_THROWS_AS(psnr(a, a, 0.0), ParamError);
}

TEST_CASE("psnr decreases as the error grows") {
  const Planes reference{Plane::Zero(8, 8)};
  double previous = std::numeric_limits<double>::infinity();
  for (double eps : {0.01, 0.05, 0.2, 0.7}) {
    const Planes other{Plane::Constant(8, 8, eps)};
    const double value = psnr(reference, other, 2.0);
    CHECK(value < previous);
    previous = value;
  }
}

TEST_CASE("ssim identities and anti-correlation") {
  Rng rng(6);
  Planes x{rng.normal_plane(8, 8)};
  x[0] -= x[0].mean();  // zero-mean
  CHECK(ssim(x, x, 2.0) == doctest::Approx(1.0).epsilon(1e-9));
  Planes neg{Plane(-x[0])};
  CHECK(ssim(x, neg, 2.0) < 0.0);
}
