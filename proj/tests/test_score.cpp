#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pddpm/score.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace pddpm;

namespace {

NoiseSchedule two_step_schedule() {
  // alpha_bar at t=2 is exactly 0.72
  return make_schedule(ScheduleKind::linear, 2, 0.1, 0.2, SigmaVariant::beta);
}

GaussianMixtureData point_mass_at(const Plane& mu) {
  GaussianMixtureData data;
  data.finest_h = mu.rows();
  data.finest_w = mu.cols();
  data.channels = 1;
  data.components.push_back({1.0, Planes{mu}, 0.0});
  data.validate();
  return data;
}

}  // namespace

TEST_CASE("unit gaussian oracle: score(x) = -x at every step") {
  const GaussianMixtureData data = make_unit_gaussian(8, 8, 1);
  const NoiseSchedule s = make_schedule(ScheduleKind::linear, 50, 1e-3, 0.2, SigmaVariant::beta);
  Rng rng(4);
  const Planes x{rng.normal_plane(8, 8)};
  for (int t : {1, 7, 25, 50}) {
    const Planes score = analytic_score(data, 0, x, t, s);
    CHECK(((score[0] + x[0]).abs() < 1e-12).all());
  }
}

TEST_CASE("point mass score at alpha_bar = 0.72") {
  Rng rng(8);
  const Plane mu = rng.normal_plane(4, 4);
  const GaussianMixtureData data = point_mass_at(mu);
  const NoiseSchedule s = two_step_schedule();
  const Planes x{rng.normal_plane(4, 4)};
  const Planes score = analytic_score(data, 0, x, 2, s);
  const Plane expected = -(x[0] - std::sqrt(0.72) * mu) / 0.28;
  CHECK(((score[0] - expected).abs() < 1e-12).all());
}

TEST_CASE("two equal components average at the symmetry midpoint") {
  const GaussianMixtureData data = make_two_mixture(4, 4, 1, 0.8, 0.05);
  const NoiseSchedule s = two_step_schedule();
  // midpoint of +pattern and -pattern is zero
  const Planes x{Plane::Zero(4, 4)};
  const Eigen::ArrayXd r = mixture_responsibilities(data, 0, x, 2, s);
  CHECK(r[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r[1] == doctest::Approx(0.5).epsilon(1e-12));

  const Planes score = analytic_score(data, 0, x, 2, s);
  Planes s0 = zeros_like(x), s1 = zeros_like(x);
  const double var = 0.72 * 0.05 + 0.28;
  const Planes m0 = component_mean_at_level(data.components[0], 0);
  const Planes m1 = component_mean_at_level(data.components[1], 0);
  s0[0] = -(x[0] - std::sqrt(0.72) * m0[0]) / var;
  s1[0] = -(x[0] - std::sqrt(0.72) * m1[0]) / var;
  CHECK(((score[0] - 0.5 * (s0[0] + s1[0])).abs() < 1e-12).all());
}

TEST_CASE("responsibilities sum to one away from symmetry") {
  const GaussianMixtureData data = make_two_mixture(8, 8, 1, 0.9, 0.02);
  const NoiseSchedule s = make_schedule(ScheduleKind::linear, 100, 1e-3, 0.2, SigmaVariant::beta);
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Planes x{rng.normal_plane(8, 8)};
    const int t = rng.uniform_int(1, 100);
    const Eigen::ArrayXd r = mixture_responsibilities(data, 0, x, t, s);
    CHECK(std::abs(r.sum() - 1.0) <= 1e-12);
    CHECK(r.minCoeff() >= 0.0);
  }
}

TEST_CASE("coarse-level moments match a directly constructed mixture") {
  // evaluating at level 1 must equal a level-0 mixture built from the
  // downsampled moments
  const GaussianMixtureData fine = make_gaussian_blob(8, 8, 1, 0.7, 0.3);
  GaussianMixtureData coarse;
  coarse.finest_h = 4;
  coarse.finest_w = 4;
  coarse.channels = 1;
  coarse.components.push_back(
      {1.0, component_mean_at_level(fine.components[0], 1), fine.components[0].variance / 4.0});
  coarse.validate();

  const NoiseSchedule s = two_step_schedule();
  Rng rng(23);
  const Planes x{rng.normal_plane(4, 4)};
  const Planes a = analytic_score(fine, 1, x, 2, s);
  const Planes b = analytic_score(coarse, 0, x, 2, s);
  CHECK(((a[0] - b[0]).abs() < 1e-12).all());
}

TEST_CASE("vjp of the unit gaussian oracle is -v") {
  const GaussianMixtureData data = make_unit_gaussian(4, 4, 1);
  const NoiseSchedule s = two_step_schedule();
  Rng rng(31);
  const Planes x{rng.normal_plane(4, 4)};
  const Planes v{rng.normal_plane(4, 4)};
  const Planes out = analytic_vjp(data, 0, x, 2, s, v);
  CHECK(((out[0] + v[0]).abs() < 1e-12).all());
}

TEST_CASE("vjp of a point mass is -v / (1 - alpha_bar)") {
  Rng rng(37);
  const Plane mu = rng.normal_plane(4, 4);
  const GaussianMixtureData data = point_mass_at(mu);
  const NoiseSchedule s = two_step_schedule();
  const Planes x{rng.normal_plane(4, 4)};
  const Planes v{rng.normal_plane(4, 4)};
  const Planes out = analytic_vjp(data, 0, x, 2, s, v);
  CHECK(((out[0] + v[0] / 0.28).abs() < 1e-11).all());
}

TEST_CASE("mixture vjp agrees with finite differences") {
  const GaussianMixtureData data = make_two_mixture(8, 8, 1, 0.6, 0.1);
  const NoiseSchedule s = make_schedule(ScheduleKind::linear, 100, 1e-3, 0.2, SigmaVariant::beta);
  Rng rng(41);
  for (int t : {3, 40, 90}) {
    const Planes x{0.5 * rng.normal_plane(8, 8)};
    const Planes v{rng.normal_plane(8, 8)};
    const Planes exact = analytic_vjp(data, 0, x, t, s, v);
    const Planes fd = testutil::fd_vjp(
        [&](const Planes& p) { return analytic_score(data, 0, p, t, s); }, x, v, 1e-4);
    CHECK(testutil::relative_error(exact, fd) < 1e-3);
  }
}

TEST_CASE("multichannel mixtures are supported") {
  const GaussianMixtureData data = make_checkerboard(8, 8, 3, 0.5, 0.2);
  const NoiseSchedule s = two_step_schedule();
  Rng rng(43);
  const Planes x = rng.normal_planes(8, 8, 3);
  const Planes score = analytic_score(data, 0, x, 1, s);
  CHECK(score.size() == 3);
  CHECK(all_finite(score));
}

TEST_CASE("step range is validated") {
  const GaussianMixtureData data = make_unit_gaussian(4, 4, 1);
  const NoiseSchedule s = two_step_schedule();
  const Planes x{Plane::Zero(4, 4)};
  CHECK_THROWS_AS(analytic_score(data, 0, x, 0, s), ParamError);
  CHECK_THROWS_AS(analytic_score(data, 0, x, 3, s), ParamError);
}

TEST_CASE("model adapter infers the level from the input shape") {
  const AnalyticScoreModel model(make_point_mass(16, 16, 1, 0.8));
  const NoiseSchedule s = two_step_schedule();
  const PositionalEncoding enc;  // analytic backend ignores the conditioning
  const Planes coarse{Plane::Zero(8, 8)};
  const Planes fine{Plane::Zero(16, 16)};
  CHECK(model.score(coarse, 2, s, enc)[0].rows() == 8);
  CHECK(model.score(fine, 2, s, enc)[0].rows() == 16);
  const Planes odd{Plane::Zero(12, 12)};
  CHECK_THROWS_AS(model.score(odd, 2, s, enc), ShapeError);
}
