#include "pddpm/score.hpp"

#include <cmath>
#include <vector>

namespace pddpm {

namespace {

void check_step(int t, const NoiseSchedule& schedule) {
  if (t < 1 || t > schedule.steps) throw ParamError("step index out of range");
}

struct LevelMoments {
  std::vector<Planes> means;          // sqrt(abar) * mu_l per component
  std::vector<double> variances;      // abar * var_l + (1 - abar)
  std::vector<double> log_weights;
};

LevelMoments diffused_moments(const GaussianMixtureData& data, int level, int t,
                              const NoiseSchedule& schedule) {
  const double abar = schedule.alpha_bar_at(t);
  const double root_abar = std::sqrt(abar);
  LevelMoments m;
  for (const auto& comp : data.components) {
    Planes mean = component_mean_at_level(comp, level);
    for (Plane& p : mean) p *= root_abar;
    m.means.push_back(std::move(mean));
    m.variances.push_back(abar * component_variance_at_level(comp, level) + (1.0 - abar));
    m.log_weights.push_back(std::log(comp.weight));
  }
  return m;
}

Eigen::ArrayXd responsibilities_from(const LevelMoments& m, const Planes& x_t) {
  const std::size_t k = m.means.size();
  const double n = static_cast<double>(element_count(x_t));
  Eigen::ArrayXd logp(k);
  for (std::size_t i = 0; i < k; ++i) {
    double sq = 0.0;
    for (std::size_t c = 0; c < x_t.size(); ++c) sq += (x_t[c] - m.means[i][c]).square().sum();
    logp[i] = m.log_weights[i] - 0.5 * n * std::log(2.0 * M_PI * m.variances[i]) -
              0.5 * sq / m.variances[i];
  }
  const double peak = logp.maxCoeff();
  Eigen::ArrayXd r = (logp - peak).exp();
  return r / r.sum();
}

}  // namespace

Eigen::ArrayXd mixture_responsibilities(const GaussianMixtureData& data, int level,
                                        const Planes& x_t, int t, const NoiseSchedule& schedule) {
  check_step(t, schedule);
  return responsibilities_from(diffused_moments(data, level, t, schedule), x_t);
}

Planes analytic_score(const GaussianMixtureData& data, int level, const Planes& x_t, int t,
                      const NoiseSchedule& schedule) {
  check_step(t, schedule);
  const LevelMoments m = diffused_moments(data, level, t, schedule);
  const Eigen::ArrayXd r = responsibilities_from(m, x_t);
  Planes score = zeros_like(x_t);
  for (std::size_t i = 0; i < m.means.size(); ++i) {
    const double coef = r[i] / m.variances[i];
    for (std::size_t c = 0; c < x_t.size(); ++c) score[c] -= coef * (x_t[c] - m.means[i][c]);
  }
  return score;
}

Planes analytic_vjp(const GaussianMixtureData& data, int level, const Planes& x_t, int t,
                    const NoiseSchedule& schedule, const Planes& v) {
  check_step(t, schedule);
  if (!same_shape(x_t, v)) throw ShapeError("cotangent shape mismatch");
  const LevelMoments m = diffused_moments(data, level, t, schedule);
  const Eigen::ArrayXd r = responsibilities_from(m, x_t);

  // J = -sum_k r_k / s_k * I + sum_k r_k g_k g_k^T - s s^T  (symmetric),
  // with g_k = -(x - m_k)/s_k and s = sum_k r_k g_k the score itself.
  std::vector<Planes> g(m.means.size());
  Planes score = zeros_like(x_t);
  double diag = 0.0;
  for (std::size_t i = 0; i < m.means.size(); ++i) {
    g[i] = zeros_like(x_t);
    for (std::size_t c = 0; c < x_t.size(); ++c)
      g[i][c] = -(x_t[c] - m.means[i][c]) / m.variances[i];
    for (std::size_t c = 0; c < x_t.size(); ++c) score[c] += r[i] * g[i][c];
    diag += r[i] / m.variances[i];
  }

  Planes out = zeros_like(v);
  for (std::size_t c = 0; c < v.size(); ++c) out[c] = -diag * v[c];
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double gv = dot(g[i], v);
    for (std::size_t c = 0; c < v.size(); ++c) out[c] += r[i] * gv * g[i][c];
  }
  const double sv = dot(score, v);
  for (std::size_t c = 0; c < v.size(); ++c) out[c] -= sv * score[c];
  return out;
}

Planes AnalyticScoreModel::score(const Planes& x_t, int t, const NoiseSchedule& schedule,
                                 const PositionalEncoding&) const {
  const int level = level_for_resolution(data_, x_t[0].rows(), x_t[0].cols());
  return analytic_score(data_, level, x_t, t, schedule);
}

Planes AnalyticScoreModel::vjp(const Planes& x_t, int t, const NoiseSchedule& schedule,
                               const PositionalEncoding&, const Planes& v) const {
  const int level = level_for_resolution(data_, x_t[0].rows(), x_t[0].cols());
  return analytic_vjp(data_, level, x_t, t, schedule, v);
}

}  // namespace pddpm
