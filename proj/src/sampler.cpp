#include "pddpm/sampler.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace pddpm {

void SamplerConfig::validate() const {
  if (ladder.empty()) throw ParamError("resolution ladder is empty");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (ladder[i] < 1) throw ParamError("ladder resolutions must be positive");
    if (i > 0) {
      // consecutive entries are 2x apart; skip-level ablations jump 4x, 8x, ...
      const int ratio = ladder[i] / ladder[i - 1];
      if (ladder[i] != ratio * ladder[i - 1] || ratio < 2 || (ratio & (ratio - 1)) != 0)
        throw ParamError("ladder entries must increase by powers of 2");
    }
  }
  if (t_full < 1 || t_scaled < 1) throw ParamError("step counts must be positive");
  if (!(delta_ts > 0.0) || delta_ts > 1.0) throw ParamError("delta_ts must lie in (0, 1]");
  if (ladder.size() > 1 && refine_steps() < 1)
    throw ParamError("floor(T_s * delta_ts) must be at least 1");
  if (lambda < 0.0) throw ParamError("guidance weight must be nonnegative");
  if (channels < 1) throw ParamError("channel count must be positive");
  if (schedule_f.steps != t_full) throw ParamError("schedule_f length must equal T_f");
  if (schedule_s.steps != t_scaled) throw ParamError("schedule_s length must equal T_s");
}

namespace {

void check_step(int t, const NoiseSchedule& schedule) {
  if (t < 1 || t > schedule.steps) throw ParamError("step index out of range");
}

/// Shared reverse-step formula given an already computed score.
Planes reverse_from_score(const Planes& x_t, const Planes& s, int t,
                          const NoiseSchedule& schedule, const Planes* z) {
  const double alpha = schedule.alpha_at(t);
  const double inv_root_alpha = 1.0 / std::sqrt(alpha);
  const double sigma = schedule.sigma_at(t);
  Planes out = zeros_like(x_t);
  for (std::size_t c = 0; c < x_t.size(); ++c) {
    out[c] = inv_root_alpha * (x_t[c] + (1.0 - alpha) * s[c]);
    if (t > 1 && z) out[c] += sigma * (*z)[c];
  }
  return out;
}

Planes predict_x0_from_score(const Planes& x_t, const Planes& s, int t,
                             const NoiseSchedule& schedule) {
  const double abar = schedule.alpha_bar_at(t);
  const double inv_root = 1.0 / std::sqrt(abar);
  Planes out = zeros_like(x_t);
  for (std::size_t c = 0; c < x_t.size(); ++c) out[c] = inv_root * (x_t[c] + (1.0 - abar) * s[c]);
  return out;
}

void ensure_finite(const Planes& x, int level, int t) {
  if (!all_finite(x))
    throw NumericError("non-finite value at level " + std::to_string(level) + ", step " +
                       std::to_string(t));
}

}  // namespace

Planes forward_diffuse(const Planes& x0, int t, const NoiseSchedule& schedule, Rng& rng) {
  check_step(t, schedule);
  const Planes z = rng.normal_planes(x0[0].rows(), x0[0].cols(), x0.size());
  return forward_diffuse_with(x0, t, schedule, z);
}

Planes forward_diffuse_with(const Planes& x0, int t, const NoiseSchedule& schedule,
                            const Planes& z) {
  check_step(t, schedule);
  if (!same_shape(x0, z)) throw ShapeError("noise shape mismatch");
  const double abar = schedule.alpha_bar_at(t);
  const double a = std::sqrt(abar), b = std::sqrt(1.0 - abar);
  Planes out = zeros_like(x0);
  for (std::size_t c = 0; c < x0.size(); ++c) out[c] = a * x0[c] + b * z[c];
  return out;
}

Planes reverse_step(const ScoreModel& model, const Planes& x_t, int t,
                    const NoiseSchedule& schedule, const PositionalEncoding& enc, Rng& rng) {
  check_step(t, schedule);
  const Planes s = model.score(x_t, t, schedule, enc);
  if (t == 1) return reverse_from_score(x_t, s, t, schedule, nullptr);
  const Planes z = rng.normal_planes(x_t[0].rows(), x_t[0].cols(), x_t.size());
  return reverse_from_score(x_t, s, t, schedule, &z);
}

Planes reverse_step_with(const ScoreModel& model, const Planes& x_t, int t,
                         const NoiseSchedule& schedule, const PositionalEncoding& enc,
                         const Planes& z) {
  check_step(t, schedule);
  const Planes s = model.score(x_t, t, schedule, enc);
  return reverse_from_score(x_t, s, t, schedule, &z);
}

Planes predict_x0(const ScoreModel& model, const Planes& x_t, int t,
                  const NoiseSchedule& schedule, const PositionalEncoding& enc) {
  check_step(t, schedule);
  const Planes s = model.score(x_t, t, schedule, enc);
  return predict_x0_from_score(x_t, s, t, schedule);
}

Planes guidance_gradient(const ScoreModel& model, const Planes& x_t, int t,
                         const NoiseSchedule& schedule, const PositionalEncoding& enc,
                         const Planes& lr_target, int d_levels, bool exact,
                         double* residual_norm) {
  check_step(t, schedule);
  const Planes s = model.score(x_t, t, schedule, enc);
  const Planes x0_hat = predict_x0_from_score(x_t, s, t, schedule);
  Planes residual = downsample_levels(x0_hat, d_levels);
  if (!same_shape(residual, lr_target))
    throw ShapeError("guidance target does not match the downsampled prediction");
  for (std::size_t c = 0; c < residual.size(); ++c) residual[c] -= lr_target[c];
  if (residual_norm) *residual_norm = std::sqrt(squared_norm(residual));

  // grad = (2 / sqrt(abar)) (I + (1 - abar) ds/dx)^T D^T residual
  const Planes up = downsample_levels_adjoint(residual, d_levels);
  const double abar = schedule.alpha_bar_at(t);
  const double coef = 2.0 / std::sqrt(abar);
  Planes grad = zeros_like(x_t);
  if (exact) {
    const Planes jt_up = model.vjp(x_t, t, schedule, enc, up);
    for (std::size_t c = 0; c < grad.size(); ++c)
      grad[c] = coef * (up[c] + (1.0 - abar) * jt_up[c]);
  } else {
    for (std::size_t c = 0; c < grad.size(); ++c) grad[c] = coef * up[c];
  }
  return grad;
}

Planes guided_reverse_step(const ScoreModel& model, const Planes& x_t, int t,
                           const NoiseSchedule& schedule, const PositionalEncoding& enc,
                           const Planes& lr_target, int d_levels, double lambda, Rng& rng,
                           bool exact, double* residual_norm) {
  check_step(t, schedule);
  if (lambda < 0.0) throw ParamError("guidance weight must be nonnegative");

  // One score evaluation serves both the ancestral step and x0_hat.
  const Planes s = model.score(x_t, t, schedule, enc);
  Planes next;
  if (t == 1) {
    next = reverse_from_score(x_t, s, t, schedule, nullptr);
  } else {
    const Planes z = rng.normal_planes(x_t[0].rows(), x_t[0].cols(), x_t.size());
    next = reverse_from_score(x_t, s, t, schedule, &z);
  }
  if (lambda == 0.0) {
    if (residual_norm) *residual_norm = std::numeric_limits<double>::quiet_NaN();
    return next;
  }

  const Planes x0_hat = predict_x0_from_score(x_t, s, t, schedule);
  Planes residual = downsample_levels(x0_hat, d_levels);
  if (!same_shape(residual, lr_target))
    throw ShapeError("guidance target does not match the downsampled prediction");
  for (std::size_t c = 0; c < residual.size(); ++c) residual[c] -= lr_target[c];
  if (residual_norm) *residual_norm = std::sqrt(squared_norm(residual));

  const Planes up = downsample_levels_adjoint(residual, d_levels);
  const double abar = schedule.alpha_bar_at(t);
  const double coef = 2.0 / std::sqrt(abar);
  if (exact) {
    const Planes jt_up = model.vjp(x_t, t, schedule, enc, up);
    for (std::size_t c = 0; c < next.size(); ++c)
      next[c] -= lambda * coef * (up[c] + (1.0 - abar) * jt_up[c]);
  } else {
    for (std::size_t c = 0; c < next.size(); ++c) next[c] -= lambda * coef * up[c];
  }
  return next;
}

SampleResult generate_pyramidal(const ScoreModel& model, const SamplerConfig& cfg, Rng& rng) {
  cfg.validate();
  SampleResult result;

  const int coarsest = cfg.ladder.front();
  auto [ci, cj] = make_coordinates(coarsest, coarsest);
  PositionalEncoding enc = encode_coordinates(ci, cj, cfg.encoding_degree);

  // Gaussian start at the coarsest resolution
  const double init_sd = cfg.strict_paper_init ? cfg.schedule_f.sigma_at(cfg.t_full) : 1.0;
  Planes x = rng.normal_planes(coarsest, coarsest, cfg.channels);
  for (Plane& p : x) p *= init_sd;

  int evals = 0;
  for (int t = cfg.t_full; t >= 1; --t) {
    x = reverse_step(model, x, t, cfg.schedule_f, enc, rng);
    ++evals;
    ensure_finite(x, 0, t);
    result.trace.push_back({0, coarsest, t, result.total_evals + evals, std::nullopt});
  }
  result.evals_per_level.push_back(evals);
  result.total_evals += evals;
  result.level_outputs.push_back(ImageGrid{x, ci, cj});

  ImageGrid current{std::move(x), std::move(ci), std::move(cj)};
  for (std::size_t level = 1; level < cfg.ladder.size(); ++level) {
    while (current.height() < cfg.ladder[level])
      current = upsample2x(current, cfg.upsample_kernel);
    enc = encode_coordinates(current.coord_i, current.coord_j, cfg.encoding_degree);

    const int t_start = cfg.refine_steps();
    Planes xt = forward_diffuse(current.data, t_start, cfg.schedule_s, rng);
    evals = 0;
    for (int t = t_start; t >= 1; --t) {
      xt = reverse_step(model, xt, t, cfg.schedule_s, enc, rng);
      ++evals;
      ensure_finite(xt, static_cast<int>(level), t);
      result.trace.push_back({static_cast<int>(level), cfg.ladder[level], t,
                              result.total_evals + evals, std::nullopt});
    }
    result.evals_per_level.push_back(evals);
    result.total_evals += evals;
    current.data = std::move(xt);
    result.level_outputs.push_back(current);
  }

  result.finest = std::move(current);
  return result;
}

SampleResult super_resolve_pyramidal(const ScoreModel& model, const SamplerConfig& cfg,
                                     const ImageGrid& lr_input, Rng& rng) {
  cfg.validate();
  if (lr_input.height() != cfg.ladder.front() || lr_input.width() != cfg.ladder.front())
    throw ShapeError("low-resolution input is " + std::to_string(lr_input.height()) + "x" +
                     std::to_string(lr_input.width()) + " but the ladder starts at " +
                     std::to_string(cfg.ladder.front()) + "x" +
                     std::to_string(cfg.ladder.front()));
  if (static_cast<int>(lr_input.channels()) != cfg.channels)
    throw ShapeError("low-resolution input channel count does not match the configuration");

  SampleResult result;
  const Planes& target = lr_input.data;  // guidance anchors to the original input

  ImageGrid current = lr_input;
  result.level_outputs.push_back(current);
  result.evals_per_level.push_back(0);  // no full reverse pass at the coarsest level

  for (std::size_t level = 1; level < cfg.ladder.size(); ++level) {
    while (current.height() < cfg.ladder[level])
      current = upsample2x(current, cfg.upsample_kernel);
    int d_levels = 0;  // halvings from this level back to the input resolution
    for (int r = cfg.ladder[level]; r > cfg.ladder.front(); r /= 2) ++d_levels;
    const PositionalEncoding enc =
        encode_coordinates(current.coord_i, current.coord_j, cfg.encoding_degree);

    const int t_start = cfg.refine_steps();
    Planes xt = forward_diffuse(current.data, t_start, cfg.schedule_s, rng);
    int evals = 0;
    for (int t = t_start; t >= 1; --t) {
      double residual = 0.0;
      xt = guided_reverse_step(model, xt, t, cfg.schedule_s, enc, target, d_levels, cfg.lambda,
                               rng, cfg.exact_guidance, &residual);
      ++evals;
      ensure_finite(xt, static_cast<int>(level), t);
      result.trace.push_back({static_cast<int>(level), cfg.ladder[level], t,
                              result.total_evals + evals,
                              cfg.lambda == 0.0 ? std::nullopt : std::optional<double>(residual)});
    }
    result.evals_per_level.push_back(evals);
    result.total_evals += evals;
    current.data = std::move(xt);
    result.level_outputs.push_back(current);
  }

  result.finest = std::move(current);
  return result;
}

}  // namespace pddpm
