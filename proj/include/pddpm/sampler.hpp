#pragma once

#include "pddpm/grid.hpp"
#include "pddpm/rng.hpp"
#include "pddpm/schedule.hpp"
#include "pddpm/score.hpp"
#include "pddpm/types.hpp"

#include <optional>
#include <vector>

namespace pddpm {

/// Pyramidal sampling configuration. The ladder lists square resolutions
/// coarse to fine, consecutive entries related by 2x.
struct SamplerConfig {
  NoiseSchedule schedule_f;  // full process, T = t_full
  NoiseSchedule schedule_s;  // scaled process, T = t_scaled
  int t_full = 1000;
  int t_scaled = 100;
  double delta_ts = 0.3;
  double lambda = 1.0;
  std::vector<int> ladder{8, 16, 32};
  int channels = 1;
  int encoding_degree = 6;
  std::uint64_t seed = 0;
  bool strict_paper_init = false;  // draw x_{T_f} ~ N(0, sigma_{T_f}^2 I) instead of N(0, I)
  bool exact_guidance = true;      // include the score-Jacobian term in Eq. 10's gradient
  UpsampleKernel upsample_kernel = UpsampleKernel::bilinear;

  /// Refinement steps per level: floor(T_s * delta_ts).
  int refine_steps() const { return static_cast<int>(t_scaled * delta_ts); }
  void validate() const;
};

/// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) z.
Planes forward_diffuse(const Planes& x0, int t, const NoiseSchedule& schedule, Rng& rng);
/// Deterministic variant with caller-provided z.
Planes forward_diffuse_with(const Planes& x0, int t, const NoiseSchedule& schedule,
                            const Planes& z);

/// One ancestral step: x_{t-1} = (x_t + (1 - alpha_t) s) / sqrt(alpha_t)
/// + sigma_t z, with the noise suppressed at t = 1.
Planes reverse_step(const ScoreModel& model, const Planes& x_t, int t,
                    const NoiseSchedule& schedule, const PositionalEncoding& enc, Rng& rng);
Planes reverse_step_with(const ScoreModel& model, const Planes& x_t, int t,
                         const NoiseSchedule& schedule, const PositionalEncoding& enc,
                         const Planes& z);

/// Denoised prediction: (x_t + (1 - abar_t) s) / sqrt(abar_t).
Planes predict_x0(const ScoreModel& model, const Planes& x_t, int t,
                  const NoiseSchedule& schedule, const PositionalEncoding& enc);

/// Exact gradient of ||D x0_hat(x_t) - lr_target||^2 w.r.t. x_t, with D the
/// d_levels-fold 2x block average. exact=false drops the score-Jacobian term
/// (the frozen-prediction approximation).
Planes guidance_gradient(const ScoreModel& model, const Planes& x_t, int t,
                         const NoiseSchedule& schedule, const PositionalEncoding& enc,
                         const Planes& lr_target, int d_levels, bool exact,
                         double* residual_norm = nullptr);

/// reverse_step followed by the guidance correction x_{t-1} -= lambda * grad.
/// lambda = 0 skips the gradient entirely and reduces bitwise to reverse_step.
Planes guided_reverse_step(const ScoreModel& model, const Planes& x_t, int t,
                           const NoiseSchedule& schedule, const PositionalEncoding& enc,
                           const Planes& lr_target, int d_levels, double lambda, Rng& rng,
                           bool exact = true, double* residual_norm = nullptr);

struct StepRecord {
  int level = 0;
  int resolution = 0;
  int step = 0;                  // t index within the level's reverse run
  std::uint64_t nfe = 0;         // cumulative score evaluations
  std::optional<double> residual;  // ||D x0_hat - lr_target|| when guided
};

struct SampleResult {
  ImageGrid finest;
  std::vector<ImageGrid> level_outputs;   // x0 after each level, coarse to fine
  std::vector<int> evals_per_level;       // score evaluations per level
  std::vector<StepRecord> trace;
  std::uint64_t total_evals = 0;
};

/// Pyramidal generation: full reverse diffusion at the coarsest resolution,
/// then per level upsample image and coordinates, forward-diffuse to
/// floor(T_s * delta_ts), and run the scaled reverse. Raises NumericError
/// with level and step when a non-finite value appears.
SampleResult generate_pyramidal(const ScoreModel& model, const SamplerConfig& cfg, Rng& rng);

/// Pyramidal super-resolution: starts from the low-resolution input (no full
/// reverse pass at the coarsest level) and applies the guided step against
/// the original input at every refinement step, composing D down to the
/// input's resolution.
SampleResult super_resolve_pyramidal(const ScoreModel& model, const SamplerConfig& cfg,
                                     const ImageGrid& lr_input, Rng& rng);

}  // namespace pddpm
