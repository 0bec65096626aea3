#pragma once

#include "pddpm/types.hpp"

#include <string>

namespace pddpm {

enum class ScheduleKind { linear, cosine };
enum class SigmaVariant { beta, beta_tilde };

ScheduleKind schedule_kind_from_string(const std::string& s);
std::string to_string(ScheduleKind k);
SigmaVariant sigma_variant_from_string(const std::string& s);
std::string to_string(SigmaVariant v);

/// Diffusion noise schedule. Immutable after construction; arrays are
/// 0-indexed internally while the *_at accessors take the 1-based step t.
struct NoiseSchedule {
  int steps = 0;  // T
  Eigen::ArrayXd beta;
  Eigen::ArrayXd alpha;      // 1 - beta
  Eigen::ArrayXd alpha_bar;  // cumulative product of alpha
  Eigen::ArrayXd sigma;      // per-step sampling noise scale
  ScheduleKind kind = ScheduleKind::linear;
  SigmaVariant sigma_variant = SigmaVariant::beta;

  // Provenance of each step in the schedule this one was re-spaced from;
  // identity for freshly constructed schedules. Used to condition a network
  // trained on the parent schedule.
  Eigen::ArrayXi source_step;
  int source_steps = 0;

  double beta_at(int t) const { return beta[t - 1]; }
  double alpha_at(int t) const { return alpha[t - 1]; }
  /// alpha_bar_at(0) is defined as 1 (the t=1 case of the beta_tilde sigma).
  double alpha_bar_at(int t) const { return t == 0 ? 1.0 : alpha_bar[t - 1]; }
  double sigma_at(int t) const { return sigma[t - 1]; }
  /// Step index in the original (pre-respacing) schedule, normalized to (0, 1].
  double source_time(int t) const {
    return static_cast<double>(source_step[t - 1]) / static_cast<double>(source_steps);
  }
};

/// Builds a schedule of T steps. Linear interpolates beta from beta_start to
/// beta_end; cosine ignores the beta range and follows the squared-cosine
/// alpha_bar profile with beta clipped to 0.999.
NoiseSchedule make_schedule(ScheduleKind kind, int steps, double beta_start, double beta_end,
                            SigmaVariant sigma_variant);

/// Re-spaces s to n steps. Selected parent indices are round(i*T/n) for
/// i=1..n (the last is exactly T); alpha_bar at those indices is preserved
/// exactly and beta is rebuilt from consecutive alpha_bar ratios.
NoiseSchedule respace(const NoiseSchedule& s, int n);

}  // namespace pddpm
