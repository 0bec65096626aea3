#include "pddpm/schedule.hpp"

#include <cmath>

namespace pddpm {

ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "linear") return ScheduleKind::linear;
  if (s == "cosine") return ScheduleKind::cosine;
  throw ParamError("unknown schedule kind: " + s);
}

std::string to_string(ScheduleKind k) {
  return k == ScheduleKind::linear ? "linear" : "cosine";
}

SigmaVariant sigma_variant_from_string(const std::string& s) {
  if (s == "beta") return SigmaVariant::beta;
  if (s == "beta_tilde") return SigmaVariant::beta_tilde;
  throw ParamError("unknown sigma variant: " + s);
}

std::string to_string(SigmaVariant v) {
  return v == SigmaVariant::beta ? "beta" : "beta_tilde";
}

namespace {

void fill_sigma(NoiseSchedule& s) {
  s.sigma.resize(s.steps);
  for (int t = 1; t <= s.steps; ++t) {
    if (s.sigma_variant == SigmaVariant::beta) {
      s.sigma[t - 1] = std::sqrt(s.beta_at(t));
    } else {
      // sigma_t^2 = (1 - abar_{t-1}) / (1 - abar_t) * beta_t; zero at t=1
      const double num = 1.0 - s.alpha_bar_at(t - 1);
      const double den = 1.0 - s.alpha_bar_at(t);
      s.sigma[t - 1] = std::sqrt(num / den * s.beta_at(t));
    }
  }
}

void fill_from_beta(NoiseSchedule& s) {
  s.alpha = 1.0 - s.beta;
  s.alpha_bar.resize(s.steps);
  double prod = 1.0;
  for (int i = 0; i < s.steps; ++i) {
    prod *= s.alpha[i];
    s.alpha_bar[i] = prod;
  }
  fill_sigma(s);
}

double cosine_profile(double u) {
  const double f = std::cos((u + 0.008) / 1.008 * M_PI / 2.0);
  return f * f;
}

}  // namespace

NoiseSchedule make_schedule(ScheduleKind kind, int steps, double beta_start, double beta_end,
                            SigmaVariant sigma_variant) {
  if (steps < 1) throw ParamError("schedule needs at least one step");
  NoiseSchedule s;
  s.steps = steps;
  s.kind = kind;
  s.sigma_variant = sigma_variant;
  s.beta.resize(steps);

  if (kind == ScheduleKind::linear) {
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
      throw ParamError("linear schedule requires 0 < beta_start <= beta_end < 1");
    for (int t = 1; t <= steps; ++t) {
      s.beta[t - 1] = steps == 1 ? beta_start
                                 : beta_start + static_cast<double>(t - 1) / (steps - 1) *
                                                    (beta_end - beta_start);
    }
  } else {
    const double f0 = cosine_profile(0.0);
    double prev = 1.0;
    for (int t = 1; t <= steps; ++t) {
      const double abar = cosine_profile(static_cast<double>(t) / steps) / f0;
      s.beta[t - 1] = std::min(1.0 - abar / prev, 0.999);
      prev = abar;
    }
  }

  fill_from_beta(s);
  s.source_step = Eigen::ArrayXi::LinSpaced(steps, 1, steps);
  s.source_steps = steps;
  return s;
}

NoiseSchedule respace(const NoiseSchedule& s, int n) {
  if (n < 1 || n > s.steps) throw ParamError("respace target must satisfy 1 <= n <= T");
  NoiseSchedule r;
  r.steps = n;
  r.kind = s.kind;
  r.sigma_variant = s.sigma_variant;
  r.beta.resize(n);
  r.alpha.resize(n);
  r.alpha_bar.resize(n);
  r.source_step.resize(n);
  r.source_steps = s.source_steps;

  int prev_idx = 0;
  for (int i = 1; i <= n; ++i) {
    const int idx = static_cast<int>(
        std::lround(static_cast<double>(i) * static_cast<double>(s.steps) / n));
    // Copy the parent alpha_bar verbatim so re-spacing preserves it exactly.
    r.alpha_bar[i - 1] = s.alpha_bar_at(idx);
    if (idx == prev_idx + 1) {
      r.beta[i - 1] = s.beta_at(idx);  // consecutive stride: identity on beta
    } else {
      r.beta[i - 1] = 1.0 - s.alpha_bar_at(idx) / s.alpha_bar_at(prev_idx);
    }
    r.alpha[i - 1] = 1.0 - r.beta[i - 1];
    r.source_step[i - 1] = s.source_step[idx - 1];
    prev_idx = idx;
  }

  fill_sigma(r);
  return r;
}

}  // namespace pddpm
