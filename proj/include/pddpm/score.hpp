#pragma once

#include "pddpm/grid.hpp"
#include "pddpm/mixture.hpp"
#include "pddpm/schedule.hpp"
#include "pddpm/types.hpp"

namespace pddpm {

/// Score-function backend: s(x_t, t) with positional conditioning, plus the
/// input VJP v^T ds/dx needed by gradient guidance. Implementations are
/// deterministic given (x_t, t, enc) and accept any resolution on the
/// ladder, returning the input shape.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;
  virtual Planes score(const Planes& x_t, int t, const NoiseSchedule& schedule,
                       const PositionalEncoding& enc) const = 0;
  virtual Planes vjp(const Planes& x_t, int t, const NoiseSchedule& schedule,
                     const PositionalEncoding& enc, const Planes& v) const = 0;
};

/// Posterior responsibilities of the mixture components for x_t at a ladder
/// level (log-sum-exp stabilized; sums to 1).
Eigen::ArrayXd mixture_responsibilities(const GaussianMixtureData& data, int level,
                                        const Planes& x_t, int t, const NoiseSchedule& schedule);

/// Exact score of the diffused marginal at a ladder level: each component
/// contributes N(sqrt(abar)*mu_l, (abar*var_l + 1 - abar) * I) with the
/// level-downsampled moments.
Planes analytic_score(const GaussianMixtureData& data, int level, const Planes& x_t, int t,
                      const NoiseSchedule& schedule);

/// v^T J with J the exact Jacobian of analytic_score at x_t.
Planes analytic_vjp(const GaussianMixtureData& data, int level, const Planes& x_t, int t,
                    const NoiseSchedule& schedule, const Planes& v);

/// ScoreModel over a mixture; the ladder level is inferred from the shape of
/// x_t relative to the mixture's finest resolution.
class AnalyticScoreModel : public ScoreModel {
 public:
  explicit AnalyticScoreModel(GaussianMixtureData data) : data_(std::move(data)) {
    data_.validate();
  }
  const GaussianMixtureData& data() const { return data_; }

  Planes score(const Planes& x_t, int t, const NoiseSchedule& schedule,
               const PositionalEncoding& enc) const override;
  Planes vjp(const Planes& x_t, int t, const NoiseSchedule& schedule,
             const PositionalEncoding& enc, const Planes& v) const override;

 private:
  GaussianMixtureData data_;
};

}  // namespace pddpm
