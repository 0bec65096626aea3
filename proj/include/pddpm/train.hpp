#pragma once

#include "pddpm/convnet.hpp"
#include "pddpm/mixture.hpp"

#include <vector>

namespace pddpm {

/// First-order adaptive-moment optimizer with global gradient-norm clipping.
class Adam {
 public:
  explicit Adam(const ConvScoreNetF& net, double learning_rate = 1e-4, double clip = 1.0);

  void update(ConvScoreNetF& net, ConvScoreNetF::ParamSet& grads);

  double learning_rate() const { return lr_; }

 private:
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  double clip_;
  long step_ = 0;
  ConvScoreNetF::ParamSet m_, v_;
};

struct TrainOptions {
  std::vector<int> ladder;  // target resolutions for random resizing
  int patch_size = 0;       // > 0: crop resized items larger than this
};

/// One optimizer update on a batch: per item, random-resize (and crop in
/// patch mode), draw t and z, form x_t, and accumulate the backprop of the
/// per-element squared error between z and the prediction. Returns the mean
/// per-element loss of the batch.
double train_step(ConvScoreNetF& net, Adam& opt, const std::vector<ImageGrid>& batch,
                  const NoiseSchedule& schedule, const TrainOptions& options, Rng& rng);

}  // namespace pddpm
