#include "pddpm/train.hpp"

#include <cmath>

namespace pddpm {

Adam::Adam(const ConvScoreNetF& net, double learning_rate, double clip)
    : lr_(learning_rate), clip_(clip), m_(net.zero_grads()), v_(net.zero_grads()) {}

void Adam::update(ConvScoreNetF& net, ConvScoreNetF::ParamSet& grads) {
  double sq = 0.0;
  grads.for_each([&](const ConvScoreNetF::Mat& g) { sq += static_cast<double>(g.squaredNorm()); });
  const double norm = std::sqrt(sq);
  if (clip_ > 0.0 && norm > clip_) {
    const float scale = static_cast<float>(clip_ / norm);
    grads.for_each([&](ConvScoreNetF::Mat& g) { g *= scale; });
  }

  ++step_;
  const float correction1 = 1.0f - std::pow(static_cast<float>(beta1_), static_cast<float>(step_));
  const float correction2 = 1.0f - std::pow(static_cast<float>(beta2_), static_cast<float>(step_));
  const float b1 = static_cast<float>(beta1_), b2 = static_cast<float>(beta2_);
  const float lr = static_cast<float>(lr_), eps = static_cast<float>(eps_);

  std::vector<ConvScoreNetF::Mat*> gs, ms, vs;
  grads.for_each([&](ConvScoreNetF::Mat& g) { gs.push_back(&g); });
  m_.for_each([&](ConvScoreNetF::Mat& m) { ms.push_back(&m); });
  v_.for_each([&](ConvScoreNetF::Mat& v) { vs.push_back(&v); });
  std::size_t i = 0;
  net.params().for_each([&](ConvScoreNetF::Mat& w) {
    ConvScoreNetF::Mat& g = *gs[i];
    ConvScoreNetF::Mat& m = *ms[i];
    ConvScoreNetF::Mat& v = *vs[i];
    m = b1 * m + (1.0f - b1) * g;
    v = (b2 * v.array() + (1.0f - b2) * g.array().square()).matrix();
    const auto m_hat = m.array() / correction1;
    const auto v_hat = v.array() / correction2;
    w.array() -= lr * m_hat / (v_hat.sqrt() + eps);
    ++i;
  });
}

double train_step(ConvScoreNetF& net, Adam& opt, const std::vector<ImageGrid>& batch,
                  const NoiseSchedule& schedule, const TrainOptions& options, Rng& rng) {
  if (batch.empty()) throw ParamError("training batch is empty");
  const NetConfig& cfg = net.config();

  ConvScoreNetF::ParamSet grads = net.zero_grads();
  double total_loss = 0.0;
  const float batch_scale = 1.0f / static_cast<float>(batch.size());

  for (const ImageGrid& item : batch) {
    ImageGrid resized =
        options.ladder.empty() ? item : random_resize(item, options.ladder, rng);
    if (options.patch_size > 0 && resized.height() > options.patch_size)
      resized = random_crop(resized, options.patch_size, rng);

    const Eigen::Index h = resized.height(), w = resized.width();
    const int t = rng.uniform_int(1, schedule.steps);
    const double abar = schedule.alpha_bar_at(t);
    const double root_ab = std::sqrt(abar), root_1mab = std::sqrt(1.0 - abar);

    const Planes z = rng.normal_planes(h, w, resized.channels());
    Planes x_t = resized.data;
    for (std::size_t c = 0; c < x_t.size(); ++c) x_t[c] = root_ab * x_t[c] + root_1mab * z[c];

    PositionalEncoding enc;
    if (cfg.degree > 0) enc = encode_coordinates(resized.coord_i, resized.coord_j, cfg.degree);

    const auto input = to_features<float>(cfg, x_t, enc);
    ConvScoreNetF::Tape tape;
    const auto z_pred =
        net.forward(input, static_cast<int>(h), static_cast<int>(w), schedule.source_time(t), &tape);

    const auto z_mat = planes_to_mat<float>(z);
    const float inv_n = 1.0f / static_cast<float>(z_mat.size());
    const ConvScoreNetF::Mat diff = z_pred - z_mat;
    total_loss += static_cast<double>(diff.squaredNorm()) * inv_n;

    // d(loss)/d(z_pred), loss averaged per element and over the batch
    const ConvScoreNetF::Mat dz = (2.0f * inv_n * batch_scale) * diff;
    net.backward(tape, dz, grads);
  }

  opt.update(net, grads);
  return total_loss / static_cast<double>(batch.size());
}

}  // namespace pddpm
