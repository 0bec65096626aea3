#pragma once

#include "pddpm/grid.hpp"
#include "pddpm/rng.hpp"
#include "pddpm/schedule.hpp"
#include "pddpm/score.hpp"
#include "pddpm/types.hpp"

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace pddpm {

struct NetConfig {
  int depth = 1;     // residual blocks
  int width = 32;    // channels per block (even; also the time-embedding size)
  int degree = 6;    // positional encoding degree L; 0 disables the conditioning
  int channels = 1;  // image channels C
  int steps = 1000;  // training schedule length, recorded in checkpoints

  int input_channels() const { return channels + (degree > 0 ? 4 * degree : 0); }
  void validate() const;
};

/// Same-padded k x k convolution on (channels x H*W) feature maps, computed
/// as a GEMM against the im2col patch matrix.
template <typename Scalar>
struct Conv2d {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Mat w;  // out_ch x (in_ch * k * k)
  Mat b;  // out_ch x 1
  int in_ch = 0, out_ch = 0, kernel = 3;

  /// Optionally keeps the patch matrix for the weight-gradient GEMM.
  Mat forward(const Mat& in, int h, int width, Mat* patches = nullptr) const;

  /// Pulls an output cotangent back to the input (w^T dout through the
  /// patch adjoint).
  Mat input_vjp(const Mat& dout, int h, int width) const;
};

/// Fully convolutional residual stack predicting the noise z from
/// concat(x_t, pos(i), pos(j)): a 3x3 stem, `depth` pre-activation residual
/// blocks with an additive per-channel time shift between the two block
/// convolutions, and a zero-initialized 3x3 head. No internal resolution
/// change, so any H x W flows through unchanged.
///
/// Feature maps are (channels x H*W) matrices with pixel p = r*W + c.
/// Scalar is float for training speed and double for derivative checks.
template <typename Scalar>
class ConvScoreNet {
 public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using ConvLayer = Conv2d<Scalar>;

  /// Every trainable tensor, in declaration (= serialization) order.
  struct ParamSet {
    ConvLayer stem;
    std::vector<ConvLayer> block_conv1, block_conv2;
    ConvLayer head;
    Mat temb_w1;  // width x width
    Mat temb_b1;  // width x 1
    Mat temb_w2;  // (depth * width) x width
    Mat temb_b2;  // (depth * width) x 1

    template <typename F>
    void for_each(F&& f) {
      f(stem.w), f(stem.b);
      for (std::size_t i = 0; i < block_conv1.size(); ++i) {
        f(block_conv1[i].w), f(block_conv1[i].b);
        f(block_conv2[i].w), f(block_conv2[i].b);
      }
      f(head.w), f(head.b);
      f(temb_w1), f(temb_b1), f(temb_w2), f(temb_b2);
    }
    template <typename F>
    void for_each(F&& f) const {
      f(stem.w), f(stem.b);
      for (std::size_t i = 0; i < block_conv1.size(); ++i) {
        f(block_conv1[i].w), f(block_conv1[i].b);
        f(block_conv2[i].w), f(block_conv2[i].b);
      }
      f(head.w), f(head.b);
      f(temb_w1), f(temb_b1), f(temb_w2), f(temb_b2);
    }
  };

  struct Tape {
    int h = 0, w = 0;
    double t_norm = 0.0;
    Mat p_stem;            // im2col of the input
    std::vector<Mat> u;    // residual stream entering block b (u[0] = stem out)
    std::vector<Mat> p_a;  // im2col of silu(u[b])
    std::vector<Mat> c1;   // first block conv output + time shift
    std::vector<Mat> p_g;  // im2col of silu(c1)
    Mat u_out;             // residual stream after the last block
    Mat p_head;            // im2col of silu(u_out)
    Mat e0, h1, a1;        // time embedding stages (column vectors)
  };

  ConvScoreNet(const NetConfig& cfg, Rng& rng);

  const NetConfig& config() const { return cfg_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  /// Closed form: matches the summed tensor sizes for any config.
  std::size_t parameter_count() const;

  /// z prediction for one item. t_norm is the step index in the training
  /// schedule normalized to (0, 1].
  Mat forward(const Mat& input, int h, int w, double t_norm, Tape* tape = nullptr) const;

  /// Cotangent of z pulled back to the full input stack.
  Mat backward_input(const Tape& tape, const Mat& dz) const;

  /// Accumulates weight-space gradients into grads (shapes mirror params);
  /// optionally also yields the input cotangent.
  void backward(const Tape& tape, const Mat& dz, ParamSet& grads, Mat* dinput = nullptr) const;

  ParamSet zero_grads() const;

  ConvScoreNet<double> to_double() const;
  ConvScoreNet<float> to_float() const;

 private:
  template <typename>
  friend class ConvScoreNet;

  Mat time_embedding_features(double t_norm) const;

  NetConfig cfg_;
  ParamSet params_;
};

using ConvScoreNetF = ConvScoreNet<float>;
using ConvScoreNetD = ConvScoreNet<double>;

/// Builds the (input_channels x H*W) feature stack for the net: x channels
/// first, then enc_i and enc_j when the config uses positional encoding.
template <typename Scalar>
typename ConvScoreNet<Scalar>::Mat to_features(const NetConfig& cfg, const Planes& x,
                                               const PositionalEncoding& enc) {
  const Eigen::Index h = x[0].rows(), w = x[0].cols();
  if (static_cast<int>(x.size()) != cfg.channels)
    throw ShapeError("image channel count does not match the network");
  typename ConvScoreNet<Scalar>::Mat f(cfg.input_channels(), h * w);
  int row = 0;
  auto put = [&](const Plane& p) {
    for (Eigen::Index r = 0; r < h; ++r)
      for (Eigen::Index c = 0; c < w; ++c) f(row, r * w + c) = static_cast<Scalar>(p(r, c));
    ++row;
  };
  for (const Plane& p : x) put(p);
  if (cfg.degree > 0) {
    if (enc.degree != cfg.degree) throw ShapeError("encoding degree does not match the network");
    if (enc.enc_i.empty() || enc.enc_i[0].rows() != h || enc.enc_i[0].cols() != w)
      throw ShapeError("encoding resolution does not match the input");
    for (const Plane& p : enc.enc_i) put(p);
    for (const Plane& p : enc.enc_j) put(p);
  }
  return f;
}

/// (channels x H*W) matrix of a plain channel stack, pixel p = r*W + c.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> planes_to_mat(const Planes& x) {
  const Eigen::Index h = x[0].rows(), w = x[0].cols();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> f(x.size(), h * w);
  for (std::size_t ch = 0; ch < x.size(); ++ch)
    for (Eigen::Index r = 0; r < h; ++r)
      for (Eigen::Index c = 0; c < w; ++c)
        f(static_cast<Eigen::Index>(ch), r * w + c) = static_cast<Scalar>(x[ch](r, c));
  return f;
}

template <typename Scalar>
Planes from_features(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& f,
                     Eigen::Index h, Eigen::Index w, std::size_t channels) {
  Planes out(channels, Plane(h, w));
  for (std::size_t ch = 0; ch < channels; ++ch)
    for (Eigen::Index r = 0; r < h; ++r)
      for (Eigen::Index c = 0; c < w; ++c) out[ch](r, c) = static_cast<double>(f(ch, r * w + c));
  return out;
}

/// s = -z / sqrt(1 - abar_t), conditioned on the positional encoding.
template <typename Scalar>
Planes net_score(const ConvScoreNet<Scalar>& net, const Planes& x_t, int t,
                 const NoiseSchedule& schedule, const PositionalEncoding& enc) {
  if (t < 1 || t > schedule.steps) throw ParamError("step index out of range");
  const Eigen::Index h = x_t[0].rows(), w = x_t[0].cols();
  const auto input = to_features<Scalar>(net.config(), x_t, enc);
  const auto z =
      net.forward(input, static_cast<int>(h), static_cast<int>(w), schedule.source_time(t));
  Planes score = from_features<Scalar>(z, h, w, x_t.size());
  const double coef = -1.0 / std::sqrt(1.0 - schedule.alpha_bar_at(t));
  for (Plane& p : score) p *= coef;
  return score;
}

/// v^T d(net_score)/d(x_t), via reverse mode through the network.
template <typename Scalar>
Planes net_vjp(const ConvScoreNet<Scalar>& net, const Planes& x_t, int t,
               const NoiseSchedule& schedule, const PositionalEncoding& enc, const Planes& v) {
  if (t < 1 || t > schedule.steps) throw ParamError("step index out of range");
  if (!same_shape(x_t, v)) throw ShapeError("cotangent shape mismatch");
  const Eigen::Index h = x_t[0].rows(), w = x_t[0].cols();
  const auto input = to_features<Scalar>(net.config(), x_t, enc);
  typename ConvScoreNet<Scalar>::Tape tape;
  net.forward(input, static_cast<int>(h), static_cast<int>(w), schedule.source_time(t), &tape);
  const double coef = -1.0 / std::sqrt(1.0 - schedule.alpha_bar_at(t));
  typename ConvScoreNet<Scalar>::Mat dz(net.config().channels, h * w);
  for (int ch = 0; ch < net.config().channels; ++ch)
    for (Eigen::Index r = 0; r < h; ++r)
      for (Eigen::Index c = 0; c < w; ++c)
        dz(ch, r * w + c) = static_cast<Scalar>(coef * v[ch](r, c));
  const auto dinput = net.backward_input(tape, dz);
  return from_features<Scalar>(
      typename ConvScoreNet<Scalar>::Mat(dinput.topRows(net.config().channels)), h, w, x_t.size());
}

/// ScoreModel adapter over a float network.
class NetScoreModel : public ScoreModel {
 public:
  explicit NetScoreModel(std::shared_ptr<const ConvScoreNetF> net) : net_(std::move(net)) {}
  const ConvScoreNetF& net() const { return *net_; }

  Planes score(const Planes& x_t, int t, const NoiseSchedule& schedule,
               const PositionalEncoding& enc) const override {
    return net_score(*net_, x_t, t, schedule, enc);
  }
  Planes vjp(const Planes& x_t, int t, const NoiseSchedule& schedule,
             const PositionalEncoding& enc, const Planes& v) const override {
    return net_vjp(*net_, x_t, t, schedule, enc, v);
  }

 private:
  std::shared_ptr<const ConvScoreNetF> net_;
};

}  // namespace pddpm
