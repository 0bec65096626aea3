#include "pddpm/convnet.hpp"

#include <cmath>

namespace pddpm {

void NetConfig::validate() const {
  if (depth < 1) throw ParamError("network depth must be positive");
  if (width < 2 || width % 2 != 0) throw ParamError("network width must be even and >= 2");
  if (degree < 0) throw ParamError("encoding degree must be nonnegative");
  if (channels < 1) throw ParamError("network channel count must be positive");
  if (steps < 1) throw ParamError("network schedule length must be positive");
}

namespace {

template <typename Scalar>
Scalar silu(Scalar x) {
  const Scalar s = Scalar(1) / (Scalar(1) + std::exp(-x));
  return x * s;
}

template <typename Scalar>
Scalar silu_grad(Scalar x) {
  const Scalar s = Scalar(1) / (Scalar(1) + std::exp(-x));
  return s * (Scalar(1) + x * (Scalar(1) - s));
}

template <typename Mat>
Mat silu_map(const Mat& m) {
  return m.unaryExpr([](auto x) { return silu(x); });
}

template <typename Mat>
Mat silu_grad_map(const Mat& m) {
  return m.unaryExpr([](auto x) { return silu_grad(x); });
}

/// Patch matrix for a same-padded k x k convolution: row (c*k + ky)*k + kx,
/// column p = r*W + c. Out-of-range taps stay zero.
template <typename Mat>
void im2col(const Mat& in, int h, int w, int k, Mat& patches) {
  const int in_ch = static_cast<int>(in.rows());
  const int off = k / 2;
  patches.setZero(static_cast<Eigen::Index>(in_ch) * k * k, static_cast<Eigen::Index>(h) * w);
  for (int c = 0; c < in_ch; ++c)
    for (int ky = 0; ky < k; ++ky) {
      const int dy = ky - off;
      for (int kx = 0; kx < k; ++kx) {
        const int dx = kx - off;
        const Eigen::Index row = (static_cast<Eigen::Index>(c) * k + ky) * k + kx;
        for (int r = 0; r < h; ++r) {
          const int rr = r + dy;
          if (rr < 0 || rr >= h) continue;
          const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
          if (x1 <= x0) continue;
          patches.block(row, static_cast<Eigen::Index>(r) * w + x0, 1, x1 - x0) =
              in.block(c, static_cast<Eigen::Index>(rr) * w + x0 + dx, 1, x1 - x0);
        }
      }
    }
}

/// Adjoint of im2col: scatter-adds patch cotangents back onto the image.
template <typename Mat>
void col2im(const Mat& dpatches, int h, int w, int k, Mat& din) {
  const int in_ch = static_cast<int>(dpatches.rows()) / (k * k);
  const int off = k / 2;
  din.setZero(in_ch, static_cast<Eigen::Index>(h) * w);
  for (int c = 0; c < in_ch; ++c)
    for (int ky = 0; ky < k; ++ky) {
      const int dy = ky - off;
      for (int kx = 0; kx < k; ++kx) {
        const int dx = kx - off;
        const Eigen::Index row = (static_cast<Eigen::Index>(c) * k + ky) * k + kx;
        for (int r = 0; r < h; ++r) {
          const int rr = r + dy;
          if (rr < 0 || rr >= h) continue;
          const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
          if (x1 <= x0) continue;
          din.block(c, static_cast<Eigen::Index>(rr) * w + x0 + dx, 1, x1 - x0) +=
              dpatches.block(row, static_cast<Eigen::Index>(r) * w + x0, 1, x1 - x0);
        }
      }
    }
}

}  // namespace

template <typename Scalar>
typename Conv2d<Scalar>::Mat Conv2d<Scalar>::forward(const Mat& in, int h, int width,
                                                     Mat* patches) const {
  if (in.rows() != in_ch) throw ShapeError("convolution input channel mismatch");
  Mat local;
  Mat& p = patches ? *patches : local;
  im2col(in, h, width, kernel, p);
  Mat out = w * p;
  out.colwise() += b.col(0);
  return out;
}

template <typename Scalar>
typename Conv2d<Scalar>::Mat Conv2d<Scalar>::input_vjp(const Mat& dout, int h, int width) const {
  const Mat dpatches = w.transpose() * dout;
  Mat din;
  col2im(dpatches, h, width, kernel, din);
  return din;
}

template struct Conv2d<float>;
template struct Conv2d<double>;

template <typename Scalar>
ConvScoreNet<Scalar>::ConvScoreNet(const NetConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();

  auto he_init = [&rng](Mat& m, Eigen::Index rows, Eigen::Index cols, double fan_in) {
    const double sd = std::sqrt(2.0 / fan_in);
    m.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = static_cast<Scalar>(sd * rng.normal());
  };
  auto make_conv = [&](ConvLayer& layer, int in_ch, int out_ch, bool zero) {
    layer.in_ch = in_ch;
    layer.out_ch = out_ch;
    layer.kernel = 3;
    if (zero) {
      layer.w = Mat::Zero(out_ch, static_cast<Eigen::Index>(in_ch) * 9);
    } else {
      he_init(layer.w, out_ch, static_cast<Eigen::Index>(in_ch) * 9, in_ch * 9.0);
    }
    layer.b = Mat::Zero(out_ch, 1);
  };

  make_conv(params_.stem, cfg_.input_channels(), cfg_.width, false);
  params_.block_conv1.resize(cfg_.depth);
  params_.block_conv2.resize(cfg_.depth);
  for (int b = 0; b < cfg_.depth; ++b) {
    make_conv(params_.block_conv1[b], cfg_.width, cfg_.width, false);
    make_conv(params_.block_conv2[b], cfg_.width, cfg_.width, false);
  }
  make_conv(params_.head, cfg_.width, cfg_.channels, true);

  he_init(params_.temb_w1, cfg_.width, cfg_.width, cfg_.width);
  params_.temb_b1 = Mat::Zero(cfg_.width, 1);
  he_init(params_.temb_w2, static_cast<Eigen::Index>(cfg_.depth) * cfg_.width, cfg_.width,
          cfg_.width);
  params_.temb_b2 = Mat::Zero(static_cast<Eigen::Index>(cfg_.depth) * cfg_.width, 1);
}

template <typename Scalar>
std::size_t ConvScoreNet<Scalar>::parameter_count() const {
  const std::size_t in = static_cast<std::size_t>(cfg_.input_channels());
  const std::size_t wd = static_cast<std::size_t>(cfg_.width);
  const std::size_t dp = static_cast<std::size_t>(cfg_.depth);
  const std::size_t ch = static_cast<std::size_t>(cfg_.channels);
  return (wd * in * 9 + wd)             // stem
         + dp * 2 * (wd * wd * 9 + wd)  // residual blocks
         + (ch * wd * 9 + ch)           // head
         + (wd * wd + wd)               // time mlp layer 1
         + (dp * wd * wd + dp * wd);    // time mlp layer 2
}

template <typename Scalar>
typename ConvScoreNet<Scalar>::Mat ConvScoreNet<Scalar>::time_embedding_features(
    double t_norm) const {
  // sin/cos features of t_norm at log-spaced frequencies 1 .. 10^4
  const int half = cfg_.width / 2;
  Mat e0(cfg_.width, 1);
  for (int j = 0; j < half; ++j) {
    const double omega = half == 1 ? 1.0 : std::pow(10000.0, static_cast<double>(j) / (half - 1));
    e0(2 * j, 0) = static_cast<Scalar>(std::sin(t_norm * omega));
    e0(2 * j + 1, 0) = static_cast<Scalar>(std::cos(t_norm * omega));
  }
  return e0;
}

template <typename Scalar>
typename ConvScoreNet<Scalar>::Mat ConvScoreNet<Scalar>::forward(const Mat& input, int h, int w,
                                                                 double t_norm,
                                                                 Tape* tape) const {
  if (input.rows() != cfg_.input_channels())
    throw ShapeError("input channel count does not match the network");
  if (input.cols() != static_cast<Eigen::Index>(h) * w)
    throw ShapeError("input pixel count does not match the stated resolution");

  Tape local;
  Tape& tp = tape ? *tape : local;
  tp.h = h;
  tp.w = w;
  tp.t_norm = t_norm;
  tp.u.resize(cfg_.depth + 1);
  tp.p_a.resize(cfg_.depth);
  tp.c1.resize(cfg_.depth);
  tp.p_g.resize(cfg_.depth);

  tp.e0 = time_embedding_features(t_norm);
  tp.h1 = params_.temb_w1 * tp.e0 + params_.temb_b1;
  tp.a1 = silu_map(tp.h1);
  const Mat shifts = params_.temb_w2 * tp.a1 + params_.temb_b2;  // (depth*width) x 1

  tp.u[0] = params_.stem.forward(input, h, w, &tp.p_stem);

  for (int b = 0; b < cfg_.depth; ++b) {
    const Mat a = silu_map(tp.u[b]);
    tp.c1[b] = params_.block_conv1[b].forward(a, h, w, &tp.p_a[b]);
    tp.c1[b].colwise() += shifts.col(0).segment(static_cast<Eigen::Index>(b) * cfg_.width,
                                                cfg_.width);
    const Mat g = silu_map(tp.c1[b]);
    tp.u[b + 1] = tp.u[b] + params_.block_conv2[b].forward(g, h, w, &tp.p_g[b]);
  }

  tp.u_out = tp.u[cfg_.depth];
  const Mat ah = silu_map(tp.u_out);
  return params_.head.forward(ah, h, w, &tp.p_head);
}

template <typename Scalar>
void ConvScoreNet<Scalar>::backward(const Tape& tp, const Mat& dz, ParamSet& grads,
                                    Mat* dinput) const {
  const int h = tp.h, w = tp.w;
  Mat dtemb = Mat::Zero(static_cast<Eigen::Index>(cfg_.depth) * cfg_.width, 1);

  grads.head.w.noalias() += dz * tp.p_head.transpose();
  grads.head.b.col(0) += dz.rowwise().sum();
  Mat du = params_.head.input_vjp(dz, h, w).cwiseProduct(silu_grad_map(tp.u_out));

  for (int b = cfg_.depth - 1; b >= 0; --b) {
    // u[b+1] = u[b] + conv2(silu(c1)), c1 = conv1(silu(u[b])) + shift_b
    grads.block_conv2[b].w.noalias() += du * tp.p_g[b].transpose();
    grads.block_conv2[b].b.col(0) += du.rowwise().sum();
    const Mat dg = params_.block_conv2[b].input_vjp(du, h, w);
    const Mat dc1 = dg.cwiseProduct(silu_grad_map(tp.c1[b]));

    dtemb.col(0).segment(static_cast<Eigen::Index>(b) * cfg_.width, cfg_.width) +=
        dc1.rowwise().sum();
    grads.block_conv1[b].w.noalias() += dc1 * tp.p_a[b].transpose();
    grads.block_conv1[b].b.col(0) += dc1.rowwise().sum();
    const Mat da = params_.block_conv1[b].input_vjp(dc1, h, w);
    du += da.cwiseProduct(silu_grad_map(tp.u[b]));
  }

  grads.stem.w.noalias() += du * tp.p_stem.transpose();
  grads.stem.b.col(0) += du.rowwise().sum();
  if (dinput) *dinput = params_.stem.input_vjp(du, h, w);

  grads.temb_w2.noalias() += dtemb * tp.a1.transpose();
  grads.temb_b2 += dtemb;
  const Mat da1 = params_.temb_w2.transpose() * dtemb;
  const Mat dh1 = da1.cwiseProduct(silu_grad_map(tp.h1));
  grads.temb_w1.noalias() += dh1 * tp.e0.transpose();
  grads.temb_b1 += dh1;
}

template <typename Scalar>
typename ConvScoreNet<Scalar>::Mat ConvScoreNet<Scalar>::backward_input(const Tape& tp,
                                                                        const Mat& dz) const {
  ParamSet grads = zero_grads();
  Mat dinput;
  backward(tp, dz, grads, &dinput);
  return dinput;
}

template <typename Scalar>
typename ConvScoreNet<Scalar>::ParamSet ConvScoreNet<Scalar>::zero_grads() const {
  ParamSet g = params_;
  g.for_each([](Mat& m) { m.setZero(); });
  return g;
}

namespace {

template <typename From, typename To>
void cast_params(const typename ConvScoreNet<From>::ParamSet& src,
                 typename ConvScoreNet<To>::ParamSet& dst) {
  std::vector<const typename ConvScoreNet<From>::Mat*> from;
  src.for_each([&](const typename ConvScoreNet<From>::Mat& m) { from.push_back(&m); });
  std::size_t i = 0;
  dst.for_each(
      [&](typename ConvScoreNet<To>::Mat& m) { m = from[i++]->template cast<To>(); });
}

}  // namespace

template <typename Scalar>
ConvScoreNet<double> ConvScoreNet<Scalar>::to_double() const {
  Rng rng(0);
  ConvScoreNet<double> out(cfg_, rng);
  cast_params<Scalar, double>(params_, out.params_);
  return out;
}

template <typename Scalar>
ConvScoreNet<float> ConvScoreNet<Scalar>::to_float() const {
  Rng rng(0);
  ConvScoreNet<float> out(cfg_, rng);
  cast_params<Scalar, float>(params_, out.params_);
  return out;
}

template class ConvScoreNet<float>;
template class ConvScoreNet<double>;

}  // namespace pddpm
