#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pddpm/checkpoint.hpp"
#include "pddpm/convnet.hpp"
#include "pddpm/train.hpp"
#include "test_util.hpp"

#include <cmath>
#include <filesystem>

using namespace pddpm;

namespace {

using MatD = ConvScoreNetD::Mat;

NetConfig tiny_config() {
  NetConfig cfg;
  cfg.depth = 1;
  cfg.width = 4;
  cfg.degree = 1;
  cfg.channels = 1;
  cfg.steps = 10;
  return cfg;
}

NoiseSchedule toy_schedule(int steps = 10) {
  return make_schedule(ScheduleKind::linear, steps, 1e-2, 0.2, SigmaVariant::beta);
}

}  // namespace

TEST_CASE("convolution matches the explicit operator matrix, 1x1 and 3x3") {
  Rng rng(2);
  for (int kernel : {1, 3}) {
    Conv2d<double> conv;
    conv.in_ch = 2;
    conv.out_ch = 3;
    conv.kernel = kernel;
    conv.w = MatD::Random(3, 2 * kernel * kernel);
    conv.b = MatD::Zero(3, 1);

    const int h = 4, w = 3, n = h * w;
    // explicit matrix by probing unit inputs
    MatD big = MatD::Zero(3 * n, 2 * n);
    for (int j = 0; j < 2 * n; ++j) {
      MatD e = MatD::Zero(2, n);
      e(j / n, j % n) = 1.0;
      const MatD out = conv.forward(e, h, w);
      for (int i = 0; i < 3; ++i)
        for (int p = 0; p < n; ++p) big(i * n + p, j) = out(i, p);
    }

    const MatD x = MatD::Random(2, n);
    const MatD out = conv.forward(x, h, w);
    for (int i = 0; i < 3; ++i)
      for (int p = 0; p < n; ++p) {
        double expected = 0.0;
        for (int j = 0; j < 2 * n; ++j) expected += big(i * n + p, j) * x(j / n, j % n);
        CHECK(out(i, p) == doctest::Approx(expected).epsilon(1e-12));
      }

    // vjp equals the explicit transpose product
    const MatD dout = MatD::Random(3, n);
    const MatD din = conv.input_vjp(dout, h, w);
    for (int j = 0; j < 2 * n; ++j) {
      double expected = 0.0;
      for (int i = 0; i < 3 * n; ++i) expected += big(i, j) * dout(i / n, i % n);
      CHECK(din(j / n, j % n) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero-initialized head means zero prediction and zero score") {
  Rng rng(3);
  const NetConfig cfg = tiny_config();
  const ConvScoreNetD net(cfg, rng);
  const MatD input = MatD::Random(cfg.input_channels(), 64);
  const MatD z = net.forward(input, 8, 8, 0.5);
  CHECK(z.cwiseAbs().maxCoeff() == 0.0);

  const NoiseSchedule s = toy_schedule();
  auto [ci, cj] = make_coordinates(8, 8);
  const PositionalEncoding enc = encode_coordinates(ci, cj, cfg.degree);
  Rng xr(4);
  const Planes x{xr.normal_plane(8, 8)};
  const Planes score = net_score(net, x, 3, s, enc);
  CHECK(squared_norm(score) == 0.0);
}

TEST_CASE("any resolution flows through with matching shapes") {
  Rng rng(5);
  NetConfig cfg = tiny_config();
  ConvScoreNetD net(cfg, rng);
  net.params().head.w = MatD::Random(cfg.channels, cfg.width * 9);
  for (int res : {4, 8, 16}) {
    const MatD input = MatD::Random(cfg.input_channels(), res * res);
    const MatD z = net.forward(input, res, res, 0.3);
    CHECK(z.rows() == cfg.channels);
    CHECK(z.cols() == res * res);
  }
}

TEST_CASE("time embedding changes the output once the head is nonzero") {
  Rng rng(6);
  NetConfig cfg = tiny_config();
  ConvScoreNetD net(cfg, rng);
  net.params().head.w = MatD::Random(cfg.channels, cfg.width * 9);
  const MatD input = MatD::Random(cfg.input_channels(), 16);
  const MatD za = net.forward(input, 4, 4, 0.1);
  const MatD zb = net.forward(input, 4, 4, 0.9);
  CHECK((za - zb).cwiseAbs().maxCoeff() > 1e-8);
}

TEST_CASE("parameter count formula matches the stored tensors") {
  Rng rng(7);
  for (int depth : {1, 2}) {
    for (int width : {4, 8}) {
      NetConfig cfg;
      cfg.depth = depth;
      cfg.width = width;
      cfg.degree = 2;
      cfg.channels = 3;
      const ConvScoreNetF net(cfg, rng);
      std::size_t total = 0;
      net.params().for_each(
          [&](const ConvScoreNetF::Mat& m) { total += static_cast<std::size_t>(m.size()); });
      CHECK(net.parameter_count() == total);
    }
  }
}

TEST_CASE("input vjp agrees with finite differences") {
  Rng rng(8);
  NetConfig cfg = tiny_config();
  ConvScoreNetD net(cfg, rng);
  net.params().head.w = 0.3 * MatD::Random(cfg.channels, cfg.width * 9);

  const NoiseSchedule s = toy_schedule();
  auto [ci, cj] = make_coordinates(8, 8);
  const PositionalEncoding enc = encode_coordinates(ci, cj, cfg.degree);
  Rng xr(9);
  const Planes x{xr.normal_plane(8, 8)};
  const Planes v{xr.normal_plane(8, 8)};

  for (int t : {1, 5, 10}) {
    const Planes exact = net_vjp(net, x, t, s, enc, v);
    const Planes fd = testutil::fd_vjp(
        [&](const Planes& p) { return net_score(net, p, t, s, enc); }, x, v, 1e-4);
    CHECK(testutil::relative_error(exact, fd) < 1e-3);
  }
}

TEST_CASE("weight gradients agree with finite differences") {
  Rng rng(10);
  NetConfig cfg = tiny_config();
  cfg.depth = 2;
  ConvScoreNetD net(cfg, rng);
  net.params().head.w = 0.2 * MatD::Random(cfg.channels, cfg.width * 9);

  const int h = 4, w = 4;
  const MatD input = MatD::Random(cfg.input_channels(), h * w);
  const MatD target = MatD::Random(cfg.channels, h * w);
  const double t_norm = 0.37;

  auto loss_of = [&](const ConvScoreNetD& m) {
    const MatD z = m.forward(input, h, w, t_norm);
    return 0.5 * (z - target).squaredNorm();
  };

  ConvScoreNetD::Tape tape;
  const MatD z = net.forward(input, h, w, t_norm, &tape);
  auto grads = net.zero_grads();
  net.backward(tape, MatD(z - target), grads);

  std::vector<MatD*> grad_list;
  grads.for_each([&](MatD& m) { grad_list.push_back(&m); });
  std::vector<MatD*> param_list;
  net.params().for_each([&](MatD& m) { param_list.push_back(&m); });

  Rng pick(11);
  const double step = 1e-5;
  for (std::size_t tensor = 0; tensor < param_list.size(); ++tensor) {
    MatD& p = *param_list[tensor];
    if (p.size() == 0) continue;
    for (int probe = 0; probe < 3; ++probe) {
      const Eigen::Index r = pick.uniform_int(0, static_cast<int>(p.rows()) - 1);
      const Eigen::Index c = pick.uniform_int(0, static_cast<int>(p.cols()) - 1);
      const double saved = p(r, c);
      p(r, c) = saved + step;
      const double hi = loss_of(net);
      p(r, c) = saved - step;
      const double lo = loss_of(net);
      p(r, c) = saved;
      const double fd = (hi - lo) / (2.0 * step);
      const double exact = (*grad_list[tensor])(r, c);
      CHECK(exact == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
    }
  }
}

TEST_CASE("checkpoint round trip is bit exact") {
  Rng rng(12);
  NetConfig cfg;
  cfg.depth = 2;
  cfg.width = 6;
  cfg.degree = 3;
  cfg.channels = 1;
  cfg.steps = 100;
  ConvScoreNetF net(cfg, rng);
  net.params().head.w.setRandom();

  const auto dir = std::filesystem::temp_directory_path() / "pddpm_ckpt_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "net.pdsn").string();
  save_checkpoint(path, net);
  const ConvScoreNetF back = load_checkpoint(path);
  CHECK(back.config().depth == cfg.depth);
  CHECK(back.config().width == cfg.width);
  CHECK(back.config().degree == cfg.degree);
  CHECK(back.config().steps == cfg.steps);

  std::vector<const ConvScoreNetF::Mat*> a, b;
  net.params().for_each([&](const ConvScoreNetF::Mat& m) { a.push_back(&m); });
  back.params().for_each([&](const ConvScoreNetF::Mat& m) { b.push_back(&m); });
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i]->isApprox(*b[i], 0.0));

  CHECK_THROWS_AS(load_checkpoint("/nonexistent/net.pdsn"), IoError);
}

TEST_CASE("train_step loss at zero init is near one") {
  Rng rng(13);
  NetConfig cfg;
  cfg.depth = 1;
  cfg.width = 8;
  cfg.degree = 2;
  cfg.channels = 1;
  cfg.steps = 10;
  ConvScoreNetF net(cfg, rng);
  Adam opt(net);
  const NoiseSchedule s = toy_schedule();

  const GaussianMixtureData data = make_point_mass(8, 8, 1, 0.8);
  std::vector<ImageGrid> batch;
  for (int i = 0; i < 64; ++i) batch.push_back(sample_grid(data, rng));
  const double loss = train_step(net, opt, batch, s, TrainOptions{{8}, 0}, rng);
  CHECK(loss == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("training reduces the loss on a toy dataset") {
  Rng rng(14);
  NetConfig cfg;
  cfg.depth = 1;
  cfg.width = 16;
  cfg.degree = 2;
  cfg.channels = 1;
  cfg.steps = 20;
  ConvScoreNetF net(cfg, rng);
  Adam opt(net, 1e-3, 1.0);  // larger rate keeps this unit test quick
  const NoiseSchedule s = toy_schedule(20);
  const GaussianMixtureData data = make_point_mass(8, 8, 1, 0.8);

  double first_ema = 0.0, ema = 0.0;
  for (int iter = 0; iter < 400; ++iter) {
    std::vector<ImageGrid> batch;
    for (int b = 0; b < 4; ++b) batch.push_back(sample_grid(data, rng));
    const double loss = train_step(net, opt, batch, s, TrainOptions{{8}, 0}, rng);
    ema = iter == 0 ? loss : 0.98 * ema + 0.02 * loss;
    if (iter == 20) first_ema = ema;
  }
  CHECK(ema < first_ema);
}

TEST_CASE("ablation modes stay executable") {
  Rng rng(15);
  const NoiseSchedule s = toy_schedule();

  // no positional encoding: input channels collapse to C
  NetConfig plain;
  plain.depth = 1;
  plain.width = 4;
  plain.degree = 0;
  plain.channels = 1;
  plain.steps = 10;
  CHECK(plain.input_channels() == 1);
  ConvScoreNetF net(plain, rng);
  Adam opt(net);
  const GaussianMixtureData data = make_point_mass(16, 16, 1, 0.8);
  std::vector<ImageGrid> batch{sample_grid(data, rng), sample_grid(data, rng)};
  CHECK(std::isfinite(train_step(net, opt, batch, s, TrainOptions{{8, 16}, 0}, rng)));

  // patch mode: resized items larger than the patch are cropped
  NetConfig enc_cfg = plain;
  enc_cfg.degree = 2;
  ConvScoreNetF net2(enc_cfg, rng);
  Adam opt2(net2);
  CHECK(std::isfinite(train_step(net2, opt2, batch, s, TrainOptions{{8, 16}, 8}, rng)));

  CHECK_THROWS_AS(train_step(net, opt, {}, s, TrainOptions{{8}, 0}, rng), ParamError);
}
