#include "pddpm/cli.hpp"

#include "pddpm/checkpoint.hpp"
#include "pddpm/convnet.hpp"
#include "pddpm/image_io.hpp"
#include "pddpm/metrics.hpp"
#include "pddpm/runconfig.hpp"
#include "pddpm/train.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <thread>

namespace pddpm {

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> overrides;
  bool seed_set = false;
  std::uint64_t seed = 0;
  std::string out_dir;
  int jobs = 0;
  std::string format;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "run configuration file");
  cmd->add_option("--set", flags.overrides, "override a config value (section.key=value)");
  cmd->add_option("--seed", flags.seed, "RNG seed")->each([&](const std::string&) {
    flags.seed_set = true;
  });
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_option("--jobs", flags.jobs, "worker threads for sample-level parallelism");
  cmd->add_option("--format", flags.format, "image output format (pgm|ppm|raw)");
}

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig cfg;
  if (!flags.config_path.empty()) cfg = load_config(flags.config_path);
  for (const std::string& o : flags.overrides) apply_override(cfg, o);
  if (flags.seed_set) cfg.sampler.seed = flags.seed;
  if (!flags.out_dir.empty()) cfg.output.directory = flags.out_dir;
  if (flags.jobs > 0) cfg.output.jobs = flags.jobs;
  if (!flags.format.empty()) cfg.output.format = flags.format;
  return cfg;
}

std::ofstream open_csv(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::string sample_name(int index, int level, int resolution, ImageFormat fmt, bool with_level) {
  char buf[96];
  if (with_level) {
    std::snprintf(buf, sizeof(buf), "sample_%04d_level%d_%dpx%s", index, level, resolution,
                  extension(fmt).c_str());
  } else {
    std::snprintf(buf, sizeof(buf), "sample_%04d%s", index, extension(fmt).c_str());
  }
  return buf;
}

/// Training items come either from the toy mixture or from an image
/// directory loaded up front.
struct TrainingSource {
  GaussianMixtureData mixture;
  bool use_mixture = true;
  std::vector<ImageGrid> files;

  ImageGrid draw(Rng& rng) const {
    if (use_mixture) return sample_grid(mixture, rng);
    const int pick = rng.uniform_int(0, static_cast<int>(files.size()) - 1);
    return files[static_cast<std::size_t>(pick)];
  }
};

TrainingSource make_training_source(const RunConfig& cfg) {
  TrainingSource src;
  if (cfg.data.directory.empty()) {
    src.mixture = build_dataset(cfg);
    return src;
  }
  src.use_mixture = false;
  std::vector<fs::path> paths;
  if (!fs::is_directory(cfg.data.directory))
    throw IoError("not a directory: " + cfg.data.directory);
  for (const auto& entry : fs::directory_iterator(cfg.data.directory))
    if (entry.is_regular_file()) paths.push_back(entry.path());
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) src.files.push_back(make_grid(read_image(p.string())));
  if (src.files.empty()) throw IoError("no images in " + cfg.data.directory);
  for (const ImageGrid& g : src.files)
    if (g.height() != src.files[0].height() || g.width() != src.files[0].width() ||
        g.channels() != src.files[0].channels())
      throw IoError("images in " + cfg.data.directory + " disagree on shape");
  return src;
}

std::unique_ptr<ScoreModel> build_model(const RunConfig& cfg, int& degree_out) {
  if (cfg.model.backend == "analytic") {
    degree_out = cfg.model.degree;
    return std::make_unique<AnalyticScoreModel>(build_dataset(cfg));
  }
  if (cfg.model.backend == "net") {
    if (cfg.model.checkpoint.empty()) throw IoError("net backend needs model.checkpoint");
    auto net = std::make_shared<ConvScoreNetF>(load_checkpoint(cfg.model.checkpoint));
    if (net->config().channels != cfg.data.channels)
      throw ParamError("checkpoint channel count does not match data.channels");
    degree_out = net->config().degree;
    return std::make_unique<NetScoreModel>(net);
  }
  throw ParamError("unknown model backend: " + cfg.model.backend);
}

void write_trace_csv(const fs::path& path, const std::string& hash,
                     const std::vector<std::pair<int, SampleResult>>& results) {
  auto out = open_csv(path);
  out << "config_hash,sample,level,resolution,step,nfe,residual\n";
  for (const auto& [index, result] : results)
    for (const StepRecord& rec : result.trace) {
      out << hash << "," << index << "," << rec.level << "," << rec.resolution << "," << rec.step
          << "," << rec.nfe << ",";
      if (rec.residual) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.12g", *rec.residual);
        out << buf;
      }
      out << "\n";
    }
}

/// Runs fn(i) for i in [0, n) across `jobs` threads; any exception is
/// rethrown on the calling thread.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
  std::vector<std::thread> workers;
  for (int w = 0; w < jobs; ++w)
    workers.emplace_back([&, w] {
      try {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  for (auto& t : workers) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<std::pair<int, SampleResult>> generate_samples(const ScoreModel& model,
                                                           const SamplerConfig& sc, int n,
                                                           int jobs) {
  std::vector<std::pair<int, SampleResult>> results(static_cast<std::size_t>(n));
  parallel_for(n, jobs, [&](int i) {
    Rng rng = Rng::stream(sc.seed, static_cast<std::uint64_t>(i));
    results[static_cast<std::size_t>(i)] = {i, generate_pyramidal(model, sc, rng)};
  });
  return results;
}

int cmd_train(const RunConfig& cfg) {
  if (cfg.model.backend != "net")
    throw ParamError("analytic backend needs no training; set model.backend = net");
  const TrainingSource source = make_training_source(cfg);
  const NoiseSchedule schedule = base_schedule(cfg);

  NetConfig net_cfg;
  net_cfg.depth = cfg.model.depth;
  net_cfg.width = cfg.model.width;
  net_cfg.degree = cfg.model.degree;
  net_cfg.channels = cfg.data.channels;
  net_cfg.steps = cfg.schedule.steps;

  Rng rng(cfg.sampler.seed);
  ConvScoreNetF net(net_cfg, rng);
  Adam opt(net, cfg.train.learning_rate, cfg.train.grad_clip);
  TrainOptions topt{cfg.sampler.ladder, cfg.train.patch_size};
  if (cfg.train.batch_size < 1) throw ParamError("batch size must be positive");

  fs::create_directories(cfg.output.directory);
  const std::string hash = config_hash(cfg);
  auto loss_csv = open_csv(fs::path(cfg.output.directory) / "loss.csv");
  loss_csv << "config_hash,iteration,loss,ema_loss\n";

  double ema = 0.0;
  bool ema_started = false;
  for (int iter = 1; iter <= cfg.train.iterations; ++iter) {
    std::vector<ImageGrid> batch;
    batch.reserve(static_cast<std::size_t>(cfg.train.batch_size));
    for (int b = 0; b < cfg.train.batch_size; ++b) batch.push_back(source.draw(rng));
    const double loss = train_step(net, opt, batch, schedule, topt, rng);
    if (!std::isfinite(loss)) throw NumericError("non-finite loss at iteration " + std::to_string(iter));
    ema = ema_started ? 0.99 * ema + 0.01 * loss : loss;
    ema_started = true;
    if (iter % 100 == 0 || iter == cfg.train.iterations) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "%s,%d,%.8g,%.8g\n", hash.c_str(), iter, loss, ema);
      loss_csv << buf;
    }
  }

  const fs::path checkpoint = fs::path(cfg.output.directory) / "checkpoint.pdsn";
  save_checkpoint(checkpoint.string(), net);
  std::cout << "wrote " << checkpoint.string() << "\n";
  return 0;
}

int cmd_generate(const RunConfig& cfg) {
  int degree = cfg.model.degree;
  const auto model = build_model(cfg, degree);
  const NoiseSchedule base = base_schedule(cfg);
  SamplerConfig sc = build_sampler_config(cfg, base);
  sc.encoding_degree = degree;

  fs::create_directories(cfg.output.directory);
  const ImageFormat fmt = image_format_from_string(cfg.output.format);
  const auto results =
      generate_samples(*model, sc, cfg.output.n_samples, cfg.output.jobs);

  for (const auto& [index, result] : results) {
    const fs::path dir(cfg.output.directory);
    write_image((dir / sample_name(index, 0, 0, fmt, false)).string(), result.finest.data, fmt);
    if (cfg.output.emit_levels)
      for (std::size_t level = 0; level < result.level_outputs.size(); ++level)
        write_image((dir / sample_name(index, static_cast<int>(level),
                                       static_cast<int>(result.level_outputs[level].height()),
                                       fmt, true))
                        .string(),
                    result.level_outputs[level].data, fmt);
  }
  write_trace_csv(fs::path(cfg.output.directory) / "trace.csv", config_hash(cfg), results);
  return 0;
}

int cmd_sr(const RunConfig& cfg, const std::string& input_path) {
  int degree = cfg.model.degree;
  const auto model = build_model(cfg, degree);
  const NoiseSchedule base = base_schedule(cfg);
  SamplerConfig sc = build_sampler_config(cfg, base);
  sc.encoding_degree = degree;

  const ImageGrid lr_input = make_grid(read_image(input_path));
  if (lr_input.height() != sc.ladder.front() || lr_input.width() != sc.ladder.front())
    throw ParamError("input is " + std::to_string(lr_input.height()) + "x" +
                     std::to_string(lr_input.width()) + " but the ladder starts at " +
                     std::to_string(sc.ladder.front()) + "x" + std::to_string(sc.ladder.front()));

  Rng rng = Rng::stream(sc.seed, 0);
  SampleResult result = super_resolve_pyramidal(*model, sc, lr_input, rng);

  fs::create_directories(cfg.output.directory);
  const ImageFormat fmt = image_format_from_string(cfg.output.format);
  const fs::path out_image = fs::path(cfg.output.directory) / ("sr_output" + extension(fmt));
  write_image(out_image.string(), result.finest.data, fmt);
  std::vector<std::pair<int, SampleResult>> results;
  results.emplace_back(0, std::move(result));
  write_trace_csv(fs::path(cfg.output.directory) / "residual.csv", config_hash(cfg), results);
  std::cout << "wrote " << out_image.string() << "\n";
  return 0;
}

void write_cost_rows(std::ofstream& out, const std::string& hash, double delta_ts,
                     const CostReport& report) {
  for (const LevelCost& level : report.levels) {
    char buf[192];
    std::snprintf(buf, sizeof(buf), "%s,%.3g,level,%d,%lld,%llu,%llu,%llu,%.10g\n", hash.c_str(),
                  delta_ts, level.resolution, static_cast<long long>(level.steps),
                  static_cast<unsigned long long>(level.pixel_weighted_nfe),
                  static_cast<unsigned long long>(report.total_pyramidal),
                  static_cast<unsigned long long>(report.total_full), report.speedup_ratio);
    out << buf;
  }
  char buf[192];
  std::snprintf(buf, sizeof(buf), "%s,%.3g,total,-1,-1,%llu,%llu,%llu,%.10g\n", hash.c_str(),
                delta_ts, static_cast<unsigned long long>(report.total_pyramidal),
                static_cast<unsigned long long>(report.total_pyramidal),
                static_cast<unsigned long long>(report.total_full), report.speedup_ratio);
  out << buf;
}

int cmd_bench(const RunConfig& cfg, bool sweep) {
  const NoiseSchedule base = base_schedule(cfg);
  const SamplerConfig sc = build_sampler_config(cfg, base);
  fs::create_directories(cfg.output.directory);
  auto out = open_csv(fs::path(cfg.output.directory) / "cost.csv");
  out << "config_hash,delta_ts,row,resolution,steps,pixel_weighted_nfe,total_pyramidal,total_full,"
         "speedup\n";
  const std::string hash = config_hash(cfg);
  write_cost_rows(out, hash, sc.delta_ts, nfe_cost(sc, cfg.schedule.steps));
  if (sweep) {
    for (int i = 1; i <= 5; ++i) {
      SamplerConfig swept = sc;
      swept.delta_ts = 0.1 * i;
      write_cost_rows(out, hash, swept.delta_ts, nfe_cost(swept, cfg.schedule.steps));
    }
  }
  std::cout << "speedup " << nfe_cost(sc, cfg.schedule.steps).speedup_ratio << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  int degree = cfg.model.degree;
  const auto model = build_model(cfg, degree);
  const NoiseSchedule base = base_schedule(cfg);
  SamplerConfig sc = build_sampler_config(cfg, base);
  sc.encoding_degree = degree;
  const GaussianMixtureData target = build_dataset(cfg);

  const int n = cfg.output.n_samples;
  const auto results = generate_samples(*model, sc, n, cfg.output.jobs);

  const int target_level = level_for_resolution(target, sc.ladder.back(), sc.ladder.back());
  std::vector<Planes> generated;
  std::vector<Eigen::VectorXd> generated_flat, target_flat;
  Rng target_rng = Rng::stream(sc.seed + 1, 0);
  for (const auto& [index, result] : results) {
    generated.push_back(result.finest.data);
    generated_flat.push_back(flatten(result.finest.data));
    target_flat.push_back(flatten(sample_mixture(target, target_level, target_rng)));
  }

  Rng proj_rng = Rng::stream(sc.seed + 2, 0);
  const double swd = sliced_wasserstein(generated_flat, target_flat, 64, proj_rng);
  const auto [mean_err, var_err] = gaussian_moment_error(generated, target, target_level);

  Planes sample_mean = zeros_like(generated[0]);
  for (const Planes& s : generated)
    for (std::size_t c = 0; c < sample_mean.size(); ++c)
      sample_mean[c] += s[c] / static_cast<double>(n);
  const Planes analytic_mean = mixture_mean(target, target_level);
  const double psnr_mean = psnr(sample_mean, analytic_mean, 2.0);
  const double ssim_mean = ssim(sample_mean, analytic_mean, 2.0);

  fs::create_directories(cfg.output.directory);
  auto out = open_csv(fs::path(cfg.output.directory) / "metrics.csv");
  out << "metric,config_hash,value,n_samples,seed\n";
  const std::string hash = config_hash(cfg);
  auto row = [&](const char* name, double value) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s,%s,%.10g,%d,%llu\n", name, hash.c_str(), value, n,
                  static_cast<unsigned long long>(sc.seed));
    out << buf;
  };
  row("sliced_wasserstein", swd);
  row("mean_error", mean_err);
  row("var_error", var_err);
  row("psnr_mean", psnr_mean);
  row("ssim_mean", ssim_mean);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"pyramidal diffusion sampler"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string sr_input;
  bool sweep = false;
  int samples_override = 0;
  bool emit_levels = false;

  CLI::App* train = app.add_subcommand("train", "train the convolutional score network");
  add_common(train, flags);
  CLI::App* generate = app.add_subcommand("generate", "pyramidal image generation");
  add_common(generate, flags);
  generate->add_option("--samples", samples_override, "number of samples");
  generate->add_flag("--emit-levels", emit_levels, "also write each intermediate level");
  CLI::App* sr = app.add_subcommand("sr", "guided pyramidal super-resolution");
  add_common(sr, flags);
  sr->add_option("input", sr_input, "low-resolution input image")->required();
  CLI::App* bench = app.add_subcommand("bench", "pixel-weighted sampling-cost report");
  add_common(bench, flags);
  bench->add_flag("--sweep", sweep, "sweep delta_ts over 0.1..0.5");
  CLI::App* eval = app.add_subcommand("eval", "distributional metrics against the toy target");
  add_common(eval, flags);
  eval->add_option("--samples", samples_override, "number of samples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    RunConfig cfg = resolve_config(flags);
    if (samples_override > 0) cfg.output.n_samples = samples_override;
    if (emit_levels) cfg.output.emit_levels = true;
    if (train->parsed()) return cmd_train(cfg);
    if (generate->parsed()) return cmd_generate(cfg);
    if (sr->parsed()) return cmd_sr(cfg, sr_input);
    if (bench->parsed()) return cmd_bench(cfg, sweep);
    if (eval->parsed()) return cmd_eval(cfg);
    std::cerr << "no command\n";
    return 2;
  } catch (const ParamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace pddpm
