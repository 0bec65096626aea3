#pragma once

#include "pddpm/mixture.hpp"
#include "pddpm/sampler.hpp"
#include "pddpm/schedule.hpp"
#include "pddpm/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pddpm {

/// Command-scoped run configuration. Every field has a default; parsing is
/// strict (unknown sections or keys are rejected).
struct RunConfig {
  struct Schedule {
    std::string kind = "linear";
    int steps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    std::string sigma_variant = "beta";
  } schedule;

  struct Model {
    std::string backend = "analytic";  // analytic | net
    int depth = 1;
    int width = 32;
    int degree = 6;  // positional encoding degree L; 0 disables it
    std::string checkpoint;
  } model;

  struct Sampler {
    int t_full = 1000;
    int t_scaled = 100;
    double delta_ts = 0.3;
    double lambda = 1.0;
    std::vector<int> ladder{8, 16, 32};
    std::string scaled_schedule = "respaced";  // respaced | fresh
    bool strict_paper_init = false;
    bool exact_guidance = true;
    std::string upsample_kernel = "bilinear";
    std::uint64_t seed = 0;
  } sampler;

  struct Data {
    std::string dataset = "unit_gaussian";
    int height = 32;
    int width = 32;
    int channels = 1;
    double amplitude = 0.8;
    double variance = 0.25;
    std::string directory;  // image directory; overrides the toy dataset when set
  } data;

  struct Train {
    int iterations = 5000;
    int batch_size = 8;
    double learning_rate = 1e-4;
    double grad_clip = 1.0;
    int patch_size = 0;  // > 0 enables patch-wise training
  } train;

  struct Output {
    std::string directory = "out";
    std::string format = "raw";  // pgm | ppm | raw
    int n_samples = 1;
    bool emit_levels = false;
    int jobs = 1;
  } output;
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

/// Applies one "section.key=value" override.
void apply_override(RunConfig& cfg, const std::string& assignment);

/// Canonical serialization; parse(serialize(c)) == c.
std::string serialize(const RunConfig& cfg);

bool operator==(const RunConfig& a, const RunConfig& b);

/// FNV-1a of the canonical serialization, as a hex string.
std::string config_hash(const RunConfig& cfg);

// Builders from the parsed configuration.
NoiseSchedule base_schedule(const RunConfig& cfg);
SamplerConfig build_sampler_config(const RunConfig& cfg, const NoiseSchedule& base);
GaussianMixtureData build_dataset(const RunConfig& cfg);

}  // namespace pddpm
