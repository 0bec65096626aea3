#include "pddpm/runconfig.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace pddpm {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

int parse_int(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long value = std::strtol(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') throw ParamError("bad integer for " + key + ": " + v);
  return static_cast<int>(value);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const unsigned long long value = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') throw ParamError("bad integer for " + key + ": " + v);
  return value;
}

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double value = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') throw ParamError("bad number for " + key + ": " + v);
  return value;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ParamError("bad boolean for " + key + ": " + v);
}

std::vector<int> parse_ladder(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(key, trim(item)));
  if (out.empty()) throw ParamError("empty ladder");
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void set_value(RunConfig& cfg, const std::string& section, const std::string& key,
               const std::string& value) {
  const std::string qualified = section + "." + key;
  if (section == "schedule") {
    if (key == "kind") cfg.schedule.kind = value;
    else if (key == "steps") cfg.schedule.steps = parse_int(qualified, value);
    else if (key == "beta_start") cfg.schedule.beta_start = parse_double(qualified, value);
    else if (key == "beta_end") cfg.schedule.beta_end = parse_double(qualified, value);
    else if (key == "sigma_variant") cfg.schedule.sigma_variant = value;
    else throw ParamError("unknown key: " + qualified);
  } else if (section == "model") {
    if (key == "backend") cfg.model.backend = value;
    else if (key == "depth") cfg.model.depth = parse_int(qualified, value);
    else if (key == "width") cfg.model.width = parse_int(qualified, value);
    else if (key == "degree") cfg.model.degree = parse_int(qualified, value);
    else if (key == "checkpoint") cfg.model.checkpoint = value;
    else throw ParamError("unknown key: " + qualified);
  } else if (section == "sampler") {
    if (key == "t_full") cfg.sampler.t_full = parse_int(qualified, value);
    else if (key == "t_scaled") cfg.sampler.t_scaled = parse_int(qualified, value);
    else if (key == "delta_ts") cfg.sampler.delta_ts = parse_double(qualified, value);
    else if (key == "lambda") cfg.sampler.lambda = parse_double(qualified, value);
    else if (key == "ladder") cfg.sampler.ladder = parse_ladder(qualified, value);
    else if (key == "scaled_schedule") cfg.sampler.scaled_schedule = value;
    else if (key == "strict_paper_init") cfg.sampler.strict_paper_init = parse_bool(qualified, value);
    else if (key == "exact_guidance") cfg.sampler.exact_guidance = parse_bool(qualified, value);
    else if (key == "upsample_kernel") cfg.sampler.upsample_kernel = value;
    else if (key == "seed") cfg.sampler.seed = parse_u64(qualified, value);
    else throw ParamError("unknown key: " + qualified);
  } else if (section == "data") {
    if (key == "dataset") cfg.data.dataset = value;
    else if (key == "height") cfg.data.height = parse_int(qualified, value);
    else if (key == "width") cfg.data.width = parse_int(qualified, value);
    else if (key == "channels") cfg.data.channels = parse_int(qualified, value);
    else if (key == "amplitude") cfg.data.amplitude = parse_double(qualified, value);
    else if (key == "variance") cfg.data.variance = parse_double(qualified, value);
    else if (key == "directory") cfg.data.directory = value;
    else throw ParamError("unknown key: " + qualified);
  } else if (section == "train") {
    if (key == "iterations") cfg.train.iterations = parse_int(qualified, value);
    else if (key == "batch_size") cfg.train.batch_size = parse_int(qualified, value);
    else if (key == "learning_rate") cfg.train.learning_rate = parse_double(qualified, value);
    else if (key == "grad_clip") cfg.train.grad_clip = parse_double(qualified, value);
    else if (key == "patch_size") cfg.train.patch_size = parse_int(qualified, value);
    else throw ParamError("unknown key: " + qualified);
  } else if (section == "output") {
    if (key == "directory") cfg.output.directory = value;
    else if (key == "format") cfg.output.format = value;
    else if (key == "n_samples") cfg.output.n_samples = parse_int(qualified, value);
    else if (key == "emit_levels") cfg.output.emit_levels = parse_bool(qualified, value);
    else if (key == "jobs") cfg.output.jobs = parse_int(qualified, value);
    else throw ParamError("unknown key: " + qualified);
  } else {
    throw ParamError("unknown section: " + section);
  }
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::stringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParamError("malformed section at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParamError("expected key = value at line " + std::to_string(lineno));
    if (section.empty()) throw ParamError("key outside any section at line " + std::to_string(lineno));
    set_value(cfg, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos) throw ParamError("override must be section.key=value");
  const std::string path = trim(assignment.substr(0, eq));
  const std::size_t dot = path.find('.');
  if (dot == std::string::npos) throw ParamError("override must be section.key=value");
  set_value(cfg, path.substr(0, dot), path.substr(dot + 1), trim(assignment.substr(eq + 1)));
}

std::string serialize(const RunConfig& cfg) {
  std::ostringstream out;
  out << "[schedule]\n";
  out << "kind = " << cfg.schedule.kind << "\n";
  out << "steps = " << cfg.schedule.steps << "\n";
  out << "beta_start = " << format_double(cfg.schedule.beta_start) << "\n";
  out << "beta_end = " << format_double(cfg.schedule.beta_end) << "\n";
  out << "sigma_variant = " << cfg.schedule.sigma_variant << "\n";
  out << "[model]\n";
  out << "backend = " << cfg.model.backend << "\n";
  out << "depth = " << cfg.model.depth << "\n";
  out << "width = " << cfg.model.width << "\n";
  out << "degree = " << cfg.model.degree << "\n";
  out << "checkpoint = " << cfg.model.checkpoint << "\n";
  out << "[sampler]\n";
  out << "t_full = " << cfg.sampler.t_full << "\n";
  out << "t_scaled = " << cfg.sampler.t_scaled << "\n";
  out << "delta_ts = " << format_double(cfg.sampler.delta_ts) << "\n";
  out << "lambda = " << format_double(cfg.sampler.lambda) << "\n";
  out << "ladder = ";
  for (std::size_t i = 0; i < cfg.sampler.ladder.size(); ++i)
    out << (i ? "," : "") << cfg.sampler.ladder[i];
  out << "\n";
  out << "scaled_schedule = " << cfg.sampler.scaled_schedule << "\n";
  out << "strict_paper_init = " << (cfg.sampler.strict_paper_init ? "true" : "false") << "\n";
  out << "exact_guidance = " << (cfg.sampler.exact_guidance ? "true" : "false") << "\n";
  out << "upsample_kernel = " << cfg.sampler.upsample_kernel << "\n";
  out << "seed = " << cfg.sampler.seed << "\n";
  out << "[data]\n";
  out << "dataset = " << cfg.data.dataset << "\n";
  out << "height = " << cfg.data.height << "\n";
  out << "width = " << cfg.data.width << "\n";
  out << "channels = " << cfg.data.channels << "\n";
  out << "amplitude = " << format_double(cfg.data.amplitude) << "\n";
  out << "variance = " << format_double(cfg.data.variance) << "\n";
  out << "directory = " << cfg.data.directory << "\n";
  out << "[train]\n";
  out << "iterations = " << cfg.train.iterations << "\n";
  out << "batch_size = " << cfg.train.batch_size << "\n";
  out << "learning_rate = " << format_double(cfg.train.learning_rate) << "\n";
  out << "grad_clip = " << format_double(cfg.train.grad_clip) << "\n";
  out << "patch_size = " << cfg.train.patch_size << "\n";
  out << "[output]\n";
  out << "directory = " << cfg.output.directory << "\n";
  out << "format = " << cfg.output.format << "\n";
  out << "n_samples = " << cfg.output.n_samples << "\n";
  out << "emit_levels = " << (cfg.output.emit_levels ? "true" : "false") << "\n";
  out << "jobs = " << cfg.output.jobs << "\n";
  return out.str();
}

bool operator==(const RunConfig& a, const RunConfig& b) { return serialize(a) == serialize(b); }

std::string config_hash(const RunConfig& cfg) {
  const std::string s = serialize(cfg);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

NoiseSchedule base_schedule(const RunConfig& cfg) {
  return make_schedule(schedule_kind_from_string(cfg.schedule.kind), cfg.schedule.steps,
                       cfg.schedule.beta_start, cfg.schedule.beta_end,
                       sigma_variant_from_string(cfg.schedule.sigma_variant));
}

SamplerConfig build_sampler_config(const RunConfig& cfg, const NoiseSchedule& base) {
  SamplerConfig sc;
  sc.t_full = cfg.sampler.t_full;
  sc.t_scaled = cfg.sampler.t_scaled;
  sc.schedule_f = respace(base, cfg.sampler.t_full);
  if (cfg.sampler.scaled_schedule == "respaced") {
    sc.schedule_s = respace(base, cfg.sampler.t_scaled);
  } else if (cfg.sampler.scaled_schedule == "fresh") {
    sc.schedule_s = make_schedule(base.kind, cfg.sampler.t_scaled, cfg.schedule.beta_start,
                                  cfg.schedule.beta_end, base.sigma_variant);
  } else {
    throw ParamError("unknown scaled_schedule: " + cfg.sampler.scaled_schedule);
  }
  sc.delta_ts = cfg.sampler.delta_ts;
  sc.lambda = cfg.sampler.lambda;
  sc.ladder = cfg.sampler.ladder;
  sc.channels = cfg.data.channels;
  sc.encoding_degree = cfg.model.degree;
  sc.seed = cfg.sampler.seed;
  sc.strict_paper_init = cfg.sampler.strict_paper_init;
  sc.exact_guidance = cfg.sampler.exact_guidance;
  sc.upsample_kernel = upsample_kernel_from_string(cfg.sampler.upsample_kernel);
  sc.validate();
  return sc;
}

GaussianMixtureData build_dataset(const RunConfig& cfg) {
  return make_toy_dataset(cfg.data.dataset, cfg.data.height, cfg.data.width,
                          static_cast<std::size_t>(cfg.data.channels), cfg.data.amplitude,
                          cfg.data.variance);
}

}  // namespace pddpm
