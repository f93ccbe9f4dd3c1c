#include "mlmcgrad/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace mlmc::config {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw std::invalid_argument("config field '" + field + "': " + why);
}

template <typename T>
T get_or(const json& j, const std::string& field, const T& fallback) {
  if (!j.contains(field)) return fallback;
  try {
    return j.at(field).get<T>();
  } catch (const json::exception&) {
    fail(field, "wrong type");
  }
}

ProblemSpec parse_problem(const json& j) {
  ProblemSpec p;
  p.type = get_or<std::string>(j, "type", p.type);
  if (p.type != "quadratic" && p.type != "expdecay_quadratic" &&
      p.type != "sign_conflict" && p.type != "logistic") {
    fail("problem.type", "unknown problem type '" + p.type + "'");
  }
  p.d = get_or<std::size_t>(j, "d", p.d);
  p.M = get_or<std::size_t>(j, "M", p.M);
  p.smoothness = get_or<double>(j, "smoothness", p.smoothness);
  p.sigma = get_or<double>(j, "sigma", p.sigma);
  p.xi = get_or<double>(j, "xi", p.xi);
  p.seed = get_or<std::uint64_t>(j, "seed", p.seed);
  p.cond = get_or<double>(j, "cond", p.cond);
  p.x0_radius = get_or<double>(j, "x0_radius", p.x0_radius);
  p.strict_noise = get_or<bool>(j, "strict_noise", p.strict_noise);
  p.r = get_or<double>(j, "r", p.r);
  p.beta_conflict = get_or<double>(j, "beta_conflict", p.beta_conflict);
  p.gamma_conflict = get_or<double>(j, "gamma_conflict", p.gamma_conflict);
  p.samples_per_worker =
      get_or<std::size_t>(j, "samples_per_worker", p.samples_per_worker);
  if (p.d < 1) fail("problem.d", "must be >= 1");
  if (p.M < 1) fail("problem.M", "must be >= 1");
  if (!(p.smoothness > 0.0)) fail("problem.smoothness", "must be > 0");
  if (p.sigma < 0.0) fail("problem.sigma", "must be >= 0");
  if (p.xi < 0.0) fail("problem.xi", "must be >= 0");
  return p;
}

MethodSpec parse_method(const json& j, std::size_t index) {
  std::string where = "methods[" + std::to_string(index) + "]";
  MethodSpec m;
  m.type = get_or<std::string>(j, "type", m.type);
  if (m.type != "sgd" && m.type != "momentum_sgd" && m.type != "mlmc" &&
      m.type != "rand_k" && m.type != "qsgd" && m.type != "topk_direct" &&
      m.type != "ef_momentum") {
    fail(where + ".type", "unknown method type '" + m.type + "'");
  }
  m.name = get_or<std::string>(j, "name", m.type);
  m.compressor = get_or<std::string>(j, "compressor", m.compressor);
  if (m.compressor != "topk" && m.compressor != "stopk" &&
      m.compressor != "fixed_point" && m.compressor != "floating_point" &&
      m.compressor != "rtn" && m.compressor != "identity") {
    fail(where + ".compressor", "unknown compressor '" + m.compressor + "'");
  }
  m.distribution = get_or<std::string>(j, "distribution", m.distribution);
  if (m.distribution != "adaptive" && m.distribution != "static") {
    fail(where + ".distribution", "must be 'adaptive' or 'static'");
  }
  m.s = get_or<std::size_t>(j, "s", m.s);
  if (j.contains("scale")) m.scale = get_or<double>(j, "scale", 1.0);
  m.clip = get_or<double>(j, "clip", m.clip);
  m.levels = get_or<std::size_t>(j, "levels", m.levels);
  m.k = get_or<std::size_t>(j, "k", m.k);
  m.beta = get_or<double>(j, "beta", m.beta);
  if (m.s < 1) fail(where + ".s", "must be >= 1");
  if (m.k < 1) fail(where + ".k", "must be >= 1");
  if (m.beta <= 0.0 || m.beta > 1.0) fail(where + ".beta", "must be in (0, 1]");
  return m;
}

json to_json(const ProblemSpec& p) {
  return json{{"type", p.type},
              {"d", p.d},
              {"M", p.M},
              {"smoothness", p.smoothness},
              {"sigma", p.sigma},
              {"xi", p.xi},
              {"seed", p.seed},
              {"cond", p.cond},
              {"x0_radius", p.x0_radius},
              {"strict_noise", p.strict_noise},
              {"r", p.r},
              {"beta_conflict", p.beta_conflict},
              {"gamma_conflict", p.gamma_conflict},
              {"samples_per_worker", p.samples_per_worker}};
}

json to_json(const MethodSpec& m) {
  json j{{"name", m.name},       {"type", m.type},
         {"compressor", m.compressor}, {"distribution", m.distribution},
         {"s", m.s},             {"clip", m.clip},
         {"levels", m.levels},   {"k", m.k},
         {"beta", m.beta}};
  if (m.scale) j["scale"] = *m.scale;
  return j;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") +
                                e.what());
  }
  ExperimentConfig c;
  c.name = get_or<std::string>(j, "name", c.name);
  if (c.name.empty()) fail("name", "must be nonempty");
  if (j.contains("problem")) c.problem = parse_problem(j.at("problem"));
  if (!j.contains("methods") || !j.at("methods").is_array() ||
      j.at("methods").empty()) {
    fail("methods", "must be a nonempty array");
  }
  std::size_t idx = 0;
  for (const auto& jm : j.at("methods")) {
    c.methods.push_back(parse_method(jm, idx++));
  }
  c.T = get_or<std::size_t>(j, "T", c.T);
  if (j.contains("eta") && j.contains("eta_grid")) {
    fail("eta", "give either eta or eta_grid, not both");
  }
  if (j.contains("eta")) {
    c.eta_grid = {get_or<double>(j, "eta", 0.0)};
  } else if (j.contains("eta_grid")) {
    c.eta_grid = get_or<std::vector<double>>(j, "eta_grid", {});
  } else {
    fail("eta", "missing step size (eta or eta_grid)");
  }
  for (double eta : c.eta_grid) {
    if (!(eta > 0.0)) fail("eta", "step sizes must be > 0");
  }
  c.seeds = get_or<std::vector<std::uint64_t>>(j, "seeds", c.seeds);
  if (c.seeds.empty()) fail("seeds", "must be nonempty");
  c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir);
  c.parallel_workers = get_or<bool>(j, "parallel_workers", c.parallel_workers);
  c.divergence_factor =
      get_or<double>(j, "divergence_factor", c.divergence_factor);
  if (!(c.divergence_factor > 1.0)) fail("divergence_factor", "must be > 1");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open config file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["problem"] = to_json(c.problem);
  j["methods"] = json::array();
  for (const auto& m : c.methods) j["methods"].push_back(to_json(m));
  j["T"] = c.T;
  if (c.eta_grid.size() == 1) {
    j["eta"] = c.eta_grid.front();
  } else {
    j["eta_grid"] = c.eta_grid;
  }
  j["seeds"] = c.seeds;
  j["output_dir"] = c.output_dir;
  j["parallel_workers"] = c.parallel_workers;
  j["divergence_factor"] = c.divergence_factor;
  return j.dump(2) + "\n";
}

std::unique_ptr<problems::Problem> build_problem(const ProblemSpec& spec) {
  if (spec.type == "quadratic") {
    problems::QuadraticOptions opt;
    opt.sigma = spec.sigma;
    opt.strict_noise = spec.strict_noise;
    opt.cond = spec.cond;
    opt.x0_radius = spec.x0_radius;
    return std::make_unique<problems::QuadraticProblem>(
        spec.d, spec.M, spec.smoothness, spec.xi, spec.seed, opt);
  }
  if (spec.type == "expdecay_quadratic") {
    problems::QuadraticOptions opt;
    opt.sigma = spec.sigma;
    opt.strict_noise = spec.strict_noise;
    opt.identity_hessian = true;
    opt.x0_radius = spec.x0_radius;
    opt.x0_decay_rate = spec.r;
    return std::make_unique<problems::QuadraticProblem>(
        spec.d, spec.M, spec.smoothness, spec.xi, spec.seed, opt);
  }
  if (spec.type == "sign_conflict") {
    return std::make_unique<problems::QuadraticProblem>(
        problems::make_sign_conflict(spec.beta_conflict, spec.gamma_conflict,
                                     spec.sigma));
  }
  if (spec.type == "logistic") {
    return std::make_unique<problems::LogisticProblem>(
        spec.d, spec.M, spec.samples_per_worker, spec.seed, spec.sigma);
  }
  throw std::invalid_argument("unknown problem type '" + spec.type + "'");
}

std::shared_ptr<const MultilevelCompressor> build_compressor(
    const MethodSpec& spec) {
  if (spec.compressor == "topk") return std::make_shared<TopKCompressor>();
  if (spec.compressor == "stopk") {
    return std::make_shared<SegmentedTopKCompressor>(spec.s);
  }
  if (spec.compressor == "fixed_point") {
    if (spec.scale) return std::make_shared<FixedPointCompressor>(*spec.scale);
    return std::make_shared<FixedPointCompressor>();
  }
  if (spec.compressor == "floating_point") {
    return std::make_shared<FloatingPointCompressor>();
  }
  if (spec.compressor == "rtn") {
    return std::make_shared<RtnCompressor>(spec.clip, spec.levels);
  }
  if (spec.compressor == "identity") {
    return std::make_shared<IdentityCompressor>();
  }
  throw std::invalid_argument("unknown compressor '" + spec.compressor + "'");
}

std::unique_ptr<sim::Method> build_method(const MethodSpec& spec) {
  if (spec.type == "sgd") return std::make_unique<sim::SgdMethod>();
  if (spec.type == "momentum_sgd") {
    return std::make_unique<sim::MomentumSgdMethod>(spec.beta);
  }
  if (spec.type == "mlmc") {
    auto mode = spec.distribution == "adaptive"
                    ? sim::DistributionMode::kAdaptive
                    : sim::DistributionMode::kStatic;
    return std::make_unique<sim::MlmcMethod>(build_compressor(spec), mode);
  }
  if (spec.type == "rand_k") return std::make_unique<sim::RandKMethod>(spec.k);
  if (spec.type == "qsgd") {
    return std::make_unique<sim::QsgdMethod>(spec.levels);
  }
  if (spec.type == "topk_direct") {
    return std::make_unique<sim::TopKDirectMethod>(spec.k);
  }
  if (spec.type == "ef_momentum") {
    return std::make_unique<sim::EfMomentumMethod>(
        std::make_shared<TopKCompressor>(), spec.k, spec.beta);
  }
  throw std::invalid_argument("unknown method type '" + spec.type + "'");
}

}  // namespace mlmc::config
