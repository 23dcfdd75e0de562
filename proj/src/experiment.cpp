#include "nlmin/experiment.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "nlmin/errors.hpp"
#include "nlmin/parallel.hpp"

namespace fs = std::filesystem;

namespace nlmin {

std::string to_string(ProblemClass p) {
  switch (p) {
    case ProblemClass::Measure: return "measure";
    case ProblemClass::Density: return "density";
    case ProblemClass::Radial: return "radial";
    case ProblemClass::Sweep: return "sweep";
    case ProblemClass::Check: return "check";
  }
  return "?";
}

namespace {

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

double number(const Json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  return v.get<double>();
}

double positive(const Json& j, const std::string& key, const std::string& where, const std::string& label = "") {
  const double v = number(j, key, where);
  if (!(v > 0.0)) throw ConfigError(label.empty() ? where + "." + key + " must be positive" : label);
  return v;
}

int integer(const Json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 1) throw ConfigError(where + "." + key + " must be a positive integer");
  return v.get<int>();
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  return h;
}

struct Output {
  fs::path dir;
  std::string prefix;
};

Output prepare_output(const ExperimentConfig& cfg, const std::optional<std::string>& out_dir) {
  Output o;
  o.dir = out_dir ? fs::path(*out_dir) : (cfg.output.empty() ? fs::path("results") : fs::path(cfg.output));
  std::error_code ec;
  fs::create_directories(o.dir, ec);
  if (ec) throw IoError("cannot create output directory " + o.dir.string() + ": " + ec.message());
  o.prefix = cfg.hash();
  return o;
}

int exit_code_for(const Error& e) { return e.kind() == "hypothesis" ? 2 : 1; }

int report_error(const Error& e, const std::optional<std::string>& out_dir, const std::string& fallback_dir) {
  std::cerr << "error [" << e.kind() << "]: " << e.what() << '\n';
  const Json j{{"error", e.kind()}, {"message", e.what()}, {"exit_code", exit_code_for(e)}};
  try {
    const fs::path dir = out_dir ? fs::path(*out_dir) : fs::path(fallback_dir);
    fs::create_directories(dir);
    write_text((dir / "error.json").string(), j.dump(2) + "\n");
  } catch (const std::exception& w) {
    std::cerr << "error: could not write error.json: " << w.what() << '\n';
  }
  return exit_code_for(e);
}

template <class F>
int guarded(const std::string& config_path, const std::optional<std::string>& out_dir, F body) {
  std::string fallback = "results";
  try {
    const ExperimentConfig cfg = load_config(config_path);
    if (!cfg.output.empty()) fallback = cfg.output;
    return body(cfg);
  } catch (const Error& e) {
    return report_error(e, out_dir, fallback);
  } catch (const Json::exception& e) {
    return report_error(ConfigError(std::string("malformed config: ") + e.what()), out_dir, fallback);
  } catch (const fs::filesystem_error& e) {
    return report_error(IoError(e.what()), out_dir, fallback);
  }
}

// Runs fn(i) for i in [0, n) on up to worker_count() threads.
template <class F>
void run_pool(std::size_t n, F fn) {
  const std::size_t workers = std::min(n, worker_count());
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

GridSpec grid_for(const ExperimentConfig& cfg, const RadialKernel& k, double m) {
  if (cfg.grid_lower && cfg.grid_upper) return GridSpec::cube(cfg.dim, *cfg.grid_lower, *cfg.grid_upper, cfg.grid_spacing);
  DiameterBoundOptions dopt;
  dopt.dim = cfg.dim;
  const DiameterBoundReport rep = diameter_bound(k, m, DiameterVariant::LocallyBounded, dopt);
  const double half = 0.5 * rep.D;
  const double cells = std::pow(rep.D / cfg.grid_spacing, cfg.dim);
  if (cells > 4e6)
    throw ConfigError("grid from the diameter bound (D = " + std::to_string(rep.D) + ") is too large; supply grid.lower/upper");
  return GridSpec::cube(cfg.dim, -half, half, cfg.grid_spacing);
}

Json trace_summary(const OptimizeTrace& t) {
  return {{"iterations", t.iterations}, {"final_grad_norm", t.final_grad_norm}, {"reason", t.reason},
          {"energy_non_increasing", t.non_increasing()}};
}

int run_measure(const ExperimentConfig& cfg, const Output& out) {
  const RadialKernel k = cfg.kernel();
  std::vector<Json> results(cfg.seeds.size());
  run_pool(cfg.seeds.size(), [&](std::size_t i) {
    OptimizeOptions o = cfg.options;
    o.seed = cfg.seeds[i];
    const MeasureResult r = minimize_measure(k, cfg.dim, cfg.particles, o);
    const std::string stem = out.prefix + "_seed" + std::to_string(o.seed);
    write_measure_csv((out.dir / (stem + "_measure.csv")).string(), r.measure);
    write_trace_csv((out.dir / (stem + "_trace.csv")).string(), r.trace);
    Json j{{"config_hash", out.prefix},
           {"problem", "measure"},
           {"seed", o.seed},
           {"energy", energy_discrete(r.measure, k)},
           {"classification", to_json(classify_minimizer(r.measure))},
           {"clusters", to_json(cluster_support(r.measure.points(), r.measure.weights(), 0.05))},
           {"el_report", to_json(el_residual_measure(r.measure, k))},
           {"trace", trace_summary(r.trace)},
           {"trace_csv", stem + "_trace.csv"},
           {"state", stem + "_measure.csv"}};
    write_text((out.dir / (stem + ".json")).string(), j.dump(2) + "\n");
    results[i] = std::move(j);
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i)
    if (results[i]["energy"].get<double>() < results[best]["energy"].get<double>()) best = i;
  Json summary = results[best];
  summary["best_seed"] = results[best]["seed"];
  summary["seeds"] = cfg.seeds;
  write_text((out.dir / (out.prefix + "_result.json")).string(), summary.dump(2) + "\n");
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int run_density(const ExperimentConfig& cfg, const Output& out) {
  const RadialKernel k = cfg.kernel();
  const GridSpec grid = grid_for(cfg, k, cfg.mass);
  std::vector<Json> results(cfg.seeds.size());
  run_pool(cfg.seeds.size(), [&](std::size_t i) {
    OptimizeOptions o = cfg.options;
    o.seed = cfg.seeds[i];
    if (!cfg.grad_tol_given) o.grad_tol = 1e-7 * cfg.mass;
    const DensityResult r = minimize_density(k, cfg.mass, grid, o);
    const std::string stem = out.prefix + "_seed" + std::to_string(o.seed);
    write_density((out.dir / (stem + "_density")).string(), r.density);
    write_trace_csv((out.dir / (stem + "_trace.csv")).string(), r.trace);
    Json j{{"config_hash", out.prefix},
           {"problem", "density"},
           {"seed", o.seed},
           {"mass", r.density.mass()},
           {"energy", energy_density(r.density, k)},
           {"classification", to_json(classify_minimizer(r.density))},
           {"el_report", to_json(el_residual_density(r.density, k))},
           {"trace", trace_summary(r.trace)},
           {"trace_csv", stem + "_trace.csv"},
           {"state", stem + "_density.json"}};
    write_text((out.dir / (stem + ".json")).string(), j.dump(2) + "\n");
    results[i] = std::move(j);
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i)
    if (results[i]["energy"].get<double>() < results[best]["energy"].get<double>()) best = i;
  write_text((out.dir / (out.prefix + "_result.json")).string(), results[best].dump(2) + "\n");
  std::cout << results[best].dump(2) << '\n';
  return 0;
}

int run_radial(const ExperimentConfig& cfg, const Output& out) {
  const RadialKernel k = cfg.kernel();
  OptimizeOptions o = cfg.options;
  if (!cfg.grad_tol_given) o.grad_tol = 1e-7 * cfg.mass;
  const RadialResult r = minimize_radial(k, cfg.dim, cfg.mass, cfg.r_max, cfg.n_shells, o, std::nullopt, cfg.n_quad);
  const Eigen::MatrixXd G = radial_kernel_matrix(k, cfg.dim, r.profile.dr(), r.profile.shells(), cfg.n_quad);
  const std::string stem = out.prefix;
  write_radial((out.dir / (stem + "_profile")).string(), r.profile);
  write_trace_csv((out.dir / (stem + "_trace.csv")).string(), r.trace);
  const Json j{{"config_hash", out.prefix},
               {"problem", "radial"},
               {"mass", r.profile.mass()},
               {"energy", energy_radial(r.profile, G)},
               {"classification", to_json(classify_minimizer(r.profile))},
               {"el_report", to_json(el_residual_radial(r.profile, G))},
               {"trace", trace_summary(r.trace)},
               {"trace_csv", stem + "_trace.csv"},
               {"state", stem + "_profile.json"}};
  write_text((out.dir / (stem + "_result.json")).string(), j.dump(2) + "\n");
  std::cout << j.dump(2) << '\n';
  return 0;
}

int run_sweep(const ExperimentConfig& cfg, const Output& out) {
  if (cfg.masses.empty() && cfg.problem != ProblemClass::Sweep) throw ConfigError("sweep needs a 'masses' list");
  const RadialKernel k = cfg.kernel();
  const GridSpec grid = grid_for(cfg, k, cfg.masses.empty() ? 1.0 : cfg.masses.back());
  const auto rows = mass_sweep(k, cfg.masses, grid, cfg.options);
  std::ostringstream csv;
  csv << "m,intermediate_fraction,n_components,hausdorff_to_scaled_support,energy\n" << std::setprecision(17);
  Json table = Json::array();
  for (const auto& r : rows) {
    csv << r.m << ',' << r.intermediate_fraction << ',' << r.n_components << ',' << r.hausdorff_to_scaled_support << ','
        << r.energy << '\n';
    table.push_back({{"m", r.m},
                     {"intermediate_fraction", r.intermediate_fraction},
                     {"n_components", r.n_components},
                     {"hausdorff_to_scaled_support", r.hausdorff_to_scaled_support},
                     {"energy", r.energy}});
  }
  write_text((out.dir / (out.prefix + "_sweep.csv")).string(), csv.str());
  const Json j{{"config_hash", out.prefix}, {"problem", "sweep"}, {"table", table}};
  write_text((out.dir / (out.prefix + "_result.json")).string(), j.dump(2) + "\n");
  std::cout << j.dump(2) << '\n';
  return 0;
}

int run_check(const ExperimentConfig& cfg, const Output& out) {
  const RadialKernel k = cfg.kernel();
  const ConfinementReport conf = check_confinement_hypotheses(k, ConfinementHypotheses(cfg.eta, cfg.xi), 10000, cfg.t_max);
  Json j{{"config_hash", out.prefix}, {"problem", "check"}, {"kernel", k.name()}, {"regularity", to_string(k.regularity())}};
  j["confinement"] = to_json(conf);
  bool ratio_pass = true;
  if (k.has_d2()) {
    const auto ratio = check_second_derivative_ratio(k, cfg.xi);
    j["second_derivative_ratio"] = to_json(ratio);
    ratio_pass = ratio.pass;
  } else {
    j["second_derivative_ratio"] = "unavailable (kernel not C2)";
    ratio_pass = false;
  }
  const auto weak = check_weak_repulsivity(k, cfg.t_max);
  j["weak_repulsivity"] = {{"g0_is_zero", weak.g0_is_zero},
                           {"negative_near_origin", weak.negative_near_origin},
                           {"positive_at_range", weak.positive_at_range}};
  if (weak.crossover) j["weak_repulsivity"]["crossover"] = *weak.crossover;
  const auto rbar = check_definitively_nondecreasing(k, cfg.t_max, 100001);
  j["nondecreasing_from"] = rbar ? Json(*rbar) : Json(nullptr);
  const bool pass = conf.pass && ratio_pass;
  j["report"] = std::string("confinement hypotheses: ") + (pass ? "pass" : "fail");
  write_text((out.dir / (out.prefix + "_check.json")).string(), j.dump(2) + "\n");
  std::cout << j["report"].get<std::string>() << '\n' << j.dump(2) << '\n';
  return pass ? 0 : 2;
}

}  // namespace

RadialKernel kernel_from_json(const Json& spec, const std::string& base_dir) {
  if (!spec.is_object() || !spec.contains("type") || !spec["type"].is_string())
    throw ConfigError("kernel must be an object with a string 'type'");
  const std::string type = spec["type"].get<std::string>();
  if (type == "power_law_minus") {
    reject_unknown(spec, {"type", "alpha", "beta"}, "kernel");
    const double a = positive(spec, "alpha", "kernel"), b = positive(spec, "beta", "kernel");
    try {
      return PowerLawMinusKernel(a, b).kernel();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  if (type == "tabulated") {
    reject_unknown(spec, {"type", "path"}, "kernel");
    if (!spec.contains("path") || !spec["path"].is_string()) throw ConfigError("kernel.path must be a string");
    fs::path p = spec["path"].get<std::string>();
    if (p.is_relative()) p = fs::path(base_dir) / p;
    if (!fs::exists(p)) throw ConfigError("kernel table not found: " + p.string());
    return tabulated_kernel_from_csv(p.string());
  }
  if (type == "bump") {
    reject_unknown(spec, {"type", "background_depth", "well_width", "slope", "rounding", "cutoff_start", "cutoff_end"},
                   "kernel");
    BumpKernelParams p;
    if (spec.contains("background_depth")) p.background_depth = positive(spec, "background_depth", "kernel");
    if (spec.contains("well_width")) p.well_width = positive(spec, "well_width", "kernel");
    if (spec.contains("slope")) p.slope = positive(spec, "slope", "kernel");
    if (spec.contains("rounding")) p.rounding = positive(spec, "rounding", "kernel");
    if (spec.contains("cutoff_start")) p.cutoff_start = positive(spec, "cutoff_start", "kernel");
    if (spec.contains("cutoff_end")) p.cutoff_end = positive(spec, "cutoff_end", "kernel");
    return bump_kernel(p);
  }
  throw ConfigError("unknown kernel type '" + type + "'");
}

RadialKernel ExperimentConfig::kernel() const { return kernel_from_json(kernel_spec, base_dir); }

std::string ExperimentConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(raw.dump())));
  return buf;
}

ExperimentConfig parse_config(const Json& j, const std::string& base_dir) {
  reject_unknown(j, {"problem", "kernel", "dim", "particles", "mass", "masses", "grid", "shells", "check", "options",
                     "seeds", "output"},
                 "config");
  ExperimentConfig c;
  c.raw = j;
  c.base_dir = base_dir;
  if (!j.contains("problem") || !j["problem"].is_string()) throw ConfigError("config.problem is required");
  const std::string p = j["problem"].get<std::string>();
  if (p == "measure") c.problem = ProblemClass::Measure;
  else if (p == "density") c.problem = ProblemClass::Density;
  else if (p == "radial") c.problem = ProblemClass::Radial;
  else if (p == "sweep") c.problem = ProblemClass::Sweep;
  else if (p == "check") c.problem = ProblemClass::Check;
  else throw ConfigError("unknown problem class '" + p + "'");
  if (!j.contains("kernel")) throw ConfigError("config.kernel is required");
  c.kernel_spec = j["kernel"];
  kernel_from_json(c.kernel_spec, base_dir);  // validate early
  if (j.contains("dim")) c.dim = integer(j, "dim", "config");
  if (j.contains("particles")) c.particles = integer(j, "particles", "config");
  if (j.contains("mass")) c.mass = positive(j, "mass", "config", "invalid mass: must be positive");
  if ((c.problem == ProblemClass::Density || c.problem == ProblemClass::Radial) && !j.contains("mass"))
    throw ConfigError("invalid mass: config.mass is required for this problem class");
  if (j.contains("masses")) {
    if (!j["masses"].is_array()) throw ConfigError("config.masses must be a list");
    for (const auto& m : j["masses"]) {
      if (!m.is_number() || !(m.get<double>() > 0.0)) throw ConfigError("invalid mass in config.masses");
      c.masses.push_back(m.get<double>());
    }
    if (!std::is_sorted(c.masses.begin(), c.masses.end())) throw ConfigError("config.masses must be ascending");
  }
  if (j.contains("grid")) {
    const Json& g = j["grid"];
    reject_unknown(g, {"lower", "upper", "spacing"}, "grid");
    if (g.contains("spacing")) c.grid_spacing = positive(g, "spacing", "grid");
    if (g.contains("lower") != g.contains("upper")) throw ConfigError("grid.lower and grid.upper go together");
    if (g.contains("lower")) {
      c.grid_lower = number(g, "lower", "grid");
      c.grid_upper = number(g, "upper", "grid");
      if (!(*c.grid_upper > *c.grid_lower)) throw ConfigError("grid.upper must exceed grid.lower");
    }
  }
  if (j.contains("shells")) {
    const Json& s = j["shells"];
    reject_unknown(s, {"r_max", "n", "n_quad"}, "shells");
    if (s.contains("r_max")) c.r_max = positive(s, "r_max", "shells");
    if (s.contains("n")) c.n_shells = integer(s, "n", "shells");
    if (s.contains("n_quad")) c.n_quad = integer(s, "n_quad", "shells");
  }
  if (j.contains("check")) {
    const Json& s = j["check"];
    reject_unknown(s, {"eta", "xi", "t_max"}, "check");
    if (s.contains("eta")) c.eta = positive(s, "eta", "check");
    if (s.contains("xi")) c.xi = positive(s, "xi", "check");
    if (s.contains("t_max")) c.t_max = positive(s, "t_max", "check");
  }
  if (j.contains("options")) {
    const Json& o = j["options"];
    reject_unknown(o, {"max_iters", "grad_tol", "step_init", "backtrack", "merge_radius", "log_every", "weight_polish",
                       "perturbation"},
                   "options");
    if (o.contains("max_iters")) c.options.max_iters = integer(o, "max_iters", "options");
    if (o.contains("grad_tol")) c.options.grad_tol = positive(o, "grad_tol", "options"), c.grad_tol_given = true;
    if (o.contains("step_init")) c.options.step_init = positive(o, "step_init", "options");
    if (o.contains("backtrack")) c.options.backtrack = positive(o, "backtrack", "options");
    if (o.contains("merge_radius")) c.options.merge_radius = number(o, "merge_radius", "options");
    if (o.contains("log_every")) c.options.log_every = integer(o, "log_every", "options");
    if (o.contains("perturbation")) c.options.perturbation = number(o, "perturbation", "options");
    if (o.contains("weight_polish")) {
      if (!o["weight_polish"].is_boolean()) throw ConfigError("options.weight_polish must be a boolean");
      c.options.weight_polish = o["weight_polish"].get<bool>();
    }
    try {
      c.options.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.contains("seeds")) {
    if (!j["seeds"].is_array() || j["seeds"].empty()) throw ConfigError("config.seeds must be a non-empty list");
    for (const auto& s : j["seeds"]) {
      if (!s.is_number_integer() || s.get<long long>() < 0) throw ConfigError("config.seeds must be non-negative integers");
      c.seeds.push_back(s.get<std::uint64_t>());
    }
  } else if (c.problem == ProblemClass::Measure) {
    for (std::uint64_t s = 0; s < 8; ++s) c.seeds.push_back(s);
  } else {
    c.seeds.push_back(0);
  }
  if (j.contains("output")) {
    if (!j["output"].is_string()) throw ConfigError("config.output must be a string");
    c.output = j["output"].get<std::string>();
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  if (!fs::exists(path)) throw IoError("config not found: " + path);
  Json j;
  try {
    j = Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  const fs::path parent = fs::path(path).parent_path();
  return parse_config(j, parent.empty() ? "." : parent.string());
}

int run_experiment(const std::string& config_path, const std::optional<std::string>& out_dir) {
  return guarded(config_path, out_dir, [&](const ExperimentConfig& cfg) {
    const Output out = prepare_output(cfg, out_dir);
    switch (cfg.problem) {
      case ProblemClass::Measure: return run_measure(cfg, out);
      case ProblemClass::Density: return run_density(cfg, out);
      case ProblemClass::Radial: return run_radial(cfg, out);
      case ProblemClass::Sweep: return run_sweep(cfg, out);
      case ProblemClass::Check: return run_check(cfg, out);
    }
    return 1;
  });
}

int check_kernel_command(const std::string& config_path, const std::optional<std::string>& out_dir) {
  return guarded(config_path, out_dir, [&](const ExperimentConfig& cfg) { return run_check(cfg, prepare_output(cfg, out_dir)); });
}

int sweep_command(const std::string& config_path, const std::optional<std::string>& out_dir) {
  return guarded(config_path, out_dir, [&](const ExperimentConfig& cfg) {
    if (cfg.masses.empty()) throw ConfigError("sweep needs a non-empty 'masses' list");
    return run_sweep(cfg, prepare_output(cfg, out_dir));
  });
}

}  // namespace nlmin
