#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nlmin/io.hpp"
#include "nlmin/kernels.hpp"
#include "nlmin/optimize.hpp"

namespace nlmin {

enum class ProblemClass { Measure, Density, Radial, Sweep, Check };
std::string to_string(ProblemClass p);

/// One experiment per JSON file. Schema (unknown keys are rejected):
///   problem: "measure" | "density" | "radial" | "sweep" | "check"
///   kernel:  {"type": "power_law_minus", "alpha", "beta"}
///          | {"type": "tabulated", "path"}   (CSV t,g; relative to the config)
///          | {"type": "bump", optional BumpKernelParams fields}
///   dim, particles (measure), mass (density/radial), masses (sweep)
///   grid:    {"lower", "upper", "spacing"}   (density/sweep; defaults to the diameter bound box)
///   shells:  {"r_max", "n", "n_quad"}      (radial)
///   check:   {"eta", "xi", "t_max"}        (check)
///   options: OptimizeOptions fields
///   seeds:   list of integers (default 0..7 for measure, [0] otherwise)
///   output:  directory (overridden by --out)
struct ExperimentConfig {
  ProblemClass problem = ProblemClass::Measure;
  Json kernel_spec;
  int dim = 2;
  int particles = 60;
  double mass = 0.0;
  std::vector<double> masses;
  std::optional<double> grid_lower, grid_upper;
  double grid_spacing = 0.02;
  double r_max = 1.2;
  int n_shells = 512;
  int n_quad = 128;
  double eta = 0.01;
  double xi = 1.0 / 150.0;
  double t_max = 10.0;
  OptimizeOptions options;
  bool grad_tol_given = false;
  std::vector<std::uint64_t> seeds;
  std::string output;
  std::string base_dir;  // directory of the config file
  Json raw;

  RadialKernel kernel() const;
  /// 16 hex digits, FNV-1a of the canonical JSON dump.
  std::string hash() const;
};

/// Throws ConfigError on schema violations.
ExperimentConfig parse_config(const Json& j, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);
RadialKernel kernel_from_json(const Json& spec, const std::string& base_dir = ".");

/// Exit codes: 0 success, 2 hypothesis-check failure, 1 I/O or config error.
/// Errors are reported to stderr and to error.json in the output directory.
int run_experiment(const std::string& config_path, const std::optional<std::string>& out_dir);
int check_kernel_command(const std::string& config_path, const std::optional<std::string>& out_dir);
int sweep_command(const std::string& config_path, const std::optional<std::string>& out_dir);

}  // namespace nlmin
