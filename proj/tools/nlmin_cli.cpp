#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "nlmin/errors.hpp"
#include "nlmin/experiment.hpp"
#include "nlmin/verify.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Minimizers of nonlocal interaction energies"};
  app.require_subcommand(1);
  std::string out;
  app.add_option("--out", out, "Output directory (default ./results)");

  std::string config;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config, "Config JSON")->required();
  auto* check = app.add_subcommand("check-kernel", "Check kernel hypotheses");
  check->add_option("config", config, "Config JSON")->required();
  auto* sweep = app.add_subcommand("sweep", "Density mass sweep");
  sweep->add_option("config", config, "Config JSON")->required();

  auto* verify = app.add_subcommand("verify", "Run the acceptance suite");
  std::string only;
  bool force_failure = false;
  verify->add_option("--only", only, "Run a single criterion (name or number)");
  verify->add_flag("--force-failure", force_failure, "Test hook: perturb K_2")->group("");

  CLI11_PARSE(app, argc, argv);

  const std::optional<std::string> out_dir = out.empty() ? std::nullopt : std::optional<std::string>(out);
  if (*run) return nlmin::run_experiment(config, out_dir);
  if (*check) return nlmin::check_kernel_command(config, out_dir);
  if (*sweep) return nlmin::sweep_command(config, out_dir);

  nlmin::VerifyOptions opts;
  if (!only.empty()) opts.only = only;
  opts.force_failure = force_failure;
  try {
    const auto results = nlmin::run_verify(opts, std::cout);
    int failed = 0;
    for (const auto& r : results) failed += r.pass ? 0 : 1;
    std::cout << results.size() - failed << "/" << results.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
  } catch (const nlmin::Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
