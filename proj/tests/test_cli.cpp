#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlmin/errors.hpp"
#include "nlmin/experiment.hpp"
#include "nlmin/io.hpp"
#include "nlmin/measures.hpp"
#include "nlmin/verify.hpp"

using namespace nlmin;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nlmin_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write_config(const fs::path& dir, const Json& j) {
  const std::string path = (dir / "config.json").string();
  write_text(path, j.dump(2));
  return path;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(NLMIN_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Json read_json(const fs::path& p) { return Json::parse(read_text(p.string())); }

fs::path find_suffix(const fs::path& dir, const std::string& suffix) {
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string n = e.path().filename().string();
    if (n.size() >= suffix.size() && n.compare(n.size() - suffix.size(), suffix.size(), suffix) == 0) return e.path();
  }
  return {};
}

}  // namespace

TEST_CASE("config parsing") {
  const Json base{{"problem", "measure"}, {"kernel", {{"type", "power_law_minus"}, {"alpha", 6}, {"beta", 2}}}};
  const ExperimentConfig c = parse_config(base);
  CHECK(c.seeds.size() == 8);
  CHECK(c.hash().size() == 16);
  CHECK(c.hash() == parse_config(base).hash());

  Json typo = base;
  typo["partciles"] = 10;
  CHECK_THROWS_AS(parse_config(typo), ConfigError);
  Json bad_kernel = base;
  bad_kernel["kernel"]["gamma"] = 1;
  CHECK_THROWS_AS(parse_config(bad_kernel), ConfigError);
  Json neg = base;
  neg["mass"] = -1;
  CHECK_THROWS_AS(parse_config(neg), ConfigError);
  Json order = base;
  order["kernel"]["alpha"] = 1;
  CHECK_THROWS_AS(parse_config(order), ConfigError);
}

TEST_CASE("measure run end to end") {
  const fs::path dir = scratch("measure");
  const Json cfg{{"problem", "measure"},
                 {"kernel", {{"type", "power_law_minus"}, {"alpha", 6}, {"beta", 2}}},
                 {"dim", 2},
                 {"particles", 60},
                 {"seeds", {0, 1}}};
  const std::string path = write_config(dir, cfg);
  REQUIRE(run_cli("--out " + (dir / "out").string() + " run " + path, dir / "log.txt") == 0);
  const fs::path result = find_suffix(dir / "out", "_result.json");
  REQUIRE_FALSE(result.empty());
  const Json r = read_json(result);
  CHECK(r["classification"]["shape"] == "simplex");
  CHECK(r["energy"].get<double>() == doctest::Approx(-2.0 / 9).epsilon(1e-4));

  // State files reload to the same energy, bit for bit.
  const fs::path state = dir / "out" / r["state"].get<std::string>();
  const DiscreteMeasure mu = read_measure_csv(state.string());
  CHECK(energy_discrete(mu, PowerLawMinusKernel(6, 2)) == r["energy"].get<double>());
  CHECK(fs::exists(dir / "out" / r["trace_csv"].get<std::string>()));
}

TEST_CASE("negative mass is rejected") {
  const fs::path dir = scratch("negmass");
  const Json cfg{{"problem", "density"},
                 {"kernel", {{"type", "power_law_minus"}, {"alpha", 6}, {"beta", 2}}},
                 {"mass", -0.5}};
  const std::string path = write_config(dir, cfg);
  CHECK(run_cli("--out " + (dir / "out").string() + " run " + path, dir / "log.txt") == 1);
  const Json err = read_json(dir / "out" / "error.json");
  CHECK(err["message"].get<std::string>().find("invalid mass") != std::string::npos);
  CHECK(err["exit_code"] == 1);
}

TEST_CASE("unknown keys exit 1") {
  const fs::path dir = scratch("unknown");
  const Json cfg{{"problem", "measure"}, {"kernel", {{"type", "bump"}}}, {"particels", 3}};
  CHECK(run_cli("--out " + (dir / "out").string() + " run " + write_config(dir, cfg), dir / "log.txt") == 1);
  CHECK(read_json(dir / "out" / "error.json")["error"] == "config");
}

TEST_CASE("check-kernel on the bump kernel passes") {
  const fs::path dir = scratch("check");
  const Json cfg{{"problem", "check"}, {"kernel", {{"type", "bump"}}}, {"check", {{"eta", 0.01}, {"xi", 1.0 / 150}}}};
  const std::string path = write_config(dir, cfg);
  CHECK(run_cli("--out " + (dir / "out").string() + " check-kernel " + path, dir / "log.txt") == 0);
  CHECK(read_text((dir / "log.txt").string()).find("confinement hypotheses: pass") != std::string::npos);

  const Json wide{{"problem", "check"},
                  {"kernel", {{"type", "power_law_minus"}, {"alpha", 6}, {"beta", 2}}},
                  {"check", {{"eta", 0.01}, {"xi", 1.0 / 150}}}};
  CHECK(run_cli("--out " + (dir / "out2").string() + " check-kernel " + write_config(dir, wide), dir / "log2.txt") == 2);
  CHECK(read_text((dir / "log2.txt").string()).find("confinement hypotheses: fail") != std::string::npos);
}

TEST_CASE("radial run writes a reloadable profile") {
  const fs::path dir = scratch("radial");
  const Json cfg{{"problem", "radial"},
                 {"kernel", {{"type", "power_law_minus"}, {"alpha", 3}, {"beta", 2}}},
                 {"mass", 0.1},
                 {"shells", {{"r_max", 1.2}, {"n", 256}}}};
  REQUIRE(run_cli("--out " + (dir / "out").string() + " run " + write_config(dir, cfg), dir / "log.txt") == 0);
  const Json r = read_json(find_suffix(dir / "out", "_result.json"));
  CHECK(r["classification"]["shape"] == "annulus");
  std::string stem = (dir / "out" / r["state"].get<std::string>()).string();
  stem.resize(stem.size() - 5);
  const RadialProfile p = read_radial(stem);
  CHECK(energy_radial(p, radial_kernel_matrix(PowerLawMinusKernel(3, 2), 2, p.dr(), p.shells())) ==
        r["energy"].get<double>());
}

TEST_CASE("verify hook and single criterion") {
  std::ostringstream out;
  auto res = run_verify({std::string("K_N"), false}, out);
  REQUIRE(res.size() == 1);
  CHECK(res[0].pass);
  res = run_verify({std::string("2"), true}, out);
  REQUIRE(res.size() == 1);
  CHECK_FALSE(res[0].pass);
  CHECK(out.str().find("FAIL [ 2] K_N") != std::string::npos);
  CHECK_THROWS_AS(run_verify({std::string("nope"), false}, out), InvalidArgument);

  const fs::path dir = scratch("verify");
  CHECK(run_cli("verify --only=K_N --force-failure", dir / "log.txt") != 0);
  CHECK(run_cli("verify --only=simplex_energy", dir / "log2.txt") == 0);
}
