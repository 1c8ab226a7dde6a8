#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "hmmstab/config.hpp"
#include "hmmstab/error.hpp"

using namespace hmmstab;

namespace {

const char* kTobit = R"(
model:
  kind: tobit
  phi: 0.5
  sigma: 1.0
  beta: 1.0
nu: {form: gaussian, mean: -4, sd: 1}
nu_prime: {form: gaussian, mean: 4, sd: 1}
grid: {lo: -10, hi: 10, m: 200}
seed: 5
n: 50
replications: 3
)";

std::string message_of(const std::string& text, const std::vector<std::string>& ov = {}) {
  try {
    parse_config(text, ov);
  } catch (const InvalidInput& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("a basic document") {
  const RunConfig c = parse_config(kTobit);
  CHECK(require_model(c).kind() == ModelKind::Tobit);
  CHECK(require_seed(c) == 5);
  CHECK(c.n == 50);
  CHECK(c.grid->m == 200);
  CHECK(c.corpus.seed == 5);
  const ExperimentConfig e = experiment_config(c);
  CHECK(e.replications == 3);
  CHECK(std::get<GaussianInit>(e.nu).mean == -4.0);
}

TEST_CASE("unknown keys are named with their path") {
  CHECK(message_of(std::string(kTobit) + "extra: 1\n").find("unknown key 'extra'") != std::string::npos);
  CHECK(message_of(kTobit, {"model.rho=0.3"}).find("unknown key 'model.rho'") != std::string::npos);
}

TEST_CASE("overrides") {
  const RunConfig c = parse_config(kTobit, {"model.phi=0.8", "n=12", "grid.m=100"});
  CHECK(std::get<TobitParams>(require_model(c).params()).phi == 0.8);
  CHECK(c.n == 12);
  CHECK(c.grid->m == 100);
  CHECK(c.resolved_yaml.find("0.8") != std::string::npos);
  CHECK_THROWS_AS(parse_config(kTobit, {"novalue"}), InvalidInput);
}

TEST_CASE("missing seed") {
  const RunConfig c = parse_config("model: {kind: sv}\n");
  try {
    require_seed(c);
    FAIL("expected InvalidInput");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("seed") != std::string::npos);
  }
}

TEST_CASE("invalid parameters are rejected") {
  CHECK_THROWS_AS(parse_config(kTobit, {"model.sigma=-1"}), InvalidInput);
  CHECK_THROWS_AS(parse_config(kTobit, {"model.kind=bogus"}), InvalidInput);
  CHECK_THROWS_AS(parse_config(kTobit, {"model.phi=abc"}), InvalidInput);
}

TEST_CASE("grid density from a file") {
  const auto dir = std::filesystem::temp_directory_path() / "hmmstab_cfg_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "dens.csv");
    f << "x,density\n";
    for (int j = 0; j < 16; ++j) f << -1.0 + (j + 0.5) / 8.0 << "," << j + 1 << "\n";
  }
  const std::string doc =
      "model: {kind: lgssm}\nseed: 1\ngrid: {lo: -1, hi: 1, m: 16}\n"
      "nu: {form: grid_density, file: dens.csv}\nnu_prime: {form: gaussian, mean: 0, sd: 1}\n";
  const RunConfig c = parse_config(doc, {}, dir);
  const auto w = discretize(*c.nu, *c.grid);
  CHECK(w[15] == doctest::Approx(16.0 / 136.0));
  // a grid that does not match the file's points
  const RunConfig bad = parse_config(doc, {"grid.lo=-2"}, dir);
  CHECK_THROWS_AS(discretize(*bad.nu, *bad.grid), InvalidInput);
  std::filesystem::remove_all(dir);
}

TEST_CASE("bound section") {
  const std::string doc = std::string(kTobit) +
                          "bound:\n  beta: 0.25\n  gamma: 0.5\n  eta: 0.1\n  D: {lo: -1, hi: 1}\n"
                          "  C: {search: {probes: [0, 0.5, 1, 2]}}\n";
  const RunConfig c = parse_config(doc, {"model.drift_function={form: exp_abs, c: 0.5}"});
  REQUIRE(c.bound);
  const auto rb = resolve_bound(c, require_model(c));
  CHECK(rb.cfg.d.eps_minus > 0.0);
  REQUIRE(rb.c);
  CHECK(std::get<Interval>(rb.c->region).hi > 0.0);
  CHECK_THROWS_AS(parse_config(doc, {"bound.beta=1.5"}), InvalidInput);
}
