#include <cmath>
#include <filesystem>
#include <limits>
#include <vector>

#include "doctest.h"
#include "hmmstab/csv.hpp"
#include "hmmstab/error.hpp"
#include "hmmstab/experiments.hpp"

using namespace hmmstab;

namespace {

ExperimentConfig small_tobit() {
  ExperimentConfig c{ModelSpec(TobitParams{0.5, 1.0, 1.0})};
  c.n = 40;
  c.replications = 4;
  c.seed = 17;
  c.grid = GridSpec{-10, 10, 200};
  return c;
}

}  // namespace

TEST_CASE("fit_rate on exact geometric sequences") {
  std::vector<double> tv;
  for (int k = 0; k <= 50; ++k) tv.push_back(0.5 * std::exp(-0.3 * k));
  CHECK(fit_rate(tv) == doctest::Approx(-0.3).epsilon(1e-12));
  // values under the floor shorten the window
  std::vector<double> cut = tv;
  for (int k = 30; k <= 50; ++k) cut[k] = 1e-20;
  CHECK(fit_rate(cut) == doctest::Approx(-0.3).epsilon(1e-12));
  CHECK(fit_rate(std::vector<double>(10, 0.0)) == -std::numeric_limits<double>::infinity());
  CHECK(fit_rate({0.5, 1e-20, 1e-20}) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("quantile") {
  CHECK(quantile({3, 1, 2, 4}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({3, 1, 2, 4}, 0.25) == doctest::Approx(1.75));
  CHECK(quantile({5}, 0.75) == 5.0);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(quantile({-inf, -inf, -1.0}, 0.25) == -inf);
  CHECK(quantile({-inf, -1.0, -0.5}, 0.75) == doctest::Approx(-0.75));
}

TEST_CASE("dyadic schedule") {
  CHECK(dyadic_schedule(40) == std::vector<int>{4, 8, 16, 32});
  CHECK(dyadic_schedule(3).empty());
  CHECK(dyadic_schedule(64).back() == 64);
}

TEST_CASE("forgetting run: equal initial laws never separate") {
  ExperimentConfig c = small_tobit();
  c.nu_prime = c.nu;
  const auto r = run_forgetting(c);
  for (const auto& rep : r.reps) {
    for (double t : rep.tv) CHECK(t == 0.0);
    CHECK(rep.rate == -std::numeric_limits<double>::infinity());
  }
}

TEST_CASE("forgetting run: results do not depend on the thread count") {
  ExperimentConfig c = small_tobit();
  const auto a = run_forgetting(c);
  c.threads = 3;
  const auto b = run_forgetting(c);
  REQUIRE(a.reps.size() == b.reps.size());
  for (std::size_t r = 0; r < a.reps.size(); ++r) CHECK(a.reps[r].tv == b.reps[r].tv);
  CHECK(a.median_rate == b.median_rate);
  CHECK(a.median_rate < 0.0);
  CHECK(a.q1_rate <= a.median_rate);
  CHECK(a.median_rate <= a.q3_rate);
}

TEST_CASE("misspecification study") {
  ExperimentConfig c = small_tobit();
  CHECK_THROWS_AS(misspecification_study(c), InvalidInput);
  // star equal to the filter model reproduces run_forgetting
  ExperimentConfig same{ModelSpec(TobitParams{0.5, 1.0, 1.0}, {}, TobitParams{0.5, 1.0, 1.0})};
  same.n = c.n;
  same.replications = c.replications;
  same.seed = c.seed;
  same.grid = c.grid;
  const auto a = run_forgetting(c);
  const auto b = misspecification_study(same);
  CHECK(b.kind == "misspec");
  for (std::size_t r = 0; r < a.reps.size(); ++r) CHECK(a.reps[r].tv == b.reps[r].tv);
  ExperimentConfig d{ModelSpec(TobitParams{0.5, 1.0, 1.0}, {}, TobitParams{0.7, 1.0, 1.0})};
  d.n = 30;
  d.replications = 2;
  d.grid = GridSpec{-10, 10, 200};
  const auto m = misspecification_study(d);
  CHECK(m.reps.size() == 2);
  CHECK(m.reps[0].tv != a.reps[0].tv);
}

TEST_CASE("configuration validation") {
  ExperimentConfig c = small_tobit();
  c.replications = 0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = small_tobit();
  c.window_start = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
}

TEST_CASE("report of an empty result has headers only") {
  ExperimentResult r;
  r.kind = "forgetting";
  const auto dir = std::filesystem::temp_directory_path() / "hmmstab_empty_report";
  std::filesystem::remove_all(dir);
  emit_report(r, dir);
  for (const char* f : {"tv_curves.csv", "rates.csv", "r_seq.csv", "conditions.csv"})
    CHECK(read_csv(dir / f).size() == 1);
  CHECK(std::filesystem::exists(dir / "summary.txt"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("r-sequences are frequencies") {
  ExperimentConfig c = small_tobit();
  c.n = 64;
  c.replications = 20;
  BoundConfig b;
  b.d = certify_ld_set(c.model, Interval{-1, 1});
  c.bound = b;
  const auto r = estimate_r_sequences(c);
  CHECK(r.r_seq.size() == dyadic_schedule(64).size());
  for (const auto& row : r.r_seq)
    for (double v : {row.r0_nu, row.r0_nuprime, row.r1, row.r2, row.r3}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
}
