#include <cmath>
#include <vector>

#include "doctest.h"
#include "hmmstab/error.hpp"
#include "hmmstab/filter.hpp"
#include "hmmstab/trajectory.hpp"

using namespace hmmstab;

namespace {

struct Moments {
  double mean, var;
};

// Kalman filter for X' = phi X + sigma Z, Y = h X + beta E.
std::vector<Moments> kalman(const LgssmParams& p, double m0, double v0, const std::vector<double>& ys) {
  std::vector<Moments> out;
  double m = m0, v = v0;
  for (std::size_t k = 0; k < ys.size(); ++k) {
    if (k > 0) {
      m = p.phi * m;
      v = p.phi * p.phi * v + p.sigma * p.sigma;
    }
    const double s = p.h0 * p.h0 * v + p.beta * p.beta;
    const double gain = v * p.h0 / s;
    m = m + gain * (ys[k] - p.h0 * m);
    v = (1.0 - gain * p.h0) * v;
    out.push_back({m, v});
  }
  return out;
}

FiniteStateParams three_state() {
  FiniteStateParams p;
  p.transition = {{0.6, 0.3, 0.1}, {0.2, 0.5, 0.3}, {0.25, 0.25, 0.5}};
  p.emission = CategoricalEmission{{{0.7, 0.2, 0.1}, {0.1, 0.6, 0.3}, {0.2, 0.2, 0.6}}};
  return p;
}

}  // namespace

TEST_CASE("grid filter matches the Kalman recursion") {
  const LgssmParams p{0.9, 1.0, 1.0, 1.0};
  const ModelSpec m(p);
  const Trajectory t = simulate(m, 30, GaussianInit{0.0, 1.0}, 5);
  const auto ref = kalman(p, 0.5, 1.5 * 1.5, t.obs);
  const DiscreteModel dm(m, GridSpec{-20.0, 20.0, 1000});
  FilterState f = init_filter(dm, GaussianInit{0.5, 1.5}, t.obs[0]);
  for (std::size_t k = 0; k < t.obs.size(); ++k) {
    if (k > 0) f = filter_step(f, dm, t.obs[k]);
    CHECK(std::abs(f.mean(dm) - ref[k].mean) < 2e-3);
    CHECK(std::abs(f.variance(dm) - ref[k].var) < 2e-3);
  }
}

TEST_CASE("finite filter equals Bayes rule over enumerated paths") {
  const ModelSpec m(three_state());
  const std::vector<double> ys{0, 2, 1, 1, 0};
  const std::vector<double> nu{0.2, 0.5, 0.3};
  const auto& P = m.finite().transition;
  // brute force: sum over all 3^5 paths
  std::vector<double> post(3, 0.0);
  double z = 0.0;
  for (int code = 0; code < 243; ++code) {
    int c = code;
    std::vector<int> path(5);
    for (int k = 0; k < 5; ++k) {
      path[k] = c % 3;
      c /= 3;
    }
    double w = nu[path[0]] * likelihood(m, path[0], ys[0]);
    for (int k = 1; k < 5; ++k) w *= P[path[k - 1]][path[k]] * likelihood(m, path[k], ys[k]);
    post[path[4]] += w;
    z += w;
  }
  const DiscreteModel dm(m, FiniteStates{3});
  FilterState f = init_filter(dm, FiniteVector{nu}, ys[0]);
  for (std::size_t k = 1; k < ys.size(); ++k) f = filter_step(f, dm, ys[k]);
  const auto probs = f.probabilities();
  for (int i = 0; i < 3; ++i) CHECK(probs[i] == doctest::Approx(post[i] / z).epsilon(1e-13));
  CHECK(f.logZ == doctest::Approx(std::log(z)).epsilon(1e-13));
}

TEST_CASE("total variation conventions") {
  const ModelSpec m(three_state());
  const DiscreteModel dm(m, FiniteStates{3});
  const FilterState a = init_filter(dm, FiniteVector{{1, 0, 0}}, 0);
  const FilterState b = init_filter(dm, FiniteVector{{0, 0, 1}}, 0);
  CHECK(tv_distance(a, b) == doctest::Approx(1.0));
  CHECK(tv_distance(a, a) == 0.0);

  const ModelSpec lg(LgssmParams{});
  const DiscreteModel d1(lg, GridSpec{-5, 5, 100}), d2(lg, GridSpec{-5, 5, 120});
  CHECK_THROWS_AS(tv_distance(init_filter(d1, GaussianInit{}, 0.0), init_filter(d2, GaussianInit{}, 0.0)),
                  InvalidInput);
}

TEST_CASE("uniform ergodicity on a strictly positive finite model") {
  const ModelSpec m(three_state());
  double lo = 1, hi = 0;
  for (const auto& row : m.finite().transition)
    for (double v : row) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const double rho = 1.0 - (lo / hi) * (lo / hi);
  const Trajectory t = simulate(m, 40, FiniteVector{{1, 1, 1}}, 11);
  const DiscreteModel dm(m, FiniteStates{3});
  const auto tr = run_two_filters(dm, FiniteVector{{1, 0, 0}}, FiniteVector{{0, 0, 1}}, t.obs);
  for (const auto& row : tr.rows) CHECK(row.tv <= std::pow(rho, row.n) * (1 + 1e-12));
}

TEST_CASE("identical initial laws give zero distance") {
  const ModelSpec m(TobitParams{});
  const DiscreteModel dm(m, GridSpec{-8, 8, 200});
  const Trajectory t = simulate(m, 20, GaussianInit{}, 2);
  for (const auto& row : run_two_filters(dm, GaussianInit{1, 1}, GaussianInit{1, 1}, t.obs).rows)
    CHECK(row.tv == 0.0);
}

TEST_CASE("degenerate filter and mismatched densities") {
  FiniteStateParams p;
  p.transition = {{1.0, 0.0}, {0.0, 1.0}};
  p.emission = GaussianEmission{{0.0, 0.0}, {1.0, 1.0}};
  const ModelSpec m(p);
  const DiscreteModel dm(m, FiniteStates{2});
  // y far in the tail underflows every weight
  const FilterState f = init_filter(dm, FiniteVector{{1, 0}}, 0.0);
  CHECK_THROWS_AS(filter_step(f, dm, 1e200), DegenerateFilter);

  const ModelSpec lg(LgssmParams{});
  const DiscreteModel d(lg, GridSpec{-5, 5, 32});
  GridDensity g;
  g.values.assign(31, 1.0);
  CHECK_THROWS_AS(init_filter(d, g, 0.0), InvalidInput);
  g.values.assign(32, 1.0);
  CHECK_NOTHROW(init_filter(d, g, 0.0));
  for (int j = 0; j < 32; ++j) g.points.push_back(-5.0 + (j + 0.5) * 10.0 / 32 + (j == 7 ? 0.1 : 0.0));
  CHECK_THROWS_AS(init_filter(d, g, 0.0), InvalidInput);
}

TEST_CASE("mass into D") {
  const ModelSpec m(three_state());
  const DiscreteModel dm(m, FiniteStates{3});
  LDSet d;
  d.region = StateSubset{{1, 2}};
  CHECK(dm.mass_into(std::vector<double>{1, 0, 0}, d) == doctest::Approx(0.4));
}

TEST_CASE("trajectory csv round trip") {
  const ModelSpec m(StochVolParams{});
  const Trajectory t = simulate(m, 12, GaussianInit{0, 0.5}, 9, 4);
  const auto path = std::filesystem::temp_directory_path() / "hmmstab_traj_roundtrip.csv";
  write_trajectory_csv(path, t, false);
  const Trajectory back = read_trajectory_csv(path);
  CHECK(!back.hidden);
  CHECK(back.obs == t.obs);
  write_trajectory_csv(path, t, true);
  CHECK(*read_trajectory_csv(path).hidden == *t.hidden);
  std::filesystem::remove(path);
}

TEST_CASE("grid refinement and normalization") {
  const ModelSpec m(LgssmParams{0.9, 1.0, 1.0, 1.0});
  const Trajectory t = simulate(m, 40, GaussianInit{0.0, 2.0}, 9);
  const DiscreteModel coarse(m, GridSpec{-20, 20, 1000}), fine(m, GridSpec{-20, 20, 2000});
  const auto a = run_two_filters(coarse, GaussianInit{-3, 1}, GaussianInit{3, 1}, t.obs);
  const auto b = run_two_filters(fine, GaussianInit{-3, 1}, GaussianInit{3, 1}, t.obs);
  for (std::size_t k = 0; k < a.rows.size(); ++k) CHECK(std::abs(a.rows[k].tv - b.rows[k].tv) < 1e-4);

  FilterState f = init_filter(fine, GaussianInit{-3, 1}, t.obs[0]);
  for (std::size_t k = 1; k < t.obs.size(); ++k) {
    f = filter_step(f, fine, t.obs[k]);
    double s = 0.0;
    for (double p : f.probabilities()) s += p;
    CHECK(std::abs(s - 1.0) < 1e-10);
  }
}

TEST_CASE("tv is a metric on filter outputs") {
  const ModelSpec m(TobitParams{});
  const DiscreteModel dm(m, GridSpec{-8, 8, 300});
  const Trajectory t = simulate(m, 10, GaussianInit{}, 4);
  auto run = [&](double mu) {
    FilterState f = init_filter(dm, GaussianInit{mu, 1}, t.obs[0]);
    for (std::size_t k = 1; k < t.obs.size(); ++k) f = filter_step(f, dm, t.obs[k]);
    return f;
  };
  const FilterState a = run(-3), b = run(0.5), c = run(4);
  CHECK(tv_distance(a, b) == tv_distance(b, a));
  CHECK(tv_distance(a, c) <= tv_distance(a, b) + tv_distance(b, c) + 1e-15);
  CHECK(tv_distance(a, b) >= 0.0);
  CHECK(tv_distance(a, b) <= 1.0);
}
