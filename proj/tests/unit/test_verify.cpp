#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "hmmstab/error.hpp"
#include "hmmstab/verify.hpp"

using namespace hmmstab;

namespace {

// Calls f(x_0..x_n) for every path in {0..m-1}^{n+1}.
void for_paths(int m, int n, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> x(n + 1, 0);
  while (true) {
    f(x);
    int i = 0;
    while (i <= n && ++x[i] == m) x[i++] = 0;
    if (i > n) return;
  }
}

double path_weight(const Matrix& p, const std::vector<double>& init, const Matrix& g, const std::vector<int>& x) {
  double w = init[x[0]] * g[0][x[0]];
  for (std::size_t i = 1; i < x.size(); ++i) w *= p[x[i - 1]][x[i]] * g[i][x[i]];
  return w;
}

// Delta_n and the right-hand side by summing over pairs of paths.
std::pair<double, double> brute_delta(const PairChainSpec& s, const std::vector<double>& nu,
                                      const std::vector<double>& nu2, const Matrix& g, int n) {
  const int m = s.size();
  std::vector<double> wa, wb;
  std::vector<std::vector<int>> paths;
  for_paths(m, n, [&](const std::vector<int>& x) {
    paths.push_back(x);
    wa.push_back(path_weight(s.p, nu, g, x));
    wb.push_back(path_weight(s.p, nu2, g, x));
  });
  std::vector<double> diff(m, 0.0);
  double rhs = 0.0;
  for (std::size_t i = 0; i < paths.size(); ++i)
    for (std::size_t j = 0; j < paths.size(); ++j) {
      const double w1 = wa[i] * wb[j], w2 = wb[i] * wa[j];
      diff[paths[i][n]] += w1 - w2;
      int count = 0;
      for (int k = 0; k < n; ++k)
        count += s.in_c(paths[i][k]) && s.in_c(paths[j][k]) && s.in_c(paths[i][k + 1]) && s.in_c(paths[j][k + 1]);
      rhs += w1 * std::pow(s.rho, count);
    }
  double half_l1 = 0.0;
  for (double d : diff) half_l1 += 0.5 * std::abs(d);
  return {half_l1, rhs};
}

}  // namespace

TEST_CASE("exact delta agrees with path enumeration") {
  const CorpusSpec spec{.seed = 11, .cases = 6, .states = 3, .symbols = 3, .horizon = 5};
  for (std::uint64_t id = 0; id < 6; ++id) {
    const RandomCase rc = random_case(spec, id);
    const auto s = PairChainSpec::from_model(rc.model, rc.c);
    CHECK(s.check_tensor());
    const auto r = exact_delta(s, rc.nu, rc.nu_prime, rc.g_seq);
    for (int n = 0; n <= 5; ++n) {
      const auto [delta, rhs] = brute_delta(s, rc.nu, rc.nu_prime, rc.g_seq, n);
      CHECK(r.delta[n] == doctest::Approx(delta).epsilon(1e-12));
      CHECK(r.delta_enum[n] == doctest::Approx(delta).epsilon(1e-12));
      CHECK(r.rhs[n] == doctest::Approx(rhs).epsilon(1e-12));
      CHECK(r.rhs_direct[n] == doctest::Approx(rhs).epsilon(1e-12));
      CHECK(leq_roundoff(r.delta[n], r.rhs[n]));
    }
    double support = 0.0;
    for (double v : r.n_counter_support) support += v;
    CHECK(support == doctest::Approx(r.mass.back()).epsilon(1e-12));
  }
}

TEST_CASE("exact delta special cases") {
  const RandomCase rc = random_case(CorpusSpec{.seed = 3}, 2);
  SUBCASE("equal initial laws") {
    const auto s = PairChainSpec::from_model(rc.model, rc.c);
    const auto r = exact_delta(s, rc.nu, rc.nu, rc.g_seq);
    for (double d : r.delta) CHECK(d <= 1e-15 * r.mass.back() + 1e-300);
  }
  SUBCASE("symmetric in the two laws") {
    const auto s = PairChainSpec::from_model(rc.model, rc.c);
    const auto a = exact_delta(s, rc.nu, rc.nu_prime, rc.g_seq);
    const auto b = exact_delta(s, rc.nu_prime, rc.nu, rc.g_seq);
    for (std::size_t n = 0; n < a.delta.size(); ++n) CHECK(a.delta[n] == doctest::Approx(b.delta[n]).epsilon(1e-12));
  }
  SUBCASE("empty C collapses the right side to the total mass") {
    const auto s = PairChainSpec::from_model(rc.model, {});
    const auto r = exact_delta(s, rc.nu, rc.nu_prime, rc.g_seq);
    for (std::size_t n = 0; n < r.rhs.size(); ++n) CHECK(r.rhs[n] == doctest::Approx(r.mass[n]).epsilon(1e-12));
    CHECK(r.n_counter_support[0] == doctest::Approx(r.mass.back()).epsilon(1e-12));
  }
  SUBCASE("C = X counts every step") {
    const auto s = PairChainSpec::from_model(rc.model, {0, 1, 2});
    const auto r = exact_delta(s, rc.nu, rc.nu_prime, rc.g_seq);
    for (std::size_t n = 0; n < r.rhs.size(); ++n)
      CHECK(r.rhs[n] == doctest::Approx(r.mass[n] * std::pow(s.rho, static_cast<double>(n))).epsilon(1e-12));
  }
}

TEST_CASE("complexity guard") {
  FiniteStateParams p;
  p.transition.assign(9, std::vector<double>(9, 1.0 / 9));
  p.emission = CategoricalEmission{std::vector<std::vector<double>>(9, {1.0})};
  const auto s = PairChainSpec::from_model(ModelSpec(p), {0});
  const std::vector<double> nu(9, 1.0 / 9);
  CHECK_THROWS_AS(exact_delta(s, nu, nu, Matrix(3, std::vector<double>(9, 1.0))), ComplexityGuard);
}

TEST_CASE("denominator bound agrees with path enumeration") {
  const CorpusSpec spec{.seed = 5, .cases = 4, .states = 3, .symbols = 3, .horizon = 6};
  for (std::uint64_t id = 0; id < 4; ++id) {
    const RandomCase rc = random_case(spec, id);
    const auto rows = exact_denominator_bound(rc.model, rc.nu, StateSubset{rc.c}, rc.g_seq);
    const auto& p = rc.model.finite().transition;
    for (const auto& row : rows) {
      double lhs = 0.0;
      for_paths(3, row.n, [&](const std::vector<int>& x) { lhs += path_weight(p, rc.nu, rc.g_seq, x); });
      CHECK(row.lhs == doctest::Approx(lhs).epsilon(1e-12));
      CHECK(leq_roundoff(row.rhs, row.lhs));
    }
  }
}

TEST_CASE("counting lemma") {
  SUBCASE("hand examples") {
    const auto a = counting_lemma_check({1, 1, 1, 1}, 4);
    CHECK(a.m == 4);
    CHECK(a.n_pairs == 3);
    CHECK(a.bound == doctest::Approx(4.0));
    CHECK(a.holds);
    const auto b = counting_lemma_check({1, 0, 1, 0, 1}, 5);
    CHECK(b.m == 3);
    CHECK(b.n_pairs == 0);
    CHECK(b.bound == doctest::Approx(3.0));
    CHECK(b.holds);
    const auto c = counting_lemma_check({0, 0, 0}, 3);
    CHECK(c.m == 0);
    CHECK(c.holds);
  }
  SUBCASE("every string up to length 14") {
    for (int n = 1; n <= 14; ++n)
      for (unsigned mask = 0; mask < (1u << n); ++mask) {
        std::vector<int> bits(n);
        for (int i = 0; i < n; ++i) bits[i] = (mask >> i) & 1u;
        CHECK(counting_lemma_check(bits).holds);
      }
  }
  CHECK_THROWS_AS(counting_lemma_check({1}, 0), InvalidInput);
}

TEST_CASE("exact supermartingale bound against path enumeration") {
  FiniteStateParams p;
  p.transition = {{0.7, 0.2, 0.1}, {0.3, 0.4, 0.3}, {0.5, 0.1, 0.4}};
  p.emission = CategoricalEmission{{{1.0}, {1.0}, {1.0}}};
  const ModelSpec m(p);
  const std::vector<double> v{1.0, 2.0, 4.0}, w{0.2, 0.5, 0.9};
  double b = -1e300;
  for (int x = 0; x < 3; ++x) {
    double pv = 0.0;
    for (int j = 0; j < 3; ++j) pv += p.transition[x][j] * v[j];
    b = std::max(b, std::log(pv / v[x]) + w[x]);
  }
  const Matrix f{{0.1, -0.3, 0.2}, {0.5, 0.0, -0.1}, {-0.2, 0.4, 0.3}, {0.0, 0.1, 0.6}};
  const auto res = supermartingale_exact(m, v, w, b, f);
  const int n = static_cast<int>(f.size());
  for (int x0 = 0; x0 < 3; ++x0) {
    double lhs = 0.0;
    for_paths(3, n - 1, [&](const std::vector<int>& x) {
      if (x[0] != x0) return;
      double pr = 1.0, s = 0.0;
      for (int k = 0; k < n; ++k) {
        if (k > 0) pr *= p.transition[x[k - 1]][x[k]];
        s += std::abs(f[k][x[k]]);
      }
      lhs += pr * std::exp(s);
    });
    CHECK(res[x0].lhs == doctest::Approx(lhs).epsilon(1e-12));
    CHECK(res[x0].holds);
  }
  CHECK_THROWS_AS(supermartingale_exact(m, v, w, b - 0.1, f), PreconditionFailed);
}

TEST_CASE("suites pass on small corpora") {
  const CorpusSpec spec{.seed = 77, .cases = 5, .states = 3, .symbols = 3, .horizon = 10};
  for (const auto& s : {run_prop51_suite(spec), run_prop52_suite(spec), run_lemma_a1_suite(8)}) {
    CHECK_MESSAGE(s.passed, s.name);
    CHECK(s.violations == 0);
    CHECK(!s.rows.empty());
  }
}

TEST_CASE("corpus is deterministic and threads do not change suites") {
  const CorpusSpec spec{.seed = 9, .cases = 6, .states = 3, .symbols = 3, .horizon = 8};
  const RandomCase a = random_case(spec, 4), b = random_case(spec, 4);
  CHECK(a.obs == b.obs);
  CHECK(a.nu == b.nu);
  CHECK(a.c == b.c);
  const auto s1 = run_prop51_suite(spec, 1), s4 = run_prop51_suite(spec, 4);
  REQUIRE(s1.rows.size() == s4.rows.size());
  for (std::size_t i = 0; i < s1.rows.size(); ++i) {
    CHECK(s1.rows[i].lhs == s4.rows[i].lhs);
    CHECK(s1.rows[i].rhs == s4.rows[i].rhs);
  }
}
