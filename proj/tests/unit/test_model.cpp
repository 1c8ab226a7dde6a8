#include <cmath>
#include <numbers>

#include "doctest.h"
#include "hmmstab/error.hpp"
#include "hmmstab/model.hpp"
#include "hmmstab/numerics.hpp"

using namespace hmmstab;

namespace {

double integrate(double a, double b, auto&& f) {
  double s = 0.0;
  for (const auto& n : gauss_legendre_nodes(a, b, 200)) s += n.w * f(n.x);
  return s;
}

// E exp(c |Y|) for Y ~ N(mu, s^2)
double folded_mgf(double mu, double s, double c) {
  return std::exp(c * mu + 0.5 * c * c * s * s) * norm_cdf(mu / s + c * s) +
         std::exp(-c * mu + 0.5 * c * c * s * s) * norm_cdf(-mu / s + c * s);
}

FiniteStateParams two_state() {
  FiniteStateParams p;
  p.transition = {{0.5, 0.5}, {0.2, 0.8}};
  p.emission = CategoricalEmission{{{0.3, 0.7}, {0.6, 0.4}}};
  return p;
}

}  // namespace

TEST_CASE("likelihoods integrate to one over the observation measure") {
  const double x = 0.7;
  SUBCASE("lgssm") {
    const ModelSpec m(LgssmParams{0.5, 1.0, 0.8, 1.3});
    CHECK(integrate(-30, 30, [&](double y) { return likelihood(m, x, y); }) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("tobit: atom at zero plus density on (0, inf)") {
    const ModelSpec m(TobitParams{0.5, 1.0, 1.3});
    const double atom = likelihood(m, x, 0.0);
    CHECK(atom == doctest::Approx(norm_cdf(-x / 1.3)));
    CHECK(atom + integrate(0, 30, [&](double y) { return likelihood(m, x, y); }) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("stochastic volatility") {
    const ModelSpec m(StochVolParams{0.9, 0.3, 1.2});
    CHECK(integrate(-60, 60, [&](double y) { return likelihood(m, x, y); }) == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("nlssm affine observation") {
    NlssmParams p;
    p.obs_form = AffineObs{2.0, -1.0};
    const ModelSpec m(p);
    CHECK(integrate(-30, 30, [&](double y) { return likelihood(m, x, y); }) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("categorical") {
    const ModelSpec m(two_state());
    CHECK(likelihood(m, 1, 0) + likelihood(m, 1, 1) == doctest::Approx(1.0));
  }
}

TEST_CASE("transition densities") {
  const ModelSpec lg(LgssmParams{0.5, 1.0, 1.0, 1.0});
  CHECK(transition_density(lg, 1.0, 0.5) == doctest::Approx(1.0 / std::sqrt(2 * std::numbers::pi)));
  NlssmParams p;
  p.drift_form = TanhDrift{0.5, 0.3};
  const ModelSpec nl(p);
  CHECK(nl.kernel_mean(2.0) == doctest::Approx(2.0 - 1.0 + 0.3 * std::tanh(2.0)));
  const ModelSpec fin(two_state());
  CHECK(transition_density(fin, 1, 0) == 0.2);
  CHECK_THROWS_AS(transition_density(fin, 2, 0), InvalidInput);
  CHECK_THROWS_AS(transition_density(fin, 0.5, 0), InvalidInput);
}

TEST_CASE("qv ratio against the folded normal moment generating function") {
  const ModelSpec m(LgssmParams{0.5, 1.0, 1.0, 1.0}, DriftFunction::exp_abs(1.0));
  // at x = 0 the ratio is 2 e^{1/2} Phi(1)
  CHECK(qv_ratio(m, 0.0) == doctest::Approx(2.0 * std::exp(0.5) * norm_cdf(1.0)).epsilon(1e-12));
  CHECK(qv_ratio(m, 0.0) == doctest::Approx(2.774286).epsilon(1e-6));
  for (double x : {-6.0, -1.5, 0.3, 2.0, 9.0})
    CHECK(qv_ratio(m, x) == doctest::Approx(folded_mgf(0.5 * x, 1.0, 1.0) / std::exp(std::abs(x))).epsilon(1e-11));

  const ModelSpec one(LgssmParams{0.5, 1.0, 1.0, 1.0});
  CHECK(qv_ratio(one, 3.0) == 1.0);
}

TEST_CASE("qv ratio on finite models is exact") {
  FiniteStateParams p = two_state();
  const ModelSpec m(p, DriftFunction::exp_abs(0.5));
  const double v0 = 1.0, v1 = std::exp(0.5);
  CHECK(qv_ratio(m, 0) == doctest::Approx(0.5 * v0 + 0.5 * v1));
  CHECK(qv_ratio(m, 1) == doctest::Approx((0.2 * v0 + 0.8 * v1) / v1));
}

TEST_CASE("qv ratio refuses a quadrature window that misses kernel mass") {
  const ModelSpec m(LgssmParams{0.5, 1.0, 1.0, 1.0}, DriftFunction::exp_abs(1.0));
  QuadratureSpec q;
  q.domain = std::make_pair(-2.0, 2.0);
  CHECK_THROWS_AS(qv_ratio(m, 0.0, q), CoverageError);
  q.domain = std::make_pair(-40.0, 40.0);
  CHECK_NOTHROW(qv_ratio(m, 0.0, q));
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(ModelSpec(LgssmParams{1.0, 1.0, 1.0, 1.0}), InvalidInput);
  CHECK_THROWS_AS(ModelSpec(TobitParams{0.5, 0.0, 1.0}), InvalidInput);
  NlssmParams bad;
  bad.drift_form = LinearShrink{2.5};
  CHECK_THROWS_AS(ModelSpec{bad}, InvalidInput);
  CHECK_THROWS_AS(ModelSpec(TobitParams{}, DriftFunction::one(), LgssmParams{}), InvalidInput);
  FiniteStateParams p = two_state();
  p.transition[0] = {0.5, 0.6};
  CHECK_THROWS_AS(ModelSpec{p}, InvalidInput);
  const ModelSpec tob(TobitParams{});
  CHECK_THROWS_AS(likelihood(tob, 0.0, -0.1), InvalidInput);
}

TEST_CASE("generator uses the star parameters") {
  const ModelSpec m(TobitParams{0.5, 1.0, 1.0}, DriftFunction::one(), TobitParams{0.7, 1.0, 1.0});
  CHECK(m.kernel_mean(1.0) == doctest::Approx(0.5));
  CHECK(m.generator().kernel_mean(1.0) == doctest::Approx(0.7));
}

TEST_CASE("one-step sampling moments") {
  const ModelSpec m(LgssmParams{0.5, 2.0, 1.0, 1.0});
  double sx = 0, sxx = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    Stream rng(3, i, 1);
    const auto [x, y] = sample_step(m, 2.0, rng);
    sx += x;
    sxx += x * x;
    (void)y;
  }
  CHECK(sx / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(sxx / n - (sx / n) * (sx / n) == doctest::Approx(4.0).epsilon(0.02));

  const ModelSpec tob(TobitParams{});
  for (int i = 0; i < 100; ++i) {
    Stream rng(4, i, 1);
    CHECK(sample_step(tob, -3.0, rng).second >= 0.0);
  }
}
