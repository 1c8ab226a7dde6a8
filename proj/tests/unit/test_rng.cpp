#include <cmath>
#include <vector>

#include "doctest.h"
#include "hmmstab/rng.hpp"

using namespace hmmstab;

TEST_CASE("stream output depends only on its coordinates") {
  Stream a(7, 3, 11), b(7, 3, 11), c(7, 4, 11), d(8, 3, 11);
  for (int i = 0; i < 5; ++i) {
    const auto va = a(), vb = b();
    CHECK(va == vb);
    CHECK(va != c());
    CHECK(va != d());
  }
}

TEST_CASE("uniform, normal and gamma moments") {
  Stream s(1, 0, 0);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0, sg = 0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double z = s.normal();
    sn += z;
    sn2 += z * z;
    sg += s.gamma(2.5);
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(sg / n == doctest::Approx(2.5).epsilon(0.01));
}

TEST_CASE("gamma with shape below one") {
  Stream s(2, 0, 0);
  double acc = 0;
  for (int i = 0; i < 100000; ++i) acc += s.gamma(0.5);
  CHECK(acc / 100000 == doctest::Approx(0.5).epsilon(0.02));
}
