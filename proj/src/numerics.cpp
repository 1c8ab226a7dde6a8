#include "hmmstab/numerics.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>

namespace hmmstab {

namespace {
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
}

double log_norm_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - kLogSqrt2Pi - std::log(sd);
}

double norm_pdf(double x, double mean, double sd) {
  return std::exp(log_norm_pdf(x, mean, sd));
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double log_norm_cdf(double z) {
  if (z > -20.0) return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
  // Mills-ratio asymptotic series; relative error below 1e-15 for z <= -20.
  const double z2 = z * z;
  double series = 1.0, term = 1.0;
  for (int k = 1; k < 8; ++k) {
    term *= -(2.0 * k - 1.0) / z2;
    series += term;
  }
  return -0.5 * z2 - kLogSqrt2Pi - std::log(-z) + std::log(series);
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return kNegInf;
  const double mx = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (a == kNegInf) return a;
  if (!std::isfinite(a)) return a;
  return a + std::log1p(std::exp(b - a));
}

std::vector<Node> gauss_legendre_nodes(double a, double b, int panels,
                                       std::span<const double> breakpoints) {
  using Rule = boost::math::quadrature::gauss<double, 7>;
  std::vector<double> cuts{a};
  for (double p : breakpoints)
    if (p > a && p < b) cuts.push_back(p);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());

  std::vector<Node> nodes;
  const double total = b - a;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double lo = cuts[s], hi = cuts[s + 1];
    const int k = std::max(1, static_cast<int>(std::ceil(panels * (hi - lo) / total)));
    const double h = (hi - lo) / k;
    for (int p = 0; p < k; ++p) {
      const double mid = lo + (p + 0.5) * h;
      const double half = 0.5 * h;
      const auto& abscissa = Rule::abscissa();
      const auto& weights = Rule::weights();
      for (std::size_t i = 0; i < abscissa.size(); ++i) {
        if (abscissa[i] == 0.0) {
          nodes.push_back({mid, weights[i] * half});
        } else {
          nodes.push_back({mid - half * abscissa[i], weights[i] * half});
          nodes.push_back({mid + half * abscissa[i], weights[i] * half});
        }
      }
    }
  }
  return nodes;
}

}  // namespace hmmstab
