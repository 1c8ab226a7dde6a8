#ifndef HMMSTAB_NUMERICS_HPP_
#define HMMSTAB_NUMERICS_HPP_

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace hmmstab {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_norm_pdf(double x, double mean, double sd);
double norm_pdf(double x, double mean, double sd);
double norm_cdf(double z);
// log Phi(z), accurate far into the lower tail.
double log_norm_cdf(double z);

double log_sum_exp(std::span<const double> v);
double log_add_exp(double a, double b);

struct Node {
  double x;
  double w;
};

// Composite 7-point Gauss-Legendre nodes on [a, b] with `panels` equal
// panels. A breakpoint strictly inside (a, b) splits the range so that kinks
// there are integrated exactly.
std::vector<Node> gauss_legendre_nodes(double a, double b, int panels,
                                       std::span<const double> breakpoints = {});

// log of sum_j w_j exp(logf(x_j)) over the given nodes.
template <class LogF>
double log_integrate(std::span<const Node> nodes, LogF&& logf) {
  std::vector<double> terms;
  terms.reserve(nodes.size());
  for (const auto& node : nodes) terms.push_back(std::log(node.w) + logf(node.x));
  return log_sum_exp(terms);
}

}  // namespace hmmstab

#endif  // HMMSTAB_NUMERICS_HPP_
