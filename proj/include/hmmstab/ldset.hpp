#ifndef HMMSTAB_LDSET_HPP_
#define HMMSTAB_LDSET_HPP_

#include <variant>
#include <vector>

namespace hmmstab {

struct Interval {
  double lo = -1.0;
  double hi = 1.0;
};

struct StateSubset {
  std::vector<int> states;  // sorted, distinct
};

using Region = std::variant<Interval, StateSubset>;

bool region_contains(const Region& region, double x);
// Lebesgue length, or the number of states.
double region_measure(const Region& region);

// A set C with eps_minus * lambda_C(A n C) <= Q(x, A n C) <= eps_plus *
// lambda_C(A n C) for x in C, where lambda_C is normalized Lebesgue (or
// counting) measure on C.
struct LDSet {
  Region region;
  double lambda_norm = 1.0;  // |C|
  double eps_minus = 0.0;
  double eps_plus = 0.0;

  bool contains(double x) const { return region_contains(region, x); }
};

}  // namespace hmmstab

#endif  // HMMSTAB_LDSET_HPP_
