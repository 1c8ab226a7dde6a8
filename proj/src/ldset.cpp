#include "hmmstab/ldset.hpp"

#include <algorithm>
#include <cmath>

namespace hmmstab {

bool region_contains(const Region& region, double x) {
  if (const auto* iv = std::get_if<Interval>(&region)) return x >= iv->lo && x <= iv->hi;
  const auto& s = std::get<StateSubset>(region).states;
  const double r = std::round(x);
  if (r != x) return false;
  return std::binary_search(s.begin(), s.end(), static_cast<int>(r));
}

double region_measure(const Region& region) {
  if (const auto* iv = std::get_if<Interval>(&region)) return iv->hi - iv->lo;
  return static_cast<double>(std::get<StateSubset>(region).states.size());
}

}  // namespace hmmstab
