#ifndef HMMSTAB_RNG_HPP_
#define HMMSTAB_RNG_HPP_

#include <cstdint>
#include <limits>

namespace hmmstab {

// Counter-based random stream. The output is a pure function of
// (seed, replication, step, draw index), so any schedule of replications over
// threads reproduces the same numbers.
class Stream {
 public:
  using result_type = std::uint64_t;

  Stream(std::uint64_t seed, std::uint64_t replication, std::uint64_t step);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()();

  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  // Gamma(shape, 1) via Marsaglia-Tsang; used for Dirichlet draws.
  double gamma(double shape);

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t z);

}  // namespace hmmstab

#endif  // HMMSTAB_RNG_HPP_
