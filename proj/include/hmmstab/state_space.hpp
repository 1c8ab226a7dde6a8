#ifndef HMMSTAB_STATE_SPACE_HPP_
#define HMMSTAB_STATE_SPACE_HPP_

#include <optional>
#include <variant>
#include <vector>

#include "hmmstab/model.hpp"
#include "hmmstab/rng.hpp"

namespace hmmstab {

// Midpoint grid on [lo, hi] with m cells.
struct GridSpec {
  double lo = -1.0;
  double hi = 1.0;
  int m = 16;

  double width() const { return (hi - lo) / m; }
  double point(int j) const { return lo + (j + 0.5) * width(); }
  void validate() const;
  bool operator==(const GridSpec&) const = default;
};

struct FiniteStates {
  int m = 2;
  bool operator==(const FiniteStates&) const = default;
};

using StateSpace = std::variant<GridSpec, FiniteStates>;

int size(const StateSpace& space);
double support_point(const StateSpace& space, int j);
// Reference measure of one support point: the cell width, or 1.
double point_measure(const StateSpace& space);

// Finite models get their state set; continuous models the given grid, or a
// default grid of m cells on [-L, L] when none is given.
StateSpace state_space_for(const ModelSpec& model, std::optional<GridSpec> grid = std::nullopt,
                           int default_cells = 1000);

struct GridDensity {
  std::vector<double> values;  // density value per cell
  std::vector<double> points;  // cell midpoints, when known; checked against the grid
};
struct GaussianInit {
  double mean = 0.0;
  double sd = 1.0;
};
struct UniformInit {
  double a = -1.0;
  double b = 1.0;
};
struct PointMassAt {
  int cell = 0;
};
struct FiniteVector {
  std::vector<double> p;
};

using InitialDistribution =
    std::variant<GridDensity, GaussianInit, UniformInit, PointMassAt, FiniteVector>;

// Probabilities of the support points, summing to 1.
std::vector<double> discretize(const InitialDistribution& init, const StateSpace& space);

// Draws X_0. Grid-bound forms need the state space.
double sample_initial(const InitialDistribution& init, Stream& rng,
                      const StateSpace* space = nullptr);

// nu(V) on the support points.
double initial_drift_mean(const ModelSpec& model, const InitialDistribution& init,
                          const StateSpace& space);

}  // namespace hmmstab

#endif  // HMMSTAB_STATE_SPACE_HPP_
