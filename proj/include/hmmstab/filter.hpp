#ifndef HMMSTAB_FILTER_HPP_
#define HMMSTAB_FILTER_HPP_

#include <optional>
#include <span>
#include <vector>

#include "hmmstab/ldset.hpp"
#include "hmmstab/model.hpp"
#include "hmmstab/state_space.hpp"

namespace hmmstab {

// A model discretized on a state space: support points and the prediction
// matrix K(i, j) = q(x_i, x_j) * mu_j, where mu_j is the cell width (1 for
// finite models). Rows only store the band where q exceeds 1e-300.
class DiscreteModel {
 public:
  DiscreteModel(ModelSpec model, StateSpace space);

  const ModelSpec& model() const { return model_; }
  const StateSpace& space() const { return space_; }
  int size() const { return m_; }
  double point(int j) const { return points_[j]; }
  const std::vector<double>& points() const { return points_; }

  double kernel(int i, int j) const;
  // out_j = sum_i w_i K(i, j), summed in increasing i.
  void predict(std::span<const double> w, std::span<double> out) const;
  std::vector<double> log_likelihoods(double y) const;
  // sum_i w_i K(i, D): mass the one-step prediction puts on D.
  double mass_into(std::span<const double> w, const LDSet& d) const;

 private:
  ModelSpec model_;
  StateSpace space_;
  int m_;
  std::vector<double> points_;
  std::vector<double> kernel_;  // row-major m x m
  std::vector<int> band_lo_, band_hi_;
};

// Filtering distribution as normalized log-weights on the support points,
// with the accumulated log normalizing constant.
struct FilterState {
  StateSpace space;
  std::vector<double> logw;
  double logZ = 0.0;
  int n = 0;

  std::vector<double> probabilities() const;
  double mean(const DiscreteModel& dm) const;
  double variance(const DiscreteModel& dm) const;
};

FilterState init_filter(const DiscreteModel& dm, const InitialDistribution& init, double y0);
FilterState filter_step(const FilterState& state, const DiscreteModel& dm, double y);

// sup_A |mu(A) - nu(A)| = half the L1 distance of the weights.
double tv_distance(const FilterState& a, const FilterState& b);

struct TwoFilterRow {
  int n = 0;
  double tv = 0.0;
  double logZ_nu = 0.0;
  double logZ_nuprime = 0.0;
};

struct TwoFilterTrace {
  std::vector<TwoFilterRow> rows;
  // nu Q 1_D and nu' Q 1_D when a set D was supplied.
  std::optional<double> nu_mass_into_d;
  std::optional<double> nuprime_mass_into_d;
};

TwoFilterTrace run_two_filters(const DiscreteModel& dm, const InitialDistribution& nu,
                               const InitialDistribution& nu_prime, std::span<const double> obs,
                               const std::optional<LDSet>& d = std::nullopt);

}  // namespace hmmstab

#endif  // HMMSTAB_FILTER_HPP_
