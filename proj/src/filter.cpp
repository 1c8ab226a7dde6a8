#include "hmmstab/filter.hpp"

#include <algorithm>
#include <cmath>

#include "hmmstab/error.hpp"
#include "hmmstab/numerics.hpp"

namespace hmmstab {

namespace {
// log(1e-300)
constexpr double kLogBandFloor = -690.7755278982137;
}

DiscreteModel::DiscreteModel(ModelSpec model, StateSpace space)
    : model_(std::move(model)), space_(std::move(space)), m_(hmmstab::size(space_)) {
  if (model_.is_finite() != std::holds_alternative<FiniteStates>(space_))
    throw InvalidInput("state space does not match the model kind");
  if (model_.is_finite() && m_ != model_.num_states())
    throw InvalidInput("finite state space size does not match the model");
  points_.resize(m_);
  for (int j = 0; j < m_; ++j) points_[j] = support_point(space_, j);
  kernel_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
  band_lo_.assign(m_, 0);
  band_hi_.assign(m_, m_);

  if (model_.is_finite()) {
    const auto& p = model_.finite().transition;
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < m_; ++j) kernel_[static_cast<std::size_t>(i) * m_ + j] = p[i][j];
    return;
  }
  const auto& grid = std::get<GridSpec>(space_);
  const double dx = grid.width();
  const double log_dx = std::log(dx);
  for (int i = 0; i < m_; ++i) {
    const double mean = model_.kernel_mean(points_[i]);
    const double sd = model_.kernel_sd(points_[i]);
    // |x' - mean| <= reach keeps q above the band floor.
    const double reach = sd * std::sqrt(std::max(0.0, -2.0 * (kLogBandFloor + std::log(sd) + 0.9189385332046727)));
    int lo = static_cast<int>(std::floor((mean - reach - grid.lo) / dx - 0.5));
    int hi = static_cast<int>(std::ceil((mean + reach - grid.lo) / dx - 0.5)) + 1;
    lo = std::clamp(lo, 0, m_);
    hi = std::clamp(hi, lo, m_);
    band_lo_[i] = lo;
    band_hi_[i] = hi;
    for (int j = lo; j < hi; ++j)
      kernel_[static_cast<std::size_t>(i) * m_ + j] =
          std::exp(log_norm_pdf(points_[j], mean, sd) + log_dx);
  }
}

double DiscreteModel::kernel(int i, int j) const {
  return kernel_[static_cast<std::size_t>(i) * m_ + j];
}

void DiscreteModel::predict(std::span<const double> w, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (int i = 0; i < m_; ++i) {
    const double wi = w[i];
    if (wi == 0.0) continue;
    const double* row = &kernel_[static_cast<std::size_t>(i) * m_];
    for (int j = band_lo_[i]; j < band_hi_[i]; ++j) out[j] += wi * row[j];
  }
}

std::vector<double> DiscreteModel::log_likelihoods(double y) const {
  check_observation(model_, y);
  std::vector<double> out(m_);
  for (int j = 0; j < m_; ++j) out[j] = log_likelihood(model_, points_[j], y);
  return out;
}

double DiscreteModel::mass_into(std::span<const double> w, const LDSet& d) const {
  std::vector<double> pred(m_);
  predict(w, pred);
  double s = 0.0;
  for (int j = 0; j < m_; ++j)
    if (d.contains(points_[j])) s += pred[j];
  return s;
}

std::vector<double> FilterState::probabilities() const {
  std::vector<double> w(logw.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = std::exp(logw[j]);
  return w;
}

double FilterState::mean(const DiscreteModel& dm) const {
  double s = 0.0;
  for (std::size_t j = 0; j < logw.size(); ++j) s += std::exp(logw[j]) * dm.point(static_cast<int>(j));
  return s;
}

double FilterState::variance(const DiscreteModel& dm) const {
  const double mu = mean(dm);
  double s = 0.0;
  for (std::size_t j = 0; j < logw.size(); ++j) {
    const double d = dm.point(static_cast<int>(j)) - mu;
    s += std::exp(logw[j]) * d * d;
  }
  return s;
}

namespace {
FilterState normalize(StateSpace space, std::vector<double> logu, double logZ, int n) {
  const double lse = log_sum_exp(logu);
  if (!std::isfinite(lse))
    throw DegenerateFilter("all filter weights vanished at step " + std::to_string(n));
  for (double& v : logu) v -= lse;
  return FilterState{std::move(space), std::move(logu), logZ + lse, n};
}
}  // namespace

FilterState init_filter(const DiscreteModel& dm, const InitialDistribution& init, double y0) {
  const auto prior = discretize(init, dm.space());
  const auto logg = dm.log_likelihoods(y0);
  std::vector<double> logu(dm.size());
  for (int j = 0; j < dm.size(); ++j)
    logu[j] = prior[j] > 0.0 ? std::log(prior[j]) + logg[j] : kNegInf;
  return normalize(dm.space(), std::move(logu), 0.0, 0);
}

FilterState filter_step(const FilterState& state, const DiscreteModel& dm, double y) {
  if (!(state.space == dm.space())) throw InvalidInput("filter state and model grids differ");
  const auto w = state.probabilities();
  std::vector<double> pred(dm.size());
  dm.predict(w, pred);
  const auto logg = dm.log_likelihoods(y);
  std::vector<double> logu(dm.size());
  for (int j = 0; j < dm.size(); ++j) logu[j] = pred[j] > 0.0 ? std::log(pred[j]) + logg[j] : kNegInf;
  return normalize(state.space, std::move(logu), state.logZ, state.n + 1);
}

double tv_distance(const FilterState& a, const FilterState& b) {
  if (!(a.space == b.space) || a.logw.size() != b.logw.size())
    throw InvalidInput("tv_distance: filter states live on different grids");
  double s = 0.0;
  for (std::size_t j = 0; j < a.logw.size(); ++j) s += std::abs(std::exp(a.logw[j]) - std::exp(b.logw[j]));
  return std::min(1.0, 0.5 * s);
}

TwoFilterTrace run_two_filters(const DiscreteModel& dm, const InitialDistribution& nu,
                               const InitialDistribution& nu_prime, std::span<const double> obs,
                               const std::optional<LDSet>& d) {
  if (obs.empty()) throw InvalidInput("run_two_filters: no observations");
  TwoFilterTrace trace;
  if (d) {
    trace.nu_mass_into_d = dm.mass_into(discretize(nu, dm.space()), *d);
    trace.nuprime_mass_into_d = dm.mass_into(discretize(nu_prime, dm.space()), *d);
  }
  FilterState a = init_filter(dm, nu, obs[0]);
  FilterState b = init_filter(dm, nu_prime, obs[0]);
  trace.rows.reserve(obs.size());
  trace.rows.push_back({0, tv_distance(a, b), a.logZ, b.logZ});
  for (std::size_t k = 1; k < obs.size(); ++k) {
    a = filter_step(a, dm, obs[k]);
    b = filter_step(b, dm, obs[k]);
    trace.rows.push_back({static_cast<int>(k), tv_distance(a, b), a.logZ, b.logZ});
  }
  return trace;
}

}  // namespace hmmstab
