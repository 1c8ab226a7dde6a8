#include "hmmstab/state_space.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "hmmstab/error.hpp"
#include "hmmstab/numerics.hpp"

namespace hmmstab {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::vector<double> normalized(std::vector<double> w, const char* what) {
  double s = 0.0;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw InvalidInput(std::string(what) + ": weights must be finite and nonnegative");
    s += v;
  }
  if (!(s > 0.0)) throw InvalidInput(std::string(what) + ": no mass on the state space");
  for (double& v : w) v /= s;
  return w;
}
}  // namespace

void GridSpec::validate() const {
  if (!(lo < hi)) throw InvalidInput("grid: lo must be < hi");
  if (m < 16) throw InvalidInput("grid: m must be >= 16");
}

int size(const StateSpace& space) {
  return std::visit(overloaded{[](const GridSpec& g) { return g.m; },
                               [](const FiniteStates& f) { return f.m; }},
                    space);
}

double support_point(const StateSpace& space, int j) {
  return std::visit(overloaded{[&](const GridSpec& g) { return g.point(j); },
                               [&](const FiniteStates&) { return static_cast<double>(j); }},
                    space);
}

double point_measure(const StateSpace& space) {
  return std::visit(overloaded{[](const GridSpec& g) { return g.width(); },
                               [](const FiniteStates&) { return 1.0; }},
                    space);
}

StateSpace state_space_for(const ModelSpec& model, std::optional<GridSpec> grid,
                           int default_cells) {
  if (model.is_finite()) {
    if (grid) throw InvalidInput("finite-state model does not take a grid");
    return FiniteStates{model.num_states()};
  }
  if (!grid) {
    const double L = model.default_half_width();
    grid = GridSpec{-L, L, default_cells};
  }
  grid->validate();
  return *grid;
}

std::vector<double> discretize(const InitialDistribution& init, const StateSpace& space) {
  const int m = size(space);
  const bool finite = std::holds_alternative<FiniteStates>(space);
  return std::visit(
      overloaded{
          [&](const GridDensity& d) {
            if (finite) throw InvalidInput("grid_density needs a grid");
            if (static_cast<int>(d.values.size()) != m)
              throw InvalidInput("grid_density has " + std::to_string(d.values.size()) +
                                 " values but the grid has m=" + std::to_string(m));
            if (!d.points.empty()) {
              const auto& g = std::get<GridSpec>(space);
              if (d.points.size() != d.values.size())
                throw InvalidInput("grid_density: points and values differ in length");
              for (int j = 0; j < m; ++j)
                if (std::abs(d.points[j] - g.point(j)) > 1e-6 * g.width())
                  throw InvalidInput("grid_density point " + std::to_string(j) + " (" +
                                     std::to_string(d.points[j]) + ") does not match the grid cell " +
                                     std::to_string(g.point(j)));
            }
            return normalized(d.values, "grid_density");
          },
          [&](const GaussianInit& g) {
            if (finite) throw InvalidInput("gaussian initial distribution needs a grid");
            if (!(g.sd > 0.0)) throw InvalidInput("gaussian: sd must be > 0");
            std::vector<double> logw(m);
            for (int j = 0; j < m; ++j) logw[j] = log_norm_pdf(support_point(space, j), g.mean, g.sd);
            const double lse = log_sum_exp(logw);
            if (!std::isfinite(lse)) throw InvalidInput("gaussian: no mass on the grid");
            std::vector<double> w(m);
            for (int j = 0; j < m; ++j) w[j] = std::exp(logw[j] - lse);
            return w;
          },
          [&](const UniformInit& u) {
            if (finite) throw InvalidInput("uniform initial distribution needs a grid");
            if (!(u.a < u.b)) throw InvalidInput("uniform: a must be < b");
            std::vector<double> w(m, 0.0);
            for (int j = 0; j < m; ++j) {
              const double x = support_point(space, j);
              if (x >= u.a && x <= u.b) w[j] = 1.0;
            }
            return normalized(std::move(w), "uniform");
          },
          [&](const PointMassAt& p) {
            if (p.cell < 0 || p.cell >= m)
              throw InvalidInput("point_mass: cell " + std::to_string(p.cell) + " outside 0.." +
                                 std::to_string(m - 1));
            std::vector<double> w(m, 0.0);
            w[p.cell] = 1.0;
            return w;
          },
          [&](const FiniteVector& f) {
            if (static_cast<int>(f.p.size()) != m)
              throw InvalidInput("finite vector has " + std::to_string(f.p.size()) +
                                 " entries but the state space has " + std::to_string(m));
            return normalized(f.p, "finite vector");
          },
      },
      init);
}

double sample_initial(const InitialDistribution& init, Stream& rng, const StateSpace* space) {
  auto from_weights = [&](const std::vector<double>& w) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      acc += w[j];
      if (u < acc) return support_point(*space, static_cast<int>(j));
    }
    return support_point(*space, static_cast<int>(w.size()) - 1);
  };
  return std::visit(
      overloaded{
          [&](const GaussianInit& g) { return g.mean + g.sd * rng.normal(); },
          [&](const UniformInit& u) { return u.a + (u.b - u.a) * rng.uniform(); },
          [&](const FiniteVector& f) {
            const auto w = normalized(f.p, "finite vector");
            const double u = rng.uniform();
            double acc = 0.0;
            for (std::size_t j = 0; j < w.size(); ++j) {
              acc += w[j];
              if (u < acc) return static_cast<double>(j);
            }
            return static_cast<double>(w.size() - 1);
          },
          [&](const auto& grid_bound) {
            if (!space) throw InvalidInput("this initial distribution needs a state space to sample");
            return from_weights(discretize(grid_bound, *space));
          },
      },
      init);
}

double initial_drift_mean(const ModelSpec& model, const InitialDistribution& init,
                          const StateSpace& space) {
  const auto w = discretize(init, space);
  double s = 0.0;
  for (int j = 0; j < size(space); ++j) s += w[j] * model.drift()(support_point(space, j));
  return s;
}

}  // namespace hmmstab
