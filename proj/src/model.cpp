#include "hmmstab/model.hpp"

#include <cmath>
#include <numbers>

#include "hmmstab/error.hpp"
#include "hmmstab/numerics.hpp"

namespace hmmstab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidInput(what);
}

int state_index(const FiniteStateParams& p, double x) {
  const double r = std::round(x);
  if (!std::isfinite(x) || r != x || r < 0 || r >= static_cast<double>(p.transition.size()))
    throw InvalidInput("finite-state index out of range: " + std::to_string(x));
  return static_cast<int>(r);
}

double nlssm_drift(const NlssmParams& p, double x) {
  return std::visit(overloaded{
                        [&](const LinearShrink& f) { return -f.delta * x; },
                        [&](const TanhDrift& f) { return -f.delta * x + f.kappa * std::tanh(x); },
                    },
                    p.drift_form);
}

double nlssm_obs(const NlssmParams& p, double x) {
  return std::visit(overloaded{
                        [&](const IdentityObs&) { return x; },
                        [&](const AffineObs& h) { return h.a * x + h.b; },
                    },
                    p.obs_form);
}

double linear_coefficient(const ModelParams& params) {
  return std::visit(
      overloaded{
          [](const FiniteStateParams&) { return 0.0; },
          [](const LgssmParams& p) { return p.phi; },
          [](const TobitParams& p) { return p.phi; },
          [](const NlssmParams& p) {
            return std::visit([](const auto& f) { return 1.0 - f.delta; }, p.drift_form);
          },
          [](const StochVolParams& p) { return p.phi; },
      },
      params);
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::FiniteState: return "finite";
    case ModelKind::LGSSM: return "lgssm";
    case ModelKind::Tobit: return "tobit";
    case ModelKind::NLSSM: return "nlssm";
    case ModelKind::StochVol: return "sv";
  }
  return "unknown";
}

double DriftFunction::operator()(double x) const {
  return form == Form::One ? 1.0 : std::exp(c * std::abs(x));
}

double DriftFunction::log_value(double x) const {
  return form == Form::One ? 0.0 : c * std::abs(x);
}

void validate(const ModelParams& params) {
  std::visit(
      overloaded{
          [](const FiniteStateParams& p) {
            const std::size_t m = p.transition.size();
            require(m >= 2, "finite transition matrix needs at least 2 states");
            for (const auto& row : p.transition) {
              require(row.size() == m, "finite transition matrix must be square");
              double s = 0.0;
              for (double v : row) {
                require(v >= 0.0 && std::isfinite(v), "transition entries must be nonnegative");
                s += v;
              }
              require(std::abs(s - 1.0) <= 1e-12, "transition rows must sum to 1");
            }
            std::visit(overloaded{
                           [&](const CategoricalEmission& e) {
                             require(e.probs.size() == m, "emission rows must match the state count");
                             const std::size_t k = e.probs.front().size();
                             require(k >= 1, "emission alphabet is empty");
                             for (const auto& row : e.probs) {
                               require(row.size() == k, "emission rows must share one alphabet");
                               for (double v : row)
                                 require(v > 0.0 && std::isfinite(v),
                                         "emission probabilities must be strictly positive");
                             }
                           },
                           [&](const GaussianEmission& e) {
                             require(e.means.size() == m && e.sds.size() == m,
                                     "gaussian emission needs one mean and sd per state");
                             for (double s : e.sds) require(s > 0.0, "emission sd must be positive");
                           },
                       },
                       p.emission);
          },
          [](const LgssmParams& p) {
            require(std::abs(p.phi) < 1.0, "lgssm: |phi| must be < 1");
            require(p.sigma > 0.0, "lgssm: sigma must be > 0");
            require(p.beta > 0.0, "lgssm: beta must be > 0");
          },
          [](const TobitParams& p) {
            require(std::abs(p.phi) < 1.0, "tobit: |phi| must be < 1");
            require(p.sigma > 0.0, "tobit: sigma must be > 0");
            require(p.beta > 0.0, "tobit: beta must be > 0");
          },
          [](const NlssmParams& p) {
            std::visit([](const auto& f) {
              require(f.delta > 0.0 && f.delta < 2.0, "nlssm: delta must lie in (0, 2)");
            }, p.drift_form);
            require(p.sigma0 > 0.0, "nlssm: sigma0 must be > 0");
            require(p.beta > 0.0, "nlssm: beta must be > 0");
          },
          [](const StochVolParams& p) {
            require(std::abs(p.phi) < 1.0, "sv: |phi| must be < 1");
            require(p.sigma > 0.0, "sv: sigma must be > 0");
            require(p.beta > 0.0, "sv: beta must be > 0");
          },
      },
      params);
}

ModelSpec::ModelSpec(ModelParams params, DriftFunction drift, std::optional<ModelParams> star)
    : params_(std::move(params)), drift_(drift), star_(std::move(star)) {
  validate(params_);
  if (star_) {
    validate(*star_);
    require(star_->index() == params_.index(), "star model must be of the same kind");
  }
  if (drift_.form == DriftFunction::Form::ExpAbs)
    require(drift_.c > 0.0, "drift: c must be > 0 for exp_abs");
}

ModelKind ModelSpec::kind() const { return static_cast<ModelKind>(params_.index()); }

ModelSpec ModelSpec::generator() const {
  ModelSpec gen(star_ ? *star_ : params_, drift_);
  gen.domain_half_width = domain_half_width;
  return gen;
}

const FiniteStateParams& ModelSpec::finite() const {
  if (!is_finite()) throw InvalidInput("model is not finite-state");
  return std::get<FiniteStateParams>(params_);
}

int ModelSpec::num_states() const { return static_cast<int>(finite().transition.size()); }

double ModelSpec::kernel_mean(double x) const {
  return std::visit(overloaded{
                        [](const FiniteStateParams&) -> double {
                          throw InvalidInput("finite-state model has no Gaussian kernel");
                        },
                        [&](const NlssmParams& p) { return x + nlssm_drift(p, x); },
                        [&](const auto& p) { return p.phi * x; },
                    },
                    params_);
}

double ModelSpec::kernel_sd(double) const {
  return std::visit(overloaded{
                        [](const FiniteStateParams&) -> double {
                          throw InvalidInput("finite-state model has no Gaussian kernel");
                        },
                        [](const NlssmParams& p) { return p.sigma0; },
                        [](const auto& p) { return p.sigma; },
                    },
                    params_);
}

double ModelSpec::stationary_sd() const {
  const double a = linear_coefficient(params_);
  return kernel_sd(0.0) / std::sqrt(1.0 - a * a);
}

double ModelSpec::default_half_width() const {
  if (domain_half_width) return *domain_half_width;
  return 8.0 * stationary_sd();
}

void check_state(const ModelSpec& model, double x) {
  if (model.is_finite()) {
    state_index(model.finite(), x);
  } else if (!std::isfinite(x)) {
    throw InvalidInput("state must be a finite real");
  }
}

void check_observation(const ModelSpec& model, double y) {
  if (!std::isfinite(y)) throw InvalidInput("observation must be a finite real");
  std::visit(overloaded{
                 [&](const FiniteStateParams& p) {
                   if (const auto* e = std::get_if<CategoricalEmission>(&p.emission)) {
                     const double k = static_cast<double>(e->probs.front().size());
                     if (std::round(y) != y || y < 0 || y >= k)
                       throw InvalidInput("categorical observation out of alphabet: " + std::to_string(y));
                   }
                 },
                 [&](const TobitParams&) {
                   if (y < 0.0) throw InvalidInput("tobit observation must be >= 0");
                 },
                 [](const auto&) {},
             },
             model.params());
}

double log_transition_density(const ModelSpec& model, double x, double x_next) {
  check_state(model, x);
  check_state(model, x_next);
  if (model.is_finite()) {
    const auto& p = model.finite();
    return std::log(p.transition[state_index(p, x)][state_index(p, x_next)]);
  }
  return log_norm_pdf(x_next, model.kernel_mean(x), model.kernel_sd(x));
}

double transition_density(const ModelSpec& model, double x, double x_next) {
  if (model.is_finite()) {
    check_state(model, x);
    check_state(model, x_next);
    const auto& p = model.finite();
    return p.transition[state_index(p, x)][state_index(p, x_next)];
  }
  return std::exp(log_transition_density(model, x, x_next));
}

double log_likelihood(const ModelSpec& model, double x, double y) {
  check_state(model, x);
  check_observation(model, y);
  return std::visit(
      overloaded{
          [&](const FiniteStateParams& p) {
            const int i = state_index(p, x);
            return std::visit(overloaded{
                                  [&](const CategoricalEmission& e) {
                                    return std::log(e.probs[i][static_cast<std::size_t>(y)]);
                                  },
                                  [&](const GaussianEmission& e) {
                                    return log_norm_pdf(y, e.means[i], e.sds[i]);
                                  },
                              },
                              p.emission);
          },
          [&](const LgssmParams& p) { return log_norm_pdf(y, p.h0 * x, p.beta); },
          [&](const TobitParams& p) {
            if (y == 0.0) return log_norm_cdf(-x / p.beta);
            return log_norm_pdf(y, x, p.beta);
          },
          [&](const NlssmParams& p) { return log_norm_pdf(y, nlssm_obs(p, x), p.beta); },
          [&](const StochVolParams& p) {
            const double b2 = p.beta * p.beta;
            return -0.5 * std::log(2.0 * std::numbers::pi * b2) - y * y * std::exp(-x) / (2.0 * b2) -
                   0.5 * x;
          },
      },
      model.params());
}

double likelihood(const ModelSpec& model, double x, double y) {
  return std::exp(log_likelihood(model, x, y));
}

StepNoise draw_noise(Stream& rng) {
  StepNoise n;
  n.u_state = rng.uniform();
  n.zeta = rng.normal();
  n.u_obs = rng.uniform();
  n.eps = rng.normal();
  return n;
}

namespace {
int categorical(const std::vector<double>& probs, double u) {
  double acc = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    acc += probs[j];
    if (u < acc) return static_cast<int>(j);
  }
  // u fell in the rounding slack of the last cumulative sum
  for (std::size_t j = probs.size(); j-- > 0;)
    if (probs[j] > 0.0) return static_cast<int>(j);
  return 0;
}
}  // namespace

double state_from_noise(const ModelSpec& model, double x, const StepNoise& noise) {
  check_state(model, x);
  if (model.is_finite()) {
    const auto& p = model.finite();
    return categorical(p.transition[state_index(p, x)], noise.u_state);
  }
  return model.kernel_mean(x) + model.kernel_sd(x) * noise.zeta;
}

double observation_from_noise(const ModelSpec& model, double x, const StepNoise& noise) {
  check_state(model, x);
  return std::visit(
      overloaded{
          [&](const FiniteStateParams& p) -> double {
            const int i = state_index(p, x);
            return std::visit(overloaded{
                                  [&](const CategoricalEmission& e) -> double {
                                    return categorical(e.probs[i], noise.u_obs);
                                  },
                                  [&](const GaussianEmission& e) {
                                    return e.means[i] + e.sds[i] * noise.eps;
                                  },
                              },
                              p.emission);
          },
          [&](const LgssmParams& p) { return p.h0 * x + p.beta * noise.eps; },
          [&](const TobitParams& p) { return std::max(x + p.beta * noise.eps, 0.0); },
          [&](const NlssmParams& p) { return nlssm_obs(p, x) + p.beta * noise.eps; },
          [&](const StochVolParams& p) { return p.beta * std::exp(0.5 * x) * noise.eps; },
      },
      model.params());
}

std::pair<double, double> sample_step(const ModelSpec& model, double x, Stream& rng) {
  const StepNoise noise = draw_noise(rng);
  const double x_next = state_from_noise(model, x, noise);
  return {x_next, observation_from_noise(model, x_next, noise)};
}

double drift_value(const ModelSpec& model, double x) {
  check_state(model, x);
  return model.drift()(x);
}

double qv_ratio(const ModelSpec& model, double x, const QuadratureSpec& quad) {
  check_state(model, x);
  const DriftFunction& v = model.drift();
  if (v.is_one()) return 1.0;
  if (model.is_finite()) {
    const auto& row = model.finite().transition[state_index(model.finite(), x)];
    double s = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) s += row[j] * v(static_cast<double>(j));
    return s / v(x);
  }
  const double mean = model.kernel_mean(x);
  const double sd = model.kernel_sd(x);
  double lo = mean - quad.half_width_sd * sd;
  double hi = mean + quad.half_width_sd * sd;
  if (quad.domain) {
    lo = std::max(lo, quad.domain->first);
    hi = std::min(hi, quad.domain->second);
  }
  if (!(lo < hi)) throw CoverageError("quadrature window does not meet the state domain");
  const double kink = 0.0;
  const auto nodes = gauss_legendre_nodes(lo, hi, quad.panels, std::span(&kink, 1));
  double mass = 0.0, moment = 0.0;
  const double log_vx = v.log_value(x);
  for (const auto& n : nodes) {
    const double lq = log_norm_pdf(n.x, mean, sd);
    mass += n.w * std::exp(lq);
    moment += n.w * std::exp(lq + v.log_value(n.x) - log_vx);
  }
  if (std::abs(1.0 - mass) > quad.tail_tol)
    throw CoverageError("quadrature misses kernel mass " + std::to_string(1.0 - mass) + " at x=" +
                        std::to_string(x));
  return moment;
}

}  // namespace hmmstab
