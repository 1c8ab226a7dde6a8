#ifndef HMMSTAB_MODEL_HPP_
#define HMMSTAB_MODEL_HPP_

// Partially dominated hidden Markov models: a transition density q(x, x'),
// a likelihood g(x, y), a drift function V >= 1, and samplers for the
// generating ("star") model, which may differ from the filter model.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hmmstab/rng.hpp"

namespace hmmstab {

enum class ModelKind { FiniteState, LGSSM, Tobit, NLSSM, StochVol };

std::string to_string(ModelKind kind);

struct CategoricalEmission {
  std::vector<std::vector<double>> probs;  // states x symbols
};

struct GaussianEmission {
  std::vector<double> means;
  std::vector<double> sds;
};

struct FiniteStateParams {
  std::vector<std::vector<double>> transition;
  std::variant<CategoricalEmission, GaussianEmission> emission;
};

// X' = phi X + sigma zeta,  Y = h0 X + beta eps.
struct LgssmParams {
  double phi = 0.5;
  double sigma = 1.0;
  double beta = 1.0;
  double h0 = 1.0;
};

// X' = phi X + sigma zeta,  Y = max(X + beta eps, 0).
struct TobitParams {
  double phi = 0.5;
  double sigma = 1.0;
  double beta = 1.0;
};

// b(x) = -delta x; satisfies |x + b(x)| - |x| -> -inf for delta in (0, 2).
struct LinearShrink {
  double delta = 0.5;
};

// b(x) = -delta x + kappa tanh(x); the tanh term is bounded, so the same
// range of delta keeps the drift condition.
struct TanhDrift {
  double delta = 0.5;
  double kappa = 0.5;
};

struct IdentityObs {};

struct AffineObs {
  double a = 1.0;
  double b = 0.0;
};

// X' = X + b(X) + sigma0 zeta,  Y = h(X) + beta eps.
struct NlssmParams {
  std::variant<LinearShrink, TanhDrift> drift_form = LinearShrink{};
  double sigma0 = 1.0;
  std::variant<IdentityObs, AffineObs> obs_form = IdentityObs{};
  double beta = 1.0;
};

// X' = phi X + sigma zeta,  Y = beta exp(X / 2) eps.
struct StochVolParams {
  double phi = 0.9;
  double sigma = 0.3;
  double beta = 1.0;
};

using ModelParams = std::variant<FiniteStateParams, LgssmParams, TobitParams,
                                 NlssmParams, StochVolParams>;

// V(x) = 1 or V(x) = exp(c |x|).
struct DriftFunction {
  enum class Form { One, ExpAbs };
  Form form = Form::One;
  double c = 0.0;

  static DriftFunction one() { return {}; }
  static DriftFunction exp_abs(double c) { return {Form::ExpAbs, c}; }

  bool is_one() const { return form == Form::One; }
  double operator()(double x) const;
  double log_value(double x) const;
};

class ModelSpec {
 public:
  explicit ModelSpec(ModelParams params, DriftFunction drift = {},
                     std::optional<ModelParams> star = std::nullopt);

  ModelKind kind() const;
  const ModelParams& params() const { return params_; }
  const DriftFunction& drift() const { return drift_; }
  const std::optional<ModelParams>& star() const { return star_; }

  // The generating model: star parameters when present, else this model.
  ModelSpec generator() const;

  bool is_finite() const { return kind() == ModelKind::FiniteState; }
  int num_states() const;
  const FiniteStateParams& finite() const;

  // Continuous models all use Gaussian kernels N(mean(x), sd(x)^2).
  double kernel_mean(double x) const;
  double kernel_sd(double x) const;

  // Stationary s.d. of the linear part of the state recursion.
  double stationary_sd() const;
  // Default truncation half-width: 8 stationary s.d.
  double default_half_width() const;

  std::optional<double> domain_half_width;

 private:
  ModelParams params_;
  DriftFunction drift_;
  std::optional<ModelParams> star_;
};

void validate(const ModelParams& params);

// q(x, x') with respect to Lebesgue measure (counting measure for finite).
double transition_density(const ModelSpec& model, double x, double x_next);
double log_transition_density(const ModelSpec& model, double x, double x_next);

// g(x, y). Tobit uses delta_0 + Lebesgue as the observation measure, so
// g(x, 0) is a probability and g(x, y > 0) a density.
double likelihood(const ModelSpec& model, double x, double y);
double log_likelihood(const ModelSpec& model, double x, double y);

void check_state(const ModelSpec& model, double x);
void check_observation(const ModelSpec& model, double y);

// Standard noise for one step of T = Q (x) G.
struct StepNoise {
  double u_state = 0.5;  // uniform, finite-state transitions
  double zeta = 0.0;     // state noise
  double u_obs = 0.5;    // uniform, categorical emissions
  double eps = 0.0;      // observation noise
};

StepNoise draw_noise(Stream& rng);
double state_from_noise(const ModelSpec& model, double x, const StepNoise& noise);
double observation_from_noise(const ModelSpec& model, double x, const StepNoise& noise);

// Draws x' ~ Q(x, .) then y' ~ G(x', .).
std::pair<double, double> sample_step(const ModelSpec& model, double x, Stream& rng);

double drift_value(const ModelSpec& model, double x);

struct QuadratureSpec {
  double half_width_sd = 12.0;  // window around the kernel mean, in kernel s.d.
  int panels = 96;
  double tail_tol = 1e-9;       // tolerated missing kernel mass
  std::optional<std::pair<double, double>> domain;  // state truncation
};

// QV(x) / V(x); exact for finite models and for V = 1.
double qv_ratio(const ModelSpec& model, double x, const QuadratureSpec& quad = {});

}  // namespace hmmstab

#endif  // HMMSTAB_MODEL_HPP_
