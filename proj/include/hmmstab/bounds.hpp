#ifndef HMMSTAB_BOUNDS_HPP_
#define HMMSTAB_BOUNDS_HPP_

// Ingredients of the pathwise forgetting bound: local Doeblin constants, the
// contraction rho_C, the likelihood/drift suprema Upsilon_A, the denominator
// functionals Phi and Psi, and the two assembled bound forms.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hmmstab/ldset.hpp"
#include "hmmstab/model.hpp"
#include "hmmstab/state_space.hpp"

namespace hmmstab {

struct ObservationSet {
  enum class Form { All, Interval, Symbols };
  Form form = Form::All;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<int> symbols;

  static ObservationSet all() { return {}; }
  static ObservationSet interval(double lo, double hi) { return {Form::Interval, lo, hi, {}}; }
  static ObservationSet of_symbols(std::vector<int> s) { return {Form::Symbols, 0, 0, std::move(s)}; }
  bool contains(double y) const;
};

// eps+ = |C| max q and eps- = |C| min q over C x C. For Gaussian kernels the
// inner extremum over x' is analytic (nearest and farthest offsets from the
// kernel mean); the outer one runs over an (m_probe + 1)-point lattice that
// includes both endpoints, which is exact for linear kernel means.
LDSet certify_ld_set(const ModelSpec& model, const Region& region, int m_probe = 64);

// 1 - (eps- / eps+)^2
double rho(const LDSet& ld);

struct SupSpec {
  QuadratureSpec quad;
  std::optional<double> scan_half_width;  // default: 5 x the model's truncation half-width
  int scan_points = 2001;
  // How QV/V is evaluated during local refinement of a scan maximum.
  enum class Refine { None, Interpolated, Exact };
  Refine refine = Refine::Exact;
  // Use closed-form sup_x g(x, y) for the whole space when V = 1.
  bool prefer_analytic = true;
};

// sup_x g(x, y) for V = 1, when a closed form is known.
std::optional<double> analytic_upsilon_all(const ModelSpec& model, double y);

// Evaluates Upsilon_A(y) = sup_{x in A} g(x, y) QV(x) / V(x) for A = X or the
// complement of a region. QV/V is tabulated once on the scan grid.
class UpsilonEvaluator {
 public:
  explicit UpsilonEvaluator(ModelSpec model, SupSpec spec = {});

  double log_upsilon(double y, const std::optional<Region>& excluded = std::nullopt) const;
  double upsilon(double y, const std::optional<Region>& excluded = std::nullopt) const {
    return std::exp(log_upsilon(y, excluded));
  }

  const ModelSpec& model() const { return model_; }
  double scan_half_width() const { return scan_half_width_; }

 private:
  double log_ratio_at(double x) const;
  double scan_region(double y, const std::optional<Region>& excluded) const;

  ModelSpec model_;
  SupSpec spec_;
  double scan_half_width_ = 0.0;
  std::vector<double> xs_;
  std::vector<double> log_ratio_;
};

double upsilon(const ModelSpec& model, const std::optional<Region>& excluded, double y,
               const SupSpec& spec = {});

// Smallest symmetric interval [-C, C] (doubling, then bisection) with
// Upsilon_{C^c}(y) <= eta Upsilon_X(y) for every probe in K, certified as an
// LD-set. Finite models search state subsets by increasing size instead.
// Throws H2Unverified when the radius would exceed max_radius.
LDSet find_ld_set_for_eta(const ModelSpec& model, double eta, const ObservationSet& k,
                          std::span<const double> y_probe, const SupSpec& spec = {},
                          int m_probe = 64, std::optional<double> max_radius = std::nullopt);

// Psi_D(y) = lambda_D(g(., y) 1_D)
double log_psi(const ModelSpec& model, const LDSet& d, double y, const QuadratureSpec& quad = {});
double psi(const ModelSpec& model, const LDSet& d, double y, const QuadratureSpec& quad = {});

struct PhiResult {
  double value = 0.0;
  double log_value = 0.0;
  bool zero_flag = false;  // nu Q 1_D = 0
};

// Phi_{nu,D}(y0, y1) = nu[g(., y0) Q g(., y1) 1_D], with nu discretized on the
// state space.
PhiResult phi(const ModelSpec& model, const InitialDistribution& nu, const LDSet& d, double y0,
              double y1, const StateSpace& space, const QuadratureSpec& quad = {});

// floor(n (1 - beta) / 2)
int a_n(int n, double beta);

struct BoundConfig {
  double beta = 0.25;
  double gamma = 0.5;
  double eta = 0.1;
  ObservationSet k;
  LDSet d;
  double m0 = 1.0;
  double m1 = 1.0;
  double m2 = 1.0;

  void validate() const;
};

struct BoundRow {
  int n = 0;
  int a_n = 0;
  double log_term_geo = 0.0;
  double log_term_ratio = 0.0;
  double log_total = 0.0;
  double total_clipped = 1.0;
  bool applies = true;
};

struct BoundReport {
  std::string form;  // "corollary" or "lemma"
  double rho = 0.0;
  LDSet c;
  BoundConfig cfg;
  double log_nu_v = 0.0;
  double log_nuprime_v = 0.0;
  bool phi_zero_flag = false;
  // (gamma - beta)/2 log eta + 2 (M0 + M1 + M2) - 2 log eps-_D; negative
  // means the ratio term decays on the event where the M_i controls hold.
  double implied_log_rate = 0.0;
  std::vector<BoundRow> rows;  // n = 1..N
};

// Per-observation ingredients shared by both bound forms.
struct BoundInputs {
  std::vector<double> log_upsilon_all;    // i = 0..N
  std::vector<double> log_upsilon_out_c;  // i = 0..N
  std::vector<double> log_psi_d;          // i = 0..N
  std::vector<bool> in_k;
  PhiResult phi_nu;
  PhiResult phi_nuprime;
  double log_nu_v = 0.0;
  double log_nuprime_v = 0.0;
};

BoundInputs compute_bound_inputs(const ModelSpec& model, const InitialDistribution& nu,
                                 const InitialDistribution& nu_prime, std::span<const double> obs,
                                 const BoundConfig& cfg, const LDSet& c, const StateSpace& space,
                                 const SupSpec& spec = {});

BoundReport corollary_from_inputs(const BoundInputs& in, const BoundConfig& cfg, const LDSet& c);
BoundReport lemma53_from_inputs(const BoundInputs& in, const BoundConfig& cfg, const LDSet& c);

BoundReport corollary_bound(const ModelSpec& model, const InitialDistribution& nu,
                            const InitialDistribution& nu_prime, std::span<const double> obs,
                            const BoundConfig& cfg, const LDSet& c, const StateSpace& space,
                            const SupSpec& spec = {});

BoundReport lemma53_bound(const ModelSpec& model, const InitialDistribution& nu,
                          const InitialDistribution& nu_prime, std::span<const double> obs,
                          double beta, const LDSet& c, const LDSet& d, const StateSpace& space,
                          const SupSpec& spec = {});

struct ConditionRow {
  int n = 0;
  double freq_k = 0.0;            // n^-1 sum_{i=0}^n 1_K(y_i)
  double mean_log_upsilon = 0.0;  // n^-1 sum_{i=0}^n log Upsilon_X(y_i)
  double mean_log_psi = 0.0;      // n^-1 sum_{i=2}^n log Psi_D(y_i)
};

struct ConditionReport {
  std::vector<ConditionRow> rows;  // n = 1..N
  bool k_ok = false;
  bool upsilon_ok = false;
  bool psi_ok = false;
};

ConditionReport check_conditions(std::span<const double> obs, const ModelSpec& model,
                                 const BoundConfig& cfg, const SupSpec& spec = {});
ConditionReport conditions_from_inputs(std::span<const double> log_upsilon_all,
                                       std::span<const double> log_psi_d,
                                       const std::vector<bool>& in_k, const BoundConfig& cfg);

}  // namespace hmmstab

#endif  // HMMSTAB_BOUNDS_HPP_
