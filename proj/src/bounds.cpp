#include "hmmstab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include <boost/math/tools/minima.hpp>

#include "hmmstab/error.hpp"
#include "hmmstab/numerics.hpp"

namespace hmmstab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

const Interval& interval_of(const Region& region, const char* what) {
  const auto* iv = std::get_if<Interval>(&region);
  if (!iv) throw InvalidInput(std::string(what) + ": continuous models need an interval");
  return *iv;
}

const StateSubset& subset_of(const Region& region, const char* what) {
  const auto* s = std::get_if<StateSubset>(&region);
  if (!s) throw InvalidInput(std::string(what) + ": finite models need a state subset");
  return *s;
}

void check_subset(const StateSubset& s, int m) {
  if (s.states.empty()) throw InvalidInput("state subset is empty");
  for (std::size_t k = 0; k < s.states.size(); ++k) {
    if (s.states[k] < 0 || s.states[k] >= m) throw InvalidInput("state subset index out of range");
    if (k > 0 && s.states[k] <= s.states[k - 1])
      throw InvalidInput("state subset must be sorted and distinct");
  }
}

// Extremes of N(x'; mu, sd) over x' in [lo, hi].
std::pair<double, double> gaussian_extremes(double mu, double sd, double lo, double hi) {
  const double near = mu < lo ? lo - mu : (mu > hi ? mu - hi : 0.0);
  const double far = std::max(std::abs(mu - lo), std::abs(hi - mu));
  return {norm_pdf(far, 0.0, sd), norm_pdf(near, 0.0, sd)};
}

}  // namespace

bool ObservationSet::contains(double y) const {
  switch (form) {
    case Form::All: return true;
    case Form::Interval: return y >= lo && y <= hi;
    case Form::Symbols:
      return std::round(y) == y &&
             std::find(symbols.begin(), symbols.end(), static_cast<int>(y)) != symbols.end();
  }
  return false;
}

LDSet certify_ld_set(const ModelSpec& model, const Region& region, int m_probe) {
  LDSet ld;
  ld.region = region;
  if (model.is_finite()) {
    const auto& s = subset_of(region, "certify_ld_set");
    check_subset(s, model.num_states());
    const auto& p = model.finite().transition;
    double lo = 1.0, hi = 0.0;
    for (int i : s.states)
      for (int j : s.states) {
        lo = std::min(lo, p[i][j]);
        hi = std::max(hi, p[i][j]);
      }
    ld.lambda_norm = static_cast<double>(s.states.size());
    ld.eps_minus = ld.lambda_norm * lo;
    ld.eps_plus = ld.lambda_norm * hi;
  } else {
    const auto& iv = interval_of(region, "certify_ld_set");
    if (!(iv.lo < iv.hi)) throw InvalidInput("LD-set interval must have lo < hi");
    if (m_probe < 1) throw InvalidInput("m_probe must be >= 1");
    std::vector<double> xs;
    for (int k = 0; k <= m_probe; ++k) xs.push_back(iv.lo + (iv.hi - iv.lo) * k / m_probe);
    if (iv.lo < 0.0 && iv.hi > 0.0) xs.push_back(0.0);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double x : xs) {
      const auto [qmin, qmax] = gaussian_extremes(model.kernel_mean(x), model.kernel_sd(x), iv.lo, iv.hi);
      lo = std::min(lo, qmin);
      hi = std::max(hi, qmax);
    }
    ld.lambda_norm = iv.hi - iv.lo;
    ld.eps_minus = ld.lambda_norm * lo;
    ld.eps_plus = ld.lambda_norm * hi;
  }
  if (!(ld.eps_minus > 0.0))
    throw NotCertifiable("transition density vanishes somewhere on C x C");
  return ld;
}

double rho(const LDSet& ld) {
  if (!(ld.eps_minus > 0.0) || ld.eps_minus > ld.eps_plus)
    throw InvalidInput("LD-set constants must satisfy 0 < eps- <= eps+");
  const double r = ld.eps_minus / ld.eps_plus;
  return 1.0 - r * r;
}

std::optional<double> analytic_upsilon_all(const ModelSpec& model, double y) {
  if (!model.drift().is_one()) return std::nullopt;
  check_observation(model, y);
  const auto gauss_peak = [](double beta) { return 1.0 / (std::sqrt(2.0 * std::numbers::pi) * beta); };
  return std::visit(
      overloaded{
          [](const FiniteStateParams&) -> std::optional<double> { return std::nullopt; },
          [&](const LgssmParams& p) -> std::optional<double> {
            if (p.h0 == 0.0) return norm_pdf(y, 0.0, p.beta);
            return gauss_peak(p.beta);
          },
          [&](const TobitParams& p) -> std::optional<double> {
            if (y == 0.0) return 1.0;
            return gauss_peak(p.beta);
          },
          [&](const NlssmParams& p) -> std::optional<double> {
            if (const auto* a = std::get_if<AffineObs>(&p.obs_form); a && a->a == 0.0)
              return norm_pdf(y, a->b, p.beta);
            return gauss_peak(p.beta);
          },
          [&](const StochVolParams&) -> std::optional<double> {
            if (y == 0.0) return std::numeric_limits<double>::infinity();
            return 1.0 / (std::sqrt(2.0 * std::numbers::pi * std::numbers::e) * std::abs(y));
          },
      },
      model.params());
}

UpsilonEvaluator::UpsilonEvaluator(ModelSpec model, SupSpec spec)
    : model_(std::move(model)), spec_(std::move(spec)) {
  if (model_.is_finite()) {
    for (int i = 0; i < model_.num_states(); ++i) {
      xs_.push_back(i);
      log_ratio_.push_back(std::log(qv_ratio(model_, i, spec_.quad)));
    }
    return;
  }
  if (spec_.scan_points < 3) throw InvalidInput("scan_points must be >= 3");
  scan_half_width_ = spec_.scan_half_width.value_or(5.0 * model_.default_half_width());
  if (!(scan_half_width_ > 0.0)) throw InvalidInput("scan half-width must be > 0");
  const int n = spec_.scan_points;
  xs_.resize(n);
  log_ratio_.resize(n);
  for (int k = 0; k < n; ++k) {
    xs_[k] = -scan_half_width_ + 2.0 * scan_half_width_ * k / (n - 1);
    log_ratio_[k] = model_.drift().is_one() ? 0.0 : std::log(qv_ratio(model_, xs_[k], spec_.quad));
  }
}

double UpsilonEvaluator::log_ratio_at(double x) const {
  if (model_.drift().is_one()) return 0.0;
  if (spec_.refine == SupSpec::Refine::Exact) return std::log(qv_ratio(model_, x, spec_.quad));
  if (x <= xs_.front()) return log_ratio_.front();
  if (x >= xs_.back()) return log_ratio_.back();
  const double h = xs_[1] - xs_[0];
  const auto k = std::min(static_cast<std::size_t>((x - xs_.front()) / h), xs_.size() - 2);
  const double t = (x - xs_[k]) / h;
  return (1.0 - t) * log_ratio_[k] + t * log_ratio_[k + 1];
}

double UpsilonEvaluator::scan_region(double y, const std::optional<Region>& excluded) const {
  if (model_.is_finite()) {
    const StateSubset* skip = excluded ? &subset_of(*excluded, "upsilon") : nullptr;
    double best = kNegInf;
    for (int i = 0; i < model_.num_states(); ++i) {
      if (skip && std::binary_search(skip->states.begin(), skip->states.end(), i)) continue;
      best = std::max(best, log_likelihood(model_, i, y) + log_ratio_[i]);
    }
    return best;
  }

  struct Point {
    double x, f;
  };
  std::vector<std::vector<Point>> segments;
  const auto f_table = [&](std::size_t k) { return log_likelihood(model_, xs_[k], y) + log_ratio_[k]; };
  const auto f_exact = [&](double x) { return log_likelihood(model_, x, y) + log_ratio_at(x); };
  if (!excluded) {
    auto& seg = segments.emplace_back();
    for (std::size_t k = 0; k < xs_.size(); ++k) seg.push_back({xs_[k], f_table(k)});
  } else {
    const auto& iv = interval_of(*excluded, "upsilon");
    auto& left = segments.emplace_back();
    for (std::size_t k = 0; k < xs_.size() && xs_[k] < iv.lo; ++k) left.push_back({xs_[k], f_table(k)});
    left.push_back({iv.lo, f_exact(iv.lo)});
    auto& right = segments.emplace_back();
    right.push_back({iv.hi, f_exact(iv.hi)});
    for (std::size_t k = 0; k < xs_.size(); ++k)
      if (xs_[k] > iv.hi) right.push_back({xs_[k], f_table(k)});
  }

  double best = kNegInf;
  for (const auto& seg : segments) {
    std::vector<std::size_t> peaks;
    for (std::size_t k = 0; k < seg.size(); ++k) {
      best = std::max(best, seg[k].f);
      const bool ge_left = k == 0 || seg[k].f >= seg[k - 1].f;
      const bool ge_right = k + 1 == seg.size() || seg[k].f >= seg[k + 1].f;
      if (ge_left && ge_right && std::isfinite(seg[k].f)) peaks.push_back(k);
    }
    if (spec_.refine == SupSpec::Refine::None || seg.size() < 2) continue;
    std::stable_sort(peaks.begin(), peaks.end(),
                     [&](std::size_t a, std::size_t b) { return seg[a].f > seg[b].f; });
    if (peaks.size() > 3) peaks.resize(3);
    for (std::size_t k : peaks) {
      const double a = seg[k == 0 ? 0 : k - 1].x;
      const double b = seg[std::min(k + 1, seg.size() - 1)].x;
      if (!(a < b)) continue;
      const auto neg = [&](double x) {
        const double v = f_exact(x);
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : -v;
      };
      std::uintmax_t iters = 200;
      const auto r = boost::math::tools::brent_find_minima(neg, a, b,
                                                           std::numeric_limits<double>::digits / 2, iters);
      best = std::max(best, -r.second);
    }
  }
  return best;
}

double UpsilonEvaluator::log_upsilon(double y, const std::optional<Region>& excluded) const {
  check_observation(model_, y);
  double all = kNegInf;
  std::optional<double> analytic;
  if (spec_.prefer_analytic) analytic = analytic_upsilon_all(model_, y);
  all = analytic ? std::log(*analytic) : scan_region(y, std::nullopt);
  if (!excluded) return all;
  // the scan can only undershoot a supremum, so clamp to keep A in X => Upsilon_A <= Upsilon_X
  return std::min(scan_region(y, excluded), all);
}

double upsilon(const ModelSpec& model, const std::optional<Region>& excluded, double y,
               const SupSpec& spec) {
  return UpsilonEvaluator(model, spec).upsilon(y, excluded);
}

LDSet find_ld_set_for_eta(const ModelSpec& model, double eta, const ObservationSet& k,
                          std::span<const double> y_probe, const SupSpec& spec, int m_probe,
                          std::optional<double> max_radius) {
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidInput("eta must lie in (0, 1]");
  if (y_probe.empty()) throw InvalidInput("y_probe is empty");
  for (double y : y_probe)
    if (!k.contains(y)) throw InvalidInput("probe observation outside K: " + std::to_string(y));

  const UpsilonEvaluator ev(model, spec);
  std::vector<double> log_all;
  for (double y : y_probe) log_all.push_back(ev.log_upsilon(y));
  const double log_eta = std::log(eta);
  const auto passes = [&](const Region& c) {
    for (std::size_t i = 0; i < y_probe.size(); ++i) {
      const double out = ev.log_upsilon(y_probe[i], c);
      if (out == kNegInf) continue;
      if (out > log_eta + log_all[i]) return false;
    }
    return true;
  };

  if (model.is_finite()) {
    const int m = model.num_states();
    if (m > 20) throw ComplexityGuard("subset search needs at most 20 states");
    for (int s = 1; s <= m; ++s) {
      // subsets of size s in lexicographic order
      std::vector<int> idx(s);
      for (int j = 0; j < s; ++j) idx[j] = j;
      while (true) {
        const Region c = StateSubset{idx};
        if (passes(c)) {
          try {
            return certify_ld_set(model, c, m_probe);
          } catch (const NotCertifiable&) {
          }
        }
        int j = s - 1;
        while (j >= 0 && idx[j] == m - s + j) --j;
        if (j < 0) break;
        ++idx[j];
        for (int t = j + 1; t < s; ++t) idx[t] = idx[t - 1] + 1;
      }
    }
    throw H2Unverified("no certifiable state subset satisfies the eta condition");
  }

  const double limit = max_radius.value_or(ev.scan_half_width());
  const auto ok = [&](double c) { return passes(Interval{-c, c}); };
  double hi = 0.25 * model.stationary_sd();
  while (!ok(hi)) {
    hi *= 2.0;
    if (hi > limit) throw H2Unverified("eta condition still fails at radius " + std::to_string(hi));
  }
  double lo = hi / 2.0;
  if (!ok(lo)) {
    for (int it = 0; it < 40 && hi - lo > 1e-6 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (ok(mid) ? hi : lo) = mid;
    }
  } else {
    hi = lo;
  }
  return certify_ld_set(model, Interval{-hi, hi}, m_probe);
}

double log_psi(const ModelSpec& model, const LDSet& d, double y, const QuadratureSpec& quad) {
  check_observation(model, y);
  if (model.is_finite()) {
    const auto& s = subset_of(d.region, "psi");
    check_subset(s, model.num_states());
    std::vector<double> terms;
    for (int i : s.states) terms.push_back(log_likelihood(model, i, y));
    return log_sum_exp(terms) - std::log(static_cast<double>(s.states.size()));
  }
  const auto& iv = interval_of(d.region, "psi");
  const double kink = 0.0;
  const auto nodes = gauss_legendre_nodes(iv.lo, iv.hi, quad.panels, std::span(&kink, 1));
  return log_integrate(nodes, [&](double x) { return log_likelihood(model, x, y); }) -
         std::log(iv.hi - iv.lo);
}

double psi(const ModelSpec& model, const LDSet& d, double y, const QuadratureSpec& quad) {
  return std::exp(log_psi(model, d, y, quad));
}

PhiResult phi(const ModelSpec& model, const InitialDistribution& nu, const LDSet& d, double y0,
              double y1, const StateSpace& space, const QuadratureSpec& quad) {
  check_observation(model, y0);
  check_observation(model, y1);
  const auto w = discretize(nu, space);
  std::vector<double> terms;
  if (model.is_finite()) {
    const auto& s = subset_of(d.region, "phi");
    check_subset(s, model.num_states());
    const auto& p = model.finite().transition;
    for (int i = 0; i < model.num_states(); ++i) {
      if (w[i] == 0.0) continue;
      std::vector<double> inner;
      for (int j : s.states)
        if (p[i][j] > 0.0) inner.push_back(std::log(p[i][j]) + log_likelihood(model, j, y1));
      if (inner.empty()) continue;
      terms.push_back(std::log(w[i]) + log_likelihood(model, i, y0) + log_sum_exp(inner));
    }
  } else {
    const auto& iv = interval_of(d.region, "phi");
    const int panels = std::max(8, quad.panels / 4);
    for (int i = 0; i < size(space); ++i) {
      if (w[i] == 0.0) continue;
      const double x = support_point(space, i);
      const double mu = model.kernel_mean(x), sd = model.kernel_sd(x);
      const double a = std::max(iv.lo, mu - quad.half_width_sd * sd);
      const double b = std::min(iv.hi, mu + quad.half_width_sd * sd);
      if (!(a < b)) continue;
      const auto nodes = gauss_legendre_nodes(a, b, panels);
      const double inner = log_integrate(nodes, [&](double x1) {
        return log_norm_pdf(x1, mu, sd) + log_likelihood(model, x1, y1);
      });
      terms.push_back(std::log(w[i]) + log_likelihood(model, x, y0) + inner);
    }
  }
  PhiResult r;
  r.log_value = terms.empty() ? kNegInf : log_sum_exp(terms);
  r.value = std::exp(r.log_value);
  r.zero_flag = r.log_value == kNegInf;
  return r;
}

int a_n(int n, double beta) {
  if (n < 0) throw InvalidInput("a_n: n must be >= 0");
  if (!(beta > 0.0 && beta < 1.0)) throw InvalidInput("a_n: beta must lie in (0, 1)");
  return static_cast<int>(std::floor(n * (1.0 - beta) / 2.0 + 1e-12));
}

void BoundConfig::validate() const {
  if (!(beta > 0.0 && beta < 1.0)) throw InvalidInput("bound: beta must lie in (0, 1)");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidInput("bound: gamma must lie in (0, 1)");
  if (!(beta < gamma)) throw InvalidInput("bound: beta must be < gamma");
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidInput("bound: eta must lie in (0, 1)");
  if (!(m0 > 0.0 && m1 > 0.0 && m2 > 0.0)) throw InvalidInput("bound: M0, M1, M2 must be > 0");
  if (!(d.eps_minus > 0.0)) throw InvalidInput("bound: D must be a certified LD-set");
}

BoundInputs compute_bound_inputs(const ModelSpec& model, const InitialDistribution& nu,
                                 const InitialDistribution& nu_prime, std::span<const double> obs,
                                 const BoundConfig& cfg, const LDSet& c, const StateSpace& space,
                                 const SupSpec& spec) {
  if (obs.size() < 2) throw InvalidInput("bound needs at least two observations");
  const UpsilonEvaluator ev(model, spec);
  BoundInputs in;
  for (double y : obs) {
    in.log_upsilon_all.push_back(ev.log_upsilon(y));
    in.log_upsilon_out_c.push_back(ev.log_upsilon(y, c.region));
    in.log_psi_d.push_back(log_psi(model, cfg.d, y, spec.quad));
    in.in_k.push_back(cfg.k.contains(y));
  }
  in.phi_nu = phi(model, nu, cfg.d, obs[0], obs[1], space, spec.quad);
  in.phi_nuprime = phi(model, nu_prime, cfg.d, obs[0], obs[1], space, spec.quad);
  in.log_nu_v = std::log(initial_drift_mean(model, nu, space));
  in.log_nuprime_v = std::log(initial_drift_mean(model, nu_prime, space));
  return in;
}

namespace {

BoundReport assemble(const BoundInputs& in, const BoundConfig& cfg, const LDSet& c, bool lemma) {
  cfg.validate();
  BoundReport rep;
  rep.form = lemma ? "lemma" : "corollary";
  rep.rho = rho(c);
  rep.c = c;
  rep.cfg = cfg;
  rep.log_nu_v = in.log_nu_v;
  rep.log_nuprime_v = in.log_nuprime_v;
  rep.phi_zero_flag = in.phi_nu.zero_flag || in.phi_nuprime.zero_flag;
  const double log_eps_d = std::log(cfg.d.eps_minus);
  rep.implied_log_rate = 0.5 * (cfg.gamma - cfg.beta) * std::log(cfg.eta) +
                         2.0 * (cfg.m0 + cfg.m1 + cfg.m2) - 2.0 * log_eps_d;
  const double log_rho = std::log(rep.rho);

  const int big_n = static_cast<int>(in.log_upsilon_all.size()) - 1;
  double sum_ups = in.log_upsilon_all[0];
  double sum_psi = 0.0;
  int count_k = in.in_k[0] ? 1 : 0;
  const auto gap = [&](int i) {
    const double out = in.log_upsilon_out_c[i], all = in.log_upsilon_all[i];
    return out == all ? 0.0 : out - all;
  };
  std::vector<double> gaps{gap(0)};
  for (int n = 1; n <= big_n; ++n) {
    sum_ups += in.log_upsilon_all[n];
    if (n >= 2) sum_psi += in.log_psi_d[n];
    count_k += in.in_k[n] ? 1 : 0;
    gaps.push_back(gap(n));

    BoundRow row;
    row.n = n;
    row.a_n = a_n(n, cfg.beta);
    row.log_term_geo = cfg.beta * n * log_rho;
    const double denom = 2.0 * (n - 1) * log_eps_d + in.phi_nu.log_value + in.phi_nuprime.log_value +
                         2.0 * sum_psi;
    double numer = 0.0;
    if (lemma) {
      std::vector<double> g = gaps;
      std::sort(g.begin(), g.end(), std::greater<>());
      double top = 0.0;
      for (int j = 0; j < row.a_n; ++j) top += g[j];
      numer = 2.0 * sum_ups + top;
      row.applies = true;
    } else {
      numer = 0.5 * (cfg.gamma - cfg.beta) * n * std::log(cfg.eta) + 2.0 * sum_ups;
      row.applies = count_k >= 0.5 * (1.0 + cfg.gamma) * n;
    }
    row.log_term_ratio = rep.phi_zero_flag ? std::numeric_limits<double>::infinity()
                                           : numer - denom + in.log_nu_v + in.log_nuprime_v;
    if (std::isnan(row.log_term_ratio)) row.log_term_ratio = std::numeric_limits<double>::infinity();
    row.log_total = log_add_exp(row.log_term_geo, row.log_term_ratio);
    row.total_clipped = std::min(1.0, std::exp(row.log_total));
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace

BoundReport corollary_from_inputs(const BoundInputs& in, const BoundConfig& cfg, const LDSet& c) {
  return assemble(in, cfg, c, false);
}

BoundReport lemma53_from_inputs(const BoundInputs& in, const BoundConfig& cfg, const LDSet& c) {
  return assemble(in, cfg, c, true);
}

BoundReport corollary_bound(const ModelSpec& model, const InitialDistribution& nu,
                            const InitialDistribution& nu_prime, std::span<const double> obs,
                            const BoundConfig& cfg, const LDSet& c, const StateSpace& space,
                            const SupSpec& spec) {
  cfg.validate();
  return corollary_from_inputs(compute_bound_inputs(model, nu, nu_prime, obs, cfg, c, space, spec),
                               cfg, c);
}

BoundReport lemma53_bound(const ModelSpec& model, const InitialDistribution& nu,
                          const InitialDistribution& nu_prime, std::span<const double> obs,
                          double beta, const LDSet& c, const LDSet& d, const StateSpace& space,
                          const SupSpec& spec) {
  BoundConfig cfg;
  cfg.beta = beta;
  cfg.gamma = 0.5 * (1.0 + beta);
  cfg.d = d;
  return lemma53_from_inputs(compute_bound_inputs(model, nu, nu_prime, obs, cfg, c, space, spec),
                             cfg, c);
}

ConditionReport conditions_from_inputs(std::span<const double> log_upsilon_all,
                                       std::span<const double> log_psi_d,
                                       const std::vector<bool>& in_k, const BoundConfig& cfg) {
  ConditionReport rep;
  if (log_upsilon_all.size() < 2) return rep;
  double sum_k = in_k[0] ? 1.0 : 0.0, sum_ups = log_upsilon_all[0], sum_psi = 0.0;
  for (std::size_t n = 1; n < log_upsilon_all.size(); ++n) {
    sum_k += in_k[n] ? 1.0 : 0.0;
    sum_ups += log_upsilon_all[n];
    if (n >= 2) sum_psi += log_psi_d[n];
    const double dn = static_cast<double>(n);
    rep.rows.push_back({static_cast<int>(n), sum_k / dn, sum_ups / dn, sum_psi / dn});
  }
  const auto& last = rep.rows.back();
  rep.k_ok = last.freq_k >= 0.5 * (1.0 + cfg.gamma);
  rep.upsilon_ok = last.mean_log_upsilon < cfg.m1;
  rep.psi_ok = last.mean_log_psi > -cfg.m2;
  return rep;
}

ConditionReport check_conditions(std::span<const double> obs, const ModelSpec& model,
                                 const BoundConfig& cfg, const SupSpec& spec) {
  const UpsilonEvaluator ev(model, spec);
  std::vector<double> ups, lpsi;
  std::vector<bool> in_k;
  for (double y : obs) {
    ups.push_back(ev.log_upsilon(y));
    lpsi.push_back(log_psi(model, cfg.d, y, spec.quad));
    in_k.push_back(cfg.k.contains(y));
  }
  return conditions_from_inputs(ups, lpsi, in_k, cfg);
}

}  // namespace hmmstab
