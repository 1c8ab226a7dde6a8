#include "hmmstab/verify.hpp"

#include <algorithm>
#include <cmath>

#include "hmmstab/error.hpp"
#include "hmmstab/filter.hpp"
#include "hmmstab/numerics.hpp"
#include "hmmstab/parallel.hpp"
#include "hmmstab/rng.hpp"
#include "hmmstab/trajectory.hpp"

namespace hmmstab {

bool leq_roundoff(double a, double b) {
  return a <= b + kRoundoff * std::max(std::abs(a), std::abs(b));
}

PairChainSpec PairChainSpec::from_model(const ModelSpec& model, std::vector<int> c) {
  PairChainSpec spec;
  spec.p = model.finite().transition;
  std::sort(c.begin(), c.end());
  spec.c = c;
  if (!c.empty()) spec.rho = hmmstab::rho(certify_ld_set(model, StateSubset{c}));
  return spec;
}

bool PairChainSpec::in_c(int x) const { return std::binary_search(c.begin(), c.end(), x); }

double PairChainSpec::pair_kernel(int a, int b, int a2, int b2) const { return p[a][a2] * p[b][b2]; }

bool PairChainSpec::check_tensor(double tol) const {
  const int m = size();
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      double row = 0.0;
      for (int a2 = 0; a2 < m; ++a2)
        for (int b2 = 0; b2 < m; ++b2) {
          const double k = pair_kernel(a, b, a2, b2);
          if (std::abs(k - p[a][a2] * p[b][b2]) > tol) return false;
          row += k;
        }
      // Pbar[(a,b), A x X] = P(a, A)
      for (int a2 = 0; a2 < m; ++a2) {
        double marg = 0.0;
        for (int b2 = 0; b2 < m; ++b2) marg += pair_kernel(a, b, a2, b2);
        if (std::abs(marg - p[a][a2]) > 1e-12) return false;
      }
      if (std::abs(row - 1.0) > 1e-12) return false;
    }
  return true;
}

namespace {

void guard(int m, std::size_t steps) {
  if (m > 8) throw ComplexityGuard("exact pair-chain computations need at most 8 states");
  if (steps == 0) throw InvalidInput("likelihood sequence is empty");
  if (steps > 26) throw ComplexityGuard("exact pair-chain computations need N <= 25");
}

void check_vectors(int m, const std::vector<double>& nu, const std::vector<double>& nu_prime,
                   const Matrix& g_seq) {
  if (static_cast<int>(nu.size()) != m || static_cast<int>(nu_prime.size()) != m)
    throw InvalidInput("initial laws must have one entry per state");
  for (const auto& g : g_seq)
    if (static_cast<int>(g.size()) != m) throw InvalidInput("likelihood vectors must have one entry per state");
}

// Forward recursion on pairs started from mu (x) mu'.
std::vector<std::vector<double>> pair_forward(const PairChainSpec& s, const std::vector<double>& mu,
                                              const std::vector<double>& mu2, const Matrix& g) {
  const int m = s.size();
  std::vector<std::vector<double>> out;
  std::vector<double> u(m * m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) u[a * m + b] = mu[a] * mu2[b] * g[0][a] * g[0][b];
  out.push_back(u);
  for (std::size_t k = 1; k < g.size(); ++k) {
    std::vector<double> next(m * m, 0.0);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        const double w = u[a * m + b];
        if (w == 0.0) continue;
        for (int a2 = 0; a2 < m; ++a2)
          for (int b2 = 0; b2 < m; ++b2) next[a2 * m + b2] += w * s.pair_kernel(a, b, a2, b2);
      }
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) next[a * m + b] *= g[k][a] * g[k][b];
    u = std::move(next);
    out.push_back(u);
  }
  return out;
}

}  // namespace

ExactDeltaResult exact_delta(const PairChainSpec& spec, const std::vector<double>& nu,
                             const std::vector<double>& nu_prime, const Matrix& g_seq) {
  const int m = spec.size();
  guard(m, g_seq.size());
  check_vectors(m, nu, nu_prime, g_seq);
  const auto fwd = pair_forward(spec, nu, nu_prime, g_seq);
  const auto bwd = pair_forward(spec, nu_prime, nu, g_seq);
  const int big_n = static_cast<int>(g_seq.size()) - 1;

  ExactDeltaResult r;
  for (int n = 0; n <= big_n; ++n) {
    std::vector<double> signed_marginal(m, 0.0);
    double total = 0.0;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        signed_marginal[a] += fwd[n][a * m + b] - bwd[n][a * m + b];
        total += fwd[n][a * m + b];
      }
    double half_l1 = 0.0;
    for (double v : signed_marginal) half_l1 += 0.5 * std::abs(v);
    double best = 0.0;
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
      double s = 0.0;
      for (int a = 0; a < m; ++a)
        if (mask & (1u << a)) s += signed_marginal[a];
      best = std::max(best, std::abs(s));
    }
    r.delta.push_back(half_l1);
    r.delta_enum.push_back(best);
    r.mass.push_back(total);
  }

  // DP over (pair state, number of consecutive C x C visits so far)
  const auto in_cbar = [&](int a, int b) { return spec.in_c(a) && spec.in_c(b); };
  std::vector<std::vector<double>> dp(m * m, std::vector<double>(big_n + 1, 0.0));
  std::vector<double> direct(m * m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      dp[a * m + b][0] = nu[a] * nu_prime[b] * g_seq[0][a] * g_seq[0][b];
      direct[a * m + b] = dp[a * m + b][0];
    }
  const auto rhs_from = [&](const std::vector<std::vector<double>>& d) {
    double s = 0.0;
    for (const auto& row : d)
      for (int c = 0; c <= big_n; ++c)
        if (row[c] != 0.0) s += row[c] * std::pow(spec.rho, c);
    return s;
  };
  const auto sum = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  };
  r.rhs.push_back(rhs_from(dp));
  r.rhs_direct.push_back(sum(direct));
  for (int k = 1; k <= big_n; ++k) {
    std::vector<std::vector<double>> next(m * m, std::vector<double>(big_n + 1, 0.0));
    std::vector<double> next_direct(m * m, 0.0);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        const int from = a * m + b;
        for (int a2 = 0; a2 < m; ++a2)
          for (int b2 = 0; b2 < m; ++b2) {
            const int to = a2 * m + b2;
            const double t = spec.pair_kernel(a, b, a2, b2) * g_seq[k][a2] * g_seq[k][b2];
            const bool visit = in_cbar(a, b) && in_cbar(a2, b2);
            for (int c = 0; c < k; ++c)
              if (dp[from][c] != 0.0) next[to][c + (visit ? 1 : 0)] += dp[from][c] * t;
            next_direct[to] += direct[from] * t * (visit ? spec.rho : 1.0);
          }
      }
    dp = std::move(next);
    direct = std::move(next_direct);
    r.rhs.push_back(rhs_from(dp));
    r.rhs_direct.push_back(sum(direct));
  }
  r.n_counter_support.assign(big_n + 1, 0.0);
  for (const auto& row : dp)
    for (int c = 0; c <= big_n; ++c) r.n_counter_support[c] += row[c];
  return r;
}

std::vector<DenominatorRow> exact_denominator_bound(const ModelSpec& model,
                                                    const std::vector<double>& nu,
                                                    const StateSubset& c, const Matrix& g_seq) {
  const int m = model.num_states();
  guard(m, g_seq.size());
  check_vectors(m, nu, nu, g_seq);
  const LDSet ld = certify_ld_set(model, c);
  const auto& p = model.finite().transition;

  double head = 0.0;  // nu(g_0 Q g_1 1_C)
  if (g_seq.size() >= 2)
    for (int i = 0; i < m; ++i)
      for (int j : c.states) head += nu[i] * g_seq[0][i] * p[i][j] * g_seq[1][j];

  std::vector<double> alpha(m);
  for (int i = 0; i < m; ++i) alpha[i] = nu[i] * g_seq[0][i];
  std::vector<DenominatorRow> rows;
  double tail = 1.0;
  for (std::size_t k = 1; k < g_seq.size(); ++k) {
    std::vector<double> next(m, 0.0);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) next[j] += alpha[i] * p[i][j];
    for (int j = 0; j < m; ++j) next[j] *= g_seq[k][j];
    alpha = std::move(next);
    if (k >= 2) {
      double avg = 0.0;
      for (int j : c.states) avg += g_seq[k][j];
      tail *= avg / static_cast<double>(c.states.size());
    }
    DenominatorRow row;
    row.n = static_cast<int>(k);
    for (double a : alpha) row.lhs += a;
    row.rhs = std::pow(ld.eps_minus, static_cast<double>(k) - 1.0) * head * tail;
    rows.push_back(row);
  }
  return rows;
}

CountingResult counting_lemma_check(const std::vector<int>& bits, int n) {
  if (n < 1) throw InvalidInput("counting lemma needs n >= 1");
  const auto at = [&](int i) { return i < static_cast<int>(bits.size()) && bits[i] != 0; };
  CountingResult r;
  for (int i = 0; i < n; ++i) {
    r.m += at(i) ? 1 : 0;
    r.n_pairs += at(i) && at(i + 1) ? 1 : 0;
  }
  r.bound = 0.5 * (n + 1) + 0.5 * r.n_pairs;
  r.holds = r.m <= r.bound;
  return r;
}

CountingResult counting_lemma_check(const std::vector<int>& bits) {
  return counting_lemma_check(bits, static_cast<int>(bits.size()));
}

std::vector<SupermartingaleResult> supermartingale_exact(const ModelSpec& model,
                                                         const std::vector<double>& v,
                                                         const std::vector<double>& w, double b,
                                                         const Matrix& f_seq) {
  const int m = model.num_states();
  if (static_cast<int>(v.size()) != m || static_cast<int>(w.size()) != m)
    throw InvalidInput("V and W need one entry per state");
  const auto& p = model.finite().transition;
  for (int x = 0; x < m; ++x) {
    if (!(v[x] >= 1.0)) throw InvalidInput("V must be >= 1");
    if (!(w[x] > 0.0)) throw InvalidInput("W must be > 0");
    double pv = 0.0;
    for (int j = 0; j < m; ++j) pv += p[x][j] * v[j];
    if (!leq_roundoff(std::log(pv / v[x]), -w[x] + b))
      throw PreconditionFailed("drift condition log(QV/V) <= -W + b fails at state " + std::to_string(x));
  }
  double log_sup = 0.0;
  std::vector<double> h(m, 1.0);
  for (std::size_t k = f_seq.size(); k-- > 0;) {
    if (static_cast<int>(f_seq[k].size()) != m) throw InvalidInput("F_k needs one entry per state");
    std::vector<double> next(m, 0.0);
    for (int x = 0; x < m; ++x) {
      for (int j = 0; j < m; ++j) next[x] += p[x][j] * h[j];
      next[x] *= std::exp(std::abs(f_seq[k][x]));
    }
    h = std::move(next);
    double s = -std::numeric_limits<double>::infinity();
    for (int x = 0; x < m; ++x) s = std::max(s, std::abs(f_seq[k][x]) - w[x]);
    log_sup += s;
  }
  const double n = static_cast<double>(f_seq.size());
  std::vector<SupermartingaleResult> out;
  for (int x = 0; x < m; ++x) {
    SupermartingaleResult r;
    r.lhs = h[x];
    r.rhs = v[x] * std::exp(b * n + log_sup);
    r.holds = leq_roundoff(r.lhs, r.rhs);
    out.push_back(r);
  }
  return out;
}

SupermartingaleResult supermartingale_mc(const ModelSpec& model, const McDriftSpec& spec,
                                         double x0, int replications, std::uint64_t seed,
                                         int threads) {
  if (model.is_finite()) throw InvalidInput("Monte Carlo check expects a continuous model");
  if (replications < 2) throw InvalidInput("need at least 2 replications");
  if (spec.test_grid.empty()) throw InvalidInput("test grid is empty");
  for (double x : spec.test_grid) {
    const double lhs = std::log(qv_ratio(model, x));
    const double wx = spec.w(x);
    if (!(wx > 0.0)) throw PreconditionFailed("W must be > 0 on the test grid");
    if (!leq_roundoff(lhs, -wx + spec.b))
      throw PreconditionFailed("drift condition log(QV/V) <= -W + b fails at x=" + std::to_string(x));
  }
  double log_sup = 0.0;
  for (const auto& f : spec.f_seq) {
    double s = -std::numeric_limits<double>::infinity();
    for (double x : spec.test_grid) s = std::max(s, std::abs(f(x)) - spec.w(x));
    log_sup += s;
  }
  const int n = static_cast<int>(spec.f_seq.size());
  std::vector<double> samples(replications);
  parallel_for(replications, threads, [&](std::size_t rep) {
    double x = x0, acc = 0.0;
    for (int k = 0; k < n; ++k) {
      acc += std::abs(spec.f_seq[k](x));
      Stream rng(seed, rep, k + 1);
      x = state_from_noise(model, x, draw_noise(rng));
    }
    samples[rep] = std::exp(acc);
  });
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= replications;
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  var /= (replications - 1);
  SupermartingaleResult r;
  r.lhs = mean;
  r.se = std::sqrt(var / replications);
  r.rhs = model.drift()(x0) * std::exp(spec.b * n + log_sup);
  r.holds = r.lhs + 3.0 * r.se <= r.rhs;
  return r;
}

namespace {

std::vector<double> dirichlet_one(Stream& rng, int k) {
  std::vector<double> v(k);
  double s = 0.0;
  for (double& x : v) s += (x = rng.gamma(1.0));
  for (double& x : v) x /= s;
  return v;
}

}  // namespace

RandomCase random_case(const CorpusSpec& spec, std::uint64_t id) {
  if (spec.states < 2 || spec.symbols < 1 || spec.horizon < 1)
    throw InvalidInput("corpus needs >= 2 states, >= 1 symbol and horizon >= 1");
  Stream rng(spec.seed, id, 0);
  FiniteStateParams p;
  for (int i = 0; i < spec.states; ++i) p.transition.push_back(dirichlet_one(rng, spec.states));
  // rows are renormalized so that they pass the sum-to-one check exactly enough
  CategoricalEmission e;
  for (int i = 0; i < spec.states; ++i) {
    std::vector<double> row(spec.symbols);
    double s = 0.0;
    for (double& x : row) s += (x = std::exp(rng.normal()));
    for (double& x : row) x /= s;
    e.probs.push_back(row);
  }
  p.emission = e;
  auto nu = dirichlet_one(rng, spec.states);
  auto nu_prime = dirichlet_one(rng, spec.states);
  std::vector<int> c;
  const auto mask = 1 + rng() % ((1u << spec.states) - 1);
  for (int i = 0; i < spec.states; ++i)
    if (mask & (1u << i)) c.push_back(i);

  ModelSpec model(p);
  const Trajectory traj = simulate(model, spec.horizon, FiniteVector{nu}, mix64(spec.seed), id);
  Matrix g;
  for (double y : traj.obs) {
    std::vector<double> col(spec.states);
    for (int i = 0; i < spec.states; ++i) col[i] = likelihood(model, i, y);
    g.push_back(col);
  }
  return RandomCase{id, std::move(model), std::move(nu), std::move(nu_prime), traj.obs, std::move(g),
                    std::move(c)};
}

namespace {

SuiteResult collect(std::string name, std::vector<std::vector<CaseRow>> per_case) {
  SuiteResult s;
  s.name = std::move(name);
  for (auto& rows : per_case)
    for (auto& r : rows) {
      if (!r.holds) {
        ++s.violations;
        s.passed = false;
      }
      s.rows.push_back(std::move(r));
    }
  return s;
}

}  // namespace

SuiteResult run_prop51_suite(const CorpusSpec& spec, int threads) {
  std::vector<std::vector<CaseRow>> per_case(spec.cases);
  parallel_for(spec.cases, threads, [&](std::size_t k) {
    const RandomCase rc = random_case(spec, k);
    const auto pair = PairChainSpec::from_model(rc.model, rc.c);
    const auto r = exact_delta(pair, rc.nu, rc.nu_prime, rc.g_seq);
    for (std::size_t n = 0; n < r.delta.size(); ++n) {
      const bool consistent = std::abs(r.delta[n] - r.delta_enum[n]) <= 1e-12 * r.mass[n] &&
                              std::abs(r.rhs[n] - r.rhs_direct[n]) <= 1e-12 * r.mass[n];
      per_case[k].push_back({"prop51", rc.id, static_cast<int>(n), "", r.delta[n], r.rhs[n],
                             consistent && leq_roundoff(r.delta[n], r.rhs[n])});
    }
  });
  return collect("prop51", std::move(per_case));
}

SuiteResult run_prop52_suite(const CorpusSpec& spec, int threads) {
  std::vector<std::vector<CaseRow>> per_case(spec.cases);
  parallel_for(spec.cases, threads, [&](std::size_t k) {
    const RandomCase rc = random_case(spec, k);
    for (const auto& row : exact_denominator_bound(rc.model, rc.nu, StateSubset{rc.c}, rc.g_seq))
      per_case[k].push_back(
          {"prop52", rc.id, row.n, "", row.lhs, row.rhs, leq_roundoff(row.rhs, row.lhs)});
  });
  return collect("prop52", std::move(per_case));
}

SuiteResult run_lemma_a1_suite(int length) {
  if (length < 1 || length > 20) throw ComplexityGuard("exhaustive counting check needs length in [1, 20]");
  std::vector<std::vector<CaseRow>> per_case(1);
  for (unsigned code = 0; code < (1u << length); ++code) {
    std::vector<int> bits(length);
    std::string label;
    for (int i = 0; i < length; ++i) {
      bits[i] = (code >> i) & 1u;
      label += bits[i] ? '1' : '0';
    }
    for (int n = 1; n <= length; ++n) {
      const auto r = counting_lemma_check(bits, n);
      if (n == length || !r.holds)
        per_case[0].push_back({"lemmaA1", code, n, label, static_cast<double>(r.m), r.bound, r.holds});
    }
  }
  return collect("lemmaA1", std::move(per_case));
}

SuiteResult run_lemma_a2_suite(const CorpusSpec& spec, int mc_replications, int threads) {
  const int cases = std::min(spec.cases, 20);
  std::vector<std::vector<CaseRow>> per_case(cases + 1);
  parallel_for(cases, threads, [&](std::size_t k) {
    const RandomCase rc = random_case(spec, k);
    Stream rng(spec.seed, k, 1);
    const int m = rc.model.num_states();
    std::vector<double> v(m), w(m);
    for (int x = 0; x < m; ++x) {
      v[x] = 1.0 + 4.0 * rng.uniform();
      w[x] = 0.1 + 0.9 * rng.uniform();
    }
    const auto& p = rc.model.finite().transition;
    double b = -std::numeric_limits<double>::infinity();
    for (int x = 0; x < m; ++x) {
      double pv = 0.0;
      for (int j = 0; j < m; ++j) pv += p[x][j] * v[j];
      b = std::max(b, std::log(pv / v[x]) + w[x]);
    }
    Matrix f(spec.horizon, std::vector<double>(m));
    for (auto& row : f)
      for (double& x : row) x = rng.normal();
    const auto res = supermartingale_exact(rc.model, v, w, b, f);
    for (int x = 0; x < m; ++x)
      per_case[k].push_back({"lemmaA2", rc.id, spec.horizon, "exact x=" + std::to_string(x), res[x].lhs,
                             res[x].rhs, res[x].holds});
  });

  // Monte Carlo on LGSSM(0.9, 1) with V = exp(0.5 |x|), W = b - log(QV/V), F = 0.1 W
  const ModelSpec lg(LgssmParams{0.9, 1.0, 1.0, 1.0}, DriftFunction::exp_abs(0.5));
  McDriftSpec mc;
  for (int i = 0; i <= 800; ++i) mc.test_grid.push_back(-20.0 + 0.05 * i);
  double top = -std::numeric_limits<double>::infinity();
  for (double x : mc.test_grid) top = std::max(top, std::log(qv_ratio(lg, x)));
  mc.b = top + 0.1;
  mc.w = [&lg, b = mc.b](double x) { return b - std::log(qv_ratio(lg, x)); };
  const int horizon = 10;
  for (int k = 0; k < horizon; ++k) mc.f_seq.push_back([w = mc.w](double x) { return 0.1 * w(x); });
  const auto r = supermartingale_mc(lg, mc, 0.0, mc_replications, spec.seed, threads);
  per_case[cases].push_back({"lemmaA2", 1000, horizon, "mc lgssm x0=0", r.lhs, r.rhs, r.holds});
  return collect("lemmaA2", std::move(per_case));
}

SuiteResult corollary_case_check(const RandomCase& rc, const BoundConfig& base) {
  const StateSpace space = FiniteStates{rc.model.num_states()};
  const DiscreteModel dm(rc.model, space);
  const auto trace = run_two_filters(dm, FiniteVector{rc.nu}, FiniteVector{rc.nu_prime}, rc.obs);

  BoundConfig cfg = base;
  std::vector<int> all(rc.model.num_states());
  for (int i = 0; i < rc.model.num_states(); ++i) all[i] = i;
  if (!(cfg.d.eps_minus > 0.0)) cfg.d = certify_ld_set(rc.model, StateSubset{all});
  std::vector<double> probes;
  for (double y : rc.obs)
    if (cfg.k.contains(y)) probes.push_back(y);
  const LDSet c = find_ld_set_for_eta(rc.model, cfg.eta, cfg.k, probes);
  const auto in = compute_bound_inputs(rc.model, FiniteVector{rc.nu}, FiniteVector{rc.nu_prime}, rc.obs,
                                       cfg, c, space);
  const auto cor = corollary_from_inputs(in, cfg, c);
  const auto lem = lemma53_from_inputs(in, cfg, c);

  std::vector<std::vector<CaseRow>> rows(1);
  int count_k = in.in_k[0] ? 1 : 0;
  for (std::size_t j = 0; j < cor.rows.size(); ++j) {
    const int n = cor.rows[j].n;
    count_k += in.in_k[n] ? 1 : 0;
    const double tv = trace.rows[n].tv;
    if (cor.rows[j].applies)
      rows[0].push_back({"corollary", rc.id, n, "", tv, cor.rows[j].total_clipped,
                         leq_roundoff(tv, cor.rows[j].total_clipped)});
    rows[0].push_back({"lemma", rc.id, n, "", tv, lem.rows[j].total_clipped,
                       leq_roundoff(tv, lem.rows[j].total_clipped)});
    // the corollary coarsens the lemma once a_n minus the indices outside K
    // reaches (gamma - beta) n / 2
    const double excess = lem.rows[j].a_n - (n + 1 - count_k) - 0.5 * (cfg.gamma - cfg.beta) * n;
    if (cor.rows[j].applies && excess >= 0.0)
      rows[0].push_back({"coarsening", rc.id, n, "", lem.rows[j].log_total, cor.rows[j].log_total,
                         leq_roundoff(lem.rows[j].log_total, cor.rows[j].log_total)});
  }
  return collect("bound", std::move(rows));
}

SuiteResult run_bound_suite(const CorpusSpec& spec, const BoundConfig& base, int threads) {
  std::vector<std::vector<CaseRow>> per_case(spec.cases);
  parallel_for(spec.cases, threads, [&](std::size_t k) {
    per_case[k] = corollary_case_check(random_case(spec, k), base).rows;
  });
  return collect("bound", std::move(per_case));
}

}  // namespace hmmstab
