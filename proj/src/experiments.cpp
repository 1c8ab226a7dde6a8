#include "hmmstab/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include "hmmstab/csv.hpp"
#include "hmmstab/error.hpp"
#include "hmmstab/numerics.hpp"
#include "hmmstab/parallel.hpp"
#include "hmmstab/trajectory.hpp"

namespace hmmstab {

void ExperimentConfig::validate() const {
  if (replications < 1) throw InvalidInput("replications must be >= 1");
  if (n < 2) throw InvalidInput("n must be >= 2");
  if (!(tv_floor > 0.0)) throw InvalidInput("tv_floor must be > 0");
  if (!(window_start >= 0.0 && window_start < 1.0)) throw InvalidInput("window_start must lie in [0, 1)");
  if (bound) bound->validate();
  if (bound_c && !bound) throw InvalidInput("bound C given without a bound configuration");
  if (grid) grid->validate();
}

double fit_rate(const std::vector<double>& tv, double floor, double window_start) {
  int n_eff = -1;
  for (int k = static_cast<int>(tv.size()) - 1; k >= 0; --k)
    if (tv[k] >= floor) {
      n_eff = k;
      break;
    }
  if (n_eff < 1) return kNegInf;
  const int lo = static_cast<int>(std::floor(window_start * n_eff));
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (int k = lo; k <= n_eff; ++k) {
    if (tv[k] < floor) continue;
    const double y = std::log(tv[k]);
    sx += k;
    sy += y;
    sxx += static_cast<double>(k) * k;
    sxy += k * y;
    ++count;
  }
  if (count < 2) return kNegInf;
  const double den = count * sxx - sx * sx;
  return (count * sxy - sx * sy) / den;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const double pos = p * (values.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double t = pos - i;
  if (t == 0.0 || i + 1 >= values.size()) return values[i];
  if (values[i] == kNegInf) return kNegInf;
  return values[i] + t * (values[i + 1] - values[i]);
}

std::vector<int> dyadic_schedule(int n) {
  std::vector<int> s;
  for (int k = 4; k <= n; k *= 2) s.push_back(k);
  return s;
}

namespace {

InitialDistribution star_initial(const ExperimentConfig& cfg) {
  if (cfg.nu_star) return *cfg.nu_star;
  const ModelSpec gen = cfg.model.generator();
  if (gen.is_finite()) return FiniteVector{std::vector<double>(gen.num_states(), 1.0)};
  return GaussianInit{0.0, gen.stationary_sd()};
}

template <class F>
auto with_replication(std::size_t rep, F&& f) {
  try {
    return f();
  } catch (const DegenerateFilter& e) {
    throw DegenerateFilter("replication " + std::to_string(rep) + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError("replication " + std::to_string(rep) + ": " + e.what());
  }
}

void aggregate_rates(ExperimentResult& r) {
  std::vector<double> rates;
  for (const auto& rep : r.reps) rates.push_back(rep.rate);
  r.median_rate = quantile(rates, 0.5);
  r.q1_rate = quantile(rates, 0.25);
  r.q3_rate = quantile(rates, 0.75);
}

}  // namespace

ExperimentResult run_forgetting(const ExperimentConfig& cfg) {
  cfg.validate();
  const StateSpace space = state_space_for(cfg.model, cfg.grid);
  const DiscreteModel dm(cfg.model, space);
  const InitialDistribution init_star = star_initial(cfg);

  ExperimentResult result;
  result.kind = "forgetting";
  result.n = cfg.n;
  result.reps.resize(cfg.replications);
  parallel_for(cfg.replications, cfg.threads, [&](std::size_t rep) {
    with_replication(rep, [&] {
      const Trajectory traj = simulate(cfg.model, cfg.n, init_star, cfg.seed, rep, &space);
      const auto trace = run_two_filters(dm, cfg.nu, cfg.nu_prime, traj.obs);
      ReplicationResult& out = result.reps[rep];
      for (const auto& row : trace.rows) out.tv.push_back(row.tv);
      out.rate = fit_rate(out.tv, cfg.tv_floor, cfg.window_start);
      if (cfg.bound && cfg.bound_c) {
        const auto in = compute_bound_inputs(cfg.model, cfg.nu, cfg.nu_prime, traj.obs, *cfg.bound,
                                             *cfg.bound_c, space, cfg.sup);
        const auto cor = corollary_from_inputs(in, *cfg.bound, *cfg.bound_c);
        out.phi_zero_flag = cor.phi_zero_flag;
        for (const auto& row : cor.rows) {
          if (!row.applies) continue;
          ++out.bound_checked;
          const double tv = out.tv[row.n];
          if (tv > row.total_clipped * (1.0 + 1e-12)) ++out.bound_violations;
        }
        out.conditions = conditions_from_inputs(in.log_upsilon_all, in.log_psi_d, in.in_k, *cfg.bound);
      } else if (cfg.bound) {
        out.conditions = check_conditions(traj.obs, cfg.model, *cfg.bound, cfg.sup);
      }
      return 0;
    });
  });
  aggregate_rates(result);
  return result;
}

ExperimentResult misspecification_study(const ExperimentConfig& cfg) {
  if (!cfg.model.star()) throw InvalidInput("misspecification study needs star parameters (model.star)");
  ExperimentResult r = run_forgetting(cfg);
  r.kind = "misspec";
  return r;
}

ExperimentResult estimate_r_sequences(const ExperimentConfig& cfg) {
  cfg.validate();
  if (!cfg.bound) throw InvalidInput("r-sequence estimation needs a bound section (M0, M1, M2, gamma, K, D)");
  const BoundConfig& b = *cfg.bound;
  const StateSpace space = state_space_for(cfg.model, cfg.grid);
  const InitialDistribution init_star = star_initial(cfg);
  const UpsilonEvaluator ev(cfg.model, cfg.sup);
  const auto schedule = dyadic_schedule(cfg.n);

  struct Events {
    std::vector<std::array<bool, 5>> hit;  // per schedule entry
  };
  ExperimentResult result;
  result.kind = "rseq";
  result.n = cfg.n;
  result.reps.resize(cfg.replications);
  std::vector<Events> events(cfg.replications);
  parallel_for(cfg.replications, cfg.threads, [&](std::size_t rep) {
    with_replication(rep, [&] {
      const Trajectory traj = simulate(cfg.model, cfg.n, init_star, cfg.seed, rep, &space);
      const auto& y = traj.obs;
      const double log_phi_nu = phi(cfg.model, cfg.nu, b.d, y[0], y[1], space, cfg.sup.quad).log_value;
      const double log_phi_nuprime =
          phi(cfg.model, cfg.nu_prime, b.d, y[0], y[1], space, cfg.sup.quad).log_value;
      std::vector<double> ups, lpsi;
      std::vector<bool> in_k;
      for (double v : y) {
        ups.push_back(ev.log_upsilon(v));
        lpsi.push_back(log_psi(cfg.model, b.d, v, cfg.sup.quad));
        in_k.push_back(b.k.contains(v));
      }
      double sum_ups = ups[0], sum_psi = lpsi[0];
      int sum_k = 0;  // i = 1..n
      std::size_t next = 0;
      for (int n = 1; n <= cfg.n && next < schedule.size(); ++n) {
        sum_ups += ups[n];
        sum_psi += lpsi[n];
        sum_k += in_k[n] ? 1 : 0;
        if (n != schedule[next]) continue;
        events[rep].hit.push_back({log_phi_nu <= -b.m0 * n, log_phi_nuprime <= -b.m0 * n,
                                   sum_ups >= b.m1 * n, sum_psi <= -b.m2 * n,
                                   static_cast<double>(sum_k) / n <= 0.5 * (1.0 + b.gamma)});
        ++next;
      }
      result.reps[rep].rate = std::nan("");
      result.reps[rep].conditions = conditions_from_inputs(ups, lpsi, in_k, b);
      return 0;
    });
  });
  for (std::size_t s = 0; s < schedule.size(); ++s) {
    std::array<int, 5> counts{};
    for (const auto& e : events)
      for (int i = 0; i < 5; ++i) counts[i] += e.hit[s][i] ? 1 : 0;
    const double r = cfg.replications;
    result.r_seq.push_back({schedule[s], counts[0] / r, counts[1] / r, counts[2] / r, counts[3] / r,
                            counts[4] / r});
  }
  result.median_rate = result.q1_rate = result.q3_rate = std::nan("");
  return result;
}

void emit_report(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InvalidInput("cannot create output directory " + dir.string() + ": " + ec.message());
  {
    CsvWriter w(dir / "tv_curves.csv", {"rep", "n", "tv"});
    for (std::size_t r = 0; r < result.reps.size(); ++r)
      for (std::size_t n = 0; n < result.reps[r].tv.size(); ++n) {
        w.field(r).field(n).field(result.reps[r].tv[n]);
        w.end_row();
      }
  }
  {
    CsvWriter w(dir / "rates.csv", {"rep", "rate"});
    for (std::size_t r = 0; r < result.reps.size(); ++r) {
      if (result.reps[r].tv.empty()) continue;
      w.field(r).field(result.reps[r].rate);
      w.end_row();
    }
  }
  {
    CsvWriter w(dir / "r_seq.csv", {"n", "r0_nu", "r0_nuprime", "r1", "r2", "r3"});
    for (const auto& row : result.r_seq) {
      w.field(row.n).field(row.r0_nu).field(row.r0_nuprime).field(row.r1).field(row.r2).field(row.r3);
      w.end_row();
    }
  }
  int k_ok = 0, ups_ok = 0, psi_ok = 0, with_conditions = 0;
  {
    CsvWriter w(dir / "conditions.csv", {"rep", "n", "freq_k", "mean_log_upsilon", "mean_log_psi"});
    for (std::size_t r = 0; r < result.reps.size(); ++r) {
      const auto& c = result.reps[r].conditions;
      if (!c) continue;
      ++with_conditions;
      k_ok += c->k_ok;
      ups_ok += c->upsilon_ok;
      psi_ok += c->psi_ok;
      for (const auto& row : c->rows) {
        w.field(r).field(row.n).field(row.freq_k).field(row.mean_log_upsilon).field(row.mean_log_psi);
        w.end_row();
      }
    }
  }
  int negative = 0, checked = 0, violations = 0, zero_flags = 0;
  for (const auto& rep : result.reps) {
    negative += rep.rate < 0.0;
    checked += rep.bound_checked;
    violations += rep.bound_violations;
    zero_flags += rep.phi_zero_flag;
  }
  const auto path = dir / "summary.txt";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << "kind: " << result.kind << '\n'
      << "n: " << result.n << '\n'
      << "replications: " << result.reps.size() << '\n';
  if (result.kind != "rseq") {
    out << "median_rate: " << format_double(result.median_rate) << '\n'
        << "q1_rate: " << format_double(result.q1_rate) << '\n'
        << "q3_rate: " << format_double(result.q3_rate) << '\n'
        << "iqr_rate: " << format_double(result.q3_rate - result.q1_rate) << '\n'
        << "negative_rates: " << negative << '\n'
        << "bound_steps_checked: " << checked << '\n'
        << "bound_violations: " << violations << '\n'
        << "phi_zero_flags: " << zero_flags << '\n';
  }
  if (with_conditions > 0)
    out << "conditions_k_ok: " << k_ok << '/' << with_conditions << '\n'
        << "conditions_upsilon_ok: " << ups_ok << '/' << with_conditions << '\n'
        << "conditions_psi_ok: " << psi_ok << '/' << with_conditions << '\n';
  if (!out) throw InvalidInput("write failed: " + path.string());
}

}  // namespace hmmstab
