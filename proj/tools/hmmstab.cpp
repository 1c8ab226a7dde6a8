// hmmstab: simulate / filter / bound / experiment / verify over YAML configs.
// Exit codes: 0 success, 1 domain error or failed verification, 2 usage or
// configuration error.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "hmmstab/bounds.hpp"
#include "hmmstab/config.hpp"
#include "hmmstab/csv.hpp"
#include "hmmstab/error.hpp"
#include "hmmstab/experiments.hpp"
#include "hmmstab/filter.hpp"
#include "hmmstab/parallel.hpp"
#include "hmmstab/trajectory.hpp"
#include "hmmstab/verify.hpp"

using namespace hmmstab;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 1;
};

void add_common(CLI::App* app, Common& c, bool needs_config = true) {
  auto* opt = app->add_option("--config", c.config, "YAML configuration file");
  if (needs_config) opt->required();
  app->add_option("--set", c.sets, "override, key.path=value (repeatable)");
  app->add_option("--seed", c.seed, "seed; overrides the config");
  app->add_option("--out", c.out, "output directory")->required();
  app->add_option("--threads", c.threads, "worker threads (0 = hardware concurrency)");
}

RunConfig load(const Common& c) {
  std::vector<std::string> ov = c.sets;
  if (c.seed) ov.push_back("seed=" + std::to_string(*c.seed));
  if (c.config.empty()) return parse_config("{}", ov);
  return load_config(c.config, ov);
}

fs::path prepare_out(const Common& c, const RunConfig& cfg) {
  const fs::path out(c.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw InvalidInput("cannot create output directory " + out.string() + ": " + ec.message());
  std::ofstream f(out / "config.yaml", std::ios::binary);
  if (!f) throw InvalidInput("cannot write " + (out / "config.yaml").string());
  f << cfg.resolved_yaml << '\n';
  return out;
}

InitialDistribution star_init(const RunConfig& cfg, const ModelSpec& model) {
  if (cfg.nu_star) return *cfg.nu_star;
  const ModelSpec gen = model.generator();
  if (gen.is_finite()) return FiniteVector{std::vector<double>(gen.num_states(), 1.0)};
  return GaussianInit{0.0, gen.stationary_sd()};
}

std::vector<double> observations(const RunConfig& cfg, const ModelSpec& model, const StateSpace& space,
                                 const std::string& obs_file) {
  if (!obs_file.empty()) return read_trajectory_csv(obs_file).obs;
  return simulate(model, cfg.n, star_init(cfg, model), require_seed(cfg), 0, &space).obs;
}

InitialDistribution need(const std::optional<InitialDistribution>& d, const char* key) {
  if (!d) throw InvalidInput(std::string("missing key '") + key + "'");
  return *d;
}

int cmd_simulate(const Common& c, bool hide) {
  const RunConfig cfg = load(c);
  const ModelSpec& model = require_model(cfg);
  const std::uint64_t seed = require_seed(cfg);
  const fs::path out = prepare_out(c, cfg);
  const StateSpace space = state_space_for(model, cfg.grid);
  const Trajectory t = simulate(model, cfg.n, star_init(cfg, model), seed, 0, &space);
  write_trajectory_csv(out / "trajectory.csv", t, !hide);
  return 0;
}

int cmd_filter(const Common& c, const std::string& obs_file, std::optional<double> glo,
               std::optional<double> ghi, std::optional<int> gm) {
  RunConfig cfg = load(c);
  const ModelSpec& model = require_model(cfg);
  if (glo || ghi || gm) {
    if (model.is_finite()) throw InvalidInput("--grid-* flags apply to continuous models only");
    GridSpec g = cfg.grid.value_or(GridSpec{-model.default_half_width(), model.default_half_width(), 1000});
    if (glo) g.lo = *glo;
    if (ghi) g.hi = *ghi;
    if (gm) g.m = *gm;
    g.validate();
    cfg.grid = g;
  }
  const StateSpace space = state_space_for(model, cfg.grid);
  const auto nu = need(cfg.nu, "nu"), nu_prime = need(cfg.nu_prime, "nu_prime");
  // grid-bound initial laws are checked against the grid before any work
  discretize(nu, space);
  discretize(nu_prime, space);
  const auto obs = observations(cfg, model, space, obs_file);
  const fs::path out = prepare_out(c, cfg);
  const DiscreteModel dm(model, space);
  const auto trace = run_two_filters(dm, nu, nu_prime, obs);
  CsvWriter w(out / "filter_trace.csv", {"n", "tv", "logZ_nu", "logZ_nuprime"});
  for (const auto& r : trace.rows) {
    w.field(r.n).field(r.tv).field(r.logZ_nu).field(r.logZ_nuprime);
    w.end_row();
  }
  return 0;
}

nlohmann::json region_json(const Region& r) {
  if (const auto* iv = std::get_if<Interval>(&r)) return {{"lo", iv->lo}, {"hi", iv->hi}};
  return {{"states", std::get<StateSubset>(r).states}};
}

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

int cmd_bound(const Common& c, const std::string& form, const std::string& obs_file) {
  const RunConfig cfg = load(c);
  const ModelSpec& model = require_model(cfg);
  if (!cfg.bound) throw InvalidInput("missing key 'bound'");
  const StateSpace space = state_space_for(model, cfg.grid);
  const auto nu = need(cfg.nu, "nu"), nu_prime = need(cfg.nu_prime, "nu_prime");
  const ResolvedBound rb = resolve_bound(cfg, model);
  if (!rb.c) throw InvalidInput("missing key 'bound.C'");
  const auto obs = observations(cfg, model, space, obs_file);
  const fs::path out = prepare_out(c, cfg);

  const BoundReport rep = form == "corollary"
                              ? corollary_bound(model, nu, nu_prime, obs, rb.cfg, *rb.c, space, cfg.sup)
                              : lemma53_bound(model, nu, nu_prime, obs, rb.cfg.beta, *rb.c, rb.cfg.d, space, cfg.sup);
  const DiscreteModel dm(model, space);
  const auto trace = run_two_filters(dm, nu, nu_prime, obs);

  int violations = 0, applied = 0;
  {
    CsvWriter w(out / "bound.csv",
                {"n", "a_n", "log_term_geo", "log_term_ratio", "log_total", "total_clipped", "applies", "tv"});
    for (const auto& r : rep.rows) {
      const double tv = trace.rows[r.n].tv;
      w.field(r.n).field(r.a_n).field(r.log_term_geo).field(r.log_term_ratio).field(r.log_total);
      w.field(r.total_clipped).field(r.applies ? 1 : 0).field(tv);
      w.end_row();
      if (r.applies) {
        ++applied;
        violations += !leq_roundoff(tv, r.total_clipped);
      }
    }
  }
  const nlohmann::json summary{
      {"form", rep.form},
      {"rho_C", number(rep.rho)},
      {"C", region_json(rep.c.region)},
      {"C_eps_minus", number(rep.c.eps_minus)},
      {"C_eps_plus", number(rep.c.eps_plus)},
      {"D", region_json(rep.cfg.d.region)},
      {"D_eps_minus", number(rep.cfg.d.eps_minus)},
      {"D_eps_plus", number(rep.cfg.d.eps_plus)},
      {"beta", rep.cfg.beta},
      {"gamma", rep.cfg.gamma},
      {"eta", rep.cfg.eta},
      {"log_nu_V", number(rep.log_nu_v)},
      {"log_nuprime_V", number(rep.log_nuprime_v)},
      {"phi_zero_flag", rep.phi_zero_flag},
      {"implied_log_rate", number(rep.implied_log_rate)},
      {"rows_applied", applied},
      {"tv_violations", violations}};
  std::ofstream(out / "bound_summary.json", std::ios::binary) << summary.dump(2) << '\n';
  return 0;
}

int cmd_experiment(const Common& c, const std::string& kind) {
  const RunConfig cfg = load(c);
  ExperimentConfig e = experiment_config(cfg);
  e.threads = resolve_threads(c.threads);
  const fs::path out = prepare_out(c, cfg);
  ExperimentResult r;
  if (kind == "forgetting") r = run_forgetting(e);
  else if (kind == "misspec") r = misspecification_study(e);
  else r = estimate_r_sequences(e);
  emit_report(r, out);
  return 0;
}

void write_suite(const fs::path& out, const SuiteResult& s) {
  CsvWriter w(out / ("verify_" + s.name + ".csv"), {"suite", "case", "n", "label", "lhs", "rhs", "holds"});
  for (const auto& r : s.rows) {
    w.field(r.suite).field(static_cast<long long>(r.case_id)).field(r.n).field(r.label);
    w.field(r.lhs).field(r.rhs).field(r.holds ? 1 : 0);
    w.end_row();
  }
}

int cmd_verify(const Common& c, const std::string& suite) {
  const RunConfig cfg = load(c);
  const int threads = resolve_threads(c.threads);
  const fs::path out = prepare_out(c, cfg);
  std::vector<SuiteResult> results;
  const bool all = suite == "all";
  if (all || suite == "prop51") results.push_back(run_prop51_suite(cfg.corpus, threads));
  if (all || suite == "prop52") results.push_back(run_prop52_suite(cfg.corpus, threads));
  if (all || suite == "lemmaA1") results.push_back(run_lemma_a1_suite(12));
  if (all || suite == "lemmaA2") results.push_back(run_lemma_a2_suite(cfg.corpus, cfg.mc_replications, threads));
  if (all || suite == "bound") {
    BoundConfig base;
    if (cfg.bound) {
      base.beta = cfg.bound->beta;
      base.gamma = cfg.bound->gamma;
      base.eta = cfg.bound->eta;
      base.k = cfg.bound->k;
    }
    results.push_back(run_bound_suite(cfg.corpus, base, threads));
  }
  bool ok = true;
  std::ofstream summary(out / "verify_summary.txt", std::ios::binary);
  for (const auto& s : results) {
    write_suite(out, s);
    ok = ok && s.passed;
    summary << s.name << ": " << (s.passed ? "pass" : "FAIL") << " (" << s.rows.size() << " rows, "
            << s.violations << " violations)\n";
    std::cout << s.name << ": " << (s.passed ? "pass" : "FAIL") << " (" << s.violations << " violations)\n";
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for forgetting of the initial distribution in hidden Markov filters"};
  app.require_subcommand(1);

  Common c;
  bool hide = false;
  auto* sim = app.add_subcommand("simulate", "simulate a path from the generating model");
  add_common(sim, c);
  sim->add_flag("--hide-states", hide, "leave the x column empty");

  std::string obs_file;
  std::optional<double> glo, ghi;
  std::optional<int> gm;
  auto* filt = app.add_subcommand("filter", "run the filters from nu and nu' and record their tv distance");
  add_common(filt, c);
  filt->add_option("--obs", obs_file, "trajectory CSV (step,x,y); simulated from the config when absent");
  filt->add_option("--grid-lo", glo);
  filt->add_option("--grid-hi", ghi);
  filt->add_option("--grid-m", gm);

  std::string form = "corollary";
  auto* bnd = app.add_subcommand("bound", "assemble the pathwise forgetting bound along one path");
  add_common(bnd, c);
  bnd->add_option("--form", form)->check(CLI::IsMember({"corollary", "lemma"}));
  bnd->add_option("--obs", obs_file, "trajectory CSV; simulated from the config when absent");

  std::string kind;
  auto* exp = app.add_subcommand("experiment", "replicated experiments");
  exp->add_option("kind", kind)->required()->check(CLI::IsMember({"forgetting", "rseq", "misspec"}));
  add_common(exp, c);

  std::string suite;
  auto* ver = app.add_subcommand("verify", "exact and Monte Carlo verification suites");
  ver->add_option("suite", suite)
      ->required()
      ->check(CLI::IsMember({"prop51", "prop52", "lemmaA1", "lemmaA2", "bound", "all"}));
  add_common(ver, c, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(c, hide);
    if (*filt) return cmd_filter(c, obs_file, glo, ghi, gm);
    if (*bnd) return cmd_bound(c, form, obs_file);
    if (*exp) return cmd_experiment(c, kind);
    if (*ver) return cmd_verify(c, suite);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
