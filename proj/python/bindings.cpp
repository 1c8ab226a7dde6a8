// Python bindings. Models and runs are described by the same YAML documents
// the command line tool reads; results come back as plain lists and dicts.

#include <optional>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hmmstab/bounds.hpp"
#include "hmmstab/config.hpp"
#include "hmmstab/error.hpp"
#include "hmmstab/experiments.hpp"
#include "hmmstab/filter.hpp"
#include "hmmstab/parallel.hpp"
#include "hmmstab/trajectory.hpp"
#include "hmmstab/verify.hpp"

namespace py = pybind11;
using namespace hmmstab;

namespace {

using Overrides = std::vector<std::string>;

RunConfig parse(const std::string& yaml, const Overrides& ov) { return parse_config(yaml, ov); }

InitialDistribution star_init(const RunConfig& cfg, const ModelSpec& model) {
  if (cfg.nu_star) return *cfg.nu_star;
  const ModelSpec gen = model.generator();
  if (gen.is_finite()) return FiniteVector{std::vector<double>(gen.num_states(), 1.0)};
  return GaussianInit{0.0, gen.stationary_sd()};
}

py::dict simulate_py(const std::string& yaml, const Overrides& ov, std::uint64_t replication) {
  const RunConfig cfg = parse(yaml, ov);
  const ModelSpec& model = require_model(cfg);
  const StateSpace space = state_space_for(model, cfg.grid);
  const Trajectory t = simulate(model, cfg.n, star_init(cfg, model), require_seed(cfg), replication, &space);
  py::dict d;
  d["x"] = *t.hidden;
  d["y"] = t.obs;
  return d;
}

std::vector<double> filter_tv_py(const std::string& yaml, const std::optional<std::vector<double>>& obs,
                                 const Overrides& ov) {
  const RunConfig cfg = parse(yaml, ov);
  const ModelSpec& model = require_model(cfg);
  if (!cfg.nu || !cfg.nu_prime) throw InvalidInput("filter needs 'nu' and 'nu_prime'");
  const StateSpace space = state_space_for(model, cfg.grid);
  const std::vector<double> y =
      obs ? *obs : simulate(model, cfg.n, star_init(cfg, model), require_seed(cfg), 0, &space).obs;
  const DiscreteModel dm(model, space);
  std::vector<double> tv;
  for (const auto& r : run_two_filters(dm, *cfg.nu, *cfg.nu_prime, y).rows) tv.push_back(r.tv);
  return tv;
}

py::dict ld_set_py(const std::string& yaml, double lo, double hi, const Overrides& ov) {
  const RunConfig cfg = parse(yaml, ov);
  const ModelSpec& model = require_model(cfg);
  Region r = Interval{lo, hi};
  if (model.is_finite()) {
    StateSubset s;
    for (int i = static_cast<int>(lo); i <= static_cast<int>(hi); ++i) s.states.push_back(i);
    r = s;
  }
  const LDSet ld = certify_ld_set(model, r);
  py::dict d;
  d["eps_minus"] = ld.eps_minus;
  d["eps_plus"] = ld.eps_plus;
  d["rho"] = rho(ld);
  return d;
}

double upsilon_py(const std::string& yaml, double y, const std::optional<std::pair<double, double>>& excluded,
                  const Overrides& ov) {
  const RunConfig cfg = parse(yaml, ov);
  const UpsilonEvaluator ev(require_model(cfg), cfg.sup);
  if (excluded) return ev.upsilon(y, Interval{excluded->first, excluded->second});
  return ev.upsilon(y);
}

py::dict bound_py(const std::string& yaml, const std::string& form, const std::optional<std::vector<double>>& obs,
                  const Overrides& ov) {
  const RunConfig cfg = parse(yaml, ov);
  const ModelSpec& model = require_model(cfg);
  if (!cfg.bound) throw InvalidInput("missing key 'bound'");
  if (!cfg.nu || !cfg.nu_prime) throw InvalidInput("bound needs 'nu' and 'nu_prime'");
  const StateSpace space = state_space_for(model, cfg.grid);
  const ResolvedBound rb = resolve_bound(cfg, model);
  if (!rb.c) throw InvalidInput("missing key 'bound.C'");
  const std::vector<double> y =
      obs ? *obs : simulate(model, cfg.n, star_init(cfg, model), require_seed(cfg), 0, &space).obs;
  BoundReport rep;
  if (form == "corollary")
    rep = corollary_bound(model, *cfg.nu, *cfg.nu_prime, y, rb.cfg, *rb.c, space, cfg.sup);
  else if (form == "lemma")
    rep = lemma53_bound(model, *cfg.nu, *cfg.nu_prime, y, rb.cfg.beta, *rb.c, rb.cfg.d, space, cfg.sup);
  else
    throw InvalidInput("form must be 'corollary' or 'lemma'");
  std::vector<int> n, a;
  std::vector<double> geo, ratio, total, clipped;
  std::vector<bool> applies;
  for (const auto& r : rep.rows) {
    n.push_back(r.n);
    a.push_back(r.a_n);
    geo.push_back(r.log_term_geo);
    ratio.push_back(r.log_term_ratio);
    total.push_back(r.log_total);
    clipped.push_back(r.total_clipped);
    applies.push_back(r.applies);
  }
  const DiscreteModel dm(model, space);
  std::vector<double> tv;
  for (const auto& r : run_two_filters(dm, *cfg.nu, *cfg.nu_prime, y).rows) tv.push_back(r.tv);
  py::dict d;
  d["n"] = n;
  d["a_n"] = a;
  d["log_term_geo"] = geo;
  d["log_term_ratio"] = ratio;
  d["log_total"] = total;
  d["total_clipped"] = clipped;
  d["applies"] = applies;
  d["tv"] = tv;
  d["rho"] = rep.rho;
  d["phi_zero_flag"] = rep.phi_zero_flag;
  return d;
}

py::dict result_dict(const ExperimentResult& r) {
  py::dict d;
  std::vector<std::vector<double>> tv;
  std::vector<double> rates;
  for (const auto& rep : r.reps) {
    tv.push_back(rep.tv);
    rates.push_back(rep.rate);
  }
  d["kind"] = r.kind;
  d["tv"] = tv;
  d["rates"] = rates;
  d["median_rate"] = r.median_rate;
  d["q1_rate"] = r.q1_rate;
  d["q3_rate"] = r.q3_rate;
  py::list rs;
  for (const auto& row : r.r_seq) {
    py::dict e;
    e["n"] = row.n;
    e["r0_nu"] = row.r0_nu;
    e["r0_nuprime"] = row.r0_nuprime;
    e["r1"] = row.r1;
    e["r2"] = row.r2;
    e["r3"] = row.r3;
    rs.append(e);
  }
  d["r_seq"] = rs;
  return d;
}

py::dict experiment_py(const std::string& kind, const std::string& yaml, const Overrides& ov, int threads) {
  const RunConfig cfg = parse(yaml, ov);
  ExperimentConfig e = experiment_config(cfg);
  e.threads = resolve_threads(threads);
  ExperimentResult r;
  {
    py::gil_scoped_release release;
    if (kind == "forgetting") r = run_forgetting(e);
    else if (kind == "misspec") r = misspecification_study(e);
    else if (kind == "rseq") r = estimate_r_sequences(e);
    else throw InvalidInput("kind must be forgetting, misspec or rseq");
  }
  return result_dict(r);
}

py::dict verify_py(const std::string& suite, const std::string& yaml, const Overrides& ov, int threads) {
  const RunConfig cfg = parse(yaml, ov);
  threads = resolve_threads(threads);
  SuiteResult s;
  {
    py::gil_scoped_release release;
    if (suite == "prop51") s = run_prop51_suite(cfg.corpus, threads);
    else if (suite == "prop52") s = run_prop52_suite(cfg.corpus, threads);
    else if (suite == "lemmaA1") s = run_lemma_a1_suite(12);
    else if (suite == "lemmaA2") s = run_lemma_a2_suite(cfg.corpus, cfg.mc_replications, threads);
    else if (suite == "bound") s = run_bound_suite(cfg.corpus, BoundConfig{}, threads);
    else throw InvalidInput("unknown suite '" + suite + "'");
  }
  py::dict d;
  d["name"] = s.name;
  d["passed"] = s.passed;
  d["violations"] = s.violations;
  d["rows"] = s.rows.size();
  return d;
}

}  // namespace

PYBIND11_MODULE(_hmmstab, m) {
  m.doc() = "Forgetting of the initial distribution in hidden Markov filters";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  auto domain = py::register_exception<DomainError>(m, "DomainError", PyExc_RuntimeError);
  py::register_exception<DegenerateFilter>(m, "DegenerateFilter", domain.ptr());
  py::register_exception<NotCertifiable>(m, "NotCertifiable", domain.ptr());
  py::register_exception<H2Unverified>(m, "H2Unverified", domain.ptr());
  py::register_exception<CoverageError>(m, "CoverageError", domain.ptr());
  py::register_exception<ComplexityGuard>(m, "ComplexityGuard", domain.ptr());
  py::register_exception<PreconditionFailed>(m, "PreconditionFailed", domain.ptr());

  m.def("simulate", &simulate_py, py::arg("config"), py::arg("overrides") = Overrides{},
        py::arg("replication") = 0, "Simulate one path; returns {'x': [...], 'y': [...]}.");
  m.def("filter_tv", &filter_tv_py, py::arg("config"), py::arg("obs") = std::nullopt,
        py::arg("overrides") = Overrides{}, "tv distance between the filters from nu and nu' at n = 0..N.");
  m.def("certify_ld_set", &ld_set_py, py::arg("config"), py::arg("lo"), py::arg("hi"),
        py::arg("overrides") = Overrides{},
        "Local Doeblin constants of [lo, hi] (states lo..hi for finite models).");
  m.def("upsilon", &upsilon_py, py::arg("config"), py::arg("y"), py::arg("excluded") = std::nullopt,
        py::arg("overrides") = Overrides{},
        "sup of g(x, y) QV(x)/V(x) over the state space, or outside the interval `excluded`.");
  m.def("bound", &bound_py, py::arg("config"), py::arg("form") = "corollary", py::arg("obs") = std::nullopt,
        py::arg("overrides") = Overrides{}, "Pathwise forgetting bound along one path, with the exact tv.");
  m.def("experiment", &experiment_py, py::arg("kind"), py::arg("config"), py::arg("overrides") = Overrides{},
        py::arg("threads") = 1, "Replicated experiment: 'forgetting', 'misspec' or 'rseq'.");
  m.def("verify", &verify_py, py::arg("suite"), py::arg("config") = "{}", py::arg("overrides") = Overrides{},
        py::arg("threads") = 1, "Run a verification suite on the random finite corpus.");
  m.def("fit_rate", &fit_rate, py::arg("tv"), py::arg("floor") = 1e-14, py::arg("window_start") = 0.5,
        "Least-squares slope of log tv over the late window.");
}
