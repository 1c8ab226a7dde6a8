#include "hmmstab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "hmmstab/csv.hpp"
#include "hmmstab/error.hpp"

namespace hmmstab {

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// A YAML map that remembers which keys were read, so that leftovers can be
// reported as unknown.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (!node_.IsMap()) throw InvalidInput("'" + (path_.empty() ? "<root>" : path_) + "' must be a map");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return static_cast<bool>(node_[key]);
  }

  YAML::Node raw(const std::string& key) {
    seen_.insert(key);
    const YAML::Node n = node_[key];
    if (!n) throw InvalidInput("missing key '" + join(path_, key) + "'");
    return n;
  }

  template <class T>
  T get(const std::string& key) {
    const YAML::Node n = raw(key);
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      throw InvalidInput("bad value for '" + join(path_, key) + "'");
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    return has(key) ? get<T>(key) : fallback;
  }

  double num(const std::string& key) {
    const double v = get<double>(key);
    if (!std::isfinite(v)) throw InvalidInput("'" + join(path_, key) + "' must be finite");
    return v;
  }
  double num(const std::string& key, double fallback) { return has(key) ? num(key) : fallback; }

  std::vector<double> list(const std::string& key) { return get<std::vector<double>>(key); }
  std::vector<std::vector<double>> matrix(const std::string& key) {
    return get<std::vector<std::vector<double>>>(key);
  }

  Section child(const std::string& key) { return Section(raw(key), join(path_, key)); }
  const std::string& path() const { return path_; }
  std::string at(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) throw InvalidInput("unknown key '" + join(path_, key) + "'");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
auto in_section(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const InvalidInput&) {
    throw;
  } catch (const std::exception& e) {
    throw InvalidInput("'" + where + "': " + e.what());
  }
}

ModelKind parse_kind(const std::string& s, const std::string& where) {
  if (s == "finite") return ModelKind::FiniteState;
  if (s == "lgssm") return ModelKind::LGSSM;
  if (s == "tobit") return ModelKind::Tobit;
  if (s == "nlssm") return ModelKind::NLSSM;
  if (s == "sv") return ModelKind::StochVol;
  throw InvalidInput("'" + where + "': unknown model kind '" + s + "' (finite, lgssm, tobit, nlssm, sv)");
}

// Reads parameter keys of `kind`, with defaults taken from `base`.
ModelParams parse_params(Section& s, ModelKind kind, const ModelParams& base) {
  switch (kind) {
    case ModelKind::FiniteState: {
      FiniteStateParams p = std::get<FiniteStateParams>(base);
      if (s.has("transition")) p.transition = s.matrix("transition");
      if (s.has("emission")) {
        Section e = s.child("emission");
        const auto form = e.get<std::string>("form");
        if (form == "categorical") {
          p.emission = CategoricalEmission{e.matrix("probs")};
        } else if (form == "gaussian") {
          p.emission = GaussianEmission{e.list("means"), e.list("sds")};
        } else {
          throw InvalidInput("'" + e.at("form") + "' must be categorical or gaussian");
        }
        e.finish();
      }
      return p;
    }
    case ModelKind::LGSSM: {
      LgssmParams p = std::get<LgssmParams>(base);
      p.phi = s.num("phi", p.phi);
      p.sigma = s.num("sigma", p.sigma);
      p.beta = s.num("beta", p.beta);
      p.h0 = s.num("h0", p.h0);
      return p;
    }
    case ModelKind::Tobit: {
      TobitParams p = std::get<TobitParams>(base);
      p.phi = s.num("phi", p.phi);
      p.sigma = s.num("sigma", p.sigma);
      p.beta = s.num("beta", p.beta);
      return p;
    }
    case ModelKind::NLSSM: {
      NlssmParams p = std::get<NlssmParams>(base);
      if (s.has("drift")) {
        Section d = s.child("drift");
        const auto form = d.get<std::string>("form");
        if (form == "linear_shrink") {
          p.drift_form = LinearShrink{d.num("delta")};
        } else if (form == "tanh") {
          p.drift_form = TanhDrift{d.num("delta"), d.num("kappa")};
        } else {
          throw InvalidInput("'" + d.at("form") + "' must be linear_shrink or tanh");
        }
        d.finish();
      }
      if (s.has("obs")) {
        Section o = s.child("obs");
        const auto form = o.get<std::string>("form");
        if (form == "identity") {
          p.obs_form = IdentityObs{};
        } else if (form == "affine") {
          p.obs_form = AffineObs{o.num("a"), o.num("b")};
        } else {
          throw InvalidInput("'" + o.at("form") + "' must be identity or affine");
        }
        o.finish();
      }
      p.sigma0 = s.num("sigma0", p.sigma0);
      p.beta = s.num("beta", p.beta);
      return p;
    }
    case ModelKind::StochVol: {
      StochVolParams p = std::get<StochVolParams>(base);
      p.phi = s.num("phi", p.phi);
      p.sigma = s.num("sigma", p.sigma);
      p.beta = s.num("beta", p.beta);
      return p;
    }
  }
  throw InvalidInput("unknown model kind");
}

ModelParams default_params(ModelKind kind) {
  switch (kind) {
    case ModelKind::FiniteState: return FiniteStateParams{};
    case ModelKind::LGSSM: return LgssmParams{};
    case ModelKind::Tobit: return TobitParams{};
    case ModelKind::NLSSM: return NlssmParams{};
    case ModelKind::StochVol: return StochVolParams{};
  }
  return LgssmParams{};
}

ModelSpec parse_model(Section s) {
  const ModelKind kind = parse_kind(s.get<std::string>("kind"), s.at("kind"));
  if (kind == ModelKind::FiniteState && !s.has("transition"))
    throw InvalidInput("missing key '" + s.at("transition") + "'");
  if (kind == ModelKind::FiniteState && !s.has("emission"))
    throw InvalidInput("missing key '" + s.at("emission") + "'");
  const ModelParams params = parse_params(s, kind, default_params(kind));
  DriftFunction v;
  if (s.has("drift_function")) {
    Section d = s.child("drift_function");
    const auto form = d.get<std::string>("form");
    if (form == "one") {
      v = DriftFunction::one();
    } else if (form == "exp_abs") {
      v = DriftFunction::exp_abs(d.num("c"));
    } else {
      throw InvalidInput("'" + d.at("form") + "' must be one or exp_abs");
    }
    d.finish();
  }
  std::optional<ModelParams> star;
  if (s.has("star")) {
    Section st = s.child("star");
    star = parse_params(st, kind, params);
    st.finish();
  }
  std::optional<double> half_width;
  if (s.has("domain_half_width")) half_width = s.num("domain_half_width");
  s.finish();
  return in_section(s.path(), [&] {
    ModelSpec m(params, v, star);
    m.domain_half_width = half_width;
    return m;
  });
}

InitialDistribution parse_init(Section s, const std::filesystem::path& base_dir) {
  const auto form = s.get<std::string>("form");
  InitialDistribution out;
  if (form == "gaussian") {
    out = GaussianInit{s.num("mean"), s.num("sd")};
  } else if (form == "uniform") {
    out = UniformInit{s.num("a"), s.num("b")};
  } else if (form == "point_mass") {
    out = PointMassAt{s.get<int>("cell")};
  } else if (form == "finite") {
    out = FiniteVector{s.list("p")};
  } else if (form == "grid_density") {
    if (s.has("values") == s.has("file"))
      throw InvalidInput("'" + s.path() + "' needs exactly one of values or file");
    if (s.has("values")) {
      GridDensity g;
      g.values = s.list("values");
      out = std::move(g);
    } else {
      // two columns x,density; x must match the filter grid
      const auto rel = s.get<std::string>("file");
      const auto path = base_dir.empty() ? std::filesystem::path(rel) : base_dir / rel;
      const auto rows = read_csv(path);
      if (rows.empty() || rows[0].size() != 2 || rows[0][0] != "x" || rows[0][1] != "density")
        throw InvalidInput("'" + s.at("file") + "': expected header x,density in " + path.string());
      GridDensity g;
      for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 2) throw InvalidInput(path.string() + ": row " + std::to_string(i) + " needs 2 fields");
        try {
          g.points.push_back(std::stod(rows[i][0]));
          g.values.push_back(std::stod(rows[i][1]));
        } catch (const std::logic_error&) {
          throw InvalidInput(path.string() + ": row " + std::to_string(i) + " is not numeric");
        }
      }
      out = std::move(g);
    }
  } else {
    throw InvalidInput("'" + s.at("form") +
                       "' must be gaussian, uniform, point_mass, finite or grid_density");
  }
  s.finish();
  return out;
}

Region parse_region(const YAML::Node& node, const std::string& where) {
  Section s(node, where);
  if (s.has("states")) {
    auto states = s.get<std::vector<int>>("states");
    s.finish();
    return StateSubset{states};
  }
  Interval iv{s.num("lo"), s.num("hi")};
  s.finish();
  if (!(iv.lo < iv.hi)) throw InvalidInput("'" + where + "' needs lo < hi");
  return iv;
}

ObservationSet parse_k(const YAML::Node& node, const std::string& where) {
  if (node.IsScalar()) {
    if (node.as<std::string>() == "all") return ObservationSet::all();
    throw InvalidInput("'" + where + "' must be all, {lo, hi} or {symbols: [...]}");
  }
  Section s(node, where);
  if (s.has("symbols")) {
    auto sym = s.get<std::vector<int>>("symbols");
    s.finish();
    return ObservationSet::of_symbols(sym);
  }
  const double lo = s.num("lo"), hi = s.num("hi");
  s.finish();
  if (!(lo <= hi)) throw InvalidInput("'" + where + "' needs lo <= hi");
  return ObservationSet::interval(lo, hi);
}

BoundSection parse_bound(Section s) {
  BoundSection b;
  b.beta = s.num("beta", b.beta);
  b.gamma = s.num("gamma", b.gamma);
  b.eta = s.num("eta", b.eta);
  b.m0 = s.num("M0", b.m0);
  b.m1 = s.num("M1", b.m1);
  b.m2 = s.num("M2", b.m2);
  b.m_probe = s.get<int>("m_probe", b.m_probe);
  if (s.has("K")) b.k = parse_k(s.raw("K"), s.at("K"));
  b.d = parse_region(s.raw("D"), s.at("D"));
  if (s.has("C")) {
    const YAML::Node c = s.raw("C");
    if (c.IsMap() && c["search"]) {
      Section cs(c, s.at("C"));
      Section search = cs.child("search");
      LdSearch ls;
      ls.probes = search.list("probes");
      if (search.has("max_radius")) ls.max_radius = search.num("max_radius");
      search.finish();
      cs.finish();
      b.c = ls;
    } else {
      b.c = parse_region(c, s.at("C"));
    }
  }
  s.finish();
  // same ranges as BoundConfig::validate, checked before any certification
  BoundConfig probe;
  probe.beta = b.beta;
  probe.gamma = b.gamma;
  probe.eta = b.eta;
  probe.m0 = b.m0;
  probe.m1 = b.m1;
  probe.m2 = b.m2;
  probe.d.eps_minus = 1.0;
  probe.validate();
  if (b.m_probe < 2) throw InvalidInput("bound: m_probe must be >= 2");
  return b;
}

SupSpec parse_quadrature(Section s) {
  SupSpec q;
  q.quad.half_width_sd = s.num("half_width_sd", q.quad.half_width_sd);
  q.quad.panels = s.get<int>("panels", q.quad.panels);
  q.quad.tail_tol = s.num("tail_tol", q.quad.tail_tol);
  q.scan_points = s.get<int>("scan_points", q.scan_points);
  if (s.has("scan_half_width")) q.scan_half_width = s.num("scan_half_width");
  if (s.has("refine")) {
    const auto r = s.get<std::string>("refine");
    if (r == "none") q.refine = SupSpec::Refine::None;
    else if (r == "interpolated") q.refine = SupSpec::Refine::Interpolated;
    else if (r == "exact") q.refine = SupSpec::Refine::Exact;
    else throw InvalidInput("'" + s.at("refine") + "' must be none, interpolated or exact");
  }
  q.prefer_analytic = s.get<bool>("prefer_analytic", q.prefer_analytic);
  if (q.quad.panels < 1) throw InvalidInput("'" + s.at("panels") + "' must be >= 1");
  s.finish();
  return q;
}

void apply_override(YAML::Node& root, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    throw InvalidInput("override '" + spec + "' must look like key.path=value");
  const std::string key = spec.substr(0, eq);
  YAML::Node value;
  try {
    value = YAML::Load(spec.substr(eq + 1));
  } catch (const YAML::Exception& e) {
    throw InvalidInput("override '" + spec + "': " + e.what());
  }
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string p; std::getline(ss, p, '.');) {
    if (p.empty()) throw InvalidInput("override '" + spec + "' has an empty key segment");
    parts.push_back(p);
  }
  // yaml-cpp nodes are handles; walk with fresh handles so assignment does not
  // overwrite the parent
  std::vector<YAML::Node> chain{root};
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    YAML::Node next = chain.back()[parts[i]];
    if (!next || !next.IsMap()) {
      chain.back()[parts[i]] = YAML::Node(YAML::NodeType::Map);
      next = chain.back()[parts[i]];
    }
    chain.push_back(next);
  }
  chain.back()[parts.back()] = value;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides,
                       const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = text.empty() ? YAML::Node(YAML::NodeType::Map) : YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw InvalidInput(std::string("config does not parse: ") + e.what());
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  for (const auto& o : overrides) apply_override(root, o);

  RunConfig cfg;
  Section s(root, "");
  if (s.has("model")) cfg.model = parse_model(s.child("model"));
  if (s.has("nu")) cfg.nu = parse_init(s.child("nu"), base_dir);
  if (s.has("nu_prime")) cfg.nu_prime = parse_init(s.child("nu_prime"), base_dir);
  if (s.has("nu_star")) cfg.nu_star = parse_init(s.child("nu_star"), base_dir);
  if (s.has("grid")) {
    Section g = s.child("grid");
    cfg.grid = GridSpec{g.num("lo"), g.num("hi"), g.get<int>("m")};
    g.finish();
    in_section("grid", [&] { cfg.grid->validate(); return 0; });
  }
  if (s.has("seed")) {
    const auto v = s.get<long long>("seed");
    if (v < 0) throw InvalidInput("'seed' must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(v);
  }
  cfg.n = s.get<int>("n", cfg.n);
  cfg.replications = s.get<int>("replications", cfg.replications);
  if (s.has("experiment")) {
    Section e = s.child("experiment");
    cfg.tv_floor = e.num("tv_floor", cfg.tv_floor);
    cfg.window_start = e.num("window_start", cfg.window_start);
    e.finish();
  }
  if (s.has("bound")) cfg.bound = parse_bound(s.child("bound"));
  if (s.has("quadrature")) cfg.sup = parse_quadrature(s.child("quadrature"));
  if (s.has("verify")) {
    Section v = s.child("verify");
    cfg.corpus.cases = v.get<int>("cases", cfg.corpus.cases);
    cfg.corpus.states = v.get<int>("states", cfg.corpus.states);
    cfg.corpus.symbols = v.get<int>("symbols", cfg.corpus.symbols);
    cfg.corpus.horizon = v.get<int>("horizon", cfg.corpus.horizon);
    cfg.mc_replications = v.get<int>("mc_replications", cfg.mc_replications);
    v.finish();
  }
  s.finish();
  if (cfg.seed) cfg.corpus.seed = *cfg.seed;

  YAML::Emitter em;
  em << root;
  cfg.resolved_yaml = std::string(em.c_str()) + "\n";
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), overrides, path.parent_path());
}

const ModelSpec& require_model(const RunConfig& cfg) {
  if (!cfg.model) throw InvalidInput("missing key 'model'");
  return *cfg.model;
}

std::uint64_t require_seed(const RunConfig& cfg) {
  if (!cfg.seed) throw InvalidInput("missing key 'seed' (set it in the config or pass --seed)");
  return *cfg.seed;
}

ResolvedBound resolve_bound(const RunConfig& cfg, const ModelSpec& model) {
  if (!cfg.bound) throw InvalidInput("missing key 'bound'");
  const BoundSection& b = *cfg.bound;
  ResolvedBound r;
  r.cfg.beta = b.beta;
  r.cfg.gamma = b.gamma;
  r.cfg.eta = b.eta;
  r.cfg.m0 = b.m0;
  r.cfg.m1 = b.m1;
  r.cfg.m2 = b.m2;
  r.cfg.k = b.k;
  r.cfg.d = certify_ld_set(model, b.d, b.m_probe);
  r.cfg.validate();
  if (b.c) {
    if (const auto* region = std::get_if<Region>(&*b.c)) {
      r.c = certify_ld_set(model, *region, b.m_probe);
    } else {
      const auto& search = std::get<LdSearch>(*b.c);
      r.c = find_ld_set_for_eta(model, b.eta, b.k, search.probes, cfg.sup, b.m_probe, search.max_radius);
    }
  }
  return r;
}

ExperimentConfig experiment_config(const RunConfig& cfg) {
  ExperimentConfig e(require_model(cfg));
  if (!cfg.nu) throw InvalidInput("missing key 'nu'");
  if (!cfg.nu_prime) throw InvalidInput("missing key 'nu_prime'");
  e.nu = *cfg.nu;
  e.nu_prime = *cfg.nu_prime;
  e.nu_star = cfg.nu_star;
  e.n = cfg.n;
  e.replications = cfg.replications;
  e.seed = require_seed(cfg);
  e.grid = cfg.grid;
  if (cfg.bound) {
    auto rb = resolve_bound(cfg, e.model);
    e.bound = rb.cfg;
    e.bound_c = rb.c;
  }
  e.sup = cfg.sup;
  e.tv_floor = cfg.tv_floor;
  e.window_start = cfg.window_start;
  return e;
}

}  // namespace hmmstab
