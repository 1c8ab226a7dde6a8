#ifndef HMMSTAB_CONFIG_HPP_
#define HMMSTAB_CONFIG_HPP_

// YAML run configuration. See configs/README.md for the grammar. Unknown keys
// are rejected with their dotted path; `key.path=value` overrides are applied
// to the document before it is read.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hmmstab/bounds.hpp"
#include "hmmstab/experiments.hpp"
#include "hmmstab/model.hpp"
#include "hmmstab/state_space.hpp"
#include "hmmstab/verify.hpp"

namespace hmmstab {

struct LdSearch {
  std::vector<double> probes;
  std::optional<double> max_radius;
};

struct BoundSection {
  double beta = 0.25;
  double gamma = 0.5;
  double eta = 0.1;
  double m0 = 1.0;
  double m1 = 1.0;
  double m2 = 1.0;
  ObservationSet k;
  Region d;
  std::optional<std::variant<Region, LdSearch>> c;
  int m_probe = 64;
};

struct RunConfig {
  std::optional<ModelSpec> model;
  std::optional<InitialDistribution> nu;
  std::optional<InitialDistribution> nu_prime;
  std::optional<InitialDistribution> nu_star;
  std::optional<GridSpec> grid;
  std::optional<std::uint64_t> seed;
  int n = 200;
  int replications = 20;
  double tv_floor = 1e-14;
  double window_start = 0.5;
  std::optional<BoundSection> bound;
  SupSpec sup;
  CorpusSpec corpus;
  int mc_replications = 10000;
  std::string resolved_yaml;  // the document after overrides, re-emitted
};

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {},
                       const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<std::string>& overrides = {});

const ModelSpec& require_model(const RunConfig& cfg);
std::uint64_t require_seed(const RunConfig& cfg);

// Certifies D and finds or certifies C.
struct ResolvedBound {
  BoundConfig cfg;
  std::optional<LDSet> c;
};
ResolvedBound resolve_bound(const RunConfig& cfg, const ModelSpec& model);

ExperimentConfig experiment_config(const RunConfig& cfg);

}  // namespace hmmstab

#endif  // HMMSTAB_CONFIG_HPP_
