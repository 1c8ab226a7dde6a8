#include "hmmstab/trajectory.hpp"

#include <sstream>

#include "hmmstab/csv.hpp"
#include "hmmstab/error.hpp"

namespace hmmstab {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double parse_number(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidInput(where + ": not a number: '" + s + "'");
  }
}
}  // namespace

std::string describe(const ModelParams& params) {
  std::ostringstream os;
  os.precision(17);
  std::visit(overloaded{
                 [&](const FiniteStateParams& p) { os << "finite(m=" << p.transition.size() << ")"; },
                 [&](const LgssmParams& p) {
                   os << "lgssm(phi=" << p.phi << ",sigma=" << p.sigma << ",beta=" << p.beta
                      << ",h0=" << p.h0 << ")";
                 },
                 [&](const TobitParams& p) {
                   os << "tobit(phi=" << p.phi << ",sigma=" << p.sigma << ",beta=" << p.beta << ")";
                 },
                 [&](const NlssmParams& p) {
                   os << "nlssm(";
                   std::visit(overloaded{
                                  [&](const LinearShrink& f) { os << "linear_shrink(delta=" << f.delta << ")"; },
                                  [&](const TanhDrift& f) {
                                    os << "tanh(delta=" << f.delta << ",kappa=" << f.kappa << ")";
                                  },
                              },
                              p.drift_form);
                   os << ",sigma0=" << p.sigma0 << ",beta=" << p.beta << ")";
                 },
                 [&](const StochVolParams& p) {
                   os << "sv(phi=" << p.phi << ",sigma=" << p.sigma << ",beta=" << p.beta << ")";
                 },
             },
             params);
  return os.str();
}

Trajectory simulate(const ModelSpec& model, int n, const InitialDistribution& init,
                    std::uint64_t seed, std::uint64_t replication, const StateSpace* space) {
  if (n < 0) throw InvalidInput("simulate: n must be >= 0");
  const ModelSpec gen = model.generator();
  Trajectory traj;
  traj.seed = seed;
  traj.replication = replication;
  traj.generator = describe(gen.params());
  std::vector<double> xs, ys;
  xs.reserve(n + 1);
  ys.reserve(n + 1);

  Stream first(seed, replication, 0);
  double x = sample_initial(init, first, space);
  xs.push_back(x);
  ys.push_back(observation_from_noise(gen, x, draw_noise(first)));
  for (int k = 1; k <= n; ++k) {
    Stream rng(seed, replication, static_cast<std::uint64_t>(k));
    const auto [x_next, y] = sample_step(gen, x, rng);
    x = x_next;
    xs.push_back(x);
    ys.push_back(y);
  }
  traj.hidden = std::move(xs);
  traj.obs = std::move(ys);
  return traj;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          bool include_hidden) {
  CsvWriter csv(path, {"step", "x", "y"});
  for (std::size_t k = 0; k < traj.obs.size(); ++k) {
    csv.field(k);
    if (include_hidden && traj.hidden)
      csv.field((*traj.hidden)[k]);
    else
      csv.empty();
    csv.field(traj.obs[k]);
    csv.end_row();
  }
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  const auto rows = read_csv(path);
  if (rows.empty() || rows.front() != std::vector<std::string>{"step", "x", "y"})
    throw InvalidInput(path.string() + ": expected header step,x,y");
  Trajectory traj;
  std::vector<double> xs;
  bool all_hidden = true;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = path.string() + " row " + std::to_string(r + 1);
    if (row.size() != 3) throw InvalidInput(where + ": expected 3 fields");
    if (parse_number(row[0], where) != static_cast<double>(r - 1))
      throw InvalidInput(where + ": steps must be 0,1,2,...");
    if (row[1].empty())
      all_hidden = false;
    else
      xs.push_back(parse_number(row[1], where));
    traj.obs.push_back(parse_number(row[2], where));
  }
  if (traj.obs.empty()) throw InvalidInput(path.string() + ": no observations");
  if (all_hidden && xs.size() == traj.obs.size())
    traj.hidden = std::move(xs);
  else if (!xs.empty())
    throw InvalidInput(path.string() + ": x column must be all present or all empty");
  return traj;
}

}  // namespace hmmstab
