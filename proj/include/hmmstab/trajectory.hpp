#ifndef HMMSTAB_TRAJECTORY_HPP_
#define HMMSTAB_TRAJECTORY_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hmmstab/model.hpp"
#include "hmmstab/state_space.hpp"

namespace hmmstab {

struct Trajectory {
  std::optional<std::vector<double>> hidden;  // x_0..x_n, absent when withheld
  std::vector<double> obs;                    // y_0..y_n
  std::uint64_t seed = 0;
  std::uint64_t replication = 0;
  std::string generator;  // description of the generating model

  int horizon() const { return static_cast<int>(obs.size()) - 1; }
};

// Path of length n+1 under the generating model, started from init. Step k
// draws from Stream(seed, replication, k).
Trajectory simulate(const ModelSpec& model, int n, const InitialDistribution& init,
                    std::uint64_t seed, std::uint64_t replication = 0,
                    const StateSpace* space = nullptr);

std::string describe(const ModelParams& params);

// CSV with header step,x,y; x is empty when hidden states are withheld.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          bool include_hidden = true);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

}  // namespace hmmstab

#endif  // HMMSTAB_TRAJECTORY_HPP_
