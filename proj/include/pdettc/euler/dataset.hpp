#pragma once

#include "pdettc/euler/solver.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace pdettc::euler {

enum class Split { Train, Val, Test };

std::string_view split_name(Split s);

/// Per-channel z-score statistics.
struct Normalization {
  std::array<double, kNumChannels> mean{0.0, 0.0, 0.0, 0.0};
  std::array<double, kNumChannels> stdev{1.0, 1.0, 1.0, 1.0};

  Snapshot normalize(const Snapshot& u) const;
  Snapshot denormalize(const Snapshot& z) const;
  bool operator==(const Normalization&) const = default;
};

/// Statistics over every cell of every snapshot of the listed trajectories.
/// Channels with (near) zero spread get unit stdev.
Normalization compute_normalization(const std::vector<Trajectory>& trajectories,
                                    const std::vector<int>& indices);

struct SplitFractions {
  double train = 0.75;
  double val = 0.125;
  double test = 0.125;
};

struct Dataset {
  GridSpec grid;
  double gamma = kDefaultGamma;
  std::uint64_t seed = 0;
  std::vector<ICFamily> families;
  std::vector<Trajectory> trajectories;
  std::vector<Split> splits;
  Normalization normalization;

  std::vector<int> indices(Split s) const;
  int size() const { return static_cast<int>(trajectories.size()); }
};

/// Seed of the i-th trajectory of `family` for a dataset seeded with `seed`.
std::uint64_t trajectory_seed(std::uint64_t seed, ICFamily family, int index);

/// Deterministic given the arguments (including across `jobs`). Each family
/// is split independently: round(n*train) train, round(n*val) val, the rest
/// test, after a seeded shuffle.
Dataset generate_dataset(const std::vector<ICFamily>& families, int n_per_family,
                         const GridSpec& grid, std::uint64_t seed,
                         const SplitFractions& fractions = {},
                         const SolverOptions& options = {}, int jobs = 1);

}  // namespace pdettc::euler
