#include "pdettc/euler/dataset.hpp"

#include "pdettc/core/parallel.hpp"
#include "pdettc/core/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pdettc::euler {

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Snapshot Normalization::normalize(const Snapshot& u) const {
  Snapshot z = u;
  for (int c = 0; c < kNumChannels; ++c) z.channel(c) = (u.channel(c) - mean[c]) / stdev[c];
  return z;
}

Snapshot Normalization::denormalize(const Snapshot& z) const {
  Snapshot u = z;
  for (int c = 0; c < kNumChannels; ++c) u.channel(c) = z.channel(c) * stdev[c] + mean[c];
  return u;
}

Normalization compute_normalization(const std::vector<Trajectory>& trajectories,
                                    const std::vector<int>& indices) {
  Normalization norm;
  std::array<double, kNumChannels> sum{}, sum_sq{};
  double count = 0.0;
  for (int idx : indices) {
    for (const auto& snap : trajectories[idx].snapshots) {
      for (int c = 0; c < kNumChannels; ++c) {
        sum[c] += snap.channel(c).sum();
        sum_sq[c] += snap.channel(c).square().sum();
      }
      count += static_cast<double>(snap.rho.size());
    }
  }
  if (count == 0.0) return norm;
  for (int c = 0; c < kNumChannels; ++c) {
    norm.mean[c] = sum[c] / count;
    const double var = std::max(0.0, sum_sq[c] / count - norm.mean[c] * norm.mean[c]);
    const double sd = std::sqrt(var);
    norm.stdev[c] = sd > 1e-8 ? sd : 1.0;
  }
  return norm;
}

std::vector<int> Dataset::indices(Split s) const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (splits[i] == s) out.push_back(i);
  return out;
}

std::uint64_t trajectory_seed(std::uint64_t seed, ICFamily family, int index) {
  return hash_combine(hash_combine(seed, static_cast<std::uint64_t>(family)),
                      static_cast<std::uint64_t>(index));
}

Dataset generate_dataset(const std::vector<ICFamily>& families, int n_per_family,
                         const GridSpec& grid, std::uint64_t seed,
                         const SplitFractions& fractions, const SolverOptions& options,
                         int jobs) {
  grid.validate();
  if (n_per_family < 0) throw ConfigError("n_per_family must be non-negative");
  const double total = fractions.train + fractions.val + fractions.test;
  if (fractions.train < 0 || fractions.val < 0 || fractions.test < 0 ||
      std::abs(total - 1.0) > 1e-9)
    throw ConfigError("split fractions must be non-negative and sum to 1");

  Dataset ds;
  ds.grid = grid;
  ds.gamma = options.gamma;
  ds.seed = seed;
  ds.families = families;

  std::vector<ICSpec> specs;
  for (ICFamily family : families) {
    const int n_train = static_cast<int>(std::lround(n_per_family * fractions.train));
    const int n_val = std::min(n_per_family - n_train,
                               static_cast<int>(std::lround(n_per_family * fractions.val)));
    std::vector<Split> assignment(n_per_family, Split::Test);
    std::fill_n(assignment.begin(), n_train, Split::Train);
    std::fill_n(assignment.begin() + n_train, n_val, Split::Val);
    RngStream shuffle_rng(seed, 0x5EED0000ULL + static_cast<std::uint64_t>(family));
    std::shuffle(assignment.begin(), assignment.end(), shuffle_rng);
    for (int i = 0; i < n_per_family; ++i) {
      specs.push_back(sample_ic_spec(family, trajectory_seed(seed, family, i), options.gamma));
      ds.splits.push_back(assignment[i]);
    }
  }

  ds.trajectories.resize(specs.size());
  parallel_for(specs.size(), jobs, [&](std::size_t i) {
    ds.trajectories[i] = solve_trajectory(specs[i], grid, options);
  });
  ds.normalization = compute_normalization(ds.trajectories, ds.indices(Split::Train));
  return ds;
}

}  // namespace pdettc::euler
