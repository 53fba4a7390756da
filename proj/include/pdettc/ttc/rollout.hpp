#pragma once

#include "pdettc/model/surrogate.hpp"
#include "pdettc/reward/prm.hpp"
#include "pdettc/reward/reward_model.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pdettc::ttc {

struct TTCConfig {
  int branching = 1;
  reward::RewardKind reward = reward::RewardKind::ArmMass;
  std::uint64_t seed = 0;
  int steps = 20;
  /// Derive candidate streams from (seed, B) instead of sharing them across B.
  bool independent_streams = false;
  int jobs = 1;

  void validate() const;
  /// Seed that keys the candidate streams of a rollout.
  std::uint64_t stream_seed() const;
};

struct StepRecord {
  std::vector<std::optional<double>> rewards;  // one per candidate
  int selected = 0;
  /// Every reward was undefined and candidate 0 was taken.
  bool fallback = false;
  /// The chosen snapshot has non-positive density or pressure somewhere.
  bool positivity_violation = false;
  double seconds = 0.0;
};

struct RolloutRecord {
  TTCConfig config;
  std::string reward_id;
  int ic_index = -1;
  std::uint64_t ic_seed = 0;
  std::string family;
  euler::Snapshot start;
  std::vector<euler::Snapshot> chosen;  // t = 1..T
  std::vector<StepRecord> steps;
  /// Empty on success; otherwise why the rollout stopped early.
  std::string error;

  bool complete() const { return error.empty() && static_cast<int>(chosen.size()) == config.steps; }
};

/// Greedy best-of-B rollout: at each step draw B candidates, score each
/// against the current state and keep the argmax (lowest index on ties).
/// A surrogate failure ends the rollout with a partial record.
RolloutRecord greedy_rollout(const model::Surrogate& surrogate, const reward::RewardModel& reward,
                             const euler::Snapshot& u_start, const TTCConfig& cfg);

/// True when each step's selection attains the maximum defined reward and no
/// lower-index candidate ties it (or falls back to 0 when none is defined).
bool satisfies_argmax_contract(const RolloutRecord& record);

/// Builds the reward for one test trajectory (the oracle needs its truth).
using RewardFactory =
    std::function<std::unique_ptr<reward::RewardModel>(const euler::Trajectory& truth)>;

/// Standard factory for a reward kind. `prm` is required for RewardKind::Prm
/// and must outlive the returned rewards; `norm` is used by the oracle.
RewardFactory make_reward_factory(reward::RewardKind kind, const euler::Normalization& norm,
                                  const reward::ProcessRewardModel* prm = nullptr,
                                  double gamma = euler::kDefaultGamma);

struct SweepOptions {
  reward::RewardKind reward = reward::RewardKind::ArmMass;
  int steps = 20;
  bool independent_streams = false;
  int jobs = 1;
};

/// Records ordered by (IC, seed, B). Per (IC, seed) the stream seed is
/// hash(seed, ic seed), shared by every B unless independent_streams.
std::vector<RolloutRecord> rollout_sweep(const model::Surrogate& surrogate,
                                         const RewardFactory& make_reward,
                                         const std::vector<const euler::Trajectory*>& test_ics,
                                         const std::vector<int>& b_list,
                                         const std::vector<std::uint64_t>& seeds,
                                         const SweepOptions& options);

nlohmann::json record_json(const RolloutRecord& r);

/// `path` holds the chosen snapshots (start then t = 1..T per record) as a
/// field container with record_type "ROLLOUT"; metadata sits in its header.
void save_rollouts(const std::filesystem::path& path, const std::vector<RolloutRecord>& records,
                   const nlohmann::json& extra = nlohmann::json::object());
std::vector<RolloutRecord> load_rollouts(const std::filesystem::path& path);

}  // namespace pdettc::ttc
