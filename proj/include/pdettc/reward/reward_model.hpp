#pragma once

#include "pdettc/euler/state.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pdettc::reward {

struct RewardScore {
  double value = 0.0;
  std::string model_id;
};

enum class RewardKind { ArmMass, ArmMomentumX, ArmMomentumY, ArmEnergy, Prm, OracleMse };

std::string_view reward_name(RewardKind k);
RewardKind parse_reward(std::string_view name);

/// Scores a transition (current, candidate next); higher is better.
/// std::nullopt marks an undefined reward that selection must skip.
class RewardModel {
 public:
  virtual ~RewardModel() = default;
  virtual std::string id() const = 0;
  virtual std::optional<double> score(const euler::Snapshot& current,
                                      const euler::Snapshot& candidate) const = 0;
  /// Scores every candidate; parallel over candidates when jobs > 1.
  virtual std::vector<std::optional<double>> score_all(
      const euler::Snapshot& current, const std::vector<euler::Snapshot>& candidates,
      int jobs = 1) const;
};

}  // namespace pdettc::reward
