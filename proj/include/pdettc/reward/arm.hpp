#pragma once

#include "pdettc/euler/dataset.hpp"
#include "pdettc/reward/reward_model.hpp"

namespace pdettc::reward {

enum class Component { X, Y };

/// -|sum rho' - sum rho| / sum rho. Throws ConfigError if sum rho <= 0.
RewardScore arm_mass(const euler::Snapshot& u_t, const euler::Snapshot& u_next);

/// -|sum rho' v' - sum rho v| / |sum rho v| for one velocity component.
/// Throws UndefinedRewardError when |sum rho v| <= 1e-12 * cells.
RewardScore arm_momentum(const euler::Snapshot& u_t, const euler::Snapshot& u_next,
                         Component component);

/// Same form on E = p/(gamma-1) + rho |v|^2 / 2. Throws ConfigError if
/// sum E <= 0.
RewardScore arm_energy(const euler::Snapshot& u_t, const euler::Snapshot& u_next,
                       double gamma = euler::kDefaultGamma);

class MassReward final : public RewardModel {
 public:
  std::string id() const override { return "arm_mass"; }
  std::optional<double> score(const euler::Snapshot& cur,
                              const euler::Snapshot& cand) const override;
};

class MomentumReward final : public RewardModel {
 public:
  explicit MomentumReward(Component c) : component_(c) {}
  std::string id() const override {
    return component_ == Component::X ? "arm_momentum_x" : "arm_momentum_y";
  }
  std::optional<double> score(const euler::Snapshot& cur,
                              const euler::Snapshot& cand) const override;

 private:
  Component component_;
};

class EnergyReward final : public RewardModel {
 public:
  explicit EnergyReward(double gamma = euler::kDefaultGamma) : gamma_(gamma) {}
  std::string id() const override { return "arm_energy"; }
  std::optional<double> score(const euler::Snapshot& cur,
                              const euler::Snapshot& cand) const override;

 private:
  double gamma_;
};

/// Diagnostic upper bound: -MSE against the ground-truth snapshot at the
/// candidate's time stamp.
class OracleMseReward final : public RewardModel {
 public:
  OracleMseReward(const euler::Trajectory& truth, const euler::Normalization& norm)
      : truth_(&truth), norm_(norm) {}
  std::string id() const override { return "oracle_mse"; }
  std::optional<double> score(const euler::Snapshot& cur,
                              const euler::Snapshot& cand) const override;

 private:
  const euler::Trajectory* truth_;
  euler::Normalization norm_;
};

}  // namespace pdettc::reward
