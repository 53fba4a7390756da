#include "pdettc/reward/arm.hpp"

#include "pdettc/core/parallel.hpp"
#include "pdettc/metrics/error.hpp"

#include <cmath>

namespace pdettc::reward {

std::string_view reward_name(RewardKind k) {
  switch (k) {
    case RewardKind::ArmMass: return "arm_mass";
    case RewardKind::ArmMomentumX: return "arm_momentum_x";
    case RewardKind::ArmMomentumY: return "arm_momentum_y";
    case RewardKind::ArmEnergy: return "arm_energy";
    case RewardKind::Prm: return "prm";
    case RewardKind::OracleMse: return "oracle_mse";
  }
  return "?";
}

RewardKind parse_reward(std::string_view name) {
  for (auto k : {RewardKind::ArmMass, RewardKind::ArmMomentumX, RewardKind::ArmMomentumY,
                 RewardKind::ArmEnergy, RewardKind::Prm, RewardKind::OracleMse})
    if (reward_name(k) == name) return k;
  throw ConfigError("unknown reward '" + std::string(name) + "'");
}

std::vector<std::optional<double>> RewardModel::score_all(
    const euler::Snapshot& current, const std::vector<euler::Snapshot>& candidates,
    int jobs) const {
  std::vector<std::optional<double>> out(candidates.size());
  parallel_for(candidates.size(), jobs,
               [&](std::size_t i) { out[i] = score(current, candidates[i]); });
  return out;
}

namespace {

void require_same_grid(const euler::Snapshot& a, const euler::Snapshot& b) {
  if (!euler::same_grid(a, b)) throw ConfigError("reward: snapshots are on different grids");
}

}  // namespace

RewardScore arm_mass(const euler::Snapshot& u_t, const euler::Snapshot& u_next) {
  require_same_grid(u_t, u_next);
  const double before = u_t.rho.sum();
  if (!(before > 0.0)) throw ConfigError("arm_mass: total density must be positive");
  return {-std::abs(u_next.rho.sum() - before) / before, "arm_mass"};
}

RewardScore arm_momentum(const euler::Snapshot& u_t, const euler::Snapshot& u_next,
                         Component component) {
  require_same_grid(u_t, u_next);
  const bool x = component == Component::X;
  const double before = (u_t.rho * (x ? u_t.vx : u_t.vy)).sum();
  const double after = (u_next.rho * (x ? u_next.vx : u_next.vy)).sum();
  const double eps = 1e-12 * static_cast<double>(u_t.rho.size());
  if (!(std::abs(before) > eps))
    throw UndefinedRewardError("arm_momentum: net momentum is numerically zero");
  return {-std::abs(after - before) / std::abs(before), x ? "arm_momentum_x" : "arm_momentum_y"};
}

RewardScore arm_energy(const euler::Snapshot& u_t, const euler::Snapshot& u_next, double gamma) {
  require_same_grid(u_t, u_next);
  const double before = euler::total_energy_density(u_t.rho, u_t.vx, u_t.vy, u_t.p, gamma).sum();
  const double after =
      euler::total_energy_density(u_next.rho, u_next.vx, u_next.vy, u_next.p, gamma).sum();
  if (!(before > 0.0)) throw ConfigError("arm_energy: total energy must be positive");
  return {-std::abs(after - before) / before, "arm_energy"};
}

std::optional<double> MassReward::score(const euler::Snapshot& cur,
                                        const euler::Snapshot& cand) const {
  return arm_mass(cur, cand).value;
}

std::optional<double> MomentumReward::score(const euler::Snapshot& cur,
                                            const euler::Snapshot& cand) const {
  try {
    return arm_momentum(cur, cand, component_).value;
  } catch (const UndefinedRewardError&) {
    return std::nullopt;
  }
}

std::optional<double> EnergyReward::score(const euler::Snapshot& cur,
                                          const euler::Snapshot& cand) const {
  return arm_energy(cur, cand, gamma_).value;
}

std::optional<double> OracleMseReward::score(const euler::Snapshot&,
                                             const euler::Snapshot& cand) const {
  const auto& times = truth_->times;
  for (std::size_t k = 0; k < times.size(); ++k)
    if (std::abs(times[k] - cand.t) < 1e-9) return -metrics::mse(cand, truth_->snapshots[k], norm_);
  return std::nullopt;
}

}  // namespace pdettc::reward
