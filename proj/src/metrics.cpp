#include "pdettc/metrics/error.hpp"
#include "pdettc/metrics/conservation.hpp"

#include "pdettc/reward/arm.hpp"
#include "pdettc/ttc/rollout.hpp"

#include <numeric>

namespace pdettc::metrics {

double mse(const euler::Snapshot& a, const euler::Snapshot& b, const euler::Normalization& norm) {
  if (!euler::same_grid(a, b)) throw ConfigError("mse: snapshots are on different grids");
  double total = 0.0;
  for (int c = 0; c < euler::kNumChannels; ++c)
    total += ((a.channel(c) - b.channel(c)) / norm.stdev[c]).square().sum();
  return total / (static_cast<double>(a.rho.size()) * euler::kNumChannels);
}

double sample_gain(double mse_b, double mse_1) {
  if (!(mse_1 > 0.0)) throw ConfigError("sample_gain: baseline MSE must be positive");
  return mse_b / mse_1;
}

double aggregate_gain(std::span<const double> ratios) {
  if (ratios.empty()) throw ConfigError("aggregate_gain: empty ratio list");
  const double mean = std::accumulate(ratios.begin(), ratios.end(), 0.0) / ratios.size();
  return 100.0 * (1.0 - mean);
}

std::vector<ConservationStep> conservation_trace(const euler::Snapshot& start,
                                                 const std::vector<euler::Snapshot>& chosen,
                                                 double gamma) {
  std::vector<ConservationStep> trace;
  trace.reserve(chosen.size());
  const euler::Snapshot* prev = &start;
  for (const auto& next : chosen) {
    ConservationStep s;
    s.mass = reward::arm_mass(*prev, next).value;
    s.energy = reward::arm_energy(*prev, next, gamma).value;
    try {
      s.mom_x = reward::arm_momentum(*prev, next, reward::Component::X).value;
    } catch (const UndefinedRewardError&) {
    }
    try {
      s.mom_y = reward::arm_momentum(*prev, next, reward::Component::Y).value;
    } catch (const UndefinedRewardError&) {
    }
    trace.push_back(s);
    prev = &next;
  }
  return trace;
}

std::vector<ConservationStep> conservation_trace(const ttc::RolloutRecord& record, double gamma) {
  return conservation_trace(record.start, record.chosen, gamma);
}

}  // namespace pdettc::metrics
