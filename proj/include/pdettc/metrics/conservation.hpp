#pragma once

#include "pdettc/euler/state.hpp"

#include <optional>
#include <vector>

namespace pdettc::ttc {
struct RolloutRecord;
}

namespace pdettc::metrics {

/// ARM values for one consecutive pair; momentum is empty where undefined.
struct ConservationStep {
  double mass = 0.0;
  std::optional<double> mom_x;
  std::optional<double> mom_y;
  double energy = 0.0;
};

/// One entry per element of `chosen`, each scored against its predecessor.
std::vector<ConservationStep> conservation_trace(const euler::Snapshot& start,
                                                 const std::vector<euler::Snapshot>& chosen,
                                                 double gamma = euler::kDefaultGamma);
std::vector<ConservationStep> conservation_trace(const ttc::RolloutRecord& record,
                                                 double gamma = euler::kDefaultGamma);

}  // namespace pdettc::metrics
