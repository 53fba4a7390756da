#pragma once

#include "pdettc/euler/dataset.hpp"

#include <span>

namespace pdettc::metrics {

/// Mean over the four channels and all cells of the squared difference,
/// after z-scoring both snapshots with `norm`. Throws ConfigError on a grid
/// mismatch.
double mse(const euler::Snapshot& a, const euler::Snapshot& b,
           const euler::Normalization& norm = {});

/// mse_B / mse_1; below 1 means the B-rollout improved on the baseline.
double sample_gain(double mse_b, double mse_1);

/// 100 * (1 - mean(ratios)).
double aggregate_gain(std::span<const double> ratios);

}  // namespace pdettc::metrics
