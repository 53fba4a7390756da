#pragma once

#include "pdettc/euler/dataset.hpp"
#include "pdettc/ttc/rollout.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pdettc::metrics {

/// One CSV row: one IC x timestep x B x reward x model.
struct EvalRow {
  std::string dataset;
  std::string family;
  std::uint64_t ic_seed = 0;
  std::string model;
  std::string reward;
  int B = 1;
  int t = 0;
  double mse = 0.0;
  std::optional<double> sg;  // empty without a paired B = 1 record
  double mass_arm = 0.0;
  std::optional<double> mom_x_arm;
  std::optional<double> mom_y_arm;
  double energy_arm = 0.0;
};

struct GroupSummary {
  std::string model;
  std::string reward;
  int B = 1;
  int n_ics = 0;
  int n_failed = 0;
  std::vector<double> mean_mse;  // per timestep, t = 1..T
  double final_mse_mean = 0.0;
  double final_mse_stdev = 0.0;
  /// 100 * (1 - mean final-step SG); empty if any record lacks a B = 1 pair.
  std::optional<double> aggregate_gain;
  double mean_abs_mass_arm = 0.0;
  double mean_abs_energy_arm = 0.0;
};

struct EvalReport {
  std::string dataset;
  euler::Normalization normalization;
  std::vector<EvalRow> rows;
  std::vector<GroupSummary> groups;
};

/// `truth` maps a record's ic_index to its reference trajectory. Records are
/// paired with the B = 1 record of the same (model, reward, IC, seed).
/// Incomplete records are counted as failures and excluded.
EvalReport evaluate_records(const std::vector<ttc::RolloutRecord>& records,
                            const std::vector<const euler::Trajectory*>& truth,
                            const euler::Normalization& norm, const std::string& dataset,
                            const std::string& model, double gamma = euler::kDefaultGamma);

/// Concatenates reports over the same dataset and recomputes nothing.
void merge_into(EvalReport& into, const EvalReport& other);

void write_csv(const std::filesystem::path& path, const std::vector<EvalRow>& rows);
std::vector<EvalRow> read_csv(const std::filesystem::path& path);
nlohmann::json summary_json(const EvalReport& report);

}  // namespace pdettc::metrics
