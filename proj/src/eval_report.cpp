#include "pdettc/metrics/report.hpp"

#include "pdettc/io/json_types.hpp"
#include "pdettc/metrics/conservation.hpp"
#include "pdettc/metrics/error.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <tuple>

namespace pdettc::metrics {

namespace {

using PairKey = std::tuple<std::string, int, std::uint64_t, bool>;

PairKey pair_key(const ttc::RolloutRecord& r) {
  return {r.reward_id, r.ic_index, r.config.seed, r.config.independent_streams};
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

}  // namespace

EvalReport evaluate_records(const std::vector<ttc::RolloutRecord>& records,
                            const std::vector<const euler::Trajectory*>& truth,
                            const euler::Normalization& norm, const std::string& dataset,
                            const std::string& model, double gamma) {
  EvalReport rep;
  rep.dataset = dataset;
  rep.normalization = norm;

  auto truth_of = [&](const ttc::RolloutRecord& r) -> const euler::Trajectory& {
    if (r.ic_index < 0 || r.ic_index >= static_cast<int>(truth.size()) || !truth[r.ic_index])
      throw ConfigError("record refers to an unknown IC index " + std::to_string(r.ic_index));
    return *truth[r.ic_index];
  };

  // Per-step MSE of every complete record.
  std::vector<std::vector<double>> errors(records.size());
  std::map<PairKey, std::size_t> baseline;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    if (!r.complete()) continue;
    const auto& gt = truth_of(r);
    if (static_cast<int>(gt.snapshots.size()) <= r.config.steps)
      throw ConfigError("reference trajectory is shorter than the rollout");
    for (int t = 0; t < r.config.steps; ++t)
      errors[k].push_back(mse(r.chosen[t], gt.snapshots[t + 1], norm));
    if (r.config.branching == 1) baseline.emplace(pair_key(r), k);
  }

  struct Acc {
    GroupSummary s;
    std::vector<double> finals, ratios;
    bool all_paired = true;
    double abs_mass = 0.0, abs_energy = 0.0;
    long arm_count = 0;
  };
  std::map<std::tuple<std::string, int>, Acc> groups;

  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    auto& acc = groups[{r.reward_id, r.config.branching}];
    acc.s.model = model;
    acc.s.reward = r.reward_id;
    acc.s.B = r.config.branching;
    if (!r.complete()) {
      ++acc.s.n_failed;
      continue;
    }
    const auto base = baseline.find(pair_key(r));
    const std::vector<double>* base_err = base == baseline.end() ? nullptr : &errors[base->second];
    const auto trace = conservation_trace(r, gamma);
    const int T = r.config.steps;
    if (acc.s.mean_mse.empty()) acc.s.mean_mse.assign(static_cast<std::size_t>(T), 0.0);
    if (static_cast<int>(acc.s.mean_mse.size()) != T)
      throw ConfigError("records in one group have different rollout lengths");
    for (int t = 0; t < T; ++t) {
      EvalRow row;
      row.dataset = dataset;
      row.family = r.family;
      row.ic_seed = r.ic_seed;
      row.model = model;
      row.reward = r.reward_id;
      row.B = r.config.branching;
      row.t = t + 1;
      row.mse = errors[k][t];
      if (base_err && (*base_err)[t] > 0.0) row.sg = sample_gain(row.mse, (*base_err)[t]);
      row.mass_arm = trace[t].mass;
      row.mom_x_arm = trace[t].mom_x;
      row.mom_y_arm = trace[t].mom_y;
      row.energy_arm = trace[t].energy;
      acc.s.mean_mse[t] += row.mse;
      acc.abs_mass += std::abs(row.mass_arm);
      acc.abs_energy += std::abs(row.energy_arm);
      ++acc.arm_count;
      rep.rows.push_back(std::move(row));
    }
    acc.finals.push_back(errors[k].back());
    if (rep.rows.back().sg)
      acc.ratios.push_back(*rep.rows.back().sg);
    else
      acc.all_paired = false;
    ++acc.s.n_ics;
  }

  for (auto& [key, acc] : groups) {
    auto& s = acc.s;
    if (s.n_ics > 0) {
      for (double& m : s.mean_mse) m /= s.n_ics;
      double mean = 0.0;
      for (double f : acc.finals) mean += f;
      mean /= static_cast<double>(acc.finals.size());
      double var = 0.0;
      for (double f : acc.finals) var += (f - mean) * (f - mean);
      s.final_mse_mean = mean;
      s.final_mse_stdev = acc.finals.size() > 1 ? std::sqrt(var / (acc.finals.size() - 1)) : 0.0;
      if (acc.all_paired && !acc.ratios.empty()) s.aggregate_gain = aggregate_gain(acc.ratios);
      s.mean_abs_mass_arm = acc.abs_mass / static_cast<double>(acc.arm_count);
      s.mean_abs_energy_arm = acc.abs_energy / static_cast<double>(acc.arm_count);
    }
    rep.groups.push_back(std::move(s));
  }
  return rep;
}

void merge_into(EvalReport& into, const EvalReport& other) {
  if (into.rows.empty() && into.groups.empty()) {
    into = other;
    return;
  }
  into.rows.insert(into.rows.end(), other.rows.begin(), other.rows.end());
  into.groups.insert(into.groups.end(), other.groups.begin(), other.groups.end());
}

void write_csv(const std::filesystem::path& path, const std::vector<EvalRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "dataset,family,ic_seed,model,reward,B,t,mse,sg,mass_arm,mom_x_arm,mom_y_arm,energy_arm\n";
  for (const auto& r : rows)
    out << r.dataset << ',' << r.family << ',' << r.ic_seed << ',' << r.model << ',' << r.reward
        << ',' << r.B << ',' << r.t << ',' << fmt(r.mse) << ',' << fmt(r.sg) << ','
        << fmt(r.mass_arm) << ',' << fmt(r.mom_x_arm) << ',' << fmt(r.mom_y_arm) << ','
        << fmt(r.energy_arm) << '\n';
}

std::vector<EvalRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<EvalRow> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 13) throw ConfigError("malformed CSV row in " + path.string());
    EvalRow r;
    r.dataset = f[0];
    r.family = f[1];
    r.ic_seed = std::stoull(f[2]);
    r.model = f[3];
    r.reward = f[4];
    r.B = std::stoi(f[5]);
    r.t = std::stoi(f[6]);
    r.mse = std::stod(f[7]);
    r.sg = parse_opt(f[8]);
    r.mass_arm = std::stod(f[9]);
    r.mom_x_arm = parse_opt(f[10]);
    r.mom_y_arm = parse_opt(f[11]);
    r.energy_arm = std::stod(f[12]);
    rows.push_back(std::move(r));
  }
  return rows;
}

nlohmann::json summary_json(const EvalReport& report) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : report.groups) {
    groups.push_back({{"model", g.model},
                      {"reward", g.reward},
                      {"B", g.B},
                      {"n_ics", g.n_ics},
                      {"n_failed", g.n_failed},
                      {"final_mse_mean", g.final_mse_mean},
                      {"final_mse_stdev", g.final_mse_stdev},
                      {"aggregate_gain", g.aggregate_gain ? nlohmann::json(*g.aggregate_gain)
                                                          : nlohmann::json()},
                      {"mean_abs_mass_arm", g.mean_abs_mass_arm},
                      {"mean_abs_energy_arm", g.mean_abs_energy_arm},
                      {"mean_mse_per_t", g.mean_mse}});
  }
  return {{"dataset", report.dataset},
          {"mse_units", "per-channel z-score with the dataset training normalisation"},
          {"aggregate_gain_units", "percent: 100 * (1 - mean final-step MSE_B / MSE_1)"},
          {"normalization", report.normalization},
          {"groups", groups}};
}

}  // namespace pdettc::metrics
