#include "pdettc/ttc/rollout.hpp"

#include "pdettc/core/parallel.hpp"
#include "pdettc/io/container.hpp"
#include "pdettc/reward/arm.hpp"

#include <chrono>

namespace pdettc::ttc {

using euler::Snapshot;

void TTCConfig::validate() const {
  if (branching < 1) throw ConfigError("branching factor B must be >= 1");
  if (steps < 1) throw ConfigError("rollout steps T must be >= 1");
}

std::uint64_t TTCConfig::stream_seed() const {
  return independent_streams ? hash_combine(seed, 0xB000ULL + static_cast<std::uint64_t>(branching))
                             : seed;
}

RolloutRecord greedy_rollout(const model::Surrogate& surrogate, const reward::RewardModel& reward,
                             const Snapshot& u_start, const TTCConfig& cfg) {
  cfg.validate();
  RolloutRecord rec;
  rec.config = cfg;
  rec.reward_id = reward.id();
  rec.start = u_start;
  const std::uint64_t stream_seed = cfg.stream_seed();
  const Snapshot* current = &rec.start;
  rec.chosen.reserve(static_cast<std::size_t>(cfg.steps));
  for (int step = 0; step < cfg.steps; ++step) {
    const auto s0 = std::chrono::steady_clock::now();
    StepRecord sr;
    std::vector<Snapshot> candidates;
    try {
      candidates = model::sample_candidates(surrogate, *current, current->t, cfg.branching,
                                            stream_seed, step, cfg.jobs);
      sr.rewards = reward.score_all(*current, candidates, cfg.jobs);
    } catch (const std::exception& e) {
      rec.error = "step " + std::to_string(step + 1) + ": " + e.what();
      break;
    }
    int best = -1;
    for (int i = 0; i < cfg.branching; ++i)
      if (sr.rewards[i] && (best < 0 || *sr.rewards[i] > *sr.rewards[best])) best = i;
    sr.fallback = best < 0;
    sr.selected = sr.fallback ? 0 : best;
    Snapshot& pick = candidates[static_cast<std::size_t>(sr.selected)];
    sr.positivity_violation = !pick.positive();
    sr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count();
    rec.chosen.push_back(std::move(pick));
    rec.steps.push_back(std::move(sr));
    current = &rec.chosen.back();
  }
  return rec;
}

bool satisfies_argmax_contract(const RolloutRecord& record) {
  for (const auto& s : record.steps) {
    const int n = static_cast<int>(s.rewards.size());
    if (s.selected < 0 || s.selected >= n) return false;
    bool any = false;
    for (const auto& r : s.rewards) any = any || r.has_value();
    if (!any) {
      if (s.selected != 0 || !s.fallback) return false;
      continue;
    }
    const auto& sel = s.rewards[static_cast<std::size_t>(s.selected)];
    if (!sel || s.fallback) return false;
    for (int i = 0; i < n; ++i) {
      const auto& r = s.rewards[static_cast<std::size_t>(i)];
      if (!r) continue;
      if (*r > *sel) return false;
      if (i < s.selected && *r == *sel) return false;
    }
  }
  return true;
}

RewardFactory make_reward_factory(reward::RewardKind kind, const euler::Normalization& norm,
                                  const reward::ProcessRewardModel* prm, double gamma) {
  using reward::RewardKind;
  switch (kind) {
    case RewardKind::ArmMass:
      return [](const euler::Trajectory&) { return std::make_unique<reward::MassReward>(); };
    case RewardKind::ArmMomentumX:
    case RewardKind::ArmMomentumY: {
      const auto c = kind == RewardKind::ArmMomentumX ? reward::Component::X : reward::Component::Y;
      return [c](const euler::Trajectory&) { return std::make_unique<reward::MomentumReward>(c); };
    }
    case RewardKind::ArmEnergy:
      return [gamma](const euler::Trajectory&) {
        return std::make_unique<reward::EnergyReward>(gamma);
      };
    case RewardKind::Prm:
      if (!prm) throw ConfigError("the prm reward needs a trained PRM checkpoint");
      return [prm](const euler::Trajectory&) { return std::make_unique<reward::PrmReward>(*prm); };
    case RewardKind::OracleMse:
      return [norm](const euler::Trajectory& truth) {
        return std::make_unique<reward::OracleMseReward>(truth, norm);
      };
  }
  throw ConfigError("unhandled reward kind");
}

std::vector<RolloutRecord> rollout_sweep(const model::Surrogate& surrogate,
                                         const RewardFactory& make_reward,
                                         const std::vector<const euler::Trajectory*>& test_ics,
                                         const std::vector<int>& b_list,
                                         const std::vector<std::uint64_t>& seeds,
                                         const SweepOptions& options) {
  if (b_list.empty()) throw ConfigError("rollout_sweep needs a non-empty B list");
  if (seeds.empty()) throw ConfigError("rollout_sweep needs at least one seed");
  struct Job {
    std::size_t ic;
    std::uint64_t seed;
    int b;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < test_ics.size(); ++i)
    for (auto s : seeds)
      for (int b : b_list) jobs.push_back({i, s, b});
  std::vector<RolloutRecord> out(jobs.size());
  // Parallel over records; each rollout runs single-threaded inside.
  parallel_for(jobs.size(), options.jobs, [&](std::size_t k) {
    const auto& job = jobs[k];
    const auto& truth = *test_ics[job.ic];
    const auto reward = make_reward(truth);
    TTCConfig cfg;
    cfg.branching = job.b;
    cfg.reward = options.reward;
    cfg.seed = hash_combine(job.seed, truth.ic.seed);
    cfg.steps = options.steps;
    cfg.independent_streams = options.independent_streams;
    cfg.jobs = 1;
    out[k] = greedy_rollout(surrogate, *reward, truth.snapshots.front(), cfg);
    out[k].ic_index = static_cast<int>(job.ic);
    out[k].ic_seed = truth.ic.seed;
    out[k].family = std::string(euler::family_name(truth.ic.family));
  });
  return out;
}

nlohmann::json record_json(const RolloutRecord& r) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : r.steps) {
    nlohmann::json rewards = nlohmann::json::array();
    for (const auto& v : s.rewards) rewards.push_back(v ? nlohmann::json(*v) : nlohmann::json());
    steps.push_back({{"rewards", rewards},
                     {"selected", s.selected},
                     {"fallback", s.fallback},
                     {"positivity_violation", s.positivity_violation},
                     {"seconds", s.seconds}});
  }
  return {{"B", r.config.branching},
          {"reward", reward::reward_name(r.config.reward)},
          {"reward_id", r.reward_id},
          {"seed", r.config.seed},
          {"T", r.config.steps},
          {"independent_streams", r.config.independent_streams},
          {"ic_index", r.ic_index},
          {"ic_seed", r.ic_seed},
          {"family", r.family},
          {"start_t", r.start.t},
          {"times", [&] {
             std::vector<double> t;
             for (const auto& c : r.chosen) t.push_back(c.t);
             return t;
           }()},
          {"steps", steps},
          {"error", r.error}};
}

void save_rollouts(const std::filesystem::path& path, const std::vector<RolloutRecord>& records,
                   const nlohmann::json& extra) {
  nlohmann::json h = extra;
  h["record_type"] = "ROLLOUT";
  h["channels"] = {"rho", "vx", "vy", "p"};
  h["layout"] = "record,snapshot(start,t=1..),channel,y,x";
  if (!records.empty()) h["grid"] = {{"nx", records.front().start.nx()}, {"ny", records.front().start.ny()}};
  nlohmann::json recs = nlohmann::json::array();
  std::vector<float> data;
  for (const auto& r : records) {
    recs.push_back(record_json(r));
    io::append_snapshot(data, r.start);
    for (const auto& c : r.chosen) io::append_snapshot(data, c);
  }
  h["records"] = std::move(recs);
  io::write_container(path, h, data, false);
}

std::vector<RolloutRecord> load_rollouts(const std::filesystem::path& path) {
  const auto c = io::read_container(path);
  if (c.header.value("record_type", "") != "ROLLOUT")
    throw ConfigError(path.string() + " is not a rollout store");
  std::vector<RolloutRecord> out;
  const auto& recs = c.header.at("records");
  if (recs.empty()) return out;
  const int nx = c.header.at("grid").at("nx"), ny = c.header.at("grid").at("ny");
  const std::size_t snap = static_cast<std::size_t>(nx) * ny * euler::kNumChannels;
  std::span<const float> all(c.data);
  std::size_t offset = 0;
  for (const auto& j : recs) {
    RolloutRecord r;
    r.config.branching = j.at("B");
    r.config.reward = reward::parse_reward(j.at("reward").get<std::string>());
    r.config.seed = j.at("seed");
    r.config.steps = j.at("T");
    r.config.independent_streams = j.at("independent_streams");
    r.reward_id = j.at("reward_id");
    r.ic_index = j.at("ic_index");
    r.ic_seed = j.at("ic_seed");
    r.family = j.at("family");
    r.error = j.at("error");
    const auto times = j.at("times").get<std::vector<double>>();
    if (offset + (times.size() + 1) * snap > all.size())
      throw ConfigError("rollout store payload is truncated");
    r.start = io::read_snapshot(all.subspan(offset, snap), nx, ny, j.at("start_t"));
    offset += snap;
    for (double t : times) {
      r.chosen.push_back(io::read_snapshot(all.subspan(offset, snap), nx, ny, t));
      offset += snap;
    }
    for (const auto& s : j.at("steps")) {
      StepRecord sr;
      for (const auto& v : s.at("rewards"))
        sr.rewards.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
      sr.selected = s.at("selected");
      sr.fallback = s.at("fallback");
      sr.positivity_violation = s.at("positivity_violation");
      sr.seconds = s.at("seconds");
      r.steps.push_back(std::move(sr));
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace pdettc::ttc
