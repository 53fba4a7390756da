#include "pdettc/reward/prm.hpp"

#include "pdettc/core/parallel.hpp"
#include "pdettc/io/container.hpp"
#include "pdettc/io/json_types.hpp"
#include "pdettc/metrics/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

namespace pdettc::reward {

using euler::Snapshot;

void PRMConfig::validate() const {
  backbone.validate();
  if (backbone.in_channels != 2 * (euler::kNumChannels + 1) || backbone.head != nn::Head::Scalar)
    throw ConfigError("PRM backbone needs 10 input channels and a scalar head");
  if (!(alpha >= 0.0)) throw ConfigError("PRM margin alpha must be non-negative");
  if (K < 2) throw ConfigError("PRM needs K >= 2 candidates per pair");
  if (!(lr > 0.0) || batch_size < 1 || epochs < 0) throw ConfigError("invalid PRM optimizer settings");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0))
    throw ConfigError("holdout_fraction must be in [0, 1)");
}

PRMConfig PRMConfig::matched(const model::ModelConfig& fm) {
  PRMConfig c;
  c.backbone = fm.vit;
  c.backbone.in_channels = 2 * (euler::kNumChannels + 1);
  c.backbone.out_channels = 1;
  c.backbone.head = nn::Head::Scalar;
  return c;
}

void warm_start_from_surrogate(ProcessRewardModel& prm, const model::Surrogate& surrogate) {
  const auto& a = prm.config().backbone;
  const auto& b = surrogate.config().vit;
  if (a.height != b.height || a.width != b.width || a.patch != b.patch ||
      a.embed_dim != b.embed_dim || a.depth != b.depth || a.heads != b.heads ||
      a.mlp_ratio != b.mlp_ratio || !surrogate.config().time_channel ||
      b.in_channels != euler::kNumChannels + 1)
    throw ConfigError("PRM backbone does not match the surrogate; cannot warm start");
  auto& dst = prm.net().params();
  const auto& src = surrogate.net().params();
  for (int id = 0; id < dst.size(); ++id) {
    const auto& name = dst[id].name;
    if (name.rfind("head.", 0) == 0) continue;
    const int j = src.find(name);
    if (j < 0) throw ConfigError("surrogate has no parameter '" + name + "'");
    const Matrix& v = src.value(j);
    if (name == "patch.w") {
      // Rows are channel-major; the first in_channels blocks hold the current state.
      dst[id].value.topRows(v.rows()) = v;
    } else {
      if (v.rows() != dst[id].value.rows() || v.cols() != dst[id].value.cols())
        throw ConfigError("shape mismatch for '" + name + "' in warm start");
      dst[id].value = v;
    }
  }
}

double triplet_loss(double r_min, double r_median, double r_max, double alpha) {
  return std::max(0.0, r_min - r_median + alpha) + std::max(0.0, r_median - r_max + alpha);
}

std::array<double, 3> triplet_loss_gradient(double r_min, double r_median, double r_max,
                                            double alpha) {
  std::array<double, 3> g{0.0, 0.0, 0.0};
  if (r_min - r_median + alpha > 0.0) {
    g[0] += 1.0;
    g[1] -= 1.0;
  }
  if (r_median - r_max + alpha > 0.0) {
    g[1] += 1.0;
    g[2] -= 1.0;
  }
  return g;
}

std::array<int, 3> triplet_ranks(const std::vector<double>& mse) {
  if (mse.empty()) throw ConfigError("triplet_ranks: no candidates");
  std::vector<int> rank(mse.size());
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](int a, int b) { return mse[a] < mse[b]; });
  return {rank.front(), rank[mse.size() / 2], rank.back()};
}

std::vector<TripletRecord> build_prm_triplets(const model::Surrogate& surrogate,
                                              const euler::Dataset& ds, int K, std::uint64_t seed,
                                              std::vector<int> trajectories, int jobs) {
  if (K < 2) throw ConfigError("build_prm_triplets: K must be >= 2");
  if (trajectories.empty()) trajectories = ds.indices(euler::Split::Train);
  const auto pairs = model::consecutive_pairs(ds, trajectories);
  std::vector<std::optional<TripletRecord>> slots(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t k) {
    const auto [traj_idx, t] = pairs[k];
    const auto& traj = ds.trajectories[traj_idx];
    const std::uint64_t pair_seed =
        hash_combine(hash_combine(seed, static_cast<std::uint64_t>(traj_idx)), 0x9E3);
    auto candidates = model::sample_candidates(surrogate, traj.snapshots[t], traj.times[t], K,
                                               pair_seed, t, 1);
    std::vector<double> err(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i)
      err[i] = metrics::mse(candidates[i], traj.snapshots[t + 1], ds.normalization);
    const auto [lo, mid, hi] = triplet_ranks(err);
    if (err[hi] - err[lo] <= 1e-14) return;
    TripletRecord r;
    r.trajectory = traj_idx;
    r.step = t;
    r.t_norm = traj.times[t];
    r.current = traj.snapshots[t];
    r.candidates = {candidates[lo], candidates[mid], candidates[hi]};
    r.mse = {err[lo], err[mid], err[hi]};
    slots[k] = std::move(r);
  });
  std::vector<TripletRecord> out;
  for (auto& s : slots)
    if (s) out.push_back(std::move(*s));
  return out;
}

ProcessRewardModel::ProcessRewardModel(const PRMConfig& cfg, const euler::Normalization& norm,
                                       std::uint64_t init_seed)
    : cfg_(cfg), norm_(norm) {
  cfg_.validate();
  net_ = nn::VisionTransformer(cfg_.backbone, init_seed);
}

Matrix ProcessRewardModel::encode(const Snapshot& current, const Snapshot& candidate) const {
  const auto& b = cfg_.backbone;
  if (current.ny() != b.height || current.nx() != b.width || !euler::same_grid(current, candidate))
    throw ConfigError("PRM input grid does not match the backbone image size");
  constexpr int C = euler::kNumChannels;
  const Eigen::Index cells = current.rho.size();
  Matrix img(2 * (C + 1), cells);
  const Snapshot* parts[2] = {&current, &candidate};
  for (int s = 0; s < 2; ++s) {
    for (int c = 0; c < C; ++c) {
      const Field& f = parts[s]->channel(c);
      img.row(s * (C + 1) + c) =
          ((Eigen::Map<const RowVector>(f.data(), cells).array() - norm_.mean[c]) / norm_.stdev[c])
              .matrix();
    }
    img.row(s * (C + 1) + C).setConstant(parts[s]->t);
  }
  return img;
}

double ProcessRewardModel::raw(const Snapshot& current, const Snapshot& candidate, nn::Mode mode,
                               RngStream* rng, nn::VisionTransformer::Tape* tape) const {
  const Matrix out = net_.forward(encode(current, candidate), mode, rng, tape);
  return out(0, 0);
}

double ProcessRewardModel::score(const Snapshot& current, const Snapshot& candidate) const {
  const double r = raw(current, candidate, nn::Mode::DeterministicInfer, nullptr);
  return cfg_.orientation == TripletOrientation::HigherIsBetter ? r : -r;
}

RewardScore prm_score(const ProcessRewardModel& prm, const Snapshot& current,
                      const Snapshot& candidate) {
  return {prm.score(current, candidate), "prm"};
}

namespace {

/// Candidate slots bound to (r_min, r_median, r_max).
std::array<int, 3> loss_slots(TripletOrientation o) {
  return o == TripletOrientation::HigherIsBetter ? std::array<int, 3>{2, 1, 0}
                                                 : std::array<int, 3>{0, 1, 2};
}

struct TripletEval {
  double loss = 0.0;
  bool correct = false;
};

TripletEval evaluate_triplet(const ProcessRewardModel& prm, const TripletRecord& r) {
  std::array<double, 3> raw;
  for (int s = 0; s < 3; ++s)
    raw[s] = prm.raw(r.current, r.candidates[s], nn::Mode::DeterministicInfer, nullptr);
  const auto slot = loss_slots(prm.config().orientation);
  TripletEval e;
  e.loss = triplet_loss(raw[slot[0]], raw[slot[1]], raw[slot[2]], prm.config().alpha);
  const double sign = prm.config().orientation == TripletOrientation::HigherIsBetter ? 1.0 : -1.0;
  e.correct = sign * raw[0] > sign * raw[2];
  return e;
}

std::vector<TripletEval> evaluate_all(const ProcessRewardModel& prm,
                                      const std::vector<TripletRecord>& triplets, int jobs) {
  std::vector<TripletEval> out(triplets.size());
  parallel_for(triplets.size(), jobs, [&](std::size_t k) { out[k] = evaluate_triplet(prm, triplets[k]); });
  return out;
}

double mean_loss(const std::vector<TripletEval>& e) {
  if (e.empty()) return 0.0;
  double s = 0.0;
  for (const auto& x : e) s += x.loss;
  return s / static_cast<double>(e.size());
}

double accuracy(const std::vector<TripletEval>& e) {
  if (e.empty()) return 0.0;
  return static_cast<double>(std::count_if(e.begin(), e.end(), [](const auto& x) { return x.correct; })) /
         static_cast<double>(e.size());
}

}  // namespace

double ranking_accuracy(const ProcessRewardModel& prm, const std::vector<TripletRecord>& triplets,
                        int jobs) {
  return accuracy(evaluate_all(prm, triplets, jobs));
}

double mean_triplet_loss(const ProcessRewardModel& prm,
                         const std::vector<TripletRecord>& triplets, int jobs) {
  return mean_loss(evaluate_all(prm, triplets, jobs));
}

PrmTrainReport train_prm(ProcessRewardModel& prm, const std::vector<TripletRecord>& triplets,
                         const PRMConfig& cfg) {
  cfg.validate();
  if (triplets.empty()) throw ConfigError("train_prm needs at least one triplet");
  prm.set_config(cfg);
  const auto t0 = std::chrono::steady_clock::now();

  // Hold out whole trajectories so held-out accuracy measures generalisation.
  std::vector<int> ids;
  for (const auto& r : triplets) ids.push_back(r.trajectory);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  RngStream split_rng(cfg.seed, 0x5E1D);
  std::shuffle(ids.begin(), ids.end(), split_rng);
  const auto n_hold = static_cast<std::size_t>(std::llround(cfg.holdout_fraction * ids.size()));
  const std::set<int> held(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(std::min(n_hold, ids.size() - 1)));
  std::vector<TripletRecord> train_set, held_set;
  for (const auto& r : triplets) (held.count(r.trajectory) ? held_set : train_set).push_back(r);

  PrmTrainReport report;
  report.n_train = static_cast<int>(train_set.size());
  report.n_heldout = static_cast<int>(held_set.size());
  const auto& monitor = held_set.empty() ? train_set : held_set;

  auto& store = prm.net().params();
  const auto init_train = evaluate_all(prm, train_set, cfg.jobs);
  report.init_loss = mean_loss(init_train);
  const auto init_held = evaluate_all(prm, monitor, cfg.jobs);
  report.init_accuracy = accuracy(init_held);
  report.best_accuracy = report.init_accuracy;
  double best_held_loss = mean_loss(init_held);
  std::vector<Matrix> best = store.values();

  const auto slot = loss_slots(cfg.orientation);
  const long per_epoch = (static_cast<long>(train_set.size()) + cfg.batch_size - 1) / cfg.batch_size;
  const long total = per_epoch * cfg.epochs;
  long step = 0;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto e0 = std::chrono::steady_clock::now();
    RngStream shuffle_rng(cfg.seed, 0x9A30000ULL + static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (long b = 0; b < per_epoch; ++b, ++step) {
      const std::size_t begin = static_cast<std::size_t>(b) * cfg.batch_size;
      const std::size_t n = std::min(order.size(), begin + cfg.batch_size) - begin;
      std::vector<nn::Gradients> grads(n);
      std::vector<double> losses(n);
      parallel_for(n, cfg.jobs, [&](std::size_t k) {
        const auto& r = train_set[order[begin + k]];
        std::array<nn::VisionTransformer::Tape, 3> tapes;
        std::array<double, 3> raw;
        for (int s = 0; s < 3; ++s) {
          RngStream rng(hash_combine(cfg.seed, static_cast<std::uint64_t>(epoch)),
                        3 * static_cast<std::uint64_t>(begin + k) + s);
          raw[s] = prm.raw(r.current, r.candidates[s], nn::Mode::Train, &rng, &tapes[s]);
        }
        losses[k] = triplet_loss(raw[slot[0]], raw[slot[1]], raw[slot[2]], cfg.alpha);
        const auto g = triplet_loss_gradient(raw[slot[0]], raw[slot[1]], raw[slot[2]], cfg.alpha);
        grads[k] = store.zero_gradients();
        for (int j = 0; j < 3; ++j) {
          if (g[j] == 0.0) continue;
          prm.net().backward(Matrix::Constant(1, 1, g[j]), tapes[slot[j]], grads[k]);
        }
      });
      double batch_loss = std::accumulate(losses.begin(), losses.end(), 0.0) / n;
      if (!std::isfinite(batch_loss)) {
        store.set_values(best);
        throw NumericalError("PRM training diverged at epoch " + std::to_string(epoch) +
                             "; restored last good parameters");
      }
      store.zero_grad();
      for (const auto& g : grads) store.accumulate(g, 1.0 / static_cast<double>(n));
      if (cfg.grad_clip > 0.0) {
        double sq = 0.0;
        for (const auto& p : store) sq += p.grad.squaredNorm();
        const double norm = std::sqrt(sq);
        if (norm > cfg.grad_clip)
          for (auto& p : store) p.grad *= cfg.grad_clip / norm;
      }
      double lr = cfg.lr;
      if (cfg.warmup_steps > 0 && step < cfg.warmup_steps)
        lr *= static_cast<double>(step + 1) / cfg.warmup_steps;
      else if (total > cfg.warmup_steps)
        lr *= 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(step - cfg.warmup_steps) /
                                    static_cast<double>(total - cfg.warmup_steps)));
      try {
        nn::adamw_step(store, {lr, cfg.weight_decay, 0.9, 0.999, 1e-8});
      } catch (const NumericalError&) {
        store.set_values(best);
        throw;
      }
      epoch_loss += batch_loss * static_cast<double>(n);
    }
    const auto held_eval = evaluate_all(prm, monitor, cfg.jobs);
    PrmEpochStats s;
    s.epoch = epoch;
    s.train_loss = epoch_loss / static_cast<double>(train_set.size());
    s.heldout_loss = mean_loss(held_eval);
    s.heldout_accuracy = accuracy(held_eval);
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - e0).count();
    report.history.push_back(s);
    if (report.best_epoch < 0 || s.heldout_accuracy > report.best_accuracy ||
        (s.heldout_accuracy == report.best_accuracy && s.heldout_loss < best_held_loss)) {
      report.best_accuracy = s.heldout_accuracy;
      best_held_loss = s.heldout_loss;
      report.best_epoch = epoch;
      best = store.values();
    }
  }
  store.set_values(best);
  report.final_loss = mean_loss(evaluate_all(prm, train_set, cfg.jobs));
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

void save_triplets(const std::filesystem::path& path, const std::vector<TripletRecord>& triplets,
                   const euler::GridSpec& grid, const nlohmann::json& extra) {
  nlohmann::json h = extra;
  h["record_type"] = "TRIPLET";
  h["grid"] = grid;
  h["channels"] = {"rho", "vx", "vy", "p"};
  h["layout"] = "record,slot(current,best,median,worst),channel,y,x";
  nlohmann::json recs = nlohmann::json::array();
  std::vector<float> data;
  for (const auto& r : triplets) {
    recs.push_back({{"trajectory", r.trajectory},
                    {"step", r.step},
                    {"t_norm", r.t_norm},
                    {"times", {r.current.t, r.candidates[0].t, r.candidates[1].t, r.candidates[2].t}},
                    {"mse", r.mse}});
    io::append_snapshot(data, r.current);
    for (const auto& c : r.candidates) io::append_snapshot(data, c);
  }
  h["records"] = std::move(recs);
  io::write_container(path, h, data);
}

std::vector<TripletRecord> load_triplets(const std::filesystem::path& path) {
  const auto c = io::read_container(path);
  if (c.header.value("record_type", "") != "TRIPLET")
    throw ConfigError(path.string() + " is not a triplet store");
  const auto grid = c.header.at("grid").get<euler::GridSpec>();
  const std::size_t snap = static_cast<std::size_t>(grid.cells()) * euler::kNumChannels;
  const auto& recs = c.header.at("records");
  if (c.data.size() != recs.size() * 4 * snap) throw ConfigError("triplet store payload size mismatch");
  std::vector<TripletRecord> out;
  std::span<const float> all(c.data);
  for (std::size_t k = 0; k < recs.size(); ++k) {
    TripletRecord r;
    r.trajectory = recs[k].at("trajectory");
    r.step = recs[k].at("step");
    r.t_norm = recs[k].at("t_norm");
    r.mse = recs[k].at("mse").get<std::array<double, 3>>();
    const auto times = recs[k].at("times").get<std::array<double, 4>>();
    r.current = io::read_snapshot(all.subspan((4 * k) * snap, snap), grid.nx, grid.ny, times[0]);
    for (int s = 0; s < 3; ++s)
      r.candidates[s] =
          io::read_snapshot(all.subspan((4 * k + 1 + s) * snap, snap), grid.nx, grid.ny, times[s + 1]);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace pdettc::reward
