#include "pdettc/model/surrogate.hpp"

#include "pdettc/core/parallel.hpp"
#include "pdettc/metrics/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace pdettc::model {

using euler::Snapshot;

SizePreset parse_size_preset(std::string_view name) {
  if (name == "desk") return SizePreset::Desk;
  if (name == "paper") return SizePreset::Paper;
  throw ConfigError("unknown size preset '" + std::string(name) + "' (desk|paper)");
}

int parse_model_preset(std::string_view name) {
  if (name == "vit3") return 3;
  if (name == "vit5") return 5;
  if (name == "vit7") return 7;
  throw ConfigError("unknown model preset '" + std::string(name) + "' (vit3|vit5|vit7)");
}

void ModelConfig::validate() const {
  vit.validate();
  if (vit.in_channels != euler::kNumChannels + (time_channel ? 1 : 0))
    throw ConfigError("surrogate input channels must be 4 physical + optional time channel");
  if (vit.out_channels != euler::kNumChannels || vit.head != nn::Head::Image)
    throw ConfigError("surrogate needs an image head with 4 output channels");
  if (!(time_step > 0.0)) throw ConfigError("time_step must be positive");
}

ModelConfig preset(int patch, SizePreset size, int height, int width) {
  if (patch != 3 && patch != 5 && patch != 7) throw ConfigError("patch size must be 3, 5 or 7");
  ModelConfig c;
  c.vit.patch = patch;
  c.vit.in_channels = 5;
  c.vit.out_channels = 4;
  c.vit.mlp_ratio = 4;
  c.vit.dropout = 0.1;
  if (size == SizePreset::Paper) {
    c.vit.height = c.vit.width = 128;
    c.vit.embed_dim = 256;
    c.vit.depth = 6;
    c.vit.heads = 8;
  } else {
    c.vit.height = height;
    c.vit.width = width;
    c.vit.embed_dim = 64;
    c.vit.depth = 4;
    c.vit.heads = 4;
  }
  return c;
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(loss_p >= 1.0)) throw ConfigError("loss p must be >= 1");
  if (batch_size < 1 || epochs < 0) throw ConfigError("batch_size >= 1 and epochs >= 0 required");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
}

TrainConfig TrainConfig::paper_pretrain() {
  TrainConfig c;
  c.lr = 5e-6;
  c.weight_decay = 1e-7;
  return c;
}

TrainConfig TrainConfig::paper_finetune() {
  TrainConfig c;
  c.lr = 1e-5;
  c.weight_decay = 0.01;
  return c;
}

TrainConfig TrainConfig::desk_pretrain() {
  TrainConfig c;
  c.lr = 1e-3;
  c.weight_decay = 1e-4;
  c.epochs = 20;
  return c;
}

TrainConfig TrainConfig::desk_finetune() {
  TrainConfig c;
  c.lr = 3e-4;
  c.weight_decay = 0.01;
  c.epochs = 15;
  c.warmup_steps = 5;
  return c;
}

Surrogate::Surrogate(const ModelConfig& config, const euler::Normalization& normalization,
                     std::uint64_t init_seed)
    : config_(config), normalization_(normalization) {
  config_.validate();
  net_ = nn::VisionTransformer(config_.vit, init_seed);
}

Matrix Surrogate::encode_state(const Snapshot& u) const {
  const auto& v = config_.vit;
  if (u.ny() != v.height || u.nx() != v.width)
    throw ConfigError("snapshot grid does not match the model image size");
  const Eigen::Index cells = u.rho.size();
  Matrix img(euler::kNumChannels, cells);
  for (int c = 0; c < euler::kNumChannels; ++c) {
    const Field& f = u.channel(c);
    img.row(c) = ((Eigen::Map<const RowVector>(f.data(), cells).array() - normalization_.mean[c]) /
                  normalization_.stdev[c])
                     .matrix();
  }
  return img;
}

Matrix Surrogate::encode_input(const Snapshot& u, double t_norm) const {
  Matrix state = encode_state(u);
  if (!config_.time_channel) return state;
  Matrix img(state.rows() + 1, state.cols());
  img.topRows(state.rows()) = state;
  img.row(state.rows()).setConstant(t_norm);
  return img;
}

Snapshot Surrogate::decode_output(const Matrix& image, double t) const {
  const int nx = config_.vit.width, ny = config_.vit.height;
  Snapshot u;
  for (int c = 0; c < euler::kNumChannels; ++c) {
    Field f(nx, ny);
    Eigen::Map<RowVector>(f.data(), f.size()) =
        (image.row(c).array() * normalization_.stdev[c] + normalization_.mean[c]).matrix();
    u.channel(c) = std::move(f);
  }
  u.t = t;
  return u;
}

Snapshot Surrogate::forward(const Snapshot& u_t, double t_norm, nn::Mode mode,
                            RngStream* rng) const {
  const Matrix out = net_.forward(encode_input(u_t, t_norm), mode, rng);
  if (!out.allFinite()) throw NumericalError("surrogate forward produced non-finite output");
  return decode_output(out, u_t.t + config_.time_step);
}

double Surrogate::loss_and_gradient(const Snapshot& u_t, const Snapshot& target, double t_norm,
                                    double p, RngStream& rng, nn::Gradients& grads) const {
  nn::VisionTransformer::Tape tape;
  const Matrix out = net_.forward(encode_input(u_t, t_norm), nn::Mode::Train, &rng, &tape);
  const Matrix err = out - encode_state(target);
  const double count = static_cast<double>(err.size());
  double loss;
  Matrix d_out;
  if (p == 2.0) {
    loss = err.squaredNorm() / count;
    d_out = (2.0 / count) * err;
  } else {
    loss = err.array().abs().pow(p).sum() / count;
    d_out = (p / count) * (err.array().abs().pow(p - 1.0) * err.array().sign()).matrix();
  }
  if (std::isfinite(loss)) net_.backward(d_out, tape, grads);
  return loss;
}

RngStream candidate_stream(std::uint64_t rollout_seed, int step, int index) {
  return RngStream(hash_combine(rollout_seed, static_cast<std::uint64_t>(step)),
                   static_cast<std::uint64_t>(index));
}

std::vector<Snapshot> sample_candidates(const Surrogate& model, const Snapshot& u_t,
                                        double t_norm, int branching, std::uint64_t rollout_seed,
                                        int step, int jobs) {
  if (branching < 1) throw ConfigError("branching factor must be >= 1");
  std::vector<Snapshot> out(static_cast<std::size_t>(branching));
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    RngStream rng = candidate_stream(rollout_seed, step, static_cast<int>(i));
    out[i] = model.forward(u_t, t_norm, nn::Mode::StochasticInfer, &rng);
  });
  return out;
}

std::vector<PairIndex> consecutive_pairs(const euler::Dataset& ds,
                                         const std::vector<int>& trajectories) {
  std::vector<PairIndex> pairs;
  for (int idx : trajectories)
    for (int t = 0; t + 1 < static_cast<int>(ds.trajectories[idx].snapshots.size()); ++t)
      pairs.emplace_back(idx, t);
  return pairs;
}

namespace {

std::vector<PairIndex> thin(const std::vector<PairIndex>& pairs, int max_pairs) {
  if (max_pairs <= 0 || static_cast<int>(pairs.size()) <= max_pairs) return pairs;
  std::vector<PairIndex> out;
  for (int k = 0; k < max_pairs; ++k)
    out.push_back(pairs[static_cast<std::size_t>(k) * pairs.size() / max_pairs]);
  return out;
}

double learning_rate(const TrainConfig& cfg, long step, long total_steps) {
  if (cfg.warmup_steps > 0 && step < cfg.warmup_steps)
    return cfg.lr * static_cast<double>(step + 1) / cfg.warmup_steps;
  if (cfg.min_lr_ratio >= 1.0 || total_steps <= cfg.warmup_steps) return cfg.lr;
  const double progress = static_cast<double>(step - cfg.warmup_steps) /
                          static_cast<double>(std::max(1L, total_steps - cfg.warmup_steps));
  const double cosine = 0.5 * (1.0 + std::cos(M_PI * std::min(1.0, progress)));
  return cfg.lr * (cfg.min_lr_ratio + (1.0 - cfg.min_lr_ratio) * cosine);
}

void clip_gradients(nn::ParamStore& store, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (const auto& p : store) sq += p.grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm && std::isfinite(norm))
    for (auto& p : store) p.grad *= max_norm / norm;
}

}  // namespace

double one_step_mse(const Surrogate& model, const euler::Dataset& ds,
                    const std::vector<PairIndex>& pairs, int max_pairs, int jobs) {
  const auto used = thin(pairs, max_pairs);
  if (used.empty()) return 0.0;
  std::vector<double> errs(used.size());
  parallel_for(used.size(), jobs, [&](std::size_t k) {
    const auto& traj = ds.trajectories[used[k].first];
    const int t = used[k].second;
    const Snapshot pred =
        model.forward(traj.snapshots[t], traj.times[t], nn::Mode::DeterministicInfer, nullptr);
    errs[k] = metrics::mse(pred, traj.snapshots[t + 1], ds.normalization);
  });
  return std::accumulate(errs.begin(), errs.end(), 0.0) / errs.size();
}

TrainReport train_on_pairs(Surrogate& model, const euler::Dataset& ds,
                           const std::vector<PairIndex>& train_pairs,
                           const std::vector<PairIndex>& val_pairs, const TrainConfig& cfg) {
  cfg.validate();
  if (train_pairs.empty()) throw ConfigError("training needs at least one trajectory pair");
  const auto t0 = std::chrono::steady_clock::now();
  auto& store = model.net().params();

  TrainReport report;
  const bool has_val = !val_pairs.empty();
  report.init_val_mse = has_val ? one_step_mse(model, ds, val_pairs, cfg.max_val_pairs, cfg.jobs)
                                : one_step_mse(model, ds, train_pairs, cfg.max_val_pairs, cfg.jobs);
  report.best_val_mse = report.init_val_mse;
  std::vector<Matrix> best = store.values();

  const long batches_per_epoch =
      (static_cast<long>(train_pairs.size()) + cfg.batch_size - 1) / cfg.batch_size;
  const long total_steps = batches_per_epoch * cfg.epochs;
  long step = 0;
  std::vector<PairIndex> order = train_pairs;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto e0 = std::chrono::steady_clock::now();
    RngStream shuffle_rng(cfg.seed, 0xE90C0000ULL + static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    double lr = cfg.lr;

    for (long b = 0; b < batches_per_epoch; ++b, ++step) {
      const std::size_t begin = static_cast<std::size_t>(b) * cfg.batch_size;
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const std::size_t n = end - begin;
      std::vector<nn::Gradients> grads(n);
      std::vector<double> losses(n);
      parallel_for(n, cfg.jobs, [&](std::size_t k) {
        const auto [traj_idx, t] = order[begin + k];
        const auto& traj = ds.trajectories[traj_idx];
        RngStream rng(hash_combine(cfg.seed, static_cast<std::uint64_t>(epoch)),
                      static_cast<std::uint64_t>(begin + k));
        grads[k] = store.zero_gradients();
        losses[k] = model.loss_and_gradient(traj.snapshots[t], traj.snapshots[t + 1],
                                            traj.times[t], cfg.loss_p, rng, grads[k]);
      });
      double batch_loss = 0.0;
      for (double l : losses) batch_loss += l;
      batch_loss /= static_cast<double>(n);
      if (!std::isfinite(batch_loss)) {
        store.set_values(best);
        throw NumericalError("training diverged at epoch " + std::to_string(epoch) +
                             "; restored last good parameters");
      }
      store.zero_grad();
      for (const auto& g : grads) store.accumulate(g, 1.0 / static_cast<double>(n));
      clip_gradients(store, cfg.grad_clip);
      lr = learning_rate(cfg, step, total_steps);
      nn::AdamWConfig opt{lr, cfg.weight_decay, cfg.beta1, cfg.beta2, 1e-8};
      try {
        nn::adamw_step(store, opt);
      } catch (const NumericalError&) {
        store.set_values(best);
        throw;
      }
      epoch_loss += batch_loss * static_cast<double>(n);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss / static_cast<double>(order.size());
    stats.lr = lr;
    stats.val_mse = has_val ? one_step_mse(model, ds, val_pairs, cfg.max_val_pairs, cfg.jobs)
                            : stats.train_loss;
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - e0).count();
    report.history.push_back(stats);
    if (std::isfinite(stats.val_mse) && stats.val_mse < report.best_val_mse) {
      report.best_val_mse = stats.val_mse;
      report.best_epoch = epoch;
      best = store.values();
    }
  }
  store.set_values(best);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

TrainReport train(Surrogate& model, const euler::Dataset& ds, const TrainConfig& cfg) {
  const auto train_idx = ds.indices(euler::Split::Train);
  if (train_idx.empty()) throw ConfigError("dataset has no training trajectories");
  TrainReport r = train_on_pairs(model, ds, consecutive_pairs(ds, train_idx),
                                 consecutive_pairs(ds, ds.indices(euler::Split::Val)), cfg);
  r.trajectories = train_idx;
  return r;
}

std::vector<int> select_finetune_subset(const euler::Dataset& ds, int n_traj, std::uint64_t seed) {
  auto pool = ds.indices(euler::Split::Train);
  if (n_traj < 0 || n_traj > static_cast<int>(pool.size()))
    throw ConfigError("n_traj exceeds the available training trajectories");
  RngStream rng(seed, 0xF1AE);
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(static_cast<std::size_t>(n_traj));
  std::sort(pool.begin(), pool.end());
  return pool;
}

TrainReport finetune(Surrogate& model, const euler::Dataset& downstream, int n_traj,
                     const TrainConfig& cfg) {
  const auto subset = select_finetune_subset(downstream, n_traj, cfg.seed);
  if (subset.empty()) return {};
  TrainReport r = train_on_pairs(model, downstream, consecutive_pairs(downstream, subset),
                                 consecutive_pairs(downstream, downstream.indices(euler::Split::Val)),
                                 cfg);
  r.trajectories = subset;
  return r;
}

}  // namespace pdettc::model
