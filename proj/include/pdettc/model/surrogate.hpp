#pragma once

#include "pdettc/euler/dataset.hpp"
#include "pdettc/nn/vit.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pdettc::model {

enum class SizePreset { Desk, Paper };

SizePreset parse_size_preset(std::string_view name);
/// "vit3" | "vit5" | "vit7" -> 3 | 5 | 7.
int parse_model_preset(std::string_view name);

struct ModelConfig {
  nn::VitConfig vit;
  /// Appends t/T broadcast over the grid as an extra input channel.
  bool time_channel = true;
  /// Physical time between consecutive snapshots.
  double time_step = 0.05;

  void validate() const;
};

/// Image-to-image ViT over (rho, vx, vy, p [, t]) for the given patch size.
/// Desk: D=64, L=4, 4 heads; Paper: 128x128, D=256, L=6, 8 heads. Both use
/// mlp ratio 4 and dropout 0.1. `grid` overrides the desk image size.
ModelConfig preset(int patch, SizePreset size, int height = 64, int width = 64);

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int batch_size = 8;
  int epochs = 20;
  /// Exponent of the pointwise loss |error|^p.
  double loss_p = 2.0;
  std::uint64_t seed = 0;
  int warmup_steps = 20;
  /// Cosine decay to lr * min_lr_ratio; 1 keeps lr constant.
  double min_lr_ratio = 0.05;
  /// Global gradient-norm clip, 0 disables.
  double grad_clip = 1.0;
  /// Cap on validation pairs per evaluation (0 = all).
  int max_val_pairs = 0;
  int jobs = 1;

  void validate() const;

  static TrainConfig paper_pretrain();
  static TrainConfig paper_finetune();
  static TrainConfig desk_pretrain();
  static TrainConfig desk_finetune();
};

/// One-step solution operator u(t) -> u(t + time_step).
class Surrogate {
 public:
  Surrogate() = default;
  Surrogate(const ModelConfig& config, const euler::Normalization& normalization,
            std::uint64_t init_seed);

  /// Returns the denormalised prediction stamped with u_t.t + time_step.
  /// Dropout is sampled from `rng` in Train and StochasticInfer modes.
  /// Throws NumericalError on non-finite output.
  euler::Snapshot forward(const euler::Snapshot& u_t, double t_norm, nn::Mode mode,
                          RngStream* rng) const;

  /// Normalised channels (plus time channel) as a (channels x H*W) image.
  Matrix encode_input(const euler::Snapshot& u, double t_norm) const;
  Matrix encode_state(const euler::Snapshot& u) const;
  euler::Snapshot decode_output(const Matrix& image, double t) const;

  /// Pointwise |e|^p loss in normalised units for one pair, averaged over
  /// channels and cells; adds its gradient into `grads`.
  double loss_and_gradient(const euler::Snapshot& u_t, const euler::Snapshot& target,
                           double t_norm, double p, RngStream& rng, nn::Gradients& grads) const;

  const ModelConfig& config() const { return config_; }
  const euler::Normalization& normalization() const { return normalization_; }
  nn::VisionTransformer& net() { return net_; }
  const nn::VisionTransformer& net() const { return net_; }

 private:
  ModelConfig config_;
  euler::Normalization normalization_;
  nn::VisionTransformer net_;
};

/// Candidate i comes from RngStream(hash(rollout_seed, step), i), so any
/// B-candidate set is a prefix of the B'-candidate set for B' > B.
RngStream candidate_stream(std::uint64_t rollout_seed, int step, int index);

/// B independent stochastic forward passes.
std::vector<euler::Snapshot> sample_candidates(const Surrogate& model, const euler::Snapshot& u_t,
                                               double t_norm, int branching,
                                               std::uint64_t rollout_seed, int step,
                                               int jobs = 1);

/// (trajectory, time index) of an input snapshot; the target is index + 1.
using PairIndex = std::pair<int, int>;

std::vector<PairIndex> consecutive_pairs(const euler::Dataset& ds,
                                         const std::vector<int>& trajectories);

/// Mean deterministic one-step MSE (dataset normalisation) over `pairs`,
/// thinned evenly to at most `max_pairs` when positive.
double one_step_mse(const Surrogate& model, const euler::Dataset& ds,
                    const std::vector<PairIndex>& pairs, int max_pairs = 0, int jobs = 1);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_mse = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> history;
  double init_val_mse = 0.0;
  double best_val_mse = 0.0;
  int best_epoch = -1;
  double seconds = 0.0;
  std::vector<int> trajectories;  // training trajectories actually used
};

/// Minimises the mean pair loss over consecutive pairs of the training split
/// and leaves `model` at the best-validation parameters. On a non-finite
/// loss the model is restored to the last good parameters and a
/// NumericalError is thrown.
TrainReport train(Surrogate& model, const euler::Dataset& ds, const TrainConfig& cfg);

/// n trajectories drawn from the training split by a seeded shuffle.
std::vector<int> select_finetune_subset(const euler::Dataset& ds, int n_traj, std::uint64_t seed);

/// Continues training from the current parameters on a seeded subset of
/// n_traj downstream training trajectories. n_traj == 0 is a no-op.
TrainReport finetune(Surrogate& model, const euler::Dataset& downstream, int n_traj,
                     const TrainConfig& cfg);

/// Shared loop behind train/finetune.
TrainReport train_on_pairs(Surrogate& model, const euler::Dataset& ds,
                           const std::vector<PairIndex>& train_pairs,
                           const std::vector<PairIndex>& val_pairs, const TrainConfig& cfg);

}  // namespace pdettc::model
