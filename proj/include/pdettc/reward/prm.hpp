#pragma once

#include "pdettc/model/surrogate.hpp"
#include "pdettc/reward/reward_model.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace pdettc::reward {

/// How the loss slots bind to MSE-ranked candidates.
enum class TripletOrientation {
  /// r_min scores the worst-MSE candidate, r_max the best; score = raw output.
  HigherIsBetter,
  /// r_min scores the lowest-MSE candidate, r_max the highest; score = -raw.
  MseAscending,
};

struct PRMConfig {
  /// Backbone; in_channels is forced to 10 and the head to Scalar.
  nn::VitConfig backbone;
  double alpha = 0.1;
  int K = 100;
  double lr = 3e-4;
  double weight_decay = 1e-4;
  int batch_size = 16;
  int epochs = 20;
  int warmup_steps = 10;
  double grad_clip = 1.0;
  double holdout_fraction = 0.2;
  TripletOrientation orientation = TripletOrientation::HigherIsBetter;
  std::uint64_t seed = 0;
  int jobs = 1;

  void validate() const;
  /// Backbone matched to the surrogate: same patch, width, depth, heads.
  static PRMConfig matched(const model::ModelConfig& fm);
};

/// One (u_t, best, median, worst) sample; mse is in the same order.
struct TripletRecord {
  int trajectory = 0;
  int step = 0;
  double t_norm = 0.0;
  euler::Snapshot current;
  std::array<euler::Snapshot, 3> candidates;  // best, median, worst
  std::array<double, 3> mse{};
};

/// Candidate indices at ranks 0, K/2 and K-1 after sorting by (mse, index).
std::array<int, 3> triplet_ranks(const std::vector<double>& mse);

/// K stochastic candidates per consecutive pair of the listed trajectories
/// (training split when empty), ranked by (MSE, index); keeps ranks 0, K/2
/// and K-1. Pairs whose MSE spread is within 1e-14 are skipped.
std::vector<TripletRecord> build_prm_triplets(const model::Surrogate& surrogate,
                                              const euler::Dataset& ds, int K, std::uint64_t seed,
                                              std::vector<int> trajectories = {}, int jobs = 1);

/// max(0, r_min - r_median + alpha) + max(0, r_median - r_max + alpha).
double triplet_loss(double r_min, double r_median, double r_max, double alpha);
/// Subgradient of triplet_loss in (r_min, r_median, r_max) order.
std::array<double, 3> triplet_loss_gradient(double r_min, double r_median, double r_max,
                                            double alpha);

class ProcessRewardModel {
 public:
  ProcessRewardModel() = default;
  ProcessRewardModel(const PRMConfig& cfg, const euler::Normalization& norm,
                     std::uint64_t init_seed);

  /// (u_t normalised, t, candidate normalised, t') as a 10 x H*W image.
  Matrix encode(const euler::Snapshot& current, const euler::Snapshot& candidate) const;
  /// Network output; dropout only when mode is Train.
  double raw(const euler::Snapshot& current, const euler::Snapshot& candidate, nn::Mode mode,
             RngStream* rng, nn::VisionTransformer::Tape* tape = nullptr) const;
  /// Deterministic; higher means a predicted-better candidate.
  double score(const euler::Snapshot& current, const euler::Snapshot& candidate) const;

  const PRMConfig& config() const { return cfg_; }
  void set_config(const PRMConfig& cfg) { cfg_ = cfg; }
  const euler::Normalization& normalization() const { return norm_; }
  nn::VisionTransformer& net() { return net_; }
  const nn::VisionTransformer& net() const { return net_; }

 private:
  PRMConfig cfg_;
  euler::Normalization norm_;
  nn::VisionTransformer net_;
};

/// Copies the surrogate's patch-embedding rows for the current-state
/// channels, the positional table and every transformer block into `prm`.
/// Candidate-channel rows and the scalar head keep their initial values.
/// Throws ConfigError unless the backbones have the same geometry.
void warm_start_from_surrogate(ProcessRewardModel& prm, const model::Surrogate& surrogate);

RewardScore prm_score(const ProcessRewardModel& prm, const euler::Snapshot& current,
                      const euler::Snapshot& candidate);

/// Fraction of triplets where score(best) > score(worst).
double ranking_accuracy(const ProcessRewardModel& prm, const std::vector<TripletRecord>& triplets,
                        int jobs = 1);
/// Mean triplet loss with dropout off.
double mean_triplet_loss(const ProcessRewardModel& prm,
                         const std::vector<TripletRecord>& triplets, int jobs = 1);

struct PrmEpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double heldout_loss = 0.0;
  double heldout_accuracy = 0.0;
  double seconds = 0.0;
};

struct PrmTrainReport {
  std::vector<PrmEpochStats> history;
  double init_loss = 0.0;   // training triplets, dropout off
  double final_loss = 0.0;  // same, at the returned parameters
  double init_accuracy = 0.0;
  double best_accuracy = 0.0;
  int best_epoch = -1;
  int n_train = 0;
  int n_heldout = 0;
  double seconds = 0.0;
};

/// Splits the triplets by trajectory into train/held-out, minimises the
/// mean triplet loss and leaves `prm` at the epoch with the best held-out
/// ranking accuracy (ties to the lower held-out loss). With epochs == 0 the
/// parameters are unchanged.
PrmTrainReport train_prm(ProcessRewardModel& prm, const std::vector<TripletRecord>& triplets,
                         const PRMConfig& cfg);

class PrmReward final : public RewardModel {
 public:
  explicit PrmReward(const ProcessRewardModel& prm) : prm_(&prm) {}
  std::string id() const override { return "prm"; }
  std::optional<double> score(const euler::Snapshot& cur,
                              const euler::Snapshot& cand) const override {
    return prm_->score(cur, cand);
  }

 private:
  const ProcessRewardModel* prm_;
};

/// Triplet store: field container with record_type "TRIPLET"; four
/// snapshots (current, best, median, worst) per record.
void save_triplets(const std::filesystem::path& path, const std::vector<TripletRecord>& triplets,
                   const euler::GridSpec& grid,
                   const nlohmann::json& extra = nlohmann::json::object());
std::vector<TripletRecord> load_triplets(const std::filesystem::path& path);

}  // namespace pdettc::reward
