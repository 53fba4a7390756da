#include "fixtures.hpp"
#include "helpers.hpp"

#include "pdettc/metrics/error.hpp"
#include "pdettc/reward/arm.hpp"
#include "pdettc/ttc/rollout.hpp"

#include <doctest.h>

#include <filesystem>

using namespace pdettc;
using namespace pdettc::ttc;
using euler::Snapshot;
using testing::bit_equal;

namespace {

const model::Surrogate& surrogate() {
  static const model::Surrogate m = [] {
    const auto& ds = testing::tiny_dataset();
    model::Surrogate s(testing::tiny_model_config(0.1), ds.normalization, 1);
    model::TrainConfig cfg;
    cfg.epochs = 3;
    model::train(s, ds, cfg);
    return s;
  }();
  return m;
}

const euler::Trajectory& truth(int k = 0) {
  const auto& ds = testing::tiny_dataset();
  return ds.trajectories[ds.indices(euler::Split::Test)[k]];
}

TTCConfig config(int b, std::uint64_t seed = 7, int steps = 6) {
  TTCConfig c;
  c.branching = b;
  c.seed = seed;
  c.steps = steps;
  return c;
}

class NeverDefined final : public reward::RewardModel {
 public:
  std::string id() const override { return "never"; }
  std::optional<double> score(const Snapshot&, const Snapshot&) const override {
    return std::nullopt;
  }
};

/// Same value for every candidate, to exercise tie-breaking.
class Constant final : public reward::RewardModel {
 public:
  std::string id() const override { return "constant"; }
  std::optional<double> score(const Snapshot&, const Snapshot&) const override { return 1.0; }
};

}  // namespace

TEST_CASE("config validation") {
  CHECK_THROWS_AS(config(0).validate(), ConfigError);
  CHECK_THROWS_AS(config(1, 0, 0).validate(), ConfigError);
}

TEST_CASE("B = 1 reproduces a plain stochastic rollout") {
  const reward::MassReward mass;
  const auto rec = greedy_rollout(surrogate(), mass, truth().snapshots[0], config(1));
  REQUIRE(rec.complete());
  Snapshot cur = truth().snapshots[0];
  for (int step = 0; step < 6; ++step) {
    RngStream rng = model::candidate_stream(config(1).stream_seed(), step, 0);
    cur = surrogate().forward(cur, cur.t, nn::Mode::StochasticInfer, &rng);
    CHECK(bit_equal(cur, rec.chosen[step]));
    CHECK(rec.steps[step].selected == 0);
  }
  CHECK(rec.chosen.back().t == doctest::Approx(0.3));
}

TEST_CASE("argmax contract holds for every reward") {
  const reward::MassReward mass;
  const reward::EnergyReward energy;
  const reward::MomentumReward mx(reward::Component::X);
  const reward::OracleMseReward oracle(truth(), testing::tiny_dataset().normalization);
  for (const reward::RewardModel* r :
       std::vector<const reward::RewardModel*>{&mass, &energy, &mx, &oracle}) {
    const auto rec = greedy_rollout(surrogate(), *r, truth().snapshots[0], config(5));
    CHECK(satisfies_argmax_contract(rec));
    for (const auto& s : rec.steps) {
      REQUIRE(s.rewards.size() == 5);
      for (const auto& v : s.rewards)
        if (v) CHECK(*s.rewards[s.selected] >= *v);
    }
  }
}

TEST_CASE("ties go to the lowest index and undefined rewards fall back to candidate 0") {
  const auto tie = greedy_rollout(surrogate(), Constant{}, truth().snapshots[0], config(4));
  for (const auto& s : tie.steps) CHECK(s.selected == 0);
  CHECK(satisfies_argmax_contract(tie));

  const auto none = greedy_rollout(surrogate(), NeverDefined{}, truth().snapshots[0], config(4));
  REQUIRE(none.complete());
  for (const auto& s : none.steps) {
    CHECK(s.fallback);
    CHECK(s.selected == 0);
  }
  CHECK(satisfies_argmax_contract(none));

  auto broken = tie;
  broken.steps[2].selected = 3;
  CHECK(!satisfies_argmax_contract(broken));
}

TEST_CASE("oracle selection is the minimum-error candidate") {
  const auto& ds = testing::tiny_dataset();
  const reward::OracleMseReward oracle(truth(), ds.normalization);
  const auto cfg = config(6);
  const auto rec = greedy_rollout(surrogate(), oracle, truth().snapshots[0], cfg);
  const Snapshot* cur = &rec.start;
  for (int step = 0; step < cfg.steps; ++step) {
    const auto cands = model::sample_candidates(surrogate(), *cur, cur->t, cfg.branching,
                                                cfg.stream_seed(), step);
    double best = 1e300;
    for (const auto& c : cands) best = std::min(best, metrics::mse(c, truth().snapshots[step + 1], ds.normalization));
    CHECK(metrics::mse(rec.chosen[step], truth().snapshots[step + 1], ds.normalization) == best);
    cur = &rec.chosen[step];
  }
}

TEST_CASE("shared streams make the first step monotone in B under the oracle") {
  const auto& ds = testing::tiny_dataset();
  const std::vector<const euler::Trajectory*> ics{&truth(0), &truth(1)};
  SweepOptions opt;
  opt.reward = reward::RewardKind::OracleMse;
  opt.steps = 3;
  const auto records = rollout_sweep(
      surrogate(),
      [&](const euler::Trajectory& t) {
        return std::make_unique<reward::OracleMseReward>(t, ds.normalization);
      },
      ics, {1, 4, 16}, {3, 4}, opt);
  REQUIRE(records.size() == 2 * 2 * 3);
  for (std::size_t k = 0; k < records.size(); k += 3) {
    CHECK(records[k].config.seed == records[k + 1].config.seed);
    const auto& gt = ics[records[k].ic_index]->snapshots[1];
    double prev = 1e300;
    for (int j = 0; j < 3; ++j) {
      CHECK(records[k + j].config.branching == std::vector<int>{1, 4, 16}[j]);
      const double e = metrics::mse(records[k + j].chosen[0], gt, ds.normalization);
      CHECK(e <= prev);
      prev = e;
    }
  }
}

TEST_CASE("sweep with a single B gives one record per IC and seed") {
  const std::vector<const euler::Trajectory*> ics{&truth(0), &truth(1)};
  SweepOptions opt;
  opt.steps = 2;
  opt.jobs = 2;
  const auto recs = rollout_sweep(
      surrogate(), [](const euler::Trajectory&) { return std::make_unique<reward::MassReward>(); },
      ics, {1}, {0}, opt);
  REQUIRE(recs.size() == 2);
  CHECK(recs[1].ic_index == 1);
  CHECK(recs[1].ic_seed == truth(1).ic.seed);
  CHECK(recs[1].family == "rp");
  CHECK_THROWS_AS(rollout_sweep(surrogate(), {}, ics, {}, {0}, opt), ConfigError);
}

TEST_CASE("independent streams decouple B values") {
  auto a = config(1), b = config(4);
  a.independent_streams = b.independent_streams = true;
  CHECK(a.stream_seed() != b.stream_seed());
  CHECK(config(1).stream_seed() == config(4).stream_seed());
}

TEST_CASE("rollouts are bit-reproducible and job independent") {
  const reward::EnergyReward energy;
  auto cfg = config(4);
  const auto a = greedy_rollout(surrogate(), energy, truth().snapshots[0], cfg);
  cfg.jobs = 3;
  const auto b = greedy_rollout(surrogate(), energy, truth().snapshots[0], cfg);
  REQUIRE(a.chosen.size() == b.chosen.size());
  for (std::size_t k = 0; k < a.chosen.size(); ++k) {
    CHECK(bit_equal(a.chosen[k], b.chosen[k]));
    CHECK(a.steps[k].selected == b.steps[k].selected);
    CHECK(a.steps[k].rewards == b.steps[k].rewards);
  }
}

TEST_CASE("positivity violations are flagged, not clipped") {
  const reward::MassReward mass;
  const auto rec = greedy_rollout(surrogate(), mass, truth().snapshots[0], config(2, 1, 20));
  for (std::size_t k = 0; k < rec.chosen.size(); ++k) {
    CHECK(rec.chosen[k].all_finite());
    CHECK(rec.steps[k].positivity_violation == !rec.chosen[k].positive());
  }
}

TEST_CASE("surrogate failure ends the rollout with a partial record") {
  auto broken = surrogate();
  broken.net().params()[0].value(0, 0) = std::nan("");
  const auto rec = greedy_rollout(broken, reward::MassReward{}, truth().snapshots[0], config(2));
  CHECK(!rec.complete());
  CHECK(rec.chosen.empty());
  CHECK(rec.error.find("step 1") != std::string::npos);
}

TEST_CASE("record store round trip") {
  const reward::MomentumReward my(reward::Component::Y);
  auto rec = greedy_rollout(surrogate(), my, truth().snapshots[0], config(3));
  rec.ic_index = 4;
  rec.family = "rp";
  const auto path = std::filesystem::temp_directory_path() / "pdettc_rollouts.bin";
  save_rollouts(path, {rec, rec});
  const auto back = load_rollouts(path);
  REQUIRE(back.size() == 2);
  CHECK(back[1].ic_index == 4);
  CHECK(back[1].config.branching == 3);
  CHECK(back[1].steps[2].rewards.size() == rec.steps[2].rewards.size());
  for (std::size_t i = 0; i < rec.steps[2].rewards.size(); ++i)
    CHECK(back[1].steps[2].rewards[i].has_value() == rec.steps[2].rewards[i].has_value());
  CHECK(back[1].chosen.size() == rec.chosen.size());
  CHECK((back[1].chosen[5].p - rec.chosen[5].p).abs().maxCoeff() < 1e-5);
  CHECK(satisfies_argmax_contract(back[1]));
}
