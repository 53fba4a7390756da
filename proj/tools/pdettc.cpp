#include "config.hpp"
#include "report.hpp"

#include "pdettc/euler/dataset.hpp"
#include "pdettc/io/container.hpp"
#include "pdettc/metrics/report.hpp"
#include "pdettc/model/checkpoint.hpp"
#include "pdettc/reward/prm.hpp"
#include "pdettc/ttc/rollout.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pdettc;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> output_dir;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "JSON experiment configuration")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Overrides the configuration seed");
  app->add_option("--jobs", c.jobs, "Worker threads");
  app->add_option("--output-dir", c.output_dir, "Directory for default output paths");
}

/// Defaults, then the config file, then PDETTC_SEED, then flags.
cli::ExperimentConfig resolve(const Common& c, const std::vector<std::pair<std::string, json>>& flags) {
  cli::ExperimentConfig cfg;
  if (!c.config_path.empty()) cfg.merge_file(c.config_path);
  cfg.apply_environment();
  if (c.seed) cfg.set("seed", *c.seed);
  if (c.jobs) cfg.set("jobs", *c.jobs);
  if (c.output_dir) cfg.set("output_dir", *c.output_dir);
  for (const auto& [key, value] : flags) cfg.set(key, value);
  cfg.validate();
  return cfg;
}

template <typename T>
void flag(std::vector<std::pair<std::string, json>>& out, const std::string& key,
          const std::optional<T>& v) {
  if (v) out.emplace_back(key, *v);
}

fs::path default_path(const cli::ExperimentConfig& cfg, const std::string& given,
                      const std::string& name) {
  return given.empty() ? fs::path(cfg.at("output_dir").get<std::string>()) / name : fs::path(given);
}

json provenance(const cli::ExperimentConfig& cfg, const std::string& command) {
  return {{"config_digest", cfg.digest()}, {"config", cfg.doc()}, {"command", command}};
}

std::vector<euler::ICFamily> families_of(const json& list) {
  std::vector<euler::ICFamily> out;
  for (const auto& f : list) out.push_back(euler::parse_family(f.get<std::string>()));
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

model::TrainConfig train_config(const json& section, std::uint64_t seed, int jobs, bool finetune) {
  const auto preset = section.at("preset").get<std::string>();
  model::TrainConfig c;
  if (preset == "desk")
    c = finetune ? model::TrainConfig::desk_finetune() : model::TrainConfig::desk_pretrain();
  else if (preset == "paper")
    c = finetune ? model::TrainConfig::paper_finetune() : model::TrainConfig::paper_pretrain();
  else
    throw ConfigError("unknown training preset '" + preset + "' (desk|paper)");
  if (section.at("lr").get<double>() > 0.0) c.lr = section.at("lr");
  if (section.at("weight_decay").get<double>() >= 0.0) c.weight_decay = section.at("weight_decay");
  if (section.at("epochs").get<int>() >= 0) c.epochs = section.at("epochs");
  if (section.at("warmup_steps").get<int>() >= 0) c.warmup_steps = section.at("warmup_steps");
  c.batch_size = section.at("batch_size");
  c.min_lr_ratio = section.at("min_lr_ratio");
  c.grad_clip = section.at("grad_clip");
  c.max_val_pairs = section.at("max_val_pairs");
  c.loss_p = section.at("loss_p");
  c.seed = seed;
  c.jobs = jobs;
  c.validate();
  return c;
}

void write_loss_csv(const fs::path& path, const model::TrainReport& r) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "epoch,train_loss,val_mse,lr,seconds\n";
  for (const auto& e : r.history)
    out << e.epoch << ',' << e.train_loss << ',' << e.val_mse << ',' << e.lr << ',' << e.seconds
        << '\n';
}

json train_report_json(const model::TrainReport& r) {
  return {{"init_val_mse", r.init_val_mse},
          {"best_val_mse", r.best_val_mse},
          {"best_epoch", r.best_epoch},
          {"epochs", r.history.size()},
          {"seconds", r.seconds},
          {"trajectories", r.trajectories}};
}

// ------------------------------------------------------------------ gen-data

int cmd_gen_data(const Common& common, const std::optional<std::string>& families,
                 const std::optional<int>& n, const std::optional<int>& grid,
                 const std::string& out_arg) {
  std::vector<std::pair<std::string, json>> flags;
  if (families) flags.emplace_back("data.families", split_list(*families));
  flag(flags, "data.n", n);
  flag(flags, "data.grid", grid);
  const auto cfg = resolve(common, flags);
  const auto& d = cfg.at("data");
  euler::GridSpec g;
  g.nx = g.ny = d.at("grid");
  g.validate();
  euler::SplitFractions fr{d.at("splits")[0], d.at("splits")[1], d.at("splits")[2]};
  euler::SolverOptions opt;
  opt.cfl = d.at("cfl");
  const auto fams = families_of(d.at("families"));
  const auto t0 = std::chrono::steady_clock::now();
  const auto ds = euler::generate_dataset(fams, d.at("n"), g, cfg.seed(), fr, opt, cfg.jobs());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto out = default_path(cfg, out_arg, "data.bin");
  io::save_dataset(ds, out, provenance(cfg, "gen-data"));

  for (auto f : fams) {
    double mass = 0.0, energy = 0.0, mom = 0.0;
    int count = 0;
    for (const auto& traj : ds.trajectories) {
      if (traj.ic.family != f) continue;
      ++count;
      const auto a = euler::totals(traj.snapshots.front(), ds.gamma);
      const auto& s0 = traj.snapshots.front();
      const double mom_scale = (s0.rho * (s0.vx.abs() + s0.vy.abs())).sum();
      for (const auto& s : traj.snapshots) {
        const auto b = euler::totals(s, ds.gamma);
        mass = std::max(mass, std::abs(b.mass - a.mass) / a.mass);
        energy = std::max(energy, std::abs(b.energy - a.energy) / a.energy);
        if (mom_scale > 0.0)
          mom = std::max({mom, std::abs(b.mom_x - a.mom_x) / mom_scale,
                          std::abs(b.mom_y - a.mom_y) / mom_scale});
      }
    }
    std::printf("audit family=%s trajectories=%d max_mass_drift=%.3e max_momentum_drift=%.3e "
                "max_energy_drift=%.3e\n",
                std::string(euler::family_name(f)).c_str(), count, mass, mom, energy);
  }
  std::printf("wrote %s (%d trajectories, %.1f s, digest %s)\n", out.string().c_str(), ds.size(),
              secs, io::file_digest(out).c_str());
  return 0;
}

// --------------------------------------------------------- train / finetune

int cmd_train(const Common& common, const std::string& data, const std::optional<std::string>& preset,
              const std::optional<std::string>& size, const std::optional<int>& epochs,
              const std::optional<double>& lr, const std::string& out_arg, const std::string& resume) {
  std::vector<std::pair<std::string, json>> flags;
  flag(flags, "model.preset", preset);
  flag(flags, "model.size", size);
  flag(flags, "train.epochs", epochs);
  flag(flags, "train.lr", lr);
  const auto cfg = resolve(common, flags);
  const auto ds = io::load_dataset(data);
  const auto tc = train_config(cfg.at("train"), cfg.seed(), cfg.jobs(), false);

  model::Surrogate m;
  if (!resume.empty()) {
    m = model::load_surrogate(resume);
    std::printf("resuming from %s at step %lld\n", resume.c_str(),
                static_cast<long long>(m.net().params().step));
  } else {
    auto mc = model::preset(model::parse_model_preset(cfg.at("model.preset").get<std::string>()),
                            model::parse_size_preset(cfg.at("model.size").get<std::string>()),
                            ds.grid.ny, ds.grid.nx);
    mc.vit.dropout = cfg.at("model.dropout");
    if (mc.vit.height != ds.grid.ny || mc.vit.width != ds.grid.nx)
      throw ConfigError("model image size does not match the dataset grid");
    m = model::Surrogate(mc, ds.normalization, cfg.seed());
  }
  const auto report = model::train(m, ds, tc);
  const auto out = default_path(cfg, out_arg, "surrogate.ckpt");
  json extra = provenance(cfg, "train");
  extra["train_report"] = train_report_json(report);
  extra["dataset_digest"] = io::file_digest(data);
  model::save_surrogate(out, m, extra);
  write_loss_csv(fs::path(out.string() + ".loss.csv"), report);
  std::printf("train: init val mse %.4e -> best %.4e (epoch %d), %.1f s, step %lld, wrote %s\n",
              report.init_val_mse, report.best_val_mse, report.best_epoch, report.seconds,
              static_cast<long long>(m.net().params().step), out.string().c_str());
  return 0;
}

int cmd_finetune(const Common& common, const std::string& checkpoint, const std::string& data,
                 const std::optional<int>& n_traj, const std::optional<int>& epochs,
                 const std::optional<double>& lr, const std::string& out_arg) {
  std::vector<std::pair<std::string, json>> flags;
  flag(flags, "finetune.n_traj", n_traj);
  flag(flags, "finetune.epochs", epochs);
  flag(flags, "finetune.lr", lr);
  const auto cfg = resolve(common, flags);
  const auto ds = io::load_dataset(data);
  auto m = model::load_surrogate(checkpoint);
  const auto tc = train_config(cfg.at("finetune"), cfg.seed(), cfg.jobs(), true);
  const auto report = model::finetune(m, ds, cfg.at("finetune.n_traj"), tc);
  const auto out = default_path(cfg, out_arg, "finetuned.ckpt");
  json extra = provenance(cfg, "finetune");
  extra["train_report"] = train_report_json(report);
  extra["base_checkpoint_digest"] = io::file_digest(checkpoint);
  model::save_surrogate(out, m, extra);
  write_loss_csv(fs::path(out.string() + ".loss.csv"), report);
  std::printf("finetune: %zu trajectories, init val mse %.4e -> best %.4e, %.1f s, wrote %s\n",
              report.trajectories.size(), report.init_val_mse, report.best_val_mse, report.seconds,
              out.string().c_str());
  return 0;
}

// ---------------------------------------------------------------- train-prm

int cmd_train_prm(const Common& common, const std::string& checkpoint, const std::string& data,
                  const std::optional<int>& K, const std::optional<double>& alpha,
                  const std::optional<int>& epochs, const std::optional<double>& lr,
                  const std::optional<std::string>& orientation,
                  const std::optional<int>& max_traj, const std::string& out_arg,
                  const std::string& triplets_arg) {
  std::vector<std::pair<std::string, json>> flags;
  flag(flags, "prm.K", K);
  flag(flags, "prm.alpha", alpha);
  flag(flags, "prm.epochs", epochs);
  flag(flags, "prm.lr", lr);
  flag(flags, "prm.orientation", orientation);
  flag(flags, "prm.max_trajectories", max_traj);
  const auto cfg = resolve(common, flags);
  const auto ds = io::load_dataset(data);
  const auto fm = model::load_surrogate(checkpoint);
  const auto& p = cfg.at("prm");

  auto pc = reward::PRMConfig::matched(fm.config());
  pc.alpha = p.at("alpha");
  pc.K = p.at("K");
  pc.lr = p.at("lr");
  pc.weight_decay = p.at("weight_decay");
  pc.epochs = p.at("epochs");
  pc.batch_size = p.at("batch_size");
  pc.warmup_steps = p.at("warmup_steps");
  pc.holdout_fraction = p.at("holdout_fraction");
  const auto orient = p.at("orientation").get<std::string>();
  if (orient == "higher_is_better")
    pc.orientation = reward::TripletOrientation::HigherIsBetter;
  else if (orient == "mse_ascending")
    pc.orientation = reward::TripletOrientation::MseAscending;
  else
    throw ConfigError("prm.orientation must be higher_is_better or mse_ascending");
  pc.seed = cfg.seed();
  pc.jobs = cfg.jobs();
  pc.validate();

  auto train_idx = ds.indices(euler::Split::Train);
  const int cap = p.at("max_trajectories");
  if (cap > 0 && cap < static_cast<int>(train_idx.size())) {
    RngStream rng(cfg.seed(), 0x7A1);
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    train_idx.resize(static_cast<std::size_t>(cap));
    std::sort(train_idx.begin(), train_idx.end());
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto triplets =
      reward::build_prm_triplets(fm, ds, pc.K, cfg.seed(), train_idx, cfg.jobs());
  const double build_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto trip_path = default_path(cfg, triplets_arg, "triplets.bin");
  json extra = provenance(cfg, "train-prm");
  extra["K"] = pc.K;
  reward::save_triplets(trip_path, triplets, ds.grid, extra);
  std::printf("triplets: %zu from %zu trajectories in %.1f s, wrote %s\n", triplets.size(),
              train_idx.size(), build_s, trip_path.string().c_str());

  reward::ProcessRewardModel prm(pc, fm.normalization(), cfg.seed() + 1);
  if (p.at("init_from_surrogate").get<bool>()) reward::warm_start_from_surrogate(prm, fm);
  const auto r = reward::train_prm(prm, triplets, pc);
  const auto out = default_path(cfg, out_arg, "prm.ckpt");
  extra["train_report"] = {{"init_loss", r.init_loss},
                           {"final_loss", r.final_loss},
                           {"init_accuracy", r.init_accuracy},
                           {"best_heldout_accuracy", r.best_accuracy},
                           {"best_epoch", r.best_epoch},
                           {"n_train", r.n_train},
                           {"n_heldout", r.n_heldout},
                           {"seconds", r.seconds}};
  model::save_prm(out, prm, extra);
  std::ofstream loss(out.string() + ".loss.csv");
  loss << "epoch,train_loss,heldout_loss,heldout_accuracy,seconds\n";
  for (const auto& e : r.history)
    loss << e.epoch << ',' << e.train_loss << ',' << e.heldout_loss << ',' << e.heldout_accuracy
         << ',' << e.seconds << '\n';
  std::printf("train-prm: loss %.4f -> %.4f, held-out accuracy %.3f (epoch %d), %.1f s, wrote %s\n",
              r.init_loss, r.final_loss, r.best_accuracy, r.best_epoch, r.seconds,
              out.string().c_str());
  return 0;
}

// ---------------------------------------------------------------- rollout

struct SweepInputs {
  euler::Dataset ds;
  std::vector<int> dataset_indices;
  std::vector<const euler::Trajectory*> ics;
};

SweepInputs load_sweep_inputs(const cli::ExperimentConfig& cfg, const std::string& data) {
  SweepInputs in;
  in.ds = io::load_dataset(data);
  const auto split = cfg.at("ttc.split").get<std::string>();
  euler::Split s = split == "train" ? euler::Split::Train
                   : split == "val" ? euler::Split::Val
                   : split == "test" ? euler::Split::Test
                                     : throw ConfigError("ttc.split must be train, val or test");
  in.dataset_indices = in.ds.indices(s);
  const int cap = cfg.at("ttc.max_ics");
  if (cap > 0 && cap < static_cast<int>(in.dataset_indices.size()))
    in.dataset_indices.resize(static_cast<std::size_t>(cap));
  for (int k : in.dataset_indices) in.ics.push_back(&in.ds.trajectories[k]);
  if (in.ics.empty()) throw ConfigError("no trajectories in the '" + split + "' split");
  return in;
}

int cmd_rollout(const Common& common, const std::string& checkpoint, const std::string& data,
                const std::optional<std::string>& rewards, const std::string& prm_path,
                const std::optional<std::string>& b_list, const std::optional<std::string>& seeds,
                const std::optional<int>& T, const std::optional<int>& max_ics,
                bool independent, const std::string& out_arg) {
  std::vector<std::pair<std::string, json>> flags;
  if (rewards) flags.emplace_back("ttc.rewards", split_list(*rewards));
  if (b_list) {
    std::vector<int> v;
    for (const auto& s : split_list(*b_list)) v.push_back(std::stoi(s));
    flags.emplace_back("ttc.B_list", v);
  }
  if (seeds) {
    std::vector<std::uint64_t> v;
    for (const auto& s : split_list(*seeds)) v.push_back(std::stoull(s));
    flags.emplace_back("ttc.seeds", v);
  }
  flag(flags, "ttc.T", T);
  flag(flags, "ttc.max_ics", max_ics);
  if (independent) flags.emplace_back("ttc.independent_streams", true);
  const auto cfg = resolve(common, flags);
  const auto fm = model::load_surrogate(checkpoint);
  const auto in = load_sweep_inputs(cfg, data);

  std::optional<reward::ProcessRewardModel> prm;
  std::vector<ttc::RolloutRecord> all;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& name : cfg.at("ttc.rewards")) {
    const auto kind = reward::parse_reward(name.get<std::string>());
    if (kind == reward::RewardKind::Prm && !prm) {
      if (prm_path.empty()) throw ConfigError("reward 'prm' needs --prm");
      prm = model::load_prm(prm_path);
    }
    ttc::SweepOptions opt;
    opt.reward = kind;
    opt.steps = cfg.at("ttc.T");
    opt.independent_streams = cfg.at("ttc.independent_streams");
    opt.jobs = cfg.jobs();
    auto recs = ttc::rollout_sweep(
        fm, ttc::make_reward_factory(kind, in.ds.normalization, prm ? &*prm : nullptr, in.ds.gamma),
        in.ics, cfg.at("ttc.B_list").get<std::vector<int>>(),
        cfg.at("ttc.seeds").get<std::vector<std::uint64_t>>(), opt);
    all.insert(all.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
  }
  int failed = 0, violations = 0, contract = 0;
  for (const auto& r : all) {
    failed += !r.complete();
    contract += !ttc::satisfies_argmax_contract(r);
    for (const auto& s : r.steps) violations += s.positivity_violation;
  }
  const auto out = default_path(cfg, out_arg, "rollouts.bin");
  json extra = provenance(cfg, "rollout");
  extra["dataset_indices"] = in.dataset_indices;
  extra["dataset_digest"] = io::file_digest(data);
  extra["checkpoint_digest"] = io::file_digest(checkpoint);
  extra["model_name"] = fs::path(checkpoint).stem().string();
  ttc::save_rollouts(out, all, extra);
  std::printf("rollout: %zu records (%d incomplete, %d positivity violations, %d contract "
              "breaches) in %.1f s, wrote %s\n",
              all.size(), failed, violations, contract,
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
              out.string().c_str());
  return failed > 0 ? 3 : 0;
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(const Common& common, const std::string& data,
                 const std::vector<std::string>& records_paths, const std::string& model_name,
                 const std::string& out_prefix_arg) {
  const auto cfg = resolve(common, {});
  const auto ds = io::load_dataset(data);
  std::vector<const euler::Trajectory*> all_truth(ds.trajectories.size());
  metrics::EvalReport merged;
  for (const auto& path : records_paths) {
    const auto header = io::read_container(path).header;
    const auto idx = header.at("dataset_indices").get<std::vector<int>>();
    std::vector<const euler::Trajectory*> truth;
    for (int k : idx) {
      if (k < 0 || k >= ds.size()) throw ConfigError(path + " refers to trajectories outside the dataset");
      truth.push_back(&ds.trajectories[k]);
    }
    const std::string name =
        model_name.empty() ? header.value("model_name", fs::path(path).stem().string()) : model_name;
    const auto recs = ttc::load_rollouts(path);
    metrics::merge_into(merged, metrics::evaluate_records(recs, truth, ds.normalization,
                                                          fs::path(data).stem().string(), name,
                                                          ds.gamma));
  }
  const fs::path prefix = default_path(cfg, out_prefix_arg, "eval");
  metrics::write_csv(prefix.string() + ".csv", merged.rows);
  json summary = metrics::summary_json(merged);
  summary["config_digest"] = cfg.digest();
  summary["records"] = records_paths;
  std::ofstream(prefix.string() + ".summary.json") << summary.dump(2) << '\n';
  std::printf("%-12s %-14s %5s %6s %12s %10s\n", "model", "reward", "B", "n_ics", "final_mse",
              "gain_%");
  for (const auto& g : merged.groups)
    std::printf("%-12s %-14s %5d %6d %12.4e %10s\n", g.model.c_str(), g.reward.c_str(), g.B,
                g.n_ics, g.final_mse_mean,
                g.aggregate_gain ? std::to_string(*g.aggregate_gain).c_str() : "n/a");
  std::printf("wrote %s.csv and %s.summary.json\n", prefix.string().c_str(), prefix.string().c_str());
  return 0;
}

// ---------------------------------------------------------------- report

int cmd_report(const Common& common, const std::string& csv_path, const std::string& data,
               const std::string& records_path, const std::string& out_arg) {
  const auto cfg = resolve(common, {});
  const fs::path dir = default_path(cfg, out_arg, "report");
  fs::create_directories(dir);
  const auto rows = metrics::read_csv(csv_path);
  // (model, reward) -> B -> t -> (sum, count)
  std::map<std::pair<std::string, std::string>, std::map<int, std::map<int, std::pair<double, int>>>> acc;
  for (const auto& r : rows) {
    auto& cell = acc[{r.model, r.reward}][r.B][r.t];
    cell.first += r.mse;
    cell.second += 1;
  }
  std::vector<std::string> written;
  for (const auto& [key, by_b] : acc) {
    std::vector<cli::Series> series;
    for (const auto& [b, by_t] : by_b) {
      cli::Series s;
      s.label = "B = " + std::to_string(b);
      for (const auto& [t, sc] : by_t) {
        s.x.push_back(t);
        s.y.push_back(sc.first / sc.second);
      }
      series.push_back(std::move(s));
    }
    const auto path = dir / ("mse_vs_t_" + key.first + "_" + key.second + ".svg");
    cli::write_svg_plot(path, "Rollout MSE: " + key.first + ", reward " + key.second,
                        "time step", "mean MSE", series);
    written.push_back(path.string());
  }
  if (!records_path.empty()) {
    if (data.empty()) throw ConfigError("--records needs --data for the reference fields");
    const auto ds = io::load_dataset(data);
    const auto header = io::read_container(records_path).header;
    const auto idx = header.at("dataset_indices").get<std::vector<int>>();
    const auto recs = ttc::load_rollouts(records_path);
    std::map<std::pair<std::string, int>, bool> done;
    for (const auto& r : recs) {
      if (!r.complete() || r.ic_index != 0 || done[{r.reward_id, r.config.branching}]) continue;
      done[{r.reward_id, r.config.branching}] = true;
      const auto name = "rho_" + r.reward_id + "_B" + std::to_string(r.config.branching) + ".pgm";
      cli::write_pgm(dir / name, r.chosen.back().rho);
      written.push_back((dir / name).string());
    }
    if (!idx.empty()) {
      cli::write_pgm(dir / "rho_truth.pgm", ds.trajectories[idx[0]].snapshots.back().rho);
      written.push_back((dir / "rho_truth.pgm").string());
    }
  }
  std::ofstream(dir / "manifest.json")
      << json{{"config_digest", cfg.digest()}, {"source_csv", csv_path}, {"files", written}}.dump(2)
      << '\n';
  for (const auto& w : written) std::printf("wrote %s\n", w.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reward-model-driven test-time compute for neural PDE surrogates"};
  app.require_subcommand(1);
  Common common;
  int rc = 0;

  auto* gen = app.add_subcommand("gen-data", "Simulate a dataset of Euler trajectories");
  add_common(gen, common);
  std::optional<std::string> families;
  std::optional<int> n, grid;
  std::string gen_out;
  gen->add_option("--families", families, "Comma-separated: rp,crp,gauss,kh,rpui,rm");
  gen->add_option("--n", n, "Trajectories per family");
  gen->add_option("--grid", grid, "Cells per side");
  gen->add_option("--out", gen_out, "Output container path");
  gen->callback([&] { rc = cmd_gen_data(common, families, n, grid, gen_out); });

  auto* train = app.add_subcommand("train", "Train a surrogate");
  add_common(train, common);
  std::string data, out, resume, checkpoint, prm_path, triplets_out, model_name, csv, records;
  std::optional<std::string> preset, size, orientation, rewards, b_list, seeds;
  std::optional<int> epochs, n_traj, K, max_traj, T, max_ics;
  std::optional<double> lr, alpha;
  bool independent = false;
  train->add_option("--data", data, "Dataset container")->required();
  train->add_option("--model", preset, "vit3 | vit5 | vit7");
  train->add_option("--preset", size, "desk | paper");
  train->add_option("--epochs", epochs);
  train->add_option("--lr", lr);
  train->add_option("--out", out, "Checkpoint path");
  train->add_option("--resume", resume, "Continue from a checkpoint");
  train->callback([&] { rc = cmd_train(common, data, preset, size, epochs, lr, out, resume); });

  auto* fine = app.add_subcommand("finetune", "Finetune a surrogate on a downstream dataset");
  add_common(fine, common);
  fine->add_option("--checkpoint", checkpoint)->required();
  fine->add_option("--data", data)->required();
  fine->add_option("--n-traj", n_traj, "Downstream training trajectories");
  fine->add_option("--epochs", epochs);
  fine->add_option("--lr", lr);
  fine->add_option("--out", out);
  fine->callback([&] { rc = cmd_finetune(common, checkpoint, data, n_traj, epochs, lr, out); });

  auto* tprm = app.add_subcommand("train-prm", "Build triplets and train a process reward model");
  add_common(tprm, common);
  tprm->add_option("--checkpoint", checkpoint, "Surrogate checkpoint")->required();
  tprm->add_option("--data", data)->required();
  tprm->add_option("--K", K, "Candidates per pair (default 100)");
  tprm->add_option("--alpha", alpha, "Triplet margin (default 0.1)");
  tprm->add_option("--epochs", epochs);
  tprm->add_option("--lr", lr);
  tprm->add_option("--orientation", orientation, "higher_is_better | mse_ascending");
  tprm->add_option("--max-trajectories", max_traj, "Cap on training trajectories (0 = all)");
  tprm->add_option("--out", out);
  tprm->add_option("--triplets", triplets_out, "Triplet store path");
  tprm->callback([&] {
    rc = cmd_train_prm(common, checkpoint, data, K, alpha, epochs, lr, orientation, max_traj, out,
                       triplets_out);
  });

  auto* roll = app.add_subcommand("rollout", "Greedy best-of-B rollouts over a split");
  add_common(roll, common);
  roll->add_option("--checkpoint", checkpoint)->required();
  roll->add_option("--data", data)->required();
  roll->add_option("--reward", rewards, "Comma-separated reward names");
  roll->add_option("--prm", prm_path, "PRM checkpoint");
  roll->add_option("--B", b_list, "Comma-separated branching factors");
  roll->add_option("--seeds", seeds, "Comma-separated rollout seeds");
  roll->add_option("--T", T, "Rollout steps");
  roll->add_option("--max-ics", max_ics, "Use only the first N trajectories of the split");
  roll->add_flag("--independent-streams", independent, "Do not share candidate streams across B");
  roll->add_option("--out", out);
  roll->callback([&] {
    rc = cmd_rollout(common, checkpoint, data, rewards, prm_path, b_list, seeds, T, max_ics,
                     independent, out);
  });

  auto* eval = app.add_subcommand("evaluate", "Metrics CSV and summary for rollout records");
  add_common(eval, common);
  std::vector<std::string> record_files;
  eval->add_option("--data", data)->required();
  eval->add_option("--records", record_files, "Rollout stores")->required();
  eval->add_option("--model-name", model_name);
  eval->add_option("--out", out, "Output prefix");
  eval->callback([&] { rc = cmd_evaluate(common, data, record_files, model_name, out); });

  auto* rep = app.add_subcommand("report", "SVG curves and PGM fields");
  add_common(rep, common);
  rep->add_option("--csv", csv, "Metrics CSV from evaluate")->required();
  rep->add_option("--data", data);
  rep->add_option("--records", records);
  rep->add_option("--out", out, "Output directory");
  rep->callback([&] { rc = cmd_report(common, csv, data, records, out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const UndefinedRewardError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return rc;
}
