#include "config.hpp"

#include "pdettc/core/types.hpp"
#include "pdettc/io/container.hpp"

#include <cstdlib>
#include <fstream>

namespace pdettc::cli {

namespace {

bool same_kind(const nlohmann::json& a, const nlohmann::json& b) {
  if (a.is_number() && b.is_number()) return true;
  return a.type() == b.type();
}

void merge_checked(nlohmann::json& base, const nlohmann::json& user, const std::string& where) {
  if (!user.is_object()) throw ConfigError("config section '" + where + "' must be an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string path = where.empty() ? it.key() : where + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + path + "'");
    auto& slot = base[it.key()];
    if (slot.is_object()) {
      merge_checked(slot, it.value(), path);
    } else {
      if (!same_kind(slot, it.value()))
        throw ConfigError("config key '" + path + "' has the wrong type");
      slot = it.value();
    }
  }
}

}  // namespace

ExperimentConfig::ExperimentConfig() : doc_(defaults()) {}

const nlohmann::json& ExperimentConfig::defaults() {
  static const nlohmann::json d = R"({
    "seed": 0,
    "jobs": 1,
    "output_dir": "runs",
    "data": {
      "families": ["rp"],
      "n": 128,
      "grid": 64,
      "splits": [0.75, 0.125, 0.125],
      "cfl": 0.4
    },
    "model": {"preset": "vit7", "size": "desk", "dropout": 0.1},
    "train": {
      "preset": "desk",
      "lr": 0.0,
      "weight_decay": -1.0,
      "epochs": -1,
      "batch_size": 8,
      "warmup_steps": -1,
      "min_lr_ratio": 0.05,
      "grad_clip": 1.0,
      "max_val_pairs": 200,
      "loss_p": 2.0
    },
    "finetune": {
      "preset": "desk",
      "n_traj": 16,
      "lr": 0.0,
      "weight_decay": -1.0,
      "epochs": -1,
      "batch_size": 8,
      "warmup_steps": -1,
      "min_lr_ratio": 0.05,
      "grad_clip": 1.0,
      "max_val_pairs": 200,
      "loss_p": 2.0
    },
    "prm": {
      "K": 100,
      "alpha": 0.1,
      "lr": 3e-4,
      "weight_decay": 1e-4,
      "epochs": 20,
      "batch_size": 16,
      "warmup_steps": 10,
      "holdout_fraction": 0.2,
      "orientation": "higher_is_better",
      "max_trajectories": 0,
      "init_from_surrogate": true
    },
    "ttc": {
      "B_list": [1, 4, 16, 64],
      "rewards": ["arm_mass", "arm_energy", "prm"],
      "seeds": [0],
      "T": 20,
      "independent_streams": false,
      "split": "test",
      "max_ics": 0
    }
  })"_json;
  return d;
}

void ExperimentConfig::merge(const nlohmann::json& user) { merge_checked(doc_, user, ""); }

void ExperimentConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  nlohmann::json user;
  try {
    user = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  merge(user);
}

void ExperimentConfig::set(const std::string& dotted, const nlohmann::json& value) {
  nlohmann::json patch = value;
  std::string rest = dotted;
  std::vector<std::string> parts;
  for (std::size_t pos; (pos = rest.find('.')) != std::string::npos; rest = rest.substr(pos + 1))
    parts.push_back(rest.substr(0, pos));
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = nlohmann::json{{*it, patch}};
  merge(patch);
}

void ExperimentConfig::apply_environment() {
  if (const char* s = std::getenv("PDETTC_SEED"); s && *s) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (*end != '\0') throw ConfigError("PDETTC_SEED must be an unsigned integer");
    doc_["seed"] = v;
  }
}

const nlohmann::json& ExperimentConfig::at(const std::string& dotted) const {
  return doc_.at(nlohmann::json::json_pointer("/" + [&] {
    std::string p = dotted;
    for (char& c : p)
      if (c == '.') c = '/';
    return p;
  }()));
}

void ExperimentConfig::validate() const {
  if (jobs() < 1) throw ConfigError("jobs must be >= 1");
  const auto& data = doc_["data"];
  if (data["n"].get<int>() < 0) throw ConfigError("data.n must be >= 0");
  if (data["grid"].get<int>() < 8) throw ConfigError("data.grid must be >= 8");
  if (data["families"].empty()) throw ConfigError("data.families must not be empty");
  if (data["splits"].size() != 3) throw ConfigError("data.splits needs three fractions");
  const auto& ttc = doc_["ttc"];
  if (ttc["B_list"].empty()) throw ConfigError("ttc.B_list must not be empty");
  for (const auto& b : ttc["B_list"])
    if (b.get<int>() < 1) throw ConfigError("every B must be >= 1");
  if (ttc["T"].get<int>() < 1) throw ConfigError("ttc.T must be >= 1");
  if (ttc["seeds"].empty()) throw ConfigError("ttc.seeds must not be empty");
  if (doc_["prm"]["K"].get<int>() < 2) throw ConfigError("prm.K must be >= 2");
}

std::string ExperimentConfig::digest() const { return io::text_digest(doc_.dump()); }

}  // namespace pdettc::cli
