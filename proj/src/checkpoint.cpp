#include "pdettc/model/checkpoint.hpp"

#include "pdettc/io/container.hpp"
#include "pdettc/io/json_types.hpp"

namespace pdettc::model {

nlohmann::json vit_config_json(const nn::VitConfig& c) {
  return {{"height", c.height},         {"width", c.width},     {"patch", c.patch},
          {"in_channels", c.in_channels}, {"out_channels", c.out_channels},
          {"embed_dim", c.embed_dim},   {"depth", c.depth},     {"heads", c.heads},
          {"mlp_ratio", c.mlp_ratio},   {"dropout", c.dropout},
          {"head", c.head == nn::Head::Image ? "image" : "scalar"}};
}

nn::VitConfig vit_config_from_json(const nlohmann::json& j) {
  nn::VitConfig c;
  c.height = j.at("height");
  c.width = j.at("width");
  c.patch = j.at("patch");
  c.in_channels = j.at("in_channels");
  c.out_channels = j.at("out_channels");
  c.embed_dim = j.at("embed_dim");
  c.depth = j.at("depth");
  c.heads = j.at("heads");
  c.mlp_ratio = j.at("mlp_ratio");
  c.dropout = j.at("dropout");
  c.head = j.at("head") == "image" ? nn::Head::Image : nn::Head::Scalar;
  return c;
}

namespace {

void write_store(const std::filesystem::path& path, nlohmann::json header,
                 const nn::ParamStore& store) {
  header["step"] = store.step;
  std::vector<std::pair<std::string, const Matrix*>> blobs;
  for (const auto& p : store) {
    blobs.emplace_back(p.name, &p.value);
    blobs.emplace_back(p.name + "#m", &p.m);
    blobs.emplace_back(p.name + "#v", &p.v);
  }
  io::write_checkpoint(path, std::move(header), blobs);
}

void restore_store(const io::Checkpoint& ck, nn::ParamStore& store) {
  const auto& names = ck.header.at("blobs");
  for (std::size_t k = 0; k < names.size(); ++k) {
    std::string name = names[k].at("name");
    std::string field = "value";
    if (const auto hash = name.find('#'); hash != std::string::npos) {
      field = name.substr(hash + 1);
      name.resize(hash);
    }
    const int id = store.find(name);
    if (id < 0) throw ConfigError("checkpoint has unknown parameter " + name);
    auto& p = store[id];
    Matrix& dst = field == "value" ? p.value : field == "m" ? p.m : p.v;
    if (dst.rows() != ck.blobs[k].rows() || dst.cols() != ck.blobs[k].cols())
      throw ConfigError("checkpoint shape mismatch for " + names[k].at("name").get<std::string>());
    dst = ck.blobs[k];
  }
  store.step = ck.header.at("step");
}

}  // namespace

void save_surrogate(const std::filesystem::path& path, const Surrogate& model,
                    const nlohmann::json& extra) {
  nlohmann::json h = extra;
  h["model_kind"] = "surrogate";
  h["vit"] = vit_config_json(model.config().vit);
  h["time_channel"] = model.config().time_channel;
  h["time_step"] = model.config().time_step;
  h["normalization"] = model.normalization();
  write_store(path, std::move(h), model.net().params());
}

Surrogate load_surrogate(const std::filesystem::path& path, nlohmann::json* header) {
  const auto ck = io::read_checkpoint(path);
  if (ck.header.value("model_kind", "") != "surrogate")
    throw ConfigError(path.string() + " is not a surrogate checkpoint");
  ModelConfig cfg;
  cfg.vit = vit_config_from_json(ck.header.at("vit"));
  cfg.time_channel = ck.header.at("time_channel");
  cfg.time_step = ck.header.at("time_step");
  Surrogate model(cfg, ck.header.at("normalization").get<euler::Normalization>(), 0);
  restore_store(ck, model.net().params());
  if (header) *header = ck.header;
  return model;
}

void save_prm(const std::filesystem::path& path, const reward::ProcessRewardModel& prm,
              const nlohmann::json& extra) {
  nlohmann::json h = extra;
  const auto& c = prm.config();
  h["model_kind"] = "prm";
  h["vit"] = vit_config_json(c.backbone);
  h["alpha"] = c.alpha;
  h["K"] = c.K;
  h["orientation"] =
      c.orientation == reward::TripletOrientation::HigherIsBetter ? "higher_is_better" : "mse_ascending";
  h["normalization"] = prm.normalization();
  write_store(path, std::move(h), prm.net().params());
}

reward::ProcessRewardModel load_prm(const std::filesystem::path& path, nlohmann::json* header) {
  const auto ck = io::read_checkpoint(path);
  if (ck.header.value("model_kind", "") != "prm")
    throw ConfigError(path.string() + " is not a PRM checkpoint");
  reward::PRMConfig cfg;
  cfg.backbone = vit_config_from_json(ck.header.at("vit"));
  cfg.alpha = ck.header.at("alpha");
  cfg.K = ck.header.at("K");
  cfg.orientation = ck.header.at("orientation") == "higher_is_better"
                        ? reward::TripletOrientation::HigherIsBetter
                        : reward::TripletOrientation::MseAscending;
  reward::ProcessRewardModel prm(cfg, ck.header.at("normalization").get<euler::Normalization>(), 0);
  restore_store(ck, prm.net().params());
  if (header) *header = ck.header;
  return prm;
}

}  // namespace pdettc::model
