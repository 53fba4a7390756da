#pragma once

#include "pdettc/model/surrogate.hpp"
#include "pdettc/reward/prm.hpp"

#include <json.hpp>

#include <filesystem>

namespace pdettc::model {

nlohmann::json vit_config_json(const nn::VitConfig& c);
nn::VitConfig vit_config_from_json(const nlohmann::json& j);

/// Parameters, AdamW moments, step counter, architecture and normalisation.
/// `extra` is merged into the header (config digest, training history).
void save_surrogate(const std::filesystem::path& path, const Surrogate& model,
                    const nlohmann::json& extra = nlohmann::json::object());
/// Restores the full optimizer state so training can resume.
Surrogate load_surrogate(const std::filesystem::path& path, nlohmann::json* header = nullptr);

void save_prm(const std::filesystem::path& path, const reward::ProcessRewardModel& prm,
              const nlohmann::json& extra = nlohmann::json::object());
reward::ProcessRewardModel load_prm(const std::filesystem::path& path,
                                    nlohmann::json* header = nullptr);

}  // namespace pdettc::model
