#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pdettc::cli {

/// Experiment configuration: a JSON document checked against the default
/// document. Unknown keys and type mismatches are ConfigErrors.
class ExperimentConfig {
 public:
  ExperimentConfig();

  static const nlohmann::json& defaults();

  /// Merges a user document (file contents) into the defaults.
  void merge(const nlohmann::json& user);
  void merge_file(const std::filesystem::path& path);
  /// Sets one value by dotted path ("train.lr"); the key must exist.
  void set(const std::string& dotted, const nlohmann::json& value);
  /// Applies PDETTC_SEED when set.
  void apply_environment();
  /// Range checks that the schema cannot express.
  void validate() const;

  const nlohmann::json& doc() const { return doc_; }
  const nlohmann::json& at(const std::string& dotted) const;
  std::string digest() const;

  std::uint64_t seed() const { return doc_.at("seed").get<std::uint64_t>(); }
  int jobs() const { return doc_.at("jobs").get<int>(); }

 private:
  nlohmann::json doc_;
};

}  // namespace pdettc::cli
