#pragma once

#include "pdettc/core/types.hpp"
#include "pdettc/euler/dataset.hpp"

#include <json.hpp>

#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace pdettc::io {

/// Field containers (datasets, triplet stores, rollouts): 16-byte magic
/// "PDETTC01" (NUL padded), u64 little-endian header length, UTF-8 JSON
/// header, then little-endian float32 payload.
inline constexpr std::string_view kContainerMagic = "PDETTC01";
/// Parameter checkpoints: 8-byte magic, u64 header length, JSON header, then
/// little-endian float64 blobs in the order of header["blobs"].
inline constexpr std::string_view kCheckpointMagic = "PDETTCPM";

struct Container {
  nlohmann::json header;
  std::vector<float> data;
};

/// Writes `path` and, when `sidecar` is set, `path` + ".json" holding the
/// pretty-printed header.
void write_container(const std::filesystem::path& path, const nlohmann::json& header,
                     std::span<const float> data, bool sidecar = true);
Container read_container(const std::filesystem::path& path);

/// Appends rho, vx, vy, p, each row-major over (y, x) with x fastest.
void append_snapshot(std::vector<float>& out, const euler::Snapshot& u);
euler::Snapshot read_snapshot(std::span<const float> data, int nx, int ny, double t);

nlohmann::json dataset_header(const euler::Dataset& ds);
void save_dataset(const euler::Dataset& ds, const std::filesystem::path& path,
                  const nlohmann::json& extra = nlohmann::json::object());
/// Fields come back at float32 precision.
euler::Dataset load_dataset(const std::filesystem::path& path);

struct Checkpoint {
  nlohmann::json header;
  std::vector<Matrix> blobs;
};

/// header["blobs"] is overwritten with the names and shapes of `blobs`.
void write_checkpoint(const std::filesystem::path& path, nlohmann::json header,
                      const std::vector<std::pair<std::string, const Matrix*>>& blobs);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// FNV-1a over the bytes of a file, hex encoded.
std::string file_digest(const std::filesystem::path& path);
std::string text_digest(std::string_view text);

}  // namespace pdettc::io
