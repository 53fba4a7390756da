#include "pdettc/io/container.hpp"

#include "pdettc/io/json_types.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

namespace pdettc::euler {

void to_json(nlohmann::json& j, const ICSpec& spec) {
  j = nlohmann::json{{"family", family_name(spec.family)}, {"seed", spec.seed}};
  std::visit([&](const auto& p) { j["params"] = p; }, spec.params);
}

void from_json(const nlohmann::json& j, ICSpec& spec) {
  spec.family = parse_family(j.at("family").get<std::string>());
  spec.seed = j.at("seed").get<std::uint64_t>();
  const auto& p = j.at("params");
  switch (spec.family) {
    case ICFamily::RP: spec.params = p.get<RiemannParams>(); break;
    case ICFamily::CRP: spec.params = p.get<CurvedRiemannParams>(); break;
    case ICFamily::Gauss: spec.params = p.get<GaussParams>(); break;
    case ICFamily::KH: spec.params = p.get<KelvinHelmholtzParams>(); break;
    case ICFamily::RPUI: spec.params = p.get<PerturbedRiemannParams>(); break;
    case ICFamily::RM: spec.params = p.get<RichtmyerMeshkovParams>(); break;
  }
}

}  // namespace pdettc::euler

namespace pdettc::io {

namespace {

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::ifstream open_checked(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  return in;
}

nlohmann::json read_header(std::istream& in, const std::filesystem::path& path) {
  const std::uint64_t len = read_u64(in);
  if (!in || len > (1ULL << 32)) throw ConfigError(path.string() + ": corrupt header length");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw ConfigError(path.string() + ": truncated header");
  return nlohmann::json::parse(text);
}

}  // namespace

void write_container(const std::filesystem::path& path, const nlohmann::json& header,
                     std::span<const float> data, bool sidecar) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  char magic[16] = {};
  std::memcpy(magic, kContainerMagic.data(), kContainerMagic.size());
  out.write(magic, sizeof magic);
  const std::string text = header.dump();
  write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size_bytes()));
  if (!out) throw ConfigError("write failed for " + path.string());
  if (sidecar) {
    std::ofstream side(path.string() + ".json", std::ios::trunc);
    side << header.dump(2) << '\n';
  }
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream in = open_checked(path);
  char magic[16] = {};
  in.read(magic, sizeof magic);
  if (!in || std::string_view(magic, kContainerMagic.size()) != kContainerMagic)
    throw ConfigError(path.string() + ": not a field container");
  Container c;
  c.header = read_header(in, path);
  const auto begin = in.tellg();
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg() - begin);
  in.seekg(begin);
  if (bytes % sizeof(float) != 0) throw ConfigError(path.string() + ": ragged payload");
  c.data.resize(bytes / sizeof(float));
  in.read(reinterpret_cast<char*>(c.data.data()), static_cast<std::streamsize>(bytes));
  return c;
}

void append_snapshot(std::vector<float>& out, const euler::Snapshot& u) {
  for (int c = 0; c < euler::kNumChannels; ++c) {
    const Field& f = u.channel(c);
    // Column-major (i, j) storage already has x fastest.
    for (Eigen::Index k = 0; k < f.size(); ++k) out.push_back(static_cast<float>(f.data()[k]));
  }
}

euler::Snapshot read_snapshot(std::span<const float> data, int nx, int ny, double t) {
  const std::size_t cells = static_cast<std::size_t>(nx) * ny;
  if (data.size() < cells * euler::kNumChannels) throw ConfigError("snapshot payload too short");
  euler::Snapshot u;
  for (int c = 0; c < euler::kNumChannels; ++c) {
    Field f(nx, ny);
    for (std::size_t k = 0; k < cells; ++k) f.data()[k] = data[c * cells + k];
    u.channel(c) = std::move(f);
  }
  u.t = t;
  return u;
}

nlohmann::json dataset_header(const euler::Dataset& ds) {
  nlohmann::json h;
  h["record_type"] = "DATASET";
  h["format_version"] = 1;
  h["grid"] = ds.grid;
  h["gamma"] = ds.gamma;
  h["seed"] = ds.seed;
  h["channels"] = euler::kChannelNames;
  h["layout"] = "trajectory,time,channel,y,x";
  h["families"] = nlohmann::json::array();
  for (auto f : ds.families) h["families"].push_back(euler::family_name(f));
  h["n_trajectories"] = ds.size();
  h["times"] = ds.trajectories.empty() ? std::vector<double>{} : ds.trajectories[0].times;
  h["trajectories"] = nlohmann::json::array();
  nlohmann::json splits = {{"train", nlohmann::json::array()},
                           {"val", nlohmann::json::array()},
                           {"test", nlohmann::json::array()}};
  for (int i = 0; i < ds.size(); ++i) {
    h["trajectories"].push_back(ds.trajectories[i].ic);
    splits[std::string(euler::split_name(ds.splits[i]))].push_back(i);
  }
  h["splits"] = splits;
  h["normalization"] = ds.normalization;
  return h;
}

void save_dataset(const euler::Dataset& ds, const std::filesystem::path& path,
                  const nlohmann::json& extra) {
  nlohmann::json header = dataset_header(ds);
  for (auto it = extra.begin(); it != extra.end(); ++it) header[it.key()] = it.value();
  std::vector<float> data;
  data.reserve(static_cast<std::size_t>(ds.size()) * 21 * euler::kNumChannels * ds.grid.cells());
  for (const auto& traj : ds.trajectories)
    for (const auto& snap : traj.snapshots) append_snapshot(data, snap);
  write_container(path, header, data);
}

euler::Dataset load_dataset(const std::filesystem::path& path) {
  Container c = read_container(path);
  const auto& h = c.header;
  if (h.value("record_type", "") != "DATASET")
    throw ConfigError(path.string() + ": not a dataset container");
  euler::Dataset ds;
  ds.grid = h.at("grid").get<euler::GridSpec>();
  ds.gamma = h.at("gamma").get<double>();
  ds.seed = h.at("seed").get<std::uint64_t>();
  for (const auto& f : h.at("families")) ds.families.push_back(euler::parse_family(f.get<std::string>()));
  ds.normalization = h.at("normalization").get<euler::Normalization>();
  const auto times = h.at("times").get<std::vector<double>>();
  const int n = h.at("n_trajectories").get<int>();
  const std::size_t snap_size =
      static_cast<std::size_t>(ds.grid.cells()) * euler::kNumChannels;
  if (c.data.size() != snap_size * times.size() * static_cast<std::size_t>(n))
    throw ConfigError(path.string() + ": payload size does not match header");
  ds.trajectories.resize(n);
  ds.splits.assign(n, euler::Split::Test);
  for (const char* name : {"train", "val", "test"}) {
    const euler::Split s = std::string_view(name) == "train" ? euler::Split::Train
                           : std::string_view(name) == "val" ? euler::Split::Val
                                                             : euler::Split::Test;
    for (int idx : h.at("splits").at(name)) ds.splits.at(idx) = s;
  }
  std::size_t offset = 0;
  for (int i = 0; i < n; ++i) {
    auto& traj = ds.trajectories[i];
    traj.ic = h.at("trajectories").at(i).get<euler::ICSpec>();
    traj.times = times;
    for (double t : times) {
      traj.snapshots.push_back(read_snapshot(std::span(c.data).subspan(offset, snap_size),
                                             ds.grid.nx, ds.grid.ny, t));
      offset += snap_size;
    }
  }
  return ds;
}

void write_checkpoint(const std::filesystem::path& path, nlohmann::json header,
                      const std::vector<std::pair<std::string, const Matrix*>>& blobs) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  header["blobs"] = nlohmann::json::array();
  for (const auto& [name, m] : blobs)
    header["blobs"].push_back({{"name", name}, {"rows", m->rows()}, {"cols", m->cols()}});
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(kCheckpointMagic.data(), static_cast<std::streamsize>(kCheckpointMagic.size()));
  const std::string text = header.dump();
  write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, m] : blobs)
    out.write(reinterpret_cast<const char*>(m->data()),
              static_cast<std::streamsize>(m->size() * sizeof(double)));
  if (!out) throw ConfigError("write failed for " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in = open_checked(path);
  char magic[8] = {};
  in.read(magic, sizeof magic);
  if (!in || std::string_view(magic, 8) != kCheckpointMagic)
    throw ConfigError(path.string() + ": not a checkpoint");
  Checkpoint ck;
  ck.header = read_header(in, path);
  for (const auto& b : ck.header.at("blobs")) {
    Matrix m(b.at("rows").get<Eigen::Index>(), b.at("cols").get<Eigen::Index>());
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw ConfigError(path.string() + ": truncated blob " + b.at("name").get<std::string>());
    ck.blobs.push_back(std::move(m));
  }
  return ck;
}

std::string text_digest(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in = open_checked(path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text_digest(bytes);
}

}  // namespace pdettc::io
