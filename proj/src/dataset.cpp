#include "pcatlas/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "pcatlas/error.hpp"
#include "pcatlas/file_util.hpp"
#include "pcatlas/mesh_io.hpp"
#include "pcatlas/rng.hpp"
#include "pcatlas/spatial_index.hpp"
#include "pcatlas/version.hpp"

namespace pcatlas {
namespace fs = std::filesystem;
namespace {

std::string rejection_reason(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse:
      return "parse_error";
    case ErrorKind::kStructural:
      return "structural_error";
    case ErrorKind::kDegenerateGeometry:
      return "degenerate";
    case ErrorKind::kIo:
      return "io_error";
    default:
      return "processing_error";
  }
}

std::vector<fs::path> list_meshes(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorKind::kIo, "input directory not found: " + dir.string());
  }
  std::vector<fs::path> out;
  for (const auto& item : fs::directory_iterator(dir)) {
    if (!item.is_regular_file()) continue;
    std::string ext = item.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".obj" || ext == ".ply") out.push_back(item.path());
  }
  std::sort(out.begin(), out.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return out;
}

SphereLattice obtain_lattice(const fs::path& file, std::size_t n_sites, std::ostream* log) {
  std::error_code ec;
  if (fs::exists(file, ec)) {
    try {
      auto cached = read_lattice(file);
      if (cached.n_sites() == n_sites && cached.phase == spiral_phase_from_seed(0)) {
        if (log) *log << "reusing lattice " << file.string() << '\n';
        return cached;
      }
    } catch (const Error&) {
      // Rebuilt below.
    }
  }
  if (log) *log << "building lattice with " << n_sites << " sites\n";
  auto lattice = build_sphere_lattice(n_sites, 0);
  write_lattice(file, lattice);
  return lattice;
}

nlohmann::json spec_to_json(const CorruptionSpec& spec) {
  return {{"strategy", to_string(spec.strategy)},
          {"fraction", spec.crop_fraction},
          {"sigma", spec.sigma},
          {"seed", spec.seed}};
}

CorruptionSpec spec_from_json(const nlohmann::json& j) {
  CorruptionSpec spec;
  spec.strategy = strategy_from_string(j.at("strategy").get<std::string>());
  spec.crop_fraction = j.at("fraction").get<double>();
  spec.sigma = j.at("sigma").get<double>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  return spec;
}

// Largest distance from a cloud point to the decoded point at the same
// place; clouds must match one-to-one.
double cloud_match_error(const PointCloud& original, const PointCloud& decoded) {
  if (original.size() != decoded.size() || decoded.empty()) return HUGE_VAL;
  const SpatialIndex index(decoded.positions());
  double worst = 0.0;
  std::vector<std::uint8_t> used(decoded.size(), 0);
  for (const auto& p : original.points) {
    const auto nn = index.nearest(p.position);
    if (used[nn.index]) return HUGE_VAL;
    used[nn.index] = 1;
    worst = std::max(worst, std::sqrt(nn.squared_distance));
    worst = std::max(worst, distance(p.normal, decoded.points[nn.index].normal));
  }
  return worst;
}

}  // namespace

std::string mesh_id(const fs::path& file) {
  std::string id = file.filename().string();
  for (auto& c : id) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) c = '_';
  }
  return id;
}

std::size_t test_count(std::size_t accepted, double test_fraction) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(accepted) * test_fraction));
}

nlohmann::json DatasetManifest::to_json() const {
  nlohmann::json entries_json = nlohmann::json::array();
  for (const auto& e : entries) {
    entries_json.push_back({{"id", e.id},
                            {"source", e.source},
                            {"split", e.split},
                            {"clean_cloud", e.clean_cloud},
                            {"corrupted_cloud", e.corrupted_cloud},
                            {"clean_atlas", e.clean_atlas},
                            {"corrupted_atlas", e.corrupted_atlas},
                            {"corruption", spec_to_json(e.corruption)},
                            {"clean_points", e.clean_points},
                            {"corrupted_points", e.corrupted_points}});
  }
  nlohmann::json rejected_json = nlohmann::json::array();
  for (const auto& r : rejected) {
    rejected_json.push_back({{"source", r.source}, {"reason", r.reason}, {"detail", r.detail}});
  }
  return {{"schema_version", schema_version},
          {"global",
           {{"tool_version", tool_version},
            {"n_sites", n_sites},
            {"lattice_file", lattice_file},
            {"seed", seed},
            {"crop_fraction", crop_fraction},
            {"sigma", sigma},
            {"max_faces", max_faces},
            {"solver", solver},
            {"shared_assignment", shared_assignment}}},
          {"entries", entries_json},
          {"rejected", rejected_json}};
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
  try {
    DatasetManifest m;
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != kManifestSchemaVersion) {
      throw Error(ErrorKind::kParse,
                  "unsupported manifest schema " + std::to_string(m.schema_version));
    }
    const auto& g = j.at("global");
    m.tool_version = g.at("tool_version").get<std::string>();
    m.n_sites = g.at("n_sites").get<std::size_t>();
    m.lattice_file = g.at("lattice_file").get<std::string>();
    m.seed = g.at("seed").get<std::uint64_t>();
    m.crop_fraction = g.at("crop_fraction").get<double>();
    m.sigma = g.at("sigma").get<double>();
    m.max_faces = g.at("max_faces").get<std::size_t>();
    m.solver = g.at("solver").get<std::string>();
    m.shared_assignment = g.at("shared_assignment").get<bool>();
    for (const auto& e : j.at("entries")) {
      ManifestEntry entry;
      entry.id = e.at("id").get<std::string>();
      entry.source = e.at("source").get<std::string>();
      entry.split = e.at("split").get<std::string>();
      entry.clean_cloud = e.at("clean_cloud").get<std::string>();
      entry.corrupted_cloud = e.at("corrupted_cloud").get<std::string>();
      entry.clean_atlas = e.at("clean_atlas").get<std::string>();
      entry.corrupted_atlas = e.at("corrupted_atlas").get<std::string>();
      entry.corruption = spec_from_json(e.at("corruption"));
      entry.clean_points = e.at("clean_points").get<std::size_t>();
      entry.corrupted_points = e.at("corrupted_points").get<std::size_t>();
      m.entries.push_back(std::move(entry));
    }
    for (const auto& r : j.at("rejected")) {
      m.rejected.push_back({r.at("source").get<std::string>(), r.at("reason").get<std::string>(),
                            r.at("detail").get<std::string>()});
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("manifest: ") + e.what());
  }
}

DatasetManifest build_dataset(const DatasetConfig& config, std::ostream* log) {
  CorruptionSpec defaults;
  defaults.crop_fraction = config.crop_fraction;
  defaults.sigma = config.sigma;
  defaults.validate();
  if (config.max_faces < 1) throw Error(ErrorKind::kArgument, "max_faces must be at least 1");
  if (!(config.test_fraction >= 0.0 && config.test_fraction <= 1.0)) {
    throw Error(ErrorKind::kArgument, "test fraction must lie in [0, 1]");
  }
  const auto inputs = list_meshes(config.input_dir);
  fs::create_directories(config.output_dir / "clouds");
  fs::create_directories(config.output_dir / "atlases");

  DatasetManifest manifest;
  manifest.schema_version = kManifestSchemaVersion;
  manifest.tool_version = kToolVersion;
  manifest.n_sites = config.n_sites;
  manifest.lattice_file = "lattice_" + std::to_string(config.n_sites) + ".aflt";
  manifest.seed = config.seed;
  manifest.crop_fraction = config.crop_fraction;
  manifest.sigma = config.sigma;
  manifest.max_faces = config.max_faces;
  manifest.solver = to_string(config.solver);
  manifest.shared_assignment = config.shared_assignment;

  const auto lattice =
      obtain_lattice(config.output_dir / manifest.lattice_file, config.n_sites, log);

  for (const auto& path : inputs) {
    const auto source = path.filename().string();
    const auto id = mesh_id(path);
    try {
      const auto mesh = read_mesh(path);
      if (filter_by_face_count(mesh, config.max_faces) == FilterVerdict::kReject) {
        manifest.rejected.push_back({source, "face_count",
                                     std::to_string(mesh.face_count()) + " faces > " +
                                         std::to_string(config.max_faces)});
        if (log) *log << "rejected " << source << ": face_count\n";
        continue;
      }
      const auto mesh_seed = derive_seed(config.seed, std::string_view(id));
      const auto normalized = normalize_to_unit_sphere(mesh).first;
      const auto clean =
          sample_clean_cloud(normalized, config.n_sites, derive_seed(mesh_seed, "sample"));

      CorruptionSpec spec = defaults;
      spec.strategy = (mesh_seed & 1U) != 0 ? CropStrategy::kCenterRegionDrop
                                            : CropStrategy::kRandomDrop;
      spec.seed = derive_seed(mesh_seed, "corrupt");
      const auto corrupted = corrupt(clean, spec);

      const auto clean_assignment = assign_to_sphere(clean, lattice, config.solver);
      const auto corrupted_assignment =
          config.shared_assignment ? restrict_assignment(clean_assignment, corrupted.kept)
                                   : assign_to_sphere(corrupted.cloud, lattice, config.solver);
      const auto clean_atlas = encode_atlas(clean, lattice, clean_assignment);
      const auto corrupted_atlas = encode_atlas(corrupted.cloud, lattice, corrupted_assignment);

      ManifestEntry entry;
      entry.id = id;
      entry.source = source;
      entry.clean_cloud = "clouds/" + id + "_clean.ply";
      entry.corrupted_cloud = "clouds/" + id + "_corrupted.ply";
      entry.clean_atlas = "atlases/" + id + "_clean.af";
      entry.corrupted_atlas = "atlases/" + id + "_corrupted.af";
      entry.corruption = spec;
      entry.clean_points = clean.size();
      entry.corrupted_points = corrupted.cloud.size();
      write_file_atomic(config.output_dir / entry.clean_cloud, write_point_cloud(clean));
      write_file_atomic(config.output_dir / entry.corrupted_cloud,
                        write_point_cloud(corrupted.cloud));
      write_atlas(config.output_dir / entry.clean_atlas, clean_atlas);
      write_atlas(config.output_dir / entry.corrupted_atlas, corrupted_atlas);
      manifest.entries.push_back(std::move(entry));
      if (log) *log << "encoded " << source << '\n';
    } catch (const Error& e) {
      manifest.rejected.push_back({source, rejection_reason(e.kind()), e.what()});
      if (log) *log << "rejected " << source << ": " << e.what() << '\n';
    }
  }
  if (manifest.entries.empty()) {
    throw Error(ErrorKind::kEmptyInput, "no mesh in " + config.input_dir.string() +
                                            " was accepted");
  }

  std::sort(manifest.entries.begin(), manifest.entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.id < b.id; });
  std::vector<std::size_t> order(manifest.entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), SplitMix64(derive_seed(config.seed, "split")));
  const auto n_test = test_count(order.size(), config.test_fraction);
  for (std::size_t k = 0; k < order.size(); ++k) {
    manifest.entries[order[k]].split = k < n_test ? "test" : "train";
  }

  write_file_atomic(config.output_dir / kManifestFileName, manifest.to_json().dump(2) + "\n");
  return manifest;
}

nlohmann::json VerifyReport::to_json() const {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& e : entries) {
    items.push_back({{"id", e.id},
                     {"pass", e.pass},
                     {"failures", e.failures},
                     {"roundtrip_error", e.roundtrip_error}});
  }
  return {{"ok", ok()}, {"passed", passed}, {"failed", failed}, {"entries", items}};
}

VerifyReport verify_dataset(const fs::path& manifest_path) {
  std::error_code ec;
  if (!fs::exists(manifest_path, ec)) {
    throw Error(ErrorKind::kIo, "manifest not found: " + manifest_path.string());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("manifest: ") + e.what());
  }
  const auto manifest = DatasetManifest::from_json(j);
  const auto root = manifest_path.parent_path();

  VerifyReport report;
  std::optional<SphereLattice> lattice;
  std::string lattice_failure;
  try {
    lattice = read_lattice(root / manifest.lattice_file);
  } catch (const Error& e) {
    lattice_failure = fs::exists(root / manifest.lattice_file, ec) ? "parse_error"
                                                                   : "missing_file";
  }

  for (const auto& entry : manifest.entries) {
    EntryVerdict v;
    v.id = entry.id;
    auto fail = [&](const std::string& reason) {
      if (std::find(v.failures.begin(), v.failures.end(), reason) == v.failures.end()) {
        v.failures.push_back(reason);
      }
    };
    if (!lattice) fail(lattice_failure);
    for (const auto& rel : {entry.clean_cloud, entry.corrupted_cloud, entry.clean_atlas,
                            entry.corrupted_atlas}) {
      if (!fs::exists(root / rel, ec)) fail("missing_file");
    }
    if (v.failures.empty()) {
      // Each artifact is loaded on its own so one bad file does not mask
      // checks on the others.
      auto load = [&](auto&& reader, const std::string& rel) {
        using T = decltype(reader(root / rel));
        try {
          return std::optional<T>(reader(root / rel));
        } catch (const Error&) {
          fail("parse_error");
          return std::optional<T>();
        }
      };
      const auto clean = load([](const fs::path& f) { return read_point_cloud(f); },
                              entry.clean_cloud);
      const auto corrupted = load([](const fs::path& f) { return read_point_cloud(f); },
                                  entry.corrupted_cloud);
      const auto clean_atlas =
          load([](const fs::path& f) { return read_atlas(f); }, entry.clean_atlas);
      const auto corrupted_atlas =
          load([](const fs::path& f) { return read_atlas(f); }, entry.corrupted_atlas);

      const auto expected =
          entry.clean_points - crop_count(entry.clean_points, entry.corruption.crop_fraction);
      // A corrupted cloud that no longer parses (e.g. cut short) has lost
      // points, so it counts against the size check too.
      if (!corrupted || corrupted->size() != expected || entry.corrupted_points != expected ||
          (clean && clean->size() != entry.clean_points) ||
          (corrupted_atlas && corrupted_atlas->valid_count() != expected)) {
        fail("size_mismatch");
      }
      for (const auto* atlas : {&clean_atlas, &corrupted_atlas}) {
        if (!*atlas) continue;
        try {
          (*atlas)->validate();
          decode_atlas(**atlas, *lattice);
        } catch (const Error&) {
          fail("atlas_invalid");
        }
      }
      if (clean && clean_atlas && clean_atlas->side == lattice->side) {
        const auto decoded = decode_atlas(*clean_atlas, *lattice);
        v.roundtrip_error = cloud_match_error(*clean, decoded.cloud);
        if (!(v.roundtrip_error < 1e-5)) fail("roundtrip");
      }
    }
    v.pass = v.failures.empty();
    (v.pass ? report.passed : report.failed) += 1;
    report.entries.push_back(std::move(v));
  }
  return report;
}

}  // namespace pcatlas
