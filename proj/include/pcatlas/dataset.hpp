#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcatlas/atlas.hpp"
#include "pcatlas/corruption.hpp"
#include "pcatlas/lattice.hpp"
#include "pcatlas/sampling.hpp"

namespace pcatlas {

struct DatasetConfig {
  std::filesystem::path input_dir;
  std::filesystem::path output_dir;
  std::size_t n_sites = kDefaultSites;
  std::uint64_t seed = 0;
  double crop_fraction = 0.2;
  double sigma = 0.005;
  std::size_t max_faces = kDefaultMaxFaces;
  double test_fraction = 0.1;
  Solver solver = Solver::kAuto;
  // Encode the corrupted cloud with the clean cloud's assignment restricted
  // to the survivors instead of its own transport (ablation).
  bool shared_assignment = false;
};

struct ManifestEntry {
  std::string id;
  std::string source;  // input file name
  std::string split;   // "train" | "test"
  std::string clean_cloud;
  std::string corrupted_cloud;
  std::string clean_atlas;
  std::string corrupted_atlas;
  CorruptionSpec corruption;
  std::size_t clean_points = 0;
  std::size_t corrupted_points = 0;
};

struct RejectedMesh {
  std::string source;
  std::string reason;  // face_count | parse_error | structural_error | degenerate | ...
  std::string detail;
};

// Paths inside a manifest are relative to the manifest's directory.
struct DatasetManifest {
  int schema_version = 0;
  std::string tool_version;
  std::size_t n_sites = 0;
  std::string lattice_file;
  std::uint64_t seed = 0;
  double crop_fraction = 0.0;
  double sigma = 0.0;
  std::size_t max_faces = 0;
  std::string solver;
  bool shared_assignment = false;
  std::vector<ManifestEntry> entries;  // sorted by id
  std::vector<RejectedMesh> rejected;  // sorted by source

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);
};

inline constexpr const char* kManifestFileName = "manifest.json";

// Input meshes are the *.obj / *.ply files directly inside input_dir, in
// file-name order. Each accepted mesh gets seed derive_seed(seed, id), so
// adding meshes leaves existing samples unchanged. The crop strategy is
// center-region when that seed is odd, random otherwise. Writes artifacts
// and manifest.json under output_dir; progress goes to `log` if given.
// Throws Error(kEmptyInput) when no mesh is accepted.
DatasetManifest build_dataset(const DatasetConfig& config, std::ostream* log = nullptr);

// Mesh id for an input file name: "chair.obj" -> "chair_obj".
std::string mesh_id(const std::filesystem::path& file);

// Number of test entries for k accepted meshes: round(k * test_fraction).
std::size_t test_count(std::size_t accepted, double test_fraction);

struct EntryVerdict {
  std::string id;
  bool pass = true;
  std::vector<std::string> failures;  // missing_file, parse_error, atlas_invalid,
                                      // roundtrip, size_mismatch
  double roundtrip_error = 0.0;
};

struct VerifyReport {
  std::vector<EntryVerdict> entries;
  std::size_t passed = 0;
  std::size_t failed = 0;
  bool ok() const { return failed == 0; }
  nlohmann::json to_json() const;
};

// Throws Error(kIo) when the manifest is missing, Error(kParse) when it is
// malformed.
VerifyReport verify_dataset(const std::filesystem::path& manifest_path);

}  // namespace pcatlas
