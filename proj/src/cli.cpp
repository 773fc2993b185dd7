#include "pcatlas/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pcatlas/atlas.hpp"
#include "pcatlas/corruption.hpp"
#include "pcatlas/dataset.hpp"
#include "pcatlas/diffusion.hpp"
#include "pcatlas/error.hpp"
#include "pcatlas/file_util.hpp"
#include "pcatlas/lattice.hpp"
#include "pcatlas/mesh_io.hpp"
#include "pcatlas/metrics.hpp"
#include "pcatlas/png_preview.hpp"
#include "pcatlas/sampling.hpp"
#include "pcatlas/version.hpp"

namespace pcatlas::cli {
namespace fs = std::filesystem;
using nlohmann::json;
namespace {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kArgument:
      return kExitUsage;
    case ErrorKind::kSolver:
    case ErrorKind::kNumerical:
      return kExitNumerical;
    default:
      return kExitData;
  }
}

json error_json(const std::string& kind, const std::string& message) {
  return {{"ok", false}, {"error", {{"kind", kind}, {"message", message}}}};
}

void print(std::ostream& out, const json& j) { out << j.dump() << '\n'; }

// Output paths are checked up front so a bad --output fails before any work.
void require_parent_dir(const fs::path& path) {
  const auto parent = path.parent_path();
  std::error_code ec;
  if (!parent.empty() && !fs::is_directory(parent, ec)) {
    throw Error(ErrorKind::kArgument, "output directory does not exist: " + parent.string());
  }
}

struct LatticeBuildArgs {
  std::size_t sites = kDefaultSites;
  std::uint64_t seed = 0;
  std::string output;
};

struct EncodeArgs {
  std::string input;
  std::string lattice;
  std::string output;
  std::string solver = "auto";
  std::string preview;
};

struct DecodeArgs {
  std::string input;
  std::string lattice;
  std::string output;
  bool ascii = false;
};

struct CorruptArgs {
  std::string input;
  std::string output;
  std::string strategy = "random";
  double fraction = 0.2;
  double sigma = 0.005;
  std::uint64_t seed = 0;
};

struct InpaintArgs {
  std::string method = "nearest";
  int steps = kDefaultSamplerSteps;
  std::uint64_t seed = 0;
  std::string input;
  std::string target;
  std::string output;
  std::string preview;
};

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::size_t samples = kDefaultMetricSamples;
  std::uint64_t seed = 0;
};

struct DatasetBuildArgs {
  std::string input_dir;
  std::string output_dir;
  std::size_t points = kDefaultSites;
  std::uint64_t seed = 0;
  double fraction = 0.2;
  double sigma = 0.005;
  std::size_t max_faces = kDefaultMaxFaces;
  double test_fraction = 0.1;
  std::string solver = "auto";
  bool shared_assignment = false;
};

struct RoundtripArgs {
  std::string input;
  std::string lattice;
  std::string solver = "auto";
};

struct SampleArgs {
  std::string mesh;
  std::size_t points = 4096;
  std::uint64_t seed = 0;
  std::string output;
};

json do_lattice_build(const LatticeBuildArgs& a) {
  require_parent_dir(a.output);
  const auto lattice = build_sphere_lattice(a.sites, a.seed);
  write_lattice(a.output, lattice);
  return {{"n_sites", lattice.n_sites()},
          {"side", lattice.side},
          {"phase", lattice.phase},
          {"output", a.output}};
}

json do_encode(const EncodeArgs& a) {
  const auto solver = solver_from_string(a.solver);
  require_parent_dir(a.output);
  if (!a.preview.empty()) require_parent_dir(a.preview);
  const auto cloud = read_point_cloud(a.input);
  const auto lattice = read_lattice(a.lattice);
  const auto assignment = assign_to_sphere(cloud, lattice, solver);
  const auto atlas = encode_atlas(cloud, lattice, assignment);
  write_atlas(a.output, atlas);
  if (!a.preview.empty()) write_file_atomic(a.preview, atlas_preview_png(atlas));
  return {{"points", cloud.size()},
          {"valid_pixels", atlas.valid_count()},
          {"side", atlas.side},
          {"cost", assignment.cost},
          {"output", a.output}};
}

json do_decode(const DecodeArgs& a) {
  require_parent_dir(a.output);
  const auto atlas = read_atlas(a.input);
  const auto lattice = read_lattice(a.lattice);
  const auto decoded = decode_atlas(atlas, lattice);
  write_file_atomic(a.output, write_point_cloud(decoded.cloud, a.ascii
                                                                   ? PlyEncoding::kAscii
                                                                   : PlyEncoding::kBinaryLittleEndian));
  return {{"points", decoded.cloud.size()},
          {"zero_normal_pixels", decoded.zero_normal_pixels},
          {"output", a.output}};
}

json do_corrupt(const CorruptArgs& a) {
  CorruptionSpec spec;
  spec.strategy = strategy_from_string(a.strategy);
  spec.crop_fraction = a.fraction;
  spec.sigma = a.sigma;
  spec.seed = a.seed;
  spec.validate();
  require_parent_dir(a.output);
  const auto cloud = read_point_cloud(a.input);
  const auto result = corrupt(cloud, spec);
  write_file_atomic(a.output, write_point_cloud(result.cloud));
  json j = {{"input_points", cloud.size()},
            {"removed", cloud.size() - result.cloud.size()},
            {"output_points", result.cloud.size()},
            {"strategy", to_string(spec.strategy)},
            {"seed_index", nullptr},
            {"output", a.output}};
  if (result.seed_index) j["seed_index"] = *result.seed_index;
  return j;
}

json do_inpaint(const InpaintArgs& a) {
  if (a.method != "nearest" && a.method != "oracle") {
    throw Error(ErrorKind::kArgument, "unknown method '" + a.method + "'");
  }
  if (a.method == "oracle" && a.target.empty()) {
    throw Error(ErrorKind::kArgument, "--method oracle requires --target");
  }
  SamplerConfig config;
  config.steps = a.steps;
  config.seed = a.seed;
  config.schedule = build_cosine_schedule();
  config.validate();
  require_parent_dir(a.output);
  if (!a.preview.empty()) require_parent_dir(a.preview);

  const auto input = read_atlas(a.input);
  Atlas result;
  if (a.method == "nearest") {
    result = inpaint_nearest(input);
  } else {
    const auto target = read_atlas(a.target);
    input.require_same_shape(target);
    result = sample(OracleDenoiser(target, input), input, config);
    // The sampler fills every pixel; keep the target's support.
    for (std::size_t p = 0; p < result.pixel_count(); ++p) {
      result.mask[p] = target.mask[p];
      if (!target.mask[p]) result.set_pixel(p, {}, {});
    }
  }
  write_atlas(a.output, result);
  if (!a.preview.empty()) write_file_atomic(a.preview, atlas_preview_png(result));
  return {{"method", a.method},
          {"steps", a.method == "oracle" ? json(a.steps) : json(nullptr)},
          {"input_valid", input.valid_count()},
          {"output_valid", result.valid_count()},
          {"output", a.output}};
}

json do_eval(const EvalArgs& a) {
  if (a.samples == 0) throw Error(ErrorKind::kArgument, "--samples must be positive");
  const auto pred = read_mesh(a.pred);
  const auto gt = read_mesh(a.gt);
  auto j = to_json(evaluate_pair(pred, gt, a.samples, a.seed));
  j["schema_version"] = kReportSchemaVersion;
  return j;
}

json do_dataset_build(const DatasetBuildArgs& a, std::ostream& err) {
  DatasetConfig config;
  config.input_dir = a.input_dir;
  config.output_dir = a.output_dir;
  config.n_sites = a.points;
  config.seed = a.seed;
  config.crop_fraction = a.fraction;
  config.sigma = a.sigma;
  config.max_faces = a.max_faces;
  config.test_fraction = a.test_fraction;
  config.solver = solver_from_string(a.solver);
  config.shared_assignment = a.shared_assignment;
  const auto manifest = build_dataset(config, &err);
  std::size_t n_test = 0;
  for (const auto& e : manifest.entries) n_test += e.split == "test";
  return {{"manifest", (fs::path(a.output_dir) / kManifestFileName).string()},
          {"accepted", manifest.entries.size()},
          {"rejected", manifest.rejected.size()},
          {"train", manifest.entries.size() - n_test},
          {"test", n_test}};
}

json do_roundtrip(const RoundtripArgs& a) {
  const auto solver = solver_from_string(a.solver);
  const auto cloud = read_point_cloud(a.input);
  const auto lattice = read_lattice(a.lattice);
  const auto assignment = assign_to_sphere(cloud, lattice, solver);
  const auto atlas = encode_atlas(cloud, lattice, assignment);
  // Go through the file format so its f32 storage is part of the check.
  const auto reread = parse_atlas(serialize_atlas(atlas));
  const auto err = roundtrip_error(cloud, lattice, assignment, reread);
  return {{"points", cloud.size()},
          {"max_position_error", err.max_position_error},
          {"max_normal_error", err.max_normal_error}};
}

json do_sample(const SampleArgs& a) {
  if (a.points == 0) throw Error(ErrorKind::kArgument, "--points must be positive");
  require_parent_dir(a.output);
  const auto mesh = read_mesh(a.mesh);
  const auto cloud = sample_clean_cloud(normalize_to_unit_sphere(mesh).first, a.points, a.seed);
  write_file_atomic(a.output, write_point_cloud(cloud));
  return {{"points", cloud.size()}, {"output", a.output}};
}

}  // namespace

void apply_thread_env() {
  if (const char* value = std::getenv("PCATLAS_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(value, &end, 10);
    if (end != value && *end == '\0' && n > 0) omp_set_num_threads(static_cast<int>(n));
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Point cloud <-> spherical atlas toolkit", "pcatlas"};
  app.require_subcommand(0, 1);
  bool show_version = false;
  app.add_flag("--version", show_version, "Print tool and schema versions");

  auto* lattice = app.add_subcommand("lattice", "Sphere lattice operations");
  lattice->require_subcommand(1);
  LatticeBuildArgs lattice_build;
  auto* lattice_build_cmd = lattice->add_subcommand("build", "Build a sphere lattice file");
  lattice_build_cmd->add_option("--sites", lattice_build.sites, "Number of sites (perfect square)")
      ->capture_default_str();
  lattice_build_cmd->add_option("--seed", lattice_build.seed, "Spiral phase seed")
      ->capture_default_str();
  lattice_build_cmd->add_option("--output", lattice_build.output)->required();

  EncodeArgs encode_args;
  auto* encode = app.add_subcommand("encode", "Encode a point cloud as an atlas");
  encode->add_option("--input", encode_args.input)->required()->check(CLI::ExistingFile);
  encode->add_option("--lattice", encode_args.lattice)->required()->check(CLI::ExistingFile);
  encode->add_option("--output", encode_args.output)->required();
  encode->add_option("--solver", encode_args.solver)
      ->check(CLI::IsMember({"auto", "exact", "auction"}))
      ->capture_default_str();
  encode->add_option("--preview", encode_args.preview, "Optional PNG preview path");

  DecodeArgs decode_args;
  auto* decode = app.add_subcommand("decode", "Decode an atlas to a point cloud");
  decode->add_option("--input", decode_args.input)->required()->check(CLI::ExistingFile);
  decode->add_option("--lattice", decode_args.lattice)->required()->check(CLI::ExistingFile);
  decode->add_option("--output", decode_args.output)->required();
  decode->add_flag("--ascii", decode_args.ascii, "Write ASCII PLY");

  CorruptArgs corrupt_args;
  auto* corrupt_cmd = app.add_subcommand("corrupt", "Crop and perturb a point cloud");
  corrupt_cmd->add_option("--input", corrupt_args.input)->required()->check(CLI::ExistingFile);
  corrupt_cmd->add_option("--output", corrupt_args.output)->required();
  corrupt_cmd->add_option("--strategy", corrupt_args.strategy)
      ->check(CLI::IsMember({"random", "center"}))
      ->capture_default_str();
  corrupt_cmd->add_option("--fraction", corrupt_args.fraction)->capture_default_str();
  corrupt_cmd->add_option("--sigma", corrupt_args.sigma)->capture_default_str();
  corrupt_cmd->add_option("--seed", corrupt_args.seed)->capture_default_str();

  InpaintArgs inpaint_args;
  auto* inpaint = app.add_subcommand("inpaint", "Fill atlas holes");
  inpaint->add_option("--method", inpaint_args.method)
      ->check(CLI::IsMember({"nearest", "oracle"}))
      ->capture_default_str();
  inpaint->add_option("--steps", inpaint_args.steps)->capture_default_str();
  inpaint->add_option("--seed", inpaint_args.seed)->capture_default_str();
  inpaint->add_option("--input", inpaint_args.input)->required()->check(CLI::ExistingFile);
  inpaint->add_option("--target", inpaint_args.target, "Ground-truth atlas (oracle only)")
      ->check(CLI::ExistingFile);
  inpaint->add_option("--output", inpaint_args.output)->required();
  inpaint->add_option("--preview", inpaint_args.preview, "Optional PNG preview path");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Compare a predicted mesh against ground truth");
  eval->add_option("--pred", eval_args.pred)->required()->check(CLI::ExistingFile);
  eval->add_option("--gt", eval_args.gt)->required()->check(CLI::ExistingFile);
  eval->add_option("--samples", eval_args.samples)->capture_default_str();
  eval->add_option("--seed", eval_args.seed)->capture_default_str();

  auto* dataset = app.add_subcommand("dataset", "Dataset pipeline");
  dataset->require_subcommand(1);
  DatasetBuildArgs build_args;
  auto* dataset_build = dataset->add_subcommand("build", "Build a dataset from meshes");
  dataset_build->add_option("--input-dir", build_args.input_dir)
      ->required()
      ->check(CLI::ExistingDirectory);
  dataset_build->add_option("--output-dir", build_args.output_dir)->required();
  dataset_build->add_option("--points", build_args.points)->capture_default_str();
  dataset_build->add_option("--seed", build_args.seed)->capture_default_str();
  dataset_build->add_option("--fraction", build_args.fraction)->capture_default_str();
  dataset_build->add_option("--sigma", build_args.sigma)->capture_default_str();
  dataset_build->add_option("--max-faces", build_args.max_faces)->capture_default_str();
  dataset_build->add_option("--test-fraction", build_args.test_fraction)->capture_default_str();
  dataset_build->add_option("--solver", build_args.solver)
      ->check(CLI::IsMember({"auto", "exact", "auction"}))
      ->capture_default_str();
  dataset_build->add_flag("--shared-assignment", build_args.shared_assignment,
                          "Encode corrupted clouds with the clean assignment");
  std::string verify_manifest;
  auto* dataset_verify = dataset->add_subcommand("verify", "Check a built dataset");
  dataset_verify->add_option("--manifest", verify_manifest)->required();

  RoundtripArgs roundtrip_args;
  auto* roundtrip = app.add_subcommand("roundtrip", "Encode/decode a cloud and report errors");
  roundtrip->add_option("--input", roundtrip_args.input)->required()->check(CLI::ExistingFile);
  roundtrip->add_option("--lattice", roundtrip_args.lattice)
      ->required()
      ->check(CLI::ExistingFile);
  roundtrip->add_option("--solver", roundtrip_args.solver)
      ->check(CLI::IsMember({"auto", "exact", "auction"}))
      ->capture_default_str();

  SampleArgs sample_args;
  auto* sample_cmd = app.add_subcommand("sample", "Sample a clean cloud from a mesh");
  sample_cmd->add_option("--mesh", sample_args.mesh)->required()->check(CLI::ExistingFile);
  sample_cmd->add_option("--points", sample_args.points)->capture_default_str();
  sample_cmd->add_option("--seed", sample_args.seed)->capture_default_str();
  sample_cmd->add_option("--output", sample_args.output)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    err << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    err << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    print(out, error_json("usage", e.what()));
    err << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  if (show_version) {
    print(out, {{"tool_version", kToolVersion},
                {"manifest_schema_version", kManifestSchemaVersion},
                {"report_schema_version", kReportSchemaVersion}});
    return kExitOk;
  }
  if (app.get_subcommands().empty()) {
    print(out, error_json("usage", "no subcommand given"));
    err << app.help();
    return kExitUsage;
  }

  try {
    json result;
    int code = kExitOk;
    if (*lattice_build_cmd) {
      result = do_lattice_build(lattice_build);
    } else if (*encode) {
      result = do_encode(encode_args);
    } else if (*decode) {
      result = do_decode(decode_args);
    } else if (*corrupt_cmd) {
      result = do_corrupt(corrupt_args);
    } else if (*inpaint) {
      result = do_inpaint(inpaint_args);
    } else if (*eval) {
      result = do_eval(eval_args);
    } else if (*dataset_build) {
      result = do_dataset_build(build_args, err);
    } else if (*dataset_verify) {
      const auto report = verify_dataset(verify_manifest);
      result = report.to_json();
      if (!report.ok()) code = kExitData;
    } else if (*roundtrip) {
      result = do_roundtrip(roundtrip_args);
    } else if (*sample_cmd) {
      result = do_sample(sample_args);
    }
    if (!result.contains("ok")) result["ok"] = code == kExitOk;
    print(out, result);
    return code;
  } catch (const Error& e) {
    print(out, error_json(to_string(e.kind()), e.what()));
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    print(out, error_json("io", e.what()));
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    print(out, error_json("internal", e.what()));
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace pcatlas::cli
