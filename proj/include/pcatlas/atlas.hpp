#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcatlas/assignment.hpp"
#include "pcatlas/geometry.hpp"
#include "pcatlas/lattice.hpp"

namespace pcatlas {

inline constexpr std::size_t kAtlasChannels = 6;  // offset xyz, normal xyz

enum class Solver { kAuto, kExact, kAuction };

// "auto" | "exact" | "auction"; throws Error(kArgument) otherwise.
Solver solver_from_string(std::string_view name);
const char* to_string(Solver solver);

// site_of_point[i] is the lattice site of cloud entry i, or -1 for holes.
struct SphereAssignment {
  std::vector<std::int64_t> site_of_point;
  double cost = 0.0;
};

// Optimal transport of the non-hole points onto distinct lattice sites under
// squared distance. kAuto picks the exact solver up to kExactSolverLimit
// sites and the auction above it; kExact beyond the limit is an argument
// error. Points must lie inside the unit sphere (1e-9 slack), else
// Error(kConsistency); more points than sites is Error(kSize).
SphereAssignment assign_to_sphere(const PointCloud& cloud, const SphereLattice& lattice,
                                  Solver solver = Solver::kAuto,
                                  const AuctionOptions& auction = {});

// Keeps the entries listed in `kept` (indices into the original cloud), in
// that order: the assignment of a cropped cloud under the clean cloud's map.
SphereAssignment restrict_assignment(const SphereAssignment& assignment,
                                     std::span<const std::size_t> kept);

// side x side image with planar channels; pixel = row * side + col.
struct Atlas {
  std::uint32_t side = 0;
  std::vector<double> channels;     // kAtlasChannels planes of side^2 values
  std::vector<std::uint8_t> mask;   // 1 = real point, 0 = hole

  Atlas() = default;
  explicit Atlas(std::uint32_t side_length);

  std::size_t pixel_count() const { return static_cast<std::size_t>(side) * side; }
  double& at(std::size_t channel, std::size_t pixel) {
    return channels[channel * pixel_count() + pixel];
  }
  double at(std::size_t channel, std::size_t pixel) const {
    return channels[channel * pixel_count() + pixel];
  }
  Vec3 offset(std::size_t pixel) const;
  Vec3 normal(std::size_t pixel) const;
  void set_pixel(std::size_t pixel, const Vec3& offset, const Vec3& normal);
  std::size_t valid_count() const;

  // Same side and channel count; throws Error(kConsistency) otherwise.
  void require_same_shape(const Atlas& other) const;

  // Hole pixels all-zero, valid normals unit within 1e-5, offsets <= 2.
  // Throws Error(kConsistency).
  void validate() const;

  friend bool operator==(const Atlas&, const Atlas&) = default;
};

Atlas encode_atlas(const PointCloud& cloud, const SphereLattice& lattice,
                   const SphereAssignment& assignment);

struct DecodedAtlas {
  PointCloud cloud;                   // one point per valid pixel, pixel order
  std::vector<std::uint32_t> pixels;  // source pixel of each point
  std::size_t zero_normal_pixels = 0; // normals replaced by the site direction
};

DecodedAtlas decode_atlas(const Atlas& atlas, const SphereLattice& lattice);

// "AFAT" container: u32 version, u32 side, u32 channel count, u8 mask flag,
// f32 planes row-major, mask bits LSB-first. A file without a mask decodes
// as fully valid.
std::string serialize_atlas(const Atlas& atlas);
Atlas parse_atlas(std::string_view bytes);
Atlas read_atlas(const std::filesystem::path& path);
void write_atlas(const std::filesystem::path& path, const Atlas& atlas);

// Max position / normal deviation between a cloud and its decoded atlas,
// matched through the assignment (not by nearest neighbour).
struct RoundtripError {
  double max_position_error = 0.0;
  double max_normal_error = 0.0;
};
RoundtripError roundtrip_error(const PointCloud& cloud, const SphereLattice& lattice,
                               const SphereAssignment& assignment, const Atlas& atlas);

}  // namespace pcatlas
