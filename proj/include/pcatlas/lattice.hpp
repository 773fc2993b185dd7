#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pcatlas/vec3.hpp"

namespace pcatlas {

inline constexpr std::size_t kDefaultSites = 16384;  // 128 x 128 atlas

struct EquirectUV {
  double u = 0.0;
  double v = 0.0;
};

// u = (atan2(y, x) + pi) / 2pi, v = acos(z) / pi; u = 0.5 at the poles.
// Throws Error(kArgument) when | |p| - 1 | > 1e-6.
EquirectUV equirect_project(const Vec3& p);

// Unit-sphere sites paired with a fixed bijection site -> pixel of the
// side x side grid (pixel = row * side + col, row along v, col along u).
struct SphereLattice {
  std::uint32_t side = 0;
  double phase = 0.0;
  std::vector<Vec3> sites;
  std::vector<std::uint32_t> grid_perm;      // site -> pixel
  std::vector<std::uint32_t> site_of_pixel;  // inverse of grid_perm

  std::size_t n_sites() const { return sites.size(); }
};

// Fibonacci spiral: z_k = 1 - (2k + 1) / n, longitude k * golden_angle + phase.
std::vector<Vec3> fibonacci_sphere(std::size_t n, double phase);

// Seed 0 gives phase 0; other seeds give a phase in [0, 2pi).
double spiral_phase_from_seed(std::uint64_t seed);

// Pixel-center coordinates ((col + 0.5) / side, (row + 0.5) / side, 0).
std::vector<Vec3> pixel_centers(std::uint32_t side);

// Builds the sites and solves the site -> pixel assignment in the
// equirectangular plane (squared planar distance, no u wraparound). Exact
// solver up to 4096 sites, auction above.
SphereLattice build_sphere_lattice(std::size_t n_sites, std::uint64_t seed);

// Checks unit sites, side^2 = n, grid_perm bijectivity and injectivity of the
// projected sites. Throws Error(kConsistency).
void validate_lattice(const SphereLattice& lattice);

// "AFLT" container: u32 version, u32 n_sites, f64 phase, f32x3 sites,
// u32 grid_perm; all little-endian.
std::string serialize_lattice(const SphereLattice& lattice);
// Sites are regenerated in double precision from (n_sites, phase) and checked
// against the stored f32 copy; the stored grid_perm is reused.
SphereLattice parse_lattice(std::string_view bytes);

SphereLattice read_lattice(const std::filesystem::path& path);
void write_lattice(const std::filesystem::path& path, const SphereLattice& lattice);

}  // namespace pcatlas
