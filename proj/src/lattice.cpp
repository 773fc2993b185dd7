#include "pcatlas/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pcatlas/assignment.hpp"
#include "pcatlas/error.hpp"
#include "pcatlas/file_util.hpp"
#include "pcatlas/rng.hpp"

namespace pcatlas {
namespace {

constexpr char kLatticeMagic[4] = {'A', 'F', 'L', 'T'};
constexpr std::uint32_t kLatticeVersion = 1;

std::uint32_t exact_side(std::size_t n) {
  auto side = static_cast<std::uint32_t>(std::llround(std::sqrt(static_cast<double>(n))));
  if (static_cast<std::size_t>(side) * side != n) {
    throw Error(ErrorKind::kArgument, std::to_string(n) + " sites is not a perfect square");
  }
  return side;
}

}  // namespace

EquirectUV equirect_project(const Vec3& p) {
  if (!is_finite(p) || std::abs(norm(p) - 1.0) > 1e-6) {
    throw Error(ErrorKind::kArgument, "equirect_project needs a unit vector");
  }
  const double z = std::clamp(p.z, -1.0, 1.0);
  const double v = std::acos(z) / std::numbers::pi;
  if (std::abs(p.z) >= 1.0 || (p.x == 0.0 && p.y == 0.0)) return {0.5, v};
  const double u = (std::atan2(p.y, p.x) + std::numbers::pi) / (2.0 * std::numbers::pi);
  return {u, v};
}

std::vector<Vec3> fibonacci_sphere(std::size_t n, double phase) {
  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<Vec3> sites(n);
  const double count = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double z = 1.0 - (2.0 * static_cast<double>(k) + 1.0) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double lon = std::fmod(static_cast<double>(k) * golden_angle + phase,
                                 2.0 * std::numbers::pi);
    sites[k] = {r * std::cos(lon), r * std::sin(lon), z};
  }
  return sites;
}

double spiral_phase_from_seed(std::uint64_t seed) {
  if (seed == 0) return 0.0;
  SplitMix64 rng(derive_seed(seed, "spiral-phase"));
  return 2.0 * std::numbers::pi * rng.uniform();
}

std::vector<Vec3> pixel_centers(std::uint32_t side) {
  std::vector<Vec3> centers(static_cast<std::size_t>(side) * side);
  const double s = side;
  for (std::uint32_t row = 0; row < side; ++row) {
    for (std::uint32_t col = 0; col < side; ++col) {
      centers[static_cast<std::size_t>(row) * side + col] = {(col + 0.5) / s, (row + 0.5) / s, 0.0};
    }
  }
  return centers;
}

namespace {

std::vector<Vec3> projected_sites(const std::vector<Vec3>& sites) {
  std::vector<Vec3> out(sites.size());
  for (std::size_t k = 0; k < sites.size(); ++k) {
    const auto uv = equirect_project(sites[k]);
    out[k] = {uv.u, uv.v, 0.0};
  }
  return out;
}

SphereLattice assemble(std::uint32_t side, double phase, std::vector<Vec3> sites,
                       std::vector<std::uint32_t> grid_perm) {
  SphereLattice lattice;
  lattice.side = side;
  lattice.phase = phase;
  lattice.sites = std::move(sites);
  lattice.grid_perm = std::move(grid_perm);
  lattice.site_of_pixel.assign(lattice.grid_perm.size(), 0);
  for (std::uint32_t s = 0; s < lattice.grid_perm.size(); ++s) {
    if (lattice.grid_perm[s] < lattice.site_of_pixel.size()) {
      lattice.site_of_pixel[lattice.grid_perm[s]] = s;
    }
  }
  validate_lattice(lattice);
  return lattice;
}

}  // namespace

SphereLattice build_sphere_lattice(std::size_t n_sites, std::uint64_t seed) {
  if (n_sites < 4) throw Error(ErrorKind::kArgument, "lattice needs at least 4 sites");
  const auto side = exact_side(n_sites);
  const double phase = spiral_phase_from_seed(seed);
  auto sites = fibonacci_sphere(n_sites, phase);
  const auto projected = projected_sites(sites);
  const auto centers = pixel_centers(side);
  auto solved = n_sites <= kExactSolverLimit ? solve_assignment_exact(projected, centers)
                                             : solve_assignment_auction(projected, centers);
  return assemble(side, phase, std::move(sites), std::move(solved.object_of));
}

void validate_lattice(const SphereLattice& lattice) {
  const auto n = lattice.sites.size();
  if (static_cast<std::size_t>(lattice.side) * lattice.side != n || n == 0) {
    throw Error(ErrorKind::kConsistency, "lattice side does not match its site count");
  }
  if (lattice.grid_perm.size() != n || lattice.site_of_pixel.size() != n) {
    throw Error(ErrorKind::kConsistency, "grid permutation has the wrong length");
  }
  std::vector<std::uint8_t> hit(n, 0);
  for (auto pixel : lattice.grid_perm) {
    if (pixel >= n || hit[pixel]) {
      throw Error(ErrorKind::kConsistency, "grid permutation is not a bijection");
    }
    hit[pixel] = 1;
  }
  for (const auto& s : lattice.sites) {
    if (std::abs(norm(s) - 1.0) > 1e-9) {
      throw Error(ErrorKind::kConsistency, "lattice site is not on the unit sphere");
    }
  }
  auto projected = projected_sites(lattice.sites);
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return projected[a].y < projected[b].y ||
           (projected[a].y == projected[b].y && projected[a].x < projected[b].x);
  });
  for (std::size_t k = 1; k < n; ++k) {
    const auto& a = projected[order[k - 1]];
    const auto& b = projected[order[k]];
    if (std::abs(a.x - b.x) <= 1e-12 && std::abs(a.y - b.y) <= 1e-12) {
      throw Error(ErrorKind::kConsistency, "two sites share an equirectangular position");
    }
  }
}

std::string serialize_lattice(const SphereLattice& lattice) {
  ByteWriter out;
  out.put_bytes({kLatticeMagic, 4});
  out.put(kLatticeVersion);
  out.put(static_cast<std::uint32_t>(lattice.sites.size()));
  out.put(lattice.phase);
  for (const auto& s : lattice.sites) {
    out.put(static_cast<float>(s.x));
    out.put(static_cast<float>(s.y));
    out.put(static_cast<float>(s.z));
  }
  for (auto pixel : lattice.grid_perm) out.put(pixel);
  return out.release();
}

SphereLattice parse_lattice(std::string_view bytes) {
  ByteReader in(bytes);
  if (in.get_bytes(4) != std::string_view(kLatticeMagic, 4)) {
    throw Error(ErrorKind::kParse, "not a lattice file (bad magic)");
  }
  if (const auto version = in.get<std::uint32_t>(); version != kLatticeVersion) {
    throw Error(ErrorKind::kParse, "unsupported lattice version " + std::to_string(version));
  }
  const auto n = in.get<std::uint32_t>();
  const auto side = exact_side(n);
  const double phase = in.get<double>();
  if (in.remaining() != static_cast<std::size_t>(n) * 16) {
    throw Error(ErrorKind::kParse, "lattice payload has the wrong size");
  }
  auto sites = fibonacci_sphere(n, phase);
  for (std::uint32_t k = 0; k < n; ++k) {
    const float stored[3] = {in.get<float>(), in.get<float>(), in.get<float>()};
    if (stored[0] != static_cast<float>(sites[k].x) || stored[1] != static_cast<float>(sites[k].y) ||
        stored[2] != static_cast<float>(sites[k].z)) {
      throw Error(ErrorKind::kConsistency,
                  "stored site " + std::to_string(k) + " does not match the spiral");
    }
  }
  std::vector<std::uint32_t> grid_perm(n);
  for (auto& pixel : grid_perm) pixel = in.get<std::uint32_t>();
  return assemble(side, phase, std::move(sites), std::move(grid_perm));
}

SphereLattice read_lattice(const std::filesystem::path& path) {
  return parse_lattice(read_file(path));
}

void write_lattice(const std::filesystem::path& path, const SphereLattice& lattice) {
  write_file_atomic(path, serialize_lattice(lattice));
}

}  // namespace pcatlas
