#include "pcatlas/atlas.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pcatlas/error.hpp"
#include "pcatlas/file_util.hpp"

namespace pcatlas {
namespace {

constexpr char kAtlasMagic[4] = {'A', 'F', 'A', 'T'};
constexpr std::uint32_t kAtlasVersion = 1;
constexpr double kUnitSlack = 1e-9;

void require_matching_side(const Atlas& atlas, const SphereLattice& lattice) {
  if (atlas.side != lattice.side) {
    throw Error(ErrorKind::kConsistency, "atlas side " + std::to_string(atlas.side) +
                                             " does not match lattice side " +
                                             std::to_string(lattice.side));
  }
}

}  // namespace

Solver solver_from_string(std::string_view name) {
  if (name == "auto") return Solver::kAuto;
  if (name == "exact") return Solver::kExact;
  if (name == "auction") return Solver::kAuction;
  throw Error(ErrorKind::kArgument, "unknown solver '" + std::string(name) + "'");
}

const char* to_string(Solver solver) {
  switch (solver) {
    case Solver::kAuto:
      return "auto";
    case Solver::kExact:
      return "exact";
    case Solver::kAuction:
      return "auction";
  }
  return "?";
}

SphereAssignment assign_to_sphere(const PointCloud& cloud, const SphereLattice& lattice,
                                  Solver solver, const AuctionOptions& auction) {
  std::vector<Vec3> persons;
  std::vector<std::size_t> entry;
  persons.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    if (p.is_hole) continue;
    if (!is_finite(p.position) || norm(p.position) > 1.0 + kUnitSlack) {
      throw Error(ErrorKind::kConsistency,
                  "point " + std::to_string(i) + " lies outside the unit sphere");
    }
    persons.push_back(p.position);
    entry.push_back(i);
  }
  if (persons.size() > lattice.n_sites()) {
    throw Error(ErrorKind::kSize, std::to_string(persons.size()) + " points exceed " +
                                      std::to_string(lattice.n_sites()) + " lattice sites");
  }
  if (solver == Solver::kAuto) {
    solver = lattice.n_sites() <= kExactSolverLimit ? Solver::kExact : Solver::kAuction;
  }
  const auto solved = solver == Solver::kExact
                          ? solve_assignment_exact(persons, lattice.sites)
                          : solve_assignment_auction(persons, lattice.sites, auction);

  SphereAssignment out;
  out.site_of_point.assign(cloud.size(), -1);
  for (std::size_t k = 0; k < persons.size(); ++k) {
    out.site_of_point[entry[k]] = solved.object_of[k];
  }
  out.cost = solved.cost;
  return out;
}

SphereAssignment restrict_assignment(const SphereAssignment& assignment,
                                     std::span<const std::size_t> kept) {
  SphereAssignment out;
  out.site_of_point.reserve(kept.size());
  for (auto i : kept) {
    if (i >= assignment.site_of_point.size()) {
      throw Error(ErrorKind::kConsistency, "kept index out of range");
    }
    out.site_of_point.push_back(assignment.site_of_point[i]);
  }
  // The cost is only meaningful against the cropped cloud; encode ignores it.
  out.cost = 0.0;
  return out;
}

Atlas::Atlas(std::uint32_t side_length)
    : side(side_length),
      channels(kAtlasChannels * static_cast<std::size_t>(side_length) * side_length, 0.0),
      mask(static_cast<std::size_t>(side_length) * side_length, 0) {}

Vec3 Atlas::offset(std::size_t pixel) const {
  return {at(0, pixel), at(1, pixel), at(2, pixel)};
}

Vec3 Atlas::normal(std::size_t pixel) const {
  return {at(3, pixel), at(4, pixel), at(5, pixel)};
}

void Atlas::set_pixel(std::size_t pixel, const Vec3& off, const Vec3& nrm) {
  for (int a = 0; a < 3; ++a) {
    at(a, pixel) = off[a];
    at(3 + a, pixel) = nrm[a];
  }
}

std::size_t Atlas::valid_count() const {
  std::size_t count = 0;
  for (auto m : mask) count += m != 0;
  return count;
}

void Atlas::require_same_shape(const Atlas& other) const {
  if (side != other.side || channels.size() != other.channels.size()) {
    throw Error(ErrorKind::kConsistency, "atlas shapes differ: side " + std::to_string(side) +
                                             " vs " + std::to_string(other.side));
  }
}

void Atlas::validate() const {
  const auto n = pixel_count();
  if (channels.size() != kAtlasChannels * n || mask.size() != n) {
    throw Error(ErrorKind::kConsistency, "atlas buffers do not match side");
  }
  for (std::size_t p = 0; p < n; ++p) {
    const Vec3 off = offset(p);
    const Vec3 nrm = normal(p);
    if (!mask[p]) {
      if (off != Vec3{} || nrm != Vec3{}) {
        throw Error(ErrorKind::kConsistency,
                    "hole pixel " + std::to_string(p) + " carries nonzero data");
      }
      continue;
    }
    if (!is_finite(off) || !is_finite(nrm)) {
      throw Error(ErrorKind::kConsistency, "pixel " + std::to_string(p) + " is not finite");
    }
    if (std::abs(norm(nrm) - 1.0) > 1e-5) {
      throw Error(ErrorKind::kConsistency,
                  "pixel " + std::to_string(p) + " normal is not unit length");
    }
    if (norm(off) > 2.0 + 1e-9) {
      throw Error(ErrorKind::kConsistency,
                  "pixel " + std::to_string(p) + " offset exceeds 2");
    }
  }
}

Atlas encode_atlas(const PointCloud& cloud, const SphereLattice& lattice,
                   const SphereAssignment& assignment) {
  if (assignment.site_of_point.size() != cloud.size()) {
    throw Error(ErrorKind::kConsistency, "assignment covers " +
                                             std::to_string(assignment.site_of_point.size()) +
                                             " entries, cloud has " +
                                             std::to_string(cloud.size()));
  }
  Atlas atlas(lattice.side);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    const auto site = assignment.site_of_point[i];
    if (p.is_hole != (site < 0)) {
      throw Error(ErrorKind::kConsistency,
                  "entry " + std::to_string(i) + ": hole flag and assignment disagree");
    }
    if (site < 0) continue;
    if (static_cast<std::size_t>(site) >= lattice.n_sites()) {
      throw Error(ErrorKind::kConsistency, "entry " + std::to_string(i) + ": site out of range");
    }
    const auto pixel = lattice.grid_perm[static_cast<std::size_t>(site)];
    if (atlas.mask[pixel]) {
      throw Error(ErrorKind::kConsistency,
                  "site " + std::to_string(site) + " is assigned twice");
    }
    atlas.mask[pixel] = 1;
    atlas.set_pixel(pixel, p.position - lattice.sites[static_cast<std::size_t>(site)],
                    p.normal);
  }
  return atlas;
}

DecodedAtlas decode_atlas(const Atlas& atlas, const SphereLattice& lattice) {
  require_matching_side(atlas, lattice);
  DecodedAtlas out;
  for (std::uint32_t p = 0; p < atlas.pixel_count(); ++p) {
    if (!atlas.mask[p]) continue;
    const Vec3& site = lattice.sites[lattice.site_of_pixel[p]];
    Vec3 n = atlas.normal(p);
    const double length = norm(n);
    if (length > 0.0 && std::isfinite(length)) {
      n = n * (1.0 / length);
    } else {
      n = site;
      ++out.zero_normal_pixels;
    }
    out.cloud.points.push_back({site + atlas.offset(p), n, false});
    out.pixels.push_back(p);
  }
  return out;
}

std::string serialize_atlas(const Atlas& atlas) {
  ByteWriter w;
  w.put_bytes(std::string_view(kAtlasMagic, 4));
  w.put<std::uint32_t>(kAtlasVersion);
  w.put<std::uint32_t>(atlas.side);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(kAtlasChannels));
  w.put<std::uint8_t>(1);
  for (double value : atlas.channels) w.put<float>(static_cast<float>(value));
  const auto n = atlas.pixel_count();
  std::string bits((n + 7) / 8, '\0');
  for (std::size_t p = 0; p < n; ++p) {
    if (atlas.mask[p]) bits[p / 8] = static_cast<char>(bits[p / 8] | (1 << (p % 8)));
  }
  w.put_bytes(bits);
  return w.release();
}

Atlas parse_atlas(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.get_bytes(4) != std::string_view(kAtlasMagic, 4)) {
    throw Error(ErrorKind::kParse, "not an atlas file (bad magic)");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kAtlasVersion) {
    throw Error(ErrorKind::kParse, "unsupported atlas version " + std::to_string(version));
  }
  const auto side = r.get<std::uint32_t>();
  const auto channels = r.get<std::uint32_t>();
  if (channels != kAtlasChannels) {
    throw Error(ErrorKind::kParse, "expected 6 channels, found " + std::to_string(channels));
  }
  if (side == 0 || side > 65536) {
    throw Error(ErrorKind::kParse, "implausible atlas side " + std::to_string(side));
  }
  const auto has_mask = r.get<std::uint8_t>();
  if (has_mask > 1) throw Error(ErrorKind::kParse, "bad mask flag");
  Atlas atlas(side);
  const auto n = atlas.pixel_count();
  if (r.remaining() < atlas.channels.size() * sizeof(float)) {
    throw Error(ErrorKind::kParse, "atlas payload truncated at byte offset " +
                                       std::to_string(r.offset()));
  }
  for (auto& value : atlas.channels) value = r.get<float>();
  if (has_mask) {
    const auto bits = r.get_bytes((n + 7) / 8);
    for (std::size_t p = 0; p < n; ++p) atlas.mask[p] = (bits[p / 8] >> (p % 8)) & 1;
  } else {
    std::fill(atlas.mask.begin(), atlas.mask.end(), 1);
  }
  if (r.remaining() != 0) {
    throw Error(ErrorKind::kParse, "trailing bytes after atlas payload");
  }
  return atlas;
}

Atlas read_atlas(const std::filesystem::path& path) { return parse_atlas(read_file(path)); }

void write_atlas(const std::filesystem::path& path, const Atlas& atlas) {
  write_file_atomic(path, serialize_atlas(atlas));
}

RoundtripError roundtrip_error(const PointCloud& cloud, const SphereLattice& lattice,
                               const SphereAssignment& assignment, const Atlas& atlas) {
  const auto decoded = decode_atlas(atlas, lattice);
  std::vector<std::int64_t> point_of_pixel(atlas.pixel_count(), -1);
  for (std::size_t k = 0; k < decoded.pixels.size(); ++k) {
    point_of_pixel[decoded.pixels[k]] = static_cast<std::int64_t>(k);
  }
  RoundtripError err;
  std::size_t matched = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto site = assignment.site_of_point[i];
    if (site < 0) continue;
    const auto k = point_of_pixel[lattice.grid_perm[static_cast<std::size_t>(site)]];
    if (k < 0) {
      throw Error(ErrorKind::kConsistency,
                  "entry " + std::to_string(i) + " has no decoded counterpart");
    }
    const auto& q = decoded.cloud.points[static_cast<std::size_t>(k)];
    err.max_position_error =
        std::max(err.max_position_error, distance(cloud.points[i].position, q.position));
    err.max_normal_error =
        std::max(err.max_normal_error, distance(cloud.points[i].normal, q.normal));
    ++matched;
  }
  if (matched != decoded.cloud.size()) {
    throw Error(ErrorKind::kConsistency, "decoded atlas has points the cloud lacks");
  }
  return err;
}

}  // namespace pcatlas
