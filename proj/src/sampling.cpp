#include "pcatlas/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "pcatlas/error.hpp"
#include "pcatlas/kernels.hpp"
#include "pcatlas/rng.hpp"

namespace pcatlas {

FilterVerdict filter_by_face_count(const TriangleMesh& mesh, std::size_t max_faces) {
  if (max_faces < 1) throw Error(ErrorKind::kArgument, "max_faces must be >= 1");
  return mesh.face_count() > max_faces ? FilterVerdict::kReject : FilterVerdict::kAccept;
}

std::pair<TriangleMesh, NormalizationTransform> normalize_to_unit_sphere(
    const TriangleMesh& mesh) {
  if (mesh.vertices.empty()) {
    throw Error(ErrorKind::kDegenerateGeometry, "cannot normalize a mesh without vertices");
  }
  Vec3 lo = mesh.vertices.front();
  Vec3 hi = lo;
  for (const auto& v : mesh.vertices) {
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
  }
  const Vec3 center = (lo + hi) * 0.5;
  double radius = 0.0;
  for (const auto& v : mesh.vertices) radius = std::max(radius, norm(v - center));
  if (radius == 0.0) {
    throw Error(ErrorKind::kDegenerateGeometry, "all vertices coincide");
  }
  NormalizationTransform transform{-center, kNormalizedRadius / radius};
  TriangleMesh out = mesh;
  for (auto& v : out.vertices) v = transform.apply(v);
  return {std::move(out), transform};
}

PointCloud sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  std::vector<double> cumulative(mesh.faces.size());
  std::vector<Vec3> normals(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& face = mesh.faces[f];
    const Vec3& a = mesh.vertices[face[0]];
    const Vec3& b = mesh.vertices[face[1]];
    const Vec3& c = mesh.vertices[face[2]];
    const Vec3 scaled_normal = cross(b - a, c - a);
    const double twice_area = norm(scaled_normal);
    if (twice_area > 0.0) normals[f] = scaled_normal * (1.0 / twice_area);
    total += 0.5 * twice_area;
    cumulative[f] = total;
  }
  if (!(total > 0.0)) {
    throw Error(ErrorKind::kDegenerateGeometry, "mesh has zero surface area");
  }

  PointCloud cloud;
  cloud.points.resize(n);
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < count; ++k) {
    SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    const double target = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    auto f = static_cast<std::size_t>(it - cumulative.begin());
    if (f >= cumulative.size()) f = cumulative.size() - 1;
    // Zero-area faces have zero-width intervals and are never picked, except
    // via the clamp above; skip back to the last face with area.
    while (normals[f] == Vec3{}) --f;
    const auto& face = mesh.faces[f];
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    const Vec3& a = mesh.vertices[face[0]];
    const Vec3& b = mesh.vertices[face[1]];
    const Vec3& c = mesh.vertices[face[2]];
    cloud.points[k].position = a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2);
    cloud.points[k].normal = normals[f];
  }
  return cloud;
}

std::vector<std::size_t> farthest_point_indices(const PointCloud& cloud, std::size_t n,
                                                std::size_t start_index) {
  const auto eligible_count = cloud.non_hole_count();
  if (n > eligible_count) {
    throw Error(ErrorKind::kSize, "cannot select " + std::to_string(n) + " of " +
                                      std::to_string(eligible_count) + " points");
  }
  if (start_index >= cloud.size() || cloud.points[start_index].is_hole) {
    throw Error(ErrorKind::kArgument, "FPS start index is not a real point");
  }
  std::vector<std::size_t> picked;
  if (n == 0) return picked;
  picked.reserve(n);
  const auto positions = cloud.positions();
  std::vector<std::uint8_t> eligible(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) eligible[i] = cloud.points[i].is_hole ? 0 : 1;
  std::vector<double> min_d2(cloud.size(), std::numeric_limits<double>::infinity());

  std::size_t current = start_index;
  while (true) {
    picked.push_back(current);
    eligible[current] = 0;
    if (picked.size() == n) break;
    const auto next = kernels::omp::fps_relax(positions, positions[current], min_d2, eligible);
    current = static_cast<std::size_t>(next);
  }
  return picked;
}

PointCloud farthest_point_sample_from(const PointCloud& cloud, std::size_t n,
                                      std::size_t start_index) {
  PointCloud out;
  for (auto i : farthest_point_indices(cloud, n, start_index)) out.points.push_back(cloud.points[i]);
  return out;
}

PointCloud farthest_point_sample(const PointCloud& cloud, std::size_t n, std::uint64_t seed) {
  const auto eligible_count = cloud.non_hole_count();
  if (n > eligible_count) {
    throw Error(ErrorKind::kSize, "cannot select " + std::to_string(n) + " of " +
                                      std::to_string(eligible_count) + " points");
  }
  if (n == 0) return {};
  SplitMix64 rng(derive_seed(seed, "fps-start"));
  auto rank = static_cast<std::size_t>(rng.uniform() * static_cast<double>(eligible_count));
  std::size_t start = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.points[i].is_hole) continue;
    if (rank == 0) {
      start = i;
      break;
    }
    --rank;
  }
  return farthest_point_sample_from(cloud, n, start);
}

PointCloud sample_clean_cloud(const TriangleMesh& normalized_mesh, std::size_t n,
                              std::uint64_t seed) {
  auto dense = sample_surface(normalized_mesh, 4 * n, derive_seed(seed, "surface"));
  return farthest_point_sample(dense, n, derive_seed(seed, "fps"));
}

}  // namespace pcatlas
