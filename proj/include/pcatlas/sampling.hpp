#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>

#include "pcatlas/geometry.hpp"

namespace pcatlas {

inline constexpr std::size_t kDefaultMaxFaces = 800;
inline constexpr double kNormalizedRadius = 0.95;

enum class FilterVerdict { kAccept, kReject };

// Rejects strictly more than max_faces.
FilterVerdict filter_by_face_count(const TriangleMesh& mesh,
                                   std::size_t max_faces = kDefaultMaxFaces);

// Centers on the bounding-box center and scales so the farthest vertex sits
// at radius 0.95.
std::pair<TriangleMesh, NormalizationTransform> normalize_to_unit_sphere(
    const TriangleMesh& mesh);

// Area-weighted samples, each carrying its face's unit normal. Sample k uses
// its own generator derived from (seed, k).
PointCloud sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

// Greedy farthest-point subset of size n over the non-hole points; output in
// selection order. The first pick is drawn uniformly from the seed.
PointCloud farthest_point_sample(const PointCloud& cloud, std::size_t n,
                                 std::uint64_t seed);
PointCloud farthest_point_sample_from(const PointCloud& cloud, std::size_t n,
                                      std::size_t start_index);

// Indices (into cloud.points) chosen by farthest_point_sample_from.
std::vector<std::size_t> farthest_point_indices(const PointCloud& cloud, std::size_t n,
                                                std::size_t start_index);

// Sample 4n area-weighted points, then FPS down to n: the dataset's clean
// cloud recipe.
PointCloud sample_clean_cloud(const TriangleMesh& normalized_mesh, std::size_t n,
                              std::uint64_t seed);

}  // namespace pcatlas
