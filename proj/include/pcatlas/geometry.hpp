#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "pcatlas/vec3.hpp"

namespace pcatlas {

using Face = std::array<std::uint32_t, 3>;

// Indexed triangle mesh. Invariants (checked by validate()): every face index
// is below the vertex count and no face repeats a vertex.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t face_count() const { return faces.size(); }

  // Throws Error(kStructural) on the first violated invariant.
  void validate() const;
};

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

struct OrientedPoint {
  Vec3 position;
  Vec3 normal;
  bool is_hole = false;

  friend bool operator==(const OrientedPoint&, const OrientedPoint&) = default;
};

// A hole entry has zero position and zero normal; a real entry has a unit
// normal.
struct PointCloud {
  std::vector<OrientedPoint> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  std::size_t non_hole_count() const;

  std::vector<Vec3> positions() const;

  // Checks finiteness, unit normals (1e-6) and the hole convention.
  void validate() const;

  friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

// Maps original coordinates to normalized ones: y = scale * (x + translation).
struct NormalizationTransform {
  Vec3 translation;
  double scale = 1.0;

  Vec3 apply(const Vec3& p) const { return (p + translation) * scale; }
  Vec3 invert(const Vec3& q) const { return q * (1.0 / scale) - translation; }
};

}  // namespace pcatlas
