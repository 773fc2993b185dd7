#include "pcatlas/geometry.hpp"

#include <cmath>
#include <string>

#include "pcatlas/error.hpp"

namespace pcatlas {

void TriangleMesh::validate() const {
  const auto n = vertices.size();
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& face = faces[f];
    for (auto index : face) {
      if (index >= n) {
        throw Error(ErrorKind::kStructural,
                    "face " + std::to_string(f) + " references vertex " +
                        std::to_string(index) + " but mesh has " +
                        std::to_string(n) + " vertices");
      }
    }
    if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
      throw Error(ErrorKind::kStructural,
                  "face " + std::to_string(f) + " repeats a vertex");
    }
  }
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * norm(cross(b - a, c - a));
}

std::size_t PointCloud::non_hole_count() const {
  std::size_t count = 0;
  for (const auto& p : points) count += p.is_hole ? 0 : 1;
  return count;
}

std::vector<Vec3> PointCloud::positions() const {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.position);
  return out;
}

void PointCloud::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!is_finite(p.position) || !is_finite(p.normal)) {
      throw Error(ErrorKind::kConsistency,
                  "point " + std::to_string(i) + " is not finite");
    }
    if (p.is_hole) {
      if (!(p.normal == Vec3{}) || !(p.position == Vec3{})) {
        throw Error(ErrorKind::kConsistency,
                    "hole entry " + std::to_string(i) + " is not zero");
      }
    } else if (std::abs(norm(p.normal) - 1.0) > 1e-6) {
      throw Error(ErrorKind::kConsistency,
                  "point " + std::to_string(i) + " has a non-unit normal");
    }
  }
}

}  // namespace pcatlas
