#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pcatlas/vec3.hpp"

namespace pcatlas {

struct Neighbor {
  std::uint32_t index = 0;
  double squared_distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Balanced kd-tree over a fixed point set. Queries are exact: equal distances
// resolve to the lowest point index, so results match a linear scan entry for
// entry. Immutable after construction; concurrent queries are safe.
class SpatialIndex {
 public:
  SpatialIndex() = default;
  explicit SpatialIndex(std::vector<Vec3> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<Vec3>& points() const { return points_; }

  // Precondition: !empty().
  Neighbor nearest(const Vec3& query) const;

  // Up to k neighbors ordered by (distance, index).
  std::vector<Neighbor> k_nearest(const Vec3& query, std::size_t k) const;

  // Indices with squared distance <= radius^2, ascending.
  std::vector<std::uint32_t> within_radius(const Vec3& query, double radius) const;

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = 0;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

// Linear-scan references with the same tie rules; test oracles and tiny inputs.
Neighbor nearest_linear(std::span<const Vec3> points, const Vec3& query);
std::vector<Neighbor> k_nearest_linear(std::span<const Vec3> points,
                                       const Vec3& query, std::size_t k);

}  // namespace pcatlas
