#include "pcatlas/spatial_index.hpp"

#include <algorithm>
#include <limits>

#include "pcatlas/error.hpp"

namespace pcatlas {
namespace {

constexpr std::uint32_t kLeafSize = 12;

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.squared_distance < b.squared_distance ||
         (a.squared_distance == b.squared_distance && a.index < b.index);
}

}  // namespace

SpatialIndex::SpatialIndex(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.size() >= std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorKind::kSize, "spatial index supports < 2^32 points");
  }
  order_.resize(points_.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::int32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end, -1, -1, 0, 0.0});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (auto i = begin; i < end; ++i) {
    const auto& p = points_[order_[i]];
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  const Vec3 extent = hi - lo;
  int axis = 0;
  if (extent.y > extent[axis]) axis = 1;
  if (extent.z > extent[axis]) axis = 2;
  if (extent[axis] == 0.0) return id;  // all coincident: keep as a leaf

  const auto mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double pa = points_[a][axis];
                     const double pb = points_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const double split = points_[order_[mid]][axis];
  const auto left = build(begin, mid);
  const auto right = build(mid, end);
  auto& node = nodes_[id];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

Neighbor SpatialIndex::nearest(const Vec3& query) const {
  Neighbor best{0, std::numeric_limits<double>::infinity()};
  // Explicit stack of (node, lower bound on squared distance to its cell).
  struct Entry {
    std::int32_t node;
    double bound;
  };
  Entry stack[128];
  int top = 0;
  stack[top++] = {0, 0.0};
  while (top > 0) {
    const auto [id, bound] = stack[--top];
    // An equal bound may still hold a lower-index tie, so prune strictly.
    if (bound > best.squared_distance) continue;
    const auto& node = nodes_[id];
    if (node.left < 0) {
      for (auto i = node.begin; i < node.end; ++i) {
        const Neighbor candidate{order_[i], squared_distance(points_[order_[i]], query)};
        if (closer(candidate, best)) best = candidate;
      }
      continue;
    }
    const double diff = query[node.axis] - node.split;
    stack[top++] = {diff < 0 ? node.right : node.left, std::max(bound, diff * diff)};
    stack[top++] = {diff < 0 ? node.left : node.right, bound};
  }
  return best;
}

std::vector<Neighbor> SpatialIndex::k_nearest(const Vec3& query, std::size_t k) const {
  std::vector<Neighbor> heap;  // max-heap under `closer`
  if (k == 0 || points_.empty()) return heap;
  heap.reserve(k + 1);
  auto worst = [&]() {
    return heap.size() < k ? std::numeric_limits<double>::infinity()
                           : heap.front().squared_distance;
  };
  std::vector<std::pair<std::int32_t, double>> stack{{0, 0.0}};
  while (!stack.empty()) {
    auto [id, bound] = stack.back();
    stack.pop_back();
    if (bound > worst()) continue;
    const auto& node = nodes_[id];
    if (node.left < 0) {
      for (auto i = node.begin; i < node.end; ++i) {
        const Neighbor candidate{order_[i], squared_distance(points_[order_[i]], query)};
        if (heap.size() < k) {
          heap.push_back(candidate);
          std::push_heap(heap.begin(), heap.end(), closer);
        } else if (closer(candidate, heap.front())) {
          std::pop_heap(heap.begin(), heap.end(), closer);
          heap.back() = candidate;
          std::push_heap(heap.begin(), heap.end(), closer);
        }
      }
      continue;
    }
    const double diff = query[node.axis] - node.split;
    const double far_bound = std::max(bound, diff * diff);
    stack.push_back({diff < 0 ? node.right : node.left, far_bound});
    stack.push_back({diff < 0 ? node.left : node.right, bound});
  }
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

std::vector<std::uint32_t> SpatialIndex::within_radius(const Vec3& query,
                                                       double radius) const {
  std::vector<std::uint32_t> out;
  if (points_.empty()) return out;
  const double r2 = radius * radius;
  std::vector<std::pair<std::int32_t, double>> stack{{0, 0.0}};
  while (!stack.empty()) {
    auto [id, bound] = stack.back();
    stack.pop_back();
    if (bound > r2) continue;
    const auto& node = nodes_[id];
    if (node.left < 0) {
      for (auto i = node.begin; i < node.end; ++i) {
        if (squared_distance(points_[order_[i]], query) <= r2) out.push_back(order_[i]);
      }
      continue;
    }
    const double diff = query[node.axis] - node.split;
    const double far_bound = std::max(bound, diff * diff);
    stack.push_back({diff < 0 ? node.right : node.left, far_bound});
    stack.push_back({diff < 0 ? node.left : node.right, bound});
  }
  std::sort(out.begin(), out.end());
  return out;
}

Neighbor nearest_linear(std::span<const Vec3> points, const Vec3& query) {
  if (points.empty()) throw Error(ErrorKind::kEmptyInput, "nearest on empty set");
  Neighbor best{0, squared_distance(points[0], query)};
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double d2 = squared_distance(points[i], query);
    if (d2 < best.squared_distance) best = {static_cast<std::uint32_t>(i), d2};
  }
  return best;
}

std::vector<Neighbor> k_nearest_linear(std::span<const Vec3> points,
                                       const Vec3& query, std::size_t k) {
  std::vector<Neighbor> all;
  all.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    all.push_back({static_cast<std::uint32_t>(i), squared_distance(points[i], query)});
  }
  std::sort(all.begin(), all.end(), closer);
  if (all.size() > k) all.resize(k);
  return all;
}

}  // namespace pcatlas
