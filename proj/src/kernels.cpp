#include "pcatlas/kernels.hpp"

#include <algorithm>
#include <limits>
#include <utility>

namespace pcatlas::kernels {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Ranked = std::pair<double, std::uint32_t>;  // (cost + price, object)

inline Bid bid_for(std::uint32_t person, std::span<const Vec3> persons,
                   std::span<const Vec3> objects, const CandidateTable& table,
                   std::span<const double> prices, double eps) {
  const Vec3& p = persons[person];
  double best = -kInf;
  double second = -kInf;
  std::uint32_t best_object = 0;
  for (auto j : table.of(person)) {
    const double value = -squared_distance(p, objects[j]) - prices[j];
    if (value > best || (value == best && j < best_object)) {
      second = best;
      best = value;
      best_object = j;
    } else if (value > second) {
      second = value;
    }
  }
  const double outside = table.outside_value[person];
  if (best < outside) return {person, best_object, 0.0, true};
  second = std::max(second, outside);
  const double increment = second == -kInf ? eps : (best - second) + eps;
  return {person, best_object, prices[best_object] + increment, false};
}

inline void refresh_one(std::uint32_t person, std::span<const Vec3> persons,
                        std::span<const Vec3> objects, std::span<const double> prices,
                        CandidateTable& table, std::vector<Ranked>& scratch) {
  const Vec3& p = persons[person];
  scratch.resize(objects.size());
  for (std::size_t j = 0; j < objects.size(); ++j) {
    scratch[j] = {squared_distance(p, objects[j]) + prices[j], static_cast<std::uint32_t>(j)};
  }
  const std::size_t w = table.width;
  if (w < scratch.size()) {
    // Select the w + 1 smallest, then order just those.
    const auto cut = scratch.begin() + static_cast<std::ptrdiff_t>(w);
    std::nth_element(scratch.begin(), cut, scratch.end());
    std::sort(scratch.begin(), cut);
    table.outside_value[person] = -cut->first;
  } else {
    std::sort(scratch.begin(), scratch.end());
    table.outside_value[person] = -kInf;
  }
  std::uint32_t* out = table.objects.data() + static_cast<std::size_t>(person) * w;
  for (std::size_t t = 0; t < w; ++t) out[t] = scratch[t].second;
}

inline bool better(double d2, std::int64_t index, double best_d2, std::int64_t best_index) {
  return best_index < 0 || d2 > best_d2 || (d2 == best_d2 && index < best_index);
}

}  // namespace

namespace serial {

std::vector<Neighbor> nearest_neighbors(const SpatialIndex& index,
                                        std::span<const Vec3> queries) {
  std::vector<Neighbor> out(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) out[i] = index.nearest(queries[i]);
  return out;
}

void squared_distance_matrix(std::span<const Vec3> rows, std::span<const Vec3> cols,
                             std::span<double> out) {
  const auto m = cols.size();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < m; ++c) out[r * m + c] = squared_distance(rows[r], cols[c]);
  }
}

std::int64_t fps_relax(std::span<const Vec3> points, const Vec3& chosen,
                       std::span<double> min_d2, std::span<const std::uint8_t> eligible) {
  std::int64_t best = -1;
  double best_d2 = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!eligible[i]) continue;
    const double d2 = squared_distance(points[i], chosen);
    if (d2 < min_d2[i]) min_d2[i] = d2;
    if (better(min_d2[i], static_cast<std::int64_t>(i), best_d2, best)) {
      best = static_cast<std::int64_t>(i);
      best_d2 = min_d2[i];
    }
  }
  return best;
}

std::vector<Bid> auction_bids(std::span<const Vec3> persons, std::span<const Vec3> objects,
                              const CandidateTable& table, std::span<const double> prices,
                              std::span<const std::uint32_t> bidders, double eps) {
  std::vector<Bid> out(bidders.size());
  for (std::size_t k = 0; k < bidders.size(); ++k) {
    out[k] = bid_for(bidders[k], persons, objects, table, prices, eps);
  }
  return out;
}

void refresh_candidates(std::span<const Vec3> persons, std::span<const Vec3> objects,
                        std::span<const double> prices,
                        std::span<const std::uint32_t> which, CandidateTable& table) {
  std::vector<Ranked> scratch;
  for (auto person : which) refresh_one(person, persons, objects, prices, table, scratch);
}

}  // namespace serial

namespace omp {

std::vector<Neighbor> nearest_neighbors(const SpatialIndex& index,
                                        std::span<const Vec3> queries) {
  std::vector<Neighbor> out(queries.size());
  const auto n = static_cast<std::int64_t>(queries.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[i] = index.nearest(queries[i]);
  return out;
}

void squared_distance_matrix(std::span<const Vec3> rows, std::span<const Vec3> cols,
                             std::span<double> out) {
  const auto n = static_cast<std::int64_t>(rows.size());
  const auto m = cols.size();
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < n; ++r) {
    double* row = out.data() + r * m;
    const Vec3 p = rows[r];
    for (std::size_t c = 0; c < m; ++c) row[c] = squared_distance(p, cols[c]);
  }
}

std::int64_t fps_relax(std::span<const Vec3> points, const Vec3& chosen,
                       std::span<double> min_d2, std::span<const std::uint8_t> eligible) {
  std::int64_t best = -1;
  double best_d2 = 0.0;
  const auto n = static_cast<std::int64_t>(points.size());
#pragma omp parallel
  {
    std::int64_t local = -1;
    double local_d2 = 0.0;
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < n; ++i) {
      if (!eligible[i]) continue;
      const double d2 = squared_distance(points[i], chosen);
      if (d2 < min_d2[i]) min_d2[i] = d2;
      if (better(min_d2[i], i, local_d2, local)) {
        local = i;
        local_d2 = min_d2[i];
      }
    }
    // (d2 desc, index asc) is a total order, so merge order is irrelevant.
#pragma omp critical(pcatlas_fps_merge)
    if (local >= 0 && better(local_d2, local, best_d2, best)) {
      best = local;
      best_d2 = local_d2;
    }
  }
  return best;
}

std::vector<Bid> auction_bids(std::span<const Vec3> persons, std::span<const Vec3> objects,
                              const CandidateTable& table, std::span<const double> prices,
                              std::span<const std::uint32_t> bidders, double eps) {
  std::vector<Bid> out(bidders.size());
  const auto n = static_cast<std::int64_t>(bidders.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t k = 0; k < n; ++k) {
    out[k] = bid_for(bidders[k], persons, objects, table, prices, eps);
  }
  return out;
}

void refresh_candidates(std::span<const Vec3> persons, std::span<const Vec3> objects,
                        std::span<const double> prices,
                        std::span<const std::uint32_t> which, CandidateTable& table) {
  const auto n = static_cast<std::int64_t>(which.size());
#pragma omp parallel
  {
    std::vector<Ranked> scratch;
#pragma omp for schedule(dynamic, 4)
    for (std::int64_t k = 0; k < n; ++k) {
      refresh_one(which[k], persons, objects, prices, table, scratch);
    }
  }
}

}  // namespace omp

}  // namespace pcatlas::kernels
