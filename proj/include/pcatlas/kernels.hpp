#pragma once

// Data-parallel inner loops. Each kernel has a plain serial reference in
// `kernels::serial` and an OpenMP version in `kernels::omp`; both produce
// identical results for any thread count (tests hold them to bitwise
// equality). Library code calls the OpenMP versions.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pcatlas/spatial_index.hpp"
#include "pcatlas/vec3.hpp"

namespace pcatlas::kernels {

// Fixed-width per-person candidate lists for the sparse auction. The value
// (-|p - o|^2 - price) of every object outside a person's list is at most
// outside_value[person]; prices only rise, so the bound stays valid until the
// list is refreshed.
struct CandidateTable {
  std::size_t width = 0;
  std::vector<std::uint32_t> objects;  // persons * width
  std::vector<double> outside_value;   // -inf when the list holds every object

  std::span<const std::uint32_t> of(std::size_t person) const {
    return {objects.data() + person * width, width};
  }
};

struct Bid {
  std::uint32_t person = 0;
  std::uint32_t object = 0;
  double amount = 0.0;
  // The best candidate is worth less than the outside bound; the list must
  // be refreshed before this bid can be trusted.
  bool stale = false;
};

namespace serial {

std::vector<Neighbor> nearest_neighbors(const SpatialIndex& index,
                                        std::span<const Vec3> queries);

// Row-major out[r * cols.size() + c] = |rows[r] - cols[c]|^2.
void squared_distance_matrix(std::span<const Vec3> rows, std::span<const Vec3> cols,
                             std::span<double> out);

// Lowers min_d2 with distances to `chosen` and returns the eligible index of
// largest min_d2 (lowest index on ties), or -1 when none is eligible.
std::int64_t fps_relax(std::span<const Vec3> points, const Vec3& chosen,
                       std::span<double> min_d2, std::span<const std::uint8_t> eligible);

// Forward-auction bids for each listed bidder over its candidates, with the
// outside bound standing in for every non-candidate object. A bidder with a
// single candidate and no outside objects bids +eps.
std::vector<Bid> auction_bids(std::span<const Vec3> persons, std::span<const Vec3> objects,
                              const CandidateTable& table, std::span<const double> prices,
                              std::span<const std::uint32_t> bidders, double eps);

// Rebuilds the lists of the given persons from the current prices: the
// table.width objects of highest value, and the value of the next one as the
// outside bound. Ties in value may be broken either way.
void refresh_candidates(std::span<const Vec3> persons, std::span<const Vec3> objects,
                        std::span<const double> prices,
                        std::span<const std::uint32_t> which, CandidateTable& table);

}  // namespace serial

namespace omp {

std::vector<Neighbor> nearest_neighbors(const SpatialIndex& index,
                                        std::span<const Vec3> queries);
void squared_distance_matrix(std::span<const Vec3> rows, std::span<const Vec3> cols,
                             std::span<double> out);
std::int64_t fps_relax(std::span<const Vec3> points, const Vec3& chosen,
                       std::span<double> min_d2, std::span<const std::uint8_t> eligible);
std::vector<Bid> auction_bids(std::span<const Vec3> persons, std::span<const Vec3> objects,
                              const CandidateTable& table, std::span<const double> prices,
                              std::span<const std::uint32_t> bidders, double eps);
void refresh_candidates(std::span<const Vec3> persons, std::span<const Vec3> objects,
                        std::span<const double> prices,
                        std::span<const std::uint32_t> which, CandidateTable& table);

}  // namespace omp

}  // namespace pcatlas::kernels
