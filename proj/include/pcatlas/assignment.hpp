#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pcatlas/vec3.hpp"

namespace pcatlas {

// Largest object count the dense exact solver accepts (its cost matrix is
// materialized: 4096^2 doubles = 128 MiB).
inline constexpr std::size_t kExactSolverLimit = 4096;

// Injective map person -> object under squared Euclidean cost.
struct AssignmentResult {
  std::vector<std::uint32_t> object_of;
  double cost = 0.0;
};

// Sum of |persons[i] - objects[object_of[i]]|^2 in person order.
double assignment_cost(std::span<const Vec3> persons, std::span<const Vec3> objects,
                       std::span<const std::uint32_t> object_of);

// Dense square linear assignment (Jonker-Volgenant: column reduction,
// reduction transfer, augmenting row reduction, shortest augmenting paths).
// `cost` is row-major n x n; returns the column of each row.
std::vector<std::uint32_t> solve_dense_lap(std::span<const double> cost, std::size_t n);

// Dense rectangular assignment, rows <= cols, by one shortest augmenting
// path per row with row and column potentials. `cost` is row-major
// rows x cols; returns the column of each row.
std::vector<std::uint32_t> solve_rectangular_lap(std::span<const double> cost, std::size_t rows,
                                                 std::size_t cols);

// Exact rectangular assignment (persons <= objects). Up to half as many
// persons as objects uses solve_rectangular_lap; above that the square
// solver with surplus objects matched to zero-cost dummy rows.
AssignmentResult solve_assignment_exact(std::span<const Vec3> persons,
                                        std::span<const Vec3> objects);

struct AuctionOptions {
  // Final eps = relative_eps * (mean over persons of the nearest-object cost).
  // That mean lower-bounds the optimal mean cost, so the eps-optimality
  // guarantee (cost <= opt + objects * eps) is a relative bound of the same
  // size.
  double relative_eps = 1e-7;
  double scaling = 6.0;
  std::size_t candidates = 128;
  std::size_t max_rounds_per_phase = 2'000'000;
};

struct AuctionStats {
  std::size_t phases = 0;
  std::size_t rounds = 0;
  std::size_t bids = 0;
  std::size_t refreshes = 0;  // candidate lists rebuilt against all objects
  double final_eps = 0.0;
};

// Epsilon-scaling forward auction (persons <= objects). Bids are computed in
// synchronous Jacobi rounds over short per-person candidate lists; conflicts
// go to the highest bid, then the lowest person index, so the result does
// not depend on the thread count. Each list carries an upper bound on the
// value of every object outside it, which stands in for them when bidding,
// so eps-complementary slackness holds for the full dense problem. A list
// whose bound overtakes its best entry is rebuilt from all objects. Surplus
// objects are absorbed by zero-cost dummy persons that always take the
// cheapest object.
//
// Throws Error(kSolver) when a phase exceeds max_rounds_per_phase; the message
// reports the last eps reached.
AssignmentResult solve_assignment_auction(std::span<const Vec3> persons,
                                          std::span<const Vec3> objects,
                                          const AuctionOptions& options = {},
                                          AuctionStats* stats = nullptr);

}  // namespace pcatlas
