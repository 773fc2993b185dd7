#include "pcatlas/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <string>

#include "pcatlas/error.hpp"
#include "pcatlas/kernels.hpp"
#include "pcatlas/spatial_index.hpp"

namespace pcatlas {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

void check_sizes(std::span<const Vec3> persons, std::span<const Vec3> objects) {
  if (persons.size() > objects.size()) {
    throw Error(ErrorKind::kSize, std::to_string(persons.size()) + " persons exceed " +
                                      std::to_string(objects.size()) + " objects");
  }
  if (objects.size() >= kNone) {
    throw Error(ErrorKind::kSize, "too many objects for 32-bit indices");
  }
}

double squared_bbox_diagonal(std::span<const Vec3> a, std::span<const Vec3> b) {
  Vec3 lo{kInf, kInf, kInf};
  Vec3 hi{-kInf, -kInf, -kInf};
  for (auto set : {a, b}) {
    for (const auto& p : set) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
  }
  return squared_distance(lo, hi);
}

// Column reduction, reduction transfer and augmenting row reduction.
// Returns the number of rows left free.
std::int64_t initialize_lap(std::span<const double> cost, std::size_t n,
                            std::vector<std::int64_t>& rowsol,
                            std::vector<std::int64_t>& colsol,
                            std::vector<std::int64_t>& free_rows, std::vector<double>& v) {
  using Index = std::int64_t;
  const auto dim = static_cast<Index>(n);
  auto c = [&](Index i, Index j) { return cost[static_cast<std::size_t>(i * dim + j)]; };
  std::vector<int> matches(n, 0);

  // Column reduction. Column minima are gathered in a row sweep (same result
  // as a per-column scan: strict < keeps the lowest row).
  std::vector<double> col_min(cost.begin(), cost.begin() + dim);
  std::vector<Index> col_argmin(n, 0);
  for (Index i = 1; i < dim; ++i) {
    for (Index j = 0; j < dim; ++j) {
      const double h = c(i, j);
      if (h < col_min[j]) {
        col_min[j] = h;
        col_argmin[j] = i;
      }
    }
  }
  for (Index j = dim - 1; j >= 0; --j) {
    const Index imin = col_argmin[j];
    v[j] = col_min[j];
    if (++matches[imin] == 1) {
      rowsol[imin] = j;
      colsol[j] = imin;
    } else if (v[j] < v[rowsol[imin]]) {
      const Index j1 = rowsol[imin];
      rowsol[imin] = j;
      colsol[j] = imin;
      colsol[j1] = -1;
    } else {
      colsol[j] = -1;
    }
  }

  // Reduction transfer.
  Index numfree = 0;
  for (Index i = 0; i < dim; ++i) {
    if (matches[i] == 0) {
      free_rows[numfree++] = i;
    } else if (matches[i] == 1) {
      const Index j1 = rowsol[i];
      double min = kInf;
      for (Index j = 0; j < dim; ++j) {
        if (j != j1) min = std::min(min, c(i, j) - v[j]);
      }
      v[j1] -= min;
    }
  }

  // Augmenting row reduction, two passes. With real-valued costs a row can
  // bounce for a long time on tiny price decrements; past the budget the
  // remaining rows are left to the augmentation phase.
  for (int pass = 0; pass < 2; ++pass) {
    Index k = 0;
    const Index previous = numfree;
    numfree = 0;
    std::size_t budget = 16 * n;
    while (k < previous) {
      const Index i = free_rows[k++];
      double umin = c(i, 0) - v[0];
      Index j1 = 0;
      Index j2 = -1;
      double usubmin = kInf;
      for (Index j = 1; j < dim; ++j) {
        const double h = c(i, j) - v[j];
        if (h < usubmin) {
          if (h >= umin) {
            usubmin = h;
            j2 = j;
          } else {
            usubmin = umin;
            umin = h;
            j2 = j1;
            j1 = j;
          }
        }
      }
      Index i0 = colsol[j1];
      const bool strict = umin < usubmin;
      if (strict) {
        v[j1] -= usubmin - umin;
      } else if (i0 >= 0) {
        j1 = j2;
        i0 = colsol[j2];
      }
      rowsol[i] = j1;
      colsol[j1] = i;
      if (i0 >= 0) {
        rowsol[i0] = -1;
        if (strict && budget > 0) {
          --budget;
          free_rows[--k] = i0;
        } else {
          free_rows[numfree++] = i0;
        }
      }
    }
  }

  return numfree;
}

}  // namespace

double assignment_cost(std::span<const Vec3> persons, std::span<const Vec3> objects,
                       std::span<const std::uint32_t> object_of) {
  double total = 0.0;
  for (std::size_t i = 0; i < persons.size(); ++i) {
    total += squared_distance(persons[i], objects[object_of[i]]);
  }
  return total;
}

std::vector<std::uint32_t> solve_dense_lap(std::span<const double> cost, std::size_t n) {
  using Index = std::int64_t;
  if (cost.size() != n * n) throw Error(ErrorKind::kSize, "cost matrix is not n x n");
  if (n == 0) return {};
  if (n == 1) return {0};
  const auto dim = static_cast<Index>(n);
  auto c = [&](Index i, Index j) { return cost[static_cast<std::size_t>(i * dim + j)]; };

  std::vector<Index> rowsol(n, -1), colsol(n, -1), free_rows(n), collist(n), pred(n);
  std::vector<double> v(n), d(n);
  const Index numfree = initialize_lap(cost, n, rowsol, colsol, free_rows, v);

  // Shortest augmenting path for each remaining free row.
  for (Index f = 0; f < numfree; ++f) {
    const Index freerow = free_rows[f];
    for (Index j = 0; j < dim; ++j) {
      d[j] = c(freerow, j) - v[j];
      pred[j] = freerow;
      collist[j] = j;
    }
    Index low = 0;
    Index up = 0;
    Index last = 0;
    Index endofpath = -1;
    bool found = false;
    double min = 0.0;
    do {
      if (up == low) {
        last = low - 1;
        min = d[collist[up++]];
        for (Index k = up; k < dim; ++k) {
          const Index j = collist[k];
          const double h = d[j];
          if (h <= min) {
            if (h < min) {
              up = low;
              min = h;
            }
            collist[k] = collist[up];
            collist[up++] = j;
          }
        }
        for (Index k = low; k < up; ++k) {
          if (colsol[collist[k]] < 0) {
            endofpath = collist[k];
            found = true;
            break;
          }
        }
      }
      if (!found) {
        const Index j1 = collist[low++];
        const Index i = colsol[j1];
        const double h = c(i, j1) - v[j1] - min;
        for (Index k = up; k < dim; ++k) {
          const Index j = collist[k];
          const double v2 = c(i, j) - v[j] - h;
          if (v2 < d[j]) {
            pred[j] = i;
            if (v2 == min) {
              if (colsol[j] < 0) {
                endofpath = j;
                found = true;
                break;
              }
              collist[k] = collist[up];
              collist[up++] = j;
            }
            d[j] = v2;
          }
        }
      }
    } while (!found);

    for (Index k = 0; k <= last; ++k) {
      const Index j1 = collist[k];
      v[j1] += d[j1] - min;
    }
    Index i = -1;
    do {
      i = pred[endofpath];
      colsol[endofpath] = i;
      const Index j1 = endofpath;
      endofpath = rowsol[i];
      rowsol[i] = j1;
    } while (i != freerow);
  }

  std::vector<std::uint32_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::uint32_t>(rowsol[i]);
  return out;
}

std::vector<std::uint32_t> solve_rectangular_lap(std::span<const double> cost, std::size_t rows,
                                                 std::size_t cols) {
  using Index = std::int64_t;
  if (rows > cols) throw Error(ErrorKind::kSize, "more rows than columns");
  if (cost.size() != rows * cols) throw Error(ErrorKind::kSize, "cost matrix is not rows x cols");

  std::vector<double> u(rows, 0.0), v(cols, 0.0), dist(cols);
  std::vector<Index> path(cols, -1), col_of(rows, -1), row_of(cols, -1), remaining(cols);
  std::vector<char> row_seen(rows), col_seen(cols);

  for (std::size_t current = 0; current < rows; ++current) {
    std::fill(row_seen.begin(), row_seen.end(), 0);
    std::fill(col_seen.begin(), col_seen.end(), 0);
    std::fill(dist.begin(), dist.end(), kInf);
    for (std::size_t k = 0; k < cols; ++k) remaining[k] = static_cast<Index>(cols - k - 1);
    auto left = static_cast<Index>(cols);
    double reach = 0.0;
    Index sink = -1;
    auto i = static_cast<Index>(current);
    while (sink < 0) {
      row_seen[i] = 1;
      const double* row = cost.data() + static_cast<std::size_t>(i) * cols;
      Index best = -1;
      double lowest = kInf;
      for (Index k = 0; k < left; ++k) {
        const Index j = remaining[k];
        const double r = reach + row[j] - u[i] - v[j];
        if (r < dist[j]) {
          path[j] = i;
          dist[j] = r;
        }
        // Prefer a free column on ties: it ends the path.
        if (dist[j] < lowest || (dist[j] == lowest && row_of[j] < 0)) {
          lowest = dist[j];
          best = k;
        }
      }
      if (best < 0 || !std::isfinite(lowest)) {
        throw Error(ErrorKind::kNumerical, "assignment cost matrix is not finite");
      }
      reach = lowest;
      const Index j = remaining[best];
      col_seen[j] = 1;
      remaining[best] = remaining[--left];
      if (row_of[j] < 0) {
        sink = j;
      } else {
        i = row_of[j];
      }
    }

    u[current] += reach;
    for (std::size_t r = 0; r < rows; ++r) {
      if (row_seen[r] && r != current) u[r] += reach - dist[col_of[r]];
    }
    for (std::size_t j = 0; j < cols; ++j) {
      if (col_seen[j]) v[j] -= reach - dist[j];
    }
    for (Index j = sink;;) {
      const Index r = path[j];
      row_of[j] = r;
      std::swap(col_of[r], j);
      if (r == static_cast<Index>(current)) break;
    }
  }

  std::vector<std::uint32_t> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = static_cast<std::uint32_t>(col_of[r]);
  return out;
}

AssignmentResult solve_assignment_exact(std::span<const Vec3> persons,
                                        std::span<const Vec3> objects) {
  check_sizes(persons, objects);
  if (objects.size() > kExactSolverLimit) {
    throw Error(ErrorKind::kArgument,
                "exact solver is limited to " + std::to_string(kExactSolverLimit) +
                    " objects; use the auction solver");
  }
  const auto n = persons.size();
  const auto m = objects.size();
  AssignmentResult result;
  if (n == 0) return result;
  if (2 * n <= m) {
    std::vector<double> cost(n * m);
    kernels::omp::squared_distance_matrix(persons, objects, cost);
    result.object_of = solve_rectangular_lap(cost, n, m);
  } else {
    std::vector<double> cost(m * m, 0.0);  // rows >= n stay zero (dummies)
    kernels::omp::squared_distance_matrix(persons, objects, std::span(cost).first(n * m));
    auto columns = solve_dense_lap(cost, m);
    columns.resize(n);
    result.object_of = std::move(columns);
  }
  result.cost = assignment_cost(persons, objects, result.object_of);
  return result;
}

AssignmentResult solve_assignment_auction(std::span<const Vec3> persons,
                                          std::span<const Vec3> objects,
                                          const AuctionOptions& options,
                                          AuctionStats* stats) {
  check_sizes(persons, objects);
  if (!(options.scaling > 1.0) || !(options.relative_eps > 0.0) || options.candidates == 0) {
    throw Error(ErrorKind::kArgument, "invalid auction options");
  }
  AuctionStats local_stats;
  AuctionStats& st = stats != nullptr ? *stats : local_stats;
  st = {};

  const auto n = persons.size();
  const auto m = objects.size();
  AssignmentResult result;
  if (n == 0) return result;

  const double cmax = squared_bbox_diagonal(persons, objects);
  if (m == 1 || cmax == 0.0) {
    // Every injection costs the same.
    result.object_of.resize(n);
    for (std::size_t i = 0; i < n; ++i) result.object_of[i] = static_cast<std::uint32_t>(i);
    result.cost = assignment_cost(persons, objects, result.object_of);
    return result;
  }

  // Initial lists: nearest objects, with the next one's distance as the
  // outside bound (all prices start at zero).
  kernels::CandidateTable table;
  table.width = std::min(options.candidates, m);
  table.objects.resize(n * table.width);
  table.outside_value.assign(n, -kInf);
  double nearest_sum = 0.0;
  const SpatialIndex index(std::vector<Vec3>(objects.begin(), objects.end()));
  {
    const auto count = static_cast<std::int64_t>(n);
    const std::size_t w = table.width;
    std::vector<double> nearest_cost(n);
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t i = 0; i < count; ++i) {
      const auto near = index.k_nearest(persons[i], w + 1);
      nearest_cost[i] = near.front().squared_distance;
      for (std::size_t t = 0; t < w; ++t) table.objects[i * w + t] = near[t].index;
      if (near.size() > w) table.outside_value[i] = -near[w].squared_distance;
    }
    for (double c : nearest_cost) nearest_sum += c;
  }

  // Objects beyond the real persons go to dummies: person ids n..m-1.
  const double final_eps =
      std::max(options.relative_eps * nearest_sum / static_cast<double>(m), 1e-13 * cmax);

  std::vector<double> prices(m, 0.0);
  std::vector<std::uint32_t> owner(m, kNone);
  std::vector<std::uint32_t> assigned(m, kNone);  // by person id, dummies included
  const bool has_dummies = m > n;
  std::set<std::pair<double, std::uint32_t>> by_price;
  auto set_price = [&](std::uint32_t j, double price) {
    if (has_dummies) {
      by_price.erase({prices[j], j});
      by_price.insert({price, j});
    }
    prices[j] = price;
  };

  std::vector<std::uint32_t> real_queue;
  std::vector<std::uint32_t> next_real;
  std::vector<std::uint32_t> stale;
  std::deque<std::uint32_t> dummy_queue;
  std::vector<double> round_best(m, -kInf);
  std::vector<std::uint32_t> round_winner(m, kNone);
  std::vector<std::uint32_t> touched;

  auto release = [&](std::uint32_t j) {
    const auto previous = owner[j];
    if (previous == kNone) return;
    assigned[previous] = kNone;
    if (previous < n) {
      next_real.push_back(previous);
    } else {
      dummy_queue.push_back(previous);
    }
  };

  double eps = std::max(cmax / options.scaling, final_eps);
  double completed_eps = kInf;
  while (true) {
    ++st.phases;
    std::fill(owner.begin(), owner.end(), kNone);
    std::fill(assigned.begin(), assigned.end(), kNone);
    if (has_dummies) {
      by_price.clear();
      for (std::uint32_t j = 0; j < m; ++j) by_price.insert({prices[j], j});
    }
    real_queue.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) real_queue[i] = i;
    dummy_queue.clear();
    for (auto d = static_cast<std::uint32_t>(n); d < m; ++d) dummy_queue.push_back(d);

    std::size_t phase_rounds = 0;
    while (!real_queue.empty() || !dummy_queue.empty()) {
      if (++phase_rounds > options.max_rounds_per_phase) {
        throw Error(ErrorKind::kSolver,
                    "auction did not converge at eps " + std::to_string(eps) +
                        "; last completed eps " + std::to_string(completed_eps));
      }
      ++st.rounds;
      next_real.clear();
      if (!real_queue.empty()) {
        std::sort(real_queue.begin(), real_queue.end());
        auto bids = kernels::omp::auction_bids(persons, objects, table, prices, real_queue, eps);
        stale.clear();
        for (const auto& bid : bids) {
          if (bid.stale) stale.push_back(bid.person);
        }
        if (!stale.empty()) {
          // A refreshed list always contains its best object, so the retry
          // is never stale.
          st.refreshes += stale.size();
          kernels::omp::refresh_candidates(persons, objects, prices, stale, table);
          const auto retry =
              kernels::omp::auction_bids(persons, objects, table, prices, stale, eps);
          std::size_t r = 0;
          for (auto& bid : bids) {
            if (bid.stale) bid = retry[r++];
          }
        }
        st.bids += bids.size();
        touched.clear();
        for (const auto& bid : bids) {
          if (round_winner[bid.object] == kNone) touched.push_back(bid.object);
          if (bid.amount > round_best[bid.object]) {
            if (round_winner[bid.object] != kNone) next_real.push_back(round_winner[bid.object]);
            round_best[bid.object] = bid.amount;
            round_winner[bid.object] = bid.person;
          } else {
            next_real.push_back(bid.person);
          }
        }
        for (auto j : touched) {
          release(j);
          owner[j] = round_winner[j];
          assigned[round_winner[j]] = j;
          set_price(j, round_best[j]);
          round_best[j] = -kInf;
          round_winner[j] = kNone;
        }
      }
      // Dummies value every object equally, so each takes the cheapest one
      // and raises it to the second-cheapest price plus eps.
      while (!dummy_queue.empty()) {
        const auto d = dummy_queue.front();
        dummy_queue.pop_front();
        auto it = by_price.begin();
        const auto j1 = it->second;
        const double second = std::next(it)->first;
        release(j1);
        owner[j1] = d;
        assigned[d] = j1;
        set_price(j1, second + eps);
        ++st.bids;
      }
      std::swap(real_queue, next_real);
    }

    completed_eps = eps;
    if (eps <= final_eps) break;
    eps = std::max(eps / options.scaling, final_eps);
  }
  st.final_eps = completed_eps;

  result.object_of.assign(assigned.begin(), assigned.begin() + static_cast<std::ptrdiff_t>(n));
  result.cost = assignment_cost(persons, objects, result.object_of);
  return result;
}

}  // namespace pcatlas
