#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "pcatlas/error.hpp"
#include "pcatlas/metrics.hpp"
#include "pcatlas/sampling.hpp"
#include "support.hpp"

using namespace pcatlas;
using namespace pcatlas::testing;

namespace {

PointCloud cloud_of(std::initializer_list<Vec3> pts) {
  PointCloud c;
  for (const auto& p : pts) c.points.push_back({p, {0, 0, 1}, false});
  return c;
}

double scan_mean_nearest(const PointCloud& from, const PointCloud& to) {
  double sum = 0.0;
  for (const auto& p : from.points) {
    double best = 1e300;
    for (const auto& q : to.points) best = std::min(best, distance(p.position, q.position));
    sum += best;
  }
  return sum / from.size();
}

double scan_chamfer(const PointCloud& p, const PointCloud& q) {
  return 0.5 * (scan_mean_nearest(p, q) + scan_mean_nearest(q, p));
}

double scan_nc_half(const PointCloud& from, const PointCloud& to) {
  double sum = 0.0;
  for (const auto& p : from.points) {
    double best = 1e300;
    std::size_t arg = 0;
    for (std::size_t k = 0; k < to.size(); ++k) {
      const double d = squared_distance(p.position, to.points[k].position);
      if (d < best) {
        best = d;
        arg = k;
      }
    }
    sum += std::abs(dot(p.normal, to.points[arg].normal));
  }
  return sum / from.size();
}

PointCloud scan_edges(const PointCloud& c, double radius, double tau) {
  PointCloud out;
  for (const auto& p : c.points) {
    for (const auto& q : c.points) {
      if (distance(p.position, q.position) <= radius && std::abs(dot(p.normal, q.normal)) < tau) {
        out.points.push_back(p);
        break;
      }
    }
  }
  return out;
}

// Midpoint 1-to-4 subdivision.
TriangleMesh subdivide(const TriangleMesh& m) {
  TriangleMesh out;
  out.vertices = m.vertices;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
  auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
    const auto key = std::minmax(a, b);
    const auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    out.vertices.push_back((m.vertices[a] + m.vertices[b]) * 0.5);
    return mid[key] = static_cast<std::uint32_t>(out.vertices.size() - 1);
  };
  for (const auto& f : m.faces) {
    const auto ab = midpoint(f[0], f[1]), bc = midpoint(f[1], f[2]), ca = midpoint(f[2], f[0]);
    out.faces.push_back({f[0], ab, ca});
    out.faces.push_back({ab, f[1], bc});
    out.faces.push_back({ca, bc, f[2]});
    out.faces.push_back({ab, bc, ca});
  }
  return out;
}

PointCloud rotate_z90(const PointCloud& c) {
  PointCloud out = c;
  for (auto& p : out.points) {
    p.position = {-p.position.y, p.position.x, p.position.z};
    p.normal = {-p.normal.y, p.normal.x, p.normal.z};
  }
  return out;
}

PointCloud sphere_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 d = random_unit(rng);
    c.points.push_back({d * 0.9, d, false});
  }
  return c;
}

}  // namespace

TEST(Chamfer, HandComputedFixture) {
  EXPECT_EQ(chamfer_distance(cloud_of({{0, 0, 0}, {1, 0, 0}}), cloud_of({{0, 0, 0}})), 0.25);
}

TEST(Chamfer, IdentitySymmetryAndScan) {
  const auto p = random_ball_cloud(1000, 1);
  const auto q = random_ball_cloud(1000, 2);
  EXPECT_EQ(chamfer_distance(p, p), 0.0);
  EXPECT_EQ(chamfer_distance(p, q), chamfer_distance(q, p));
  EXPECT_NEAR(chamfer_distance(p, q), scan_chamfer(p, q), 1e-12);
  EXPECT_GT(chamfer_distance(p, q), 0.0);
  EXPECT_THROW(chamfer_distance(p, PointCloud{}), Error);
}

TEST(Chamfer, DuplicatesDoNotChangeTheSet) {
  auto p = random_ball_cloud(50, 3);
  auto q = p;
  q.points.push_back(q.points[0]);
  EXPECT_EQ(chamfer_distance(p, q), 0.0);
}

TEST(EdgePoints, PlaneHasNoEdges) {
  PointCloud c;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) c.points.push_back({{u(rng), u(rng), 0}, {0, 0, 1}, false});
  EXPECT_TRUE(extract_edge_points(c, 0.05, 0.2).empty());
  EXPECT_TRUE(extract_edge_points(random_ball_cloud(500, 2), 0.3, 0.0).empty());
}

TEST(EdgePoints, SeamOfPerpendicularPlanes) {
  PointCloud c;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 3000; ++i) {
    c.points.push_back({{u(rng), u(rng), 0}, {0, 0, 1}, false});
    c.points.push_back({{0, u(rng), u(rng)}, {1, 0, 0}, false});
  }
  const double r = 0.03;
  const auto edges = extract_edge_points(c, r, 0.2);
  EXPECT_GT(edges.size(), 50u);
  for (const auto& p : edges.points) {
    EXPECT_LE(std::hypot(p.position.x, p.position.z), r + 1e-12);
  }
  EXPECT_EQ(edges, scan_edges(c, r, 0.2));
}

TEST(EdgeChamfer, TranslatedCubeMatchesScan) {
  const auto cube = cube_mesh(0.5);
  const auto p = sample_surface(cube, 1000, 1);
  auto q = p;
  for (auto& pt : q.points) pt.position += Vec3{0.1, 0, 0};
  const double r = 0.15;
  const auto ecd = edge_chamfer_distance(p, q, r, 0.2);
  ASSERT_TRUE(ecd);
  EXPECT_NEAR(*ecd, scan_chamfer(scan_edges(p, r, 0.2), scan_edges(q, r, 0.2)), 1e-9);
  EXPECT_EQ(*edge_chamfer_distance(p, p, r, 0.2), 0.0);
}

TEST(EdgeChamfer, SmoothSpheresAreUndefined) {
  EXPECT_FALSE(edge_chamfer_distance(sphere_cloud(2000, 1), sphere_cloud(2000, 2)));
}

TEST(NormalConsistency, Properties) {
  const auto p = sphere_cloud(1000, 3);
  EXPECT_EQ(normal_consistency(p, p), 1.0);
  auto flipped = p;
  for (auto& pt : flipped.points) pt.normal = -pt.normal;
  EXPECT_EQ(normal_consistency(p, flipped), 1.0);
  const auto q = rotate_z90(random_ball_cloud(1000, 4));
  const auto r = random_ball_cloud(1000, 5);
  const double nc = normal_consistency(q, r);
  EXPECT_NEAR(nc, 0.5 * (scan_nc_half(q, r) + scan_nc_half(r, q)), 1e-12);
  EXPECT_GE(nc, 0.0);
  EXPECT_LE(nc, 1.0);
  // Rigid motion of both clouds leaves NC unchanged.
  EXPECT_NEAR(normal_consistency(rotate_z90(q), rotate_z90(r)), nc, 1e-6);
}

TEST(Counts, RatiosAreGeneratedOverGroundTruth) {
  const auto cube = cube_mesh();
  auto c = count_metrics(cube, cube);
  EXPECT_EQ(c.v_ratio, 1.0);
  EXPECT_EQ(c.f_ratio, 1.0);
  c = count_metrics(subdivide(cube), cube);
  EXPECT_EQ(c.f_count, 48u);
  EXPECT_EQ(c.f_ratio, 4.0);

  TriangleMesh gt, gen;
  gt.vertices.resize(1000);
  gt.faces.resize(10, Face{0, 1, 2});
  gen.vertices.resize(3505);
  gen.faces.resize(7, Face{0, 1, 2});
  c = count_metrics(gen, gt);
  EXPECT_EQ(c.v_ratio, 3505.0 / 1000.0);
  EXPECT_EQ(c.f_ratio, 0.7);
  EXPECT_THROW(count_metrics(gen, TriangleMesh{}), Error);
}

TEST(EvaluatePair, SelfComparison) {
  const auto mesh = torus_mesh(0.6, 0.25, 24, 32);
  const auto m = evaluate_pair(mesh, mesh, 20000, 3);
  EXPECT_LT(m.cd, 1e-3);
  EXPECT_GT(m.nc, 0.99);
  EXPECT_EQ(to_json(m), to_json(evaluate_pair(mesh, mesh, 20000, 3)));
}

TEST(EvaluatePair, ScaledCubeAgainstQuadrature) {
  // A -> B: every point of the unit cube's surface is 0.1 from the 1.1 cube.
  // B -> A: distance from (x, y, 1.1) to the solid cube, averaged by midpoint
  // quadrature over one face.
  const int k = 1000;
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const double x = -1.1 + 2.2 * (i + 0.5) / k;
      const double y = -1.1 + 2.2 * (j + 0.5) / k;
      const double dx = std::max(0.0, std::abs(x) - 1.0);
      const double dy = std::max(0.0, std::abs(y) - 1.0);
      sum += std::sqrt(0.01 + dx * dx + dy * dy);
    }
  }
  const double expected = 0.5 * (0.1 + sum / (static_cast<double>(k) * k));
  const auto m = evaluate_pair(cube_mesh(1.0), cube_mesh(1.1), 100000, 1);
  EXPECT_NEAR(m.cd, expected, 0.05 * expected);
}

TEST(Report, JsonRoundtripAndAggregate) {
  MeshMetrics a;
  a.cd = 0.125;
  a.ecd = 0.5;
  a.nc = 0.75;
  a.counts = {10, 20, 2.0, 4.0};
  a.conventions.seed = 9;
  MeshMetrics b = a;
  b.cd = 0.375;
  b.ecd.reset();
  const auto back = metrics_from_json(to_json(a));
  EXPECT_EQ(to_json(back), to_json(a));
  EXPECT_EQ(back.conventions, a.conventions);
  EXPECT_TRUE(to_json(b)["ecd"].is_null());
  EXPECT_FALSE(metrics_from_json(to_json(b)).ecd);

  const std::vector<MeshMetrics> items{a, b};
  const auto agg = aggregate_report(items);
  EXPECT_EQ(agg["count"], 2);
  EXPECT_EQ(agg["ecd_excluded"], 1);
  EXPECT_EQ(agg["mean"]["cd"], 0.25);
  EXPECT_EQ(agg["mean"]["ecd"], 0.5);
  EXPECT_EQ(agg["median"]["cd"], 0.25);
  EXPECT_THROW(metrics_from_json(nlohmann::json{{"cd", 1}}), Error);
}
