#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "pcatlas/atlas.hpp"
#include "pcatlas/error.hpp"
#include "pcatlas/lattice.hpp"
#include "pcatlas/png_preview.hpp"
#include "support.hpp"

using namespace pcatlas;
using namespace pcatlas::testing;

namespace {

const SphereLattice& lattice_256() {
  static const SphereLattice l = build_sphere_lattice(256, 0);
  return l;
}

double grid_cost(const SphereLattice& l, const std::vector<std::uint32_t>& perm) {
  double c = 0.0;
  for (std::size_t k = 0; k < l.n_sites(); ++k) {
    const auto uv = equirect_project(l.sites[k]);
    const double col = (perm[k] % l.side + 0.5) / l.side;
    const double row = (perm[k] / l.side + 0.5) / l.side;
    c += (uv.u - col) * (uv.u - col) + (uv.v - row) * (uv.v - row);
  }
  return c;
}

}  // namespace

TEST(Equirect, Conventions) {
  auto uv = equirect_project({1, 0, 0});
  EXPECT_DOUBLE_EQ(uv.u, 0.5);
  EXPECT_DOUBLE_EQ(uv.v, 0.5);
  uv = equirect_project({0, 0, 1});
  EXPECT_DOUBLE_EQ(uv.u, 0.5);
  EXPECT_DOUBLE_EQ(uv.v, 0.0);
  uv = equirect_project({0, 0, -1});
  EXPECT_DOUBLE_EQ(uv.u, 0.5);
  EXPECT_DOUBLE_EQ(uv.v, 1.0);
  uv = equirect_project({0, -1, 0});
  EXPECT_DOUBLE_EQ(uv.u, 0.25);
  EXPECT_DOUBLE_EQ(uv.v, 0.5);
  EXPECT_THROW(equirect_project({0.5, 0, 0}), Error);
}

TEST(Lattice, MinimalLatticeIsOptimalBijection) {
  const auto l = build_sphere_lattice(4, 0);
  EXPECT_EQ(l.side, 2u);
  auto sorted = l.grid_perm;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<std::uint32_t>{0, 1, 2, 3}));
  std::vector<std::uint32_t> perm{0, 1, 2, 3};
  double best = 1e300;
  do {
    best = std::min(best, grid_cost(l, perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  EXPECT_NEAR(grid_cost(l, l.grid_perm), best, 1e-12);
}

TEST(Lattice, SitesFollowFibonacciSpiral) {
  const auto& l = lattice_256();
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t k = 0; k < l.n_sites(); k += 17) {
    const double z = 1.0 - (2.0 * k + 1.0) / 256.0;
    const double r = std::sqrt(1.0 - z * z);
    const double a = golden * static_cast<double>(k);
    EXPECT_NEAR(distance(l.sites[k], {r * std::cos(a), r * std::sin(a), z}), 0.0, 1e-12);
    EXPECT_NEAR(norm(l.sites[k]), 1.0, 1e-12);
  }
}

TEST(Lattice, GridPermBeatsIdentityAndRandomPermutations) {
  const auto l = build_sphere_lattice(64, 0);
  const double cost = grid_cost(l, l.grid_perm);
  std::vector<std::uint32_t> perm(64);
  std::iota(perm.begin(), perm.end(), 0);
  EXPECT_LE(cost, grid_cost(l, perm) + 1e-12);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    std::shuffle(perm.begin(), perm.end(), rng);
    EXPECT_LE(cost, grid_cost(l, perm) + 1e-12);
  }
  EXPECT_NO_THROW(validate_lattice(l));
}

TEST(Lattice, PhaseFromSeed) {
  EXPECT_EQ(spiral_phase_from_seed(0), 0.0);
  const double p = spiral_phase_from_seed(99);
  EXPECT_GE(p, 0.0);
  EXPECT_LT(p, 2.0 * std::numbers::pi);
  EXPECT_NE(build_sphere_lattice(16, 99).sites, build_sphere_lattice(16, 0).sites);
}

TEST(Lattice, RejectsNonSquare) {
  EXPECT_THROW(build_sphere_lattice(10, 0), Error);
  EXPECT_THROW(build_sphere_lattice(1, 0), Error);
}

TEST(Lattice, FileRoundtripIsByteStable) {
  const auto& l = lattice_256();
  const auto bytes = serialize_lattice(l);
  const auto back = parse_lattice(bytes);
  EXPECT_EQ(back.sites, l.sites);
  EXPECT_EQ(back.grid_perm, l.grid_perm);
  EXPECT_EQ(back.site_of_pixel, l.site_of_pixel);
  EXPECT_EQ(serialize_lattice(back), bytes);
  EXPECT_EQ(bytes.substr(0, 4), "AFLT");
  EXPECT_EQ(bytes.size(), 4 + 4 + 4 + 8 + 256 * 12 + 256 * 4);
}

TEST(Lattice, CorruptedFileIsRejected) {
  auto bytes = serialize_lattice(lattice_256());
  bytes[0] = 'X';
  EXPECT_THROW(parse_lattice(bytes), Error);
  bytes = serialize_lattice(lattice_256());
  bytes.pop_back();
  EXPECT_THROW(parse_lattice(bytes), Error);
}

TEST(AssignToSphere, ExactMatchesAuction) {
  const auto& l = lattice_256();
  const auto cloud = random_ball_cloud(200, 1);
  const auto exact = assign_to_sphere(cloud, l, Solver::kExact);
  const auto auction = assign_to_sphere(cloud, l, Solver::kAuction);
  EXPECT_LE(auction.cost, exact.cost * (1.0 + 1e-5));
}

TEST(AssignToSphere, CloudEqualToSitesHasZeroCost) {
  const auto& l = lattice_256();
  PointCloud c;
  for (const auto& s : l.sites) c.points.push_back({s, s, false});
  EXPECT_EQ(assign_to_sphere(c, l).cost, 0.0);
}

TEST(AssignToSphere, TooManyPointsIsSizeError) {
  try {
    assign_to_sphere(random_ball_cloud(257, 1), lattice_256());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSize);
  }
}

TEST(AssignToSphere, PointOutsideSphereIsRejected) {
  auto c = random_ball_cloud(10, 1);
  c.points[3].position = {1.1, 0, 0};
  EXPECT_THROW(assign_to_sphere(c, lattice_256()), Error);
}

TEST(AssignToSphere, NoiseCostCertificate) {
  // Reusing the clean assignment on noised points bounds the noised optimum.
  const auto& l = lattice_256();
  auto clean = random_ball_cloud(256, 2, 0.9);
  auto noised = clean;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 0.01);
  double bound = 0.0;
  for (auto& p : noised.points) {
    const Vec3 d{g(rng), g(rng), g(rng)};
    p.position += d;
    bound += 2.0 * norm(d) * 2.0 + squared_norm(d);
  }
  const auto a = assign_to_sphere(clean, l).cost;
  const auto b = assign_to_sphere(noised, l).cost;
  EXPECT_LE(b, a + bound);
}

TEST(Atlas, FullOccupancyRoundtrip) {
  const auto& l = lattice_256();
  const auto cloud = random_ball_cloud(256, 5);
  const auto assignment = assign_to_sphere(cloud, l);
  const auto atlas = encode_atlas(cloud, l, assignment);
  EXPECT_EQ(atlas.valid_count(), 256u);
  EXPECT_NO_THROW(atlas.validate());
  const auto err = roundtrip_error(cloud, l, assignment, atlas);
  EXPECT_LT(err.max_position_error, 1e-12);
  EXPECT_LT(err.max_normal_error, 1e-12);
}

TEST(Atlas, DecodeIsMultisetOfInput) {
  const auto& l = lattice_256();
  const auto cloud = random_ball_cloud(180, 6);
  const auto atlas = encode_atlas(cloud, l, assign_to_sphere(cloud, l));
  EXPECT_EQ(atlas.valid_count(), 180u);
  const auto decoded = decode_atlas(parse_atlas(serialize_atlas(atlas)), l).cloud;
  ASSERT_EQ(decoded.size(), cloud.size());
  // Greedy matching by brute force: every input point has a unique partner.
  std::vector<bool> used(decoded.size(), false);
  for (const auto& p : cloud.points) {
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t k = 0; k < decoded.size(); ++k) {
      const double d = distance(p.position, decoded.points[k].position);
      if (!used[k] && d < best_d) {
        best_d = d;
        best = k;
      }
    }
    used[best] = true;
    EXPECT_LT(best_d, 1e-6);
    EXPECT_LT(distance(p.normal, decoded.points[best].normal), 1e-5);
  }
}

TEST(Atlas, PartialOccupancyLeavesZeroHoles) {
  const auto& l = lattice_256();
  const auto cloud = random_ball_cloud(205, 7);
  const auto atlas = encode_atlas(cloud, l, assign_to_sphere(cloud, l));
  EXPECT_EQ(atlas.pixel_count() - atlas.valid_count(), 51u);
  for (std::size_t p = 0; p < atlas.pixel_count(); ++p) {
    if (atlas.mask[p]) continue;
    EXPECT_EQ(atlas.offset(p), Vec3{});
    EXPECT_EQ(atlas.normal(p), Vec3{});
  }
}

TEST(Atlas, PointAtSiteHasZeroOffset) {
  const auto& l = lattice_256();
  PointCloud c;
  c.points.push_back({l.sites[10], {0, 0, 1}, false});
  const auto atlas = encode_atlas(c, l, assign_to_sphere(c, l));
  EXPECT_EQ(atlas.offset(l.grid_perm[10]), Vec3{});
  const auto decoded = decode_atlas(atlas, l);
  ASSERT_EQ(decoded.cloud.size(), 1u);
  EXPECT_EQ(decoded.cloud.points[0].position, l.sites[10]);
}

TEST(Atlas, AllHoleDecodesEmpty) {
  const auto& l = lattice_256();
  EXPECT_TRUE(decode_atlas(Atlas(l.side), l).cloud.empty());
}

TEST(Atlas, ZeroNormalFallsBackToSite) {
  const auto& l = lattice_256();
  Atlas a(l.side);
  a.mask[7] = 1;
  const auto d = decode_atlas(a, l);
  EXPECT_EQ(d.zero_normal_pixels, 1u);
  EXPECT_EQ(d.cloud.points[0].normal, l.sites[l.site_of_pixel[7]]);
}

TEST(Atlas, SideMismatchIsConsistencyError) {
  try {
    decode_atlas(Atlas(8), lattice_256());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConsistency);
  }
}

TEST(Atlas, AssignmentMismatchIsConsistencyError) {
  const auto& l = lattice_256();
  const auto cloud = random_ball_cloud(10, 1);
  auto a = assign_to_sphere(cloud, l);
  a.site_of_point.pop_back();
  EXPECT_THROW(encode_atlas(cloud, l, a), Error);
  a = assign_to_sphere(cloud, l);
  a.site_of_point[1] = a.site_of_point[0];
  EXPECT_THROW(encode_atlas(cloud, l, a), Error);
}

TEST(Atlas, HolesInCloudStayUnassigned) {
  const auto& l = lattice_256();
  auto cloud = random_ball_cloud(10, 1);
  cloud.points[4] = {{}, {}, true};
  const auto a = assign_to_sphere(cloud, l);
  EXPECT_EQ(a.site_of_point[4], -1);
  EXPECT_EQ(encode_atlas(cloud, l, a).valid_count(), 9u);
}

TEST(Atlas, RestrictAssignmentKeepsOrder) {
  SphereAssignment a;
  a.site_of_point = {5, 9, 2, 7};
  const std::vector<std::size_t> kept{0, 2, 3};
  EXPECT_EQ(restrict_assignment(a, kept).site_of_point, (std::vector<std::int64_t>{5, 2, 7}));
}

TEST(AtlasFile, Layout) {
  Atlas a(3);
  a.mask[0] = 1;
  a.set_pixel(0, {0.25, 0, 0}, {0, 0, 1});
  const auto bytes = serialize_atlas(a);
  EXPECT_EQ(bytes.substr(0, 4), "AFAT");
  EXPECT_EQ(bytes.size(), 4 + 4 + 4 + 4 + 1 + 6 * 9 * 4 + 2);
  EXPECT_EQ(static_cast<unsigned char>(bytes[17 + 6 * 9 * 4]), 1u);
  EXPECT_EQ(parse_atlas(bytes), a);
}

TEST(AtlasFile, MissingMaskMeansAllValid) {
  Atlas a(2);
  auto bytes = serialize_atlas(a);
  bytes[16] = 0;
  bytes.resize(bytes.size() - 1);
  const auto back = parse_atlas(bytes);
  EXPECT_EQ(back.valid_count(), 4u);
}

TEST(AtlasFile, MalformedInputs) {
  const auto good = serialize_atlas(Atlas(4));
  EXPECT_THROW(parse_atlas(good + "x"), Error);
  EXPECT_THROW(parse_atlas(good.substr(0, good.size() - 3)), Error);
  auto bad = good;
  bad[12] = 7;  // channel count
  EXPECT_THROW(parse_atlas(bad), Error);
}

TEST(Atlas, ValidateCatchesViolations) {
  Atlas a(2);
  a.at(0, 1) = 0.5;  // data in a hole
  EXPECT_THROW(a.validate(), Error);
  Atlas b(2);
  b.mask[0] = 1;
  b.set_pixel(0, {0, 0, 0}, {0, 0, 2});
  EXPECT_THROW(b.validate(), Error);
  b.set_pixel(0, {3, 0, 0}, {0, 0, 1});
  EXPECT_THROW(b.validate(), Error);
}

TEST(Preview, PngSignatureAndSize) {
  const auto& l = lattice_256();
  const auto cloud = random_ball_cloud(256, 5);
  const auto png = atlas_preview_png(encode_atlas(cloud, l, assign_to_sphere(cloud, l)));
  ASSERT_GT(png.size(), 33u);
  EXPECT_EQ(png.substr(1, 3), "PNG");
  EXPECT_EQ(png.substr(12, 4), "IHDR");
  EXPECT_EQ(static_cast<unsigned char>(png[19]), 16u);  // width 16, big-endian
}
