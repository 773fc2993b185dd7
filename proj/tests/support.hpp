#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "pcatlas/geometry.hpp"
#include "pcatlas/vec3.hpp"

namespace pcatlas::testing {

inline Vec3 normalized(const Vec3& v) { return v * (1.0 / norm(v)); }

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  for (;;) {
    const Vec3 v{g(rng), g(rng), g(rng)};
    if (norm(v) > 1e-6) return normalized(v);
  }
}

// Uniform points in a ball of the given radius with random unit normals.
inline PointCloud random_ball_cloud(std::size_t n, std::uint64_t seed, double radius = 0.95) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointCloud cloud;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = radius * std::cbrt(u(rng));
    cloud.points.push_back({random_unit(rng) * r, random_unit(rng), false});
  }
  return cloud;
}

inline std::vector<Vec3> random_points(std::size_t n, std::uint64_t seed, double half = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-half, half);
  std::vector<Vec3> out(n);
  for (auto& p : out) p = {u(rng), u(rng), u(rng)};
  return out;
}

inline TriangleMesh cube_mesh(double half = 1.0, Vec3 center = {}) {
  TriangleMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.push_back(center + Vec3{(i & 1) ? half : -half, (i & 2) ? half : -half,
                                       (i & 4) ? half : -half});
  }
  // Outward-facing quads split into triangles.
  const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
                           {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
  for (const auto& q : quads) {
    m.faces.push_back({static_cast<std::uint32_t>(q[0]), static_cast<std::uint32_t>(q[1]),
                       static_cast<std::uint32_t>(q[2])});
    m.faces.push_back({static_cast<std::uint32_t>(q[0]), static_cast<std::uint32_t>(q[2]),
                       static_cast<std::uint32_t>(q[3])});
  }
  return m;
}

// Surface of revolution about z from a profile (rho(s), z(s)), s in [0, 1],
// closed with pole vertices when rho vanishes at the ends.
template <typename Profile>
TriangleMesh revolve(Profile profile, int rings, int segments, bool closed_loop) {
  TriangleMesh m;
  const int rows = closed_loop ? rings : rings + 1;
  for (int r = 0; r < rows; ++r) {
    const double s = static_cast<double>(r) / rings;
    const auto [rho, z] = profile(s);
    for (int k = 0; k < segments; ++k) {
      const double a = 2.0 * std::numbers::pi * k / segments;
      m.vertices.push_back({rho * std::cos(a), rho * std::sin(a), z});
    }
  }
  auto id = [&](int r, int k) {
    return static_cast<std::uint32_t>((r % rows) * segments + (k % segments));
  };
  const int bands = closed_loop ? rings : rings;
  for (int r = 0; r < bands; ++r) {
    for (int k = 0; k < segments; ++k) {
      const auto a = id(r, k), b = id(r, k + 1), c = id(r + 1, k + 1), d = id(r + 1, k);
      if (a != b && b != c && a != c) m.faces.push_back({a, b, c});
      if (a != c && c != d && a != d) m.faces.push_back({a, c, d});
    }
  }
  return m;
}

inline TriangleMesh sphere_mesh(double radius, int rings = 48, int segments = 96) {
  // Poles are replaced by small caps so no face is degenerate.
  return revolve(
      [radius](double s) {
        const double t = 1e-3 + s * (std::numbers::pi - 2e-3);
        return std::pair{radius * std::sin(t), radius * std::cos(t)};
      },
      rings, segments, false);
}

inline TriangleMesh torus_mesh(double major, double minor, int rings = 64, int segments = 96) {
  return revolve(
      [major, minor](double s) {
        const double t = 2.0 * std::numbers::pi * s;
        return std::pair{major + minor * std::cos(t), minor * std::sin(t)};
      },
      rings, segments, true);
}

inline TriangleMesh capsule_mesh(double radius, double half_length, int rings = 64,
                                 int segments = 96) {
  return revolve(
      [radius, half_length](double s) {
        // Arc length parametrization over cap, cylinder, cap.
        const double cap = radius * std::numbers::pi / 2.0;
        const double total = 2.0 * cap + 2.0 * half_length;
        const double l = 1e-3 * radius + s * (total - 2e-3 * radius);
        if (l < cap) {
          const double t = l / radius;
          return std::pair{radius * std::sin(t), half_length + radius * std::cos(t)};
        }
        if (l < cap + 2.0 * half_length) {
          return std::pair{radius, half_length - (l - cap)};
        }
        const double t = (l - cap - 2.0 * half_length) / radius;
        return std::pair{radius * std::cos(t), -half_length - radius * std::sin(t)};
      },
      rings, segments, false);
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("pcatlas_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace pcatlas::testing
