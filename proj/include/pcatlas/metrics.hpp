#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "pcatlas/geometry.hpp"

namespace pcatlas {

inline constexpr double kEdgeRadius = 0.01;
inline constexpr double kEdgeTau = 0.2;
inline constexpr std::size_t kDefaultMetricSamples = 100000;
inline constexpr const char* kChamferVariant = "l2_symmetric_half_mean";

// 1/2 (mean_p min_q |p - q| + mean_q min_p |q - p|) over non-hole points,
// plain (not squared) distances. Throws Error(kArgument) on empty input.
double chamfer_distance(const PointCloud& p, const PointCloud& q);

// Points with at least one other point within `radius` whose normal makes
// |n . n'| < tau.
PointCloud extract_edge_points(const PointCloud& cloud, double radius = kEdgeRadius,
                               double tau = kEdgeTau);

// Chamfer distance of the two edge sets; nullopt when either is empty.
std::optional<double> edge_chamfer_distance(const PointCloud& p, const PointCloud& q,
                                            double radius = kEdgeRadius,
                                            double tau = kEdgeTau);

// 1/2 (mean_p |n_p . n_nn(p)| + mean_q |n_q . n_nn(q)|), nn by position in
// the other cloud. Throws Error(kArgument) on empty input.
double normal_consistency(const PointCloud& p, const PointCloud& q);

struct CountMetrics {
  std::size_t v_count = 0;
  std::size_t f_count = 0;
  double v_ratio = 0.0;  // generated / ground truth
  double f_ratio = 0.0;
};

// Throws Error(kArgument) when the ground truth has no vertex or no face.
CountMetrics count_metrics(const TriangleMesh& generated, const TriangleMesh& ground_truth);

struct MetricConventions {
  std::string cd_variant = kChamferVariant;
  double ecd_radius = kEdgeRadius;
  double ecd_tau = kEdgeTau;
  std::size_t n_samples = kDefaultMetricSamples;
  std::uint64_t seed = 0;

  friend bool operator==(const MetricConventions&, const MetricConventions&) = default;
};

struct MeshMetrics {
  double cd = 0.0;
  std::optional<double> ecd;
  double nc = 0.0;
  CountMetrics counts;
  MetricConventions conventions;
};

// Samples n_samples oriented points from each surface and computes every
// metric. Both meshes use the same sampling stream, so a mesh compared with
// itself scores CD = 0 and NC = 1 exactly.
MeshMetrics evaluate_pair(const TriangleMesh& generated, const TriangleMesh& ground_truth,
                          std::size_t n_samples = kDefaultMetricSamples,
                          std::uint64_t seed = 0, double edge_radius = kEdgeRadius,
                          double edge_tau = kEdgeTau);

nlohmann::json to_json(const MeshMetrics& metrics);
MeshMetrics metrics_from_json(const nlohmann::json& j);

// {count, ecd_excluded, mean:{...}, median:{...}}; undefined ECD values are
// left out of the ECD statistics and counted in ecd_excluded.
nlohmann::json aggregate_report(std::span<const MeshMetrics> items);

}  // namespace pcatlas
