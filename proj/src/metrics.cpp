#include "pcatlas/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "pcatlas/error.hpp"
#include "pcatlas/kernels.hpp"
#include "pcatlas/rng.hpp"
#include "pcatlas/sampling.hpp"
#include "pcatlas/spatial_index.hpp"

namespace pcatlas {
namespace {

std::vector<const OrientedPoint*> real_points(const PointCloud& cloud) {
  std::vector<const OrientedPoint*> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud.points) {
    if (!p.is_hole) out.push_back(&p);
  }
  return out;
}

std::vector<Vec3> positions_of(const std::vector<const OrientedPoint*>& points) {
  std::vector<Vec3> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = points[i]->position;
  return out;
}

void require_non_empty(std::size_t a, std::size_t b, const char* what) {
  if (a == 0 || b == 0) {
    throw Error(ErrorKind::kArgument, std::string(what) + " needs two non-empty clouds");
  }
}

// Mean over `from` of the distance to the nearest point of `to`.
double mean_nearest_distance(const std::vector<Vec3>& from, const SpatialIndex& to) {
  const auto nn = kernels::omp::nearest_neighbors(to, from);
  double sum = 0.0;
  for (const auto& n : nn) sum += std::sqrt(n.squared_distance);
  return sum / static_cast<double>(from.size());
}

double mean_abs_cosine(const std::vector<const OrientedPoint*>& from,
                       const std::vector<const OrientedPoint*>& to, const SpatialIndex& index) {
  const auto nn = kernels::omp::nearest_neighbors(index, positions_of(from));
  double sum = 0.0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    sum += std::min(1.0, std::abs(dot(from[i]->normal, to[nn[i].index]->normal)));
  }
  return sum / static_cast<double>(from.size());
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

double chamfer_distance(const PointCloud& p, const PointCloud& q) {
  const auto a = positions_of(real_points(p));
  const auto b = positions_of(real_points(q));
  require_non_empty(a.size(), b.size(), "chamfer distance");
  const SpatialIndex ia(a);
  const SpatialIndex ib(b);
  return 0.5 * (mean_nearest_distance(a, ib) + mean_nearest_distance(b, ia));
}

PointCloud extract_edge_points(const PointCloud& cloud, double radius, double tau) {
  if (!(radius > 0.0)) throw Error(ErrorKind::kArgument, "edge radius must be positive");
  const auto points = real_points(cloud);
  const SpatialIndex index(positions_of(points));
  std::vector<std::uint8_t> is_edge(points.size(), 0);
  const auto n = static_cast<std::int64_t>(points.size());
#pragma omp parallel for schedule(dynamic, 256)
  for (std::int64_t i = 0; i < n; ++i) {
    for (auto j : index.within_radius(points[i]->position, radius)) {
      if (std::abs(dot(points[i]->normal, points[j]->normal)) < tau) {
        is_edge[i] = 1;
        break;
      }
    }
  }
  PointCloud out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (is_edge[i]) out.points.push_back(*points[i]);
  }
  return out;
}

std::optional<double> edge_chamfer_distance(const PointCloud& p, const PointCloud& q,
                                            double radius, double tau) {
  const auto ep = extract_edge_points(p, radius, tau);
  if (ep.empty()) return std::nullopt;
  const auto eq = extract_edge_points(q, radius, tau);
  if (eq.empty()) return std::nullopt;
  return chamfer_distance(ep, eq);
}

double normal_consistency(const PointCloud& p, const PointCloud& q) {
  const auto a = real_points(p);
  const auto b = real_points(q);
  require_non_empty(a.size(), b.size(), "normal consistency");
  const SpatialIndex ia(positions_of(a));
  const SpatialIndex ib(positions_of(b));
  return 0.5 * (mean_abs_cosine(a, b, ib) + mean_abs_cosine(b, a, ia));
}

CountMetrics count_metrics(const TriangleMesh& generated, const TriangleMesh& ground_truth) {
  if (ground_truth.vertex_count() == 0 || ground_truth.face_count() == 0) {
    throw Error(ErrorKind::kArgument, "ground-truth mesh has no vertices or no faces");
  }
  CountMetrics out;
  out.v_count = generated.vertex_count();
  out.f_count = generated.face_count();
  out.v_ratio = static_cast<double>(out.v_count) / static_cast<double>(ground_truth.vertex_count());
  out.f_ratio = static_cast<double>(out.f_count) / static_cast<double>(ground_truth.face_count());
  return out;
}

MeshMetrics evaluate_pair(const TriangleMesh& generated, const TriangleMesh& ground_truth,
                          std::size_t n_samples, std::uint64_t seed, double edge_radius,
                          double edge_tau) {
  if (n_samples == 0) throw Error(ErrorKind::kArgument, "n_samples must be positive");
  MeshMetrics out;
  out.counts = count_metrics(generated, ground_truth);
  const auto stream = derive_seed(seed, "eval-samples");
  const auto p = sample_surface(generated, n_samples, stream);
  const auto q = sample_surface(ground_truth, n_samples, stream);
  out.cd = chamfer_distance(p, q);
  out.ecd = edge_chamfer_distance(p, q, edge_radius, edge_tau);
  out.nc = normal_consistency(p, q);
  out.conventions.ecd_radius = edge_radius;
  out.conventions.ecd_tau = edge_tau;
  out.conventions.n_samples = n_samples;
  out.conventions.seed = seed;
  return out;
}

nlohmann::json to_json(const MeshMetrics& m) {
  nlohmann::json j;
  j["cd"] = m.cd;
  j["ecd"] = m.ecd ? nlohmann::json(*m.ecd) : nlohmann::json(nullptr);
  j["nc"] = m.nc;
  j["v_count"] = m.counts.v_count;
  j["f_count"] = m.counts.f_count;
  j["v_ratio"] = m.counts.v_ratio;
  j["f_ratio"] = m.counts.f_ratio;
  j["conventions"] = {{"cd_variant", m.conventions.cd_variant},
                      {"ecd_radius", m.conventions.ecd_radius},
                      {"ecd_tau", m.conventions.ecd_tau},
                      {"n_samples", m.conventions.n_samples},
                      {"seed", m.conventions.seed}};
  return j;
}

MeshMetrics metrics_from_json(const nlohmann::json& j) {
  try {
    MeshMetrics m;
    m.cd = j.at("cd").get<double>();
    if (!j.at("ecd").is_null()) m.ecd = j.at("ecd").get<double>();
    m.nc = j.at("nc").get<double>();
    m.counts.v_count = j.at("v_count").get<std::size_t>();
    m.counts.f_count = j.at("f_count").get<std::size_t>();
    m.counts.v_ratio = j.at("v_ratio").get<double>();
    m.counts.f_ratio = j.at("f_ratio").get<double>();
    const auto& c = j.at("conventions");
    m.conventions.cd_variant = c.at("cd_variant").get<std::string>();
    m.conventions.ecd_radius = c.at("ecd_radius").get<double>();
    m.conventions.ecd_tau = c.at("ecd_tau").get<double>();
    m.conventions.n_samples = c.at("n_samples").get<std::size_t>();
    m.conventions.seed = c.at("seed").get<std::uint64_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("metrics report: ") + e.what());
  }
}

nlohmann::json aggregate_report(std::span<const MeshMetrics> items) {
  std::vector<double> cd, ecd, nc, v_count, f_count, v_ratio, f_ratio;
  std::size_t excluded = 0;
  for (const auto& m : items) {
    cd.push_back(m.cd);
    nc.push_back(m.nc);
    v_count.push_back(static_cast<double>(m.counts.v_count));
    f_count.push_back(static_cast<double>(m.counts.f_count));
    v_ratio.push_back(m.counts.v_ratio);
    f_ratio.push_back(m.counts.f_ratio);
    if (m.ecd) {
      ecd.push_back(*m.ecd);
    } else {
      ++excluded;
    }
  }
  auto stat = [](const std::vector<double>& values, auto fn) {
    return values.empty() ? nlohmann::json(nullptr) : nlohmann::json(fn(values));
  };
  nlohmann::json means, medians;
  const std::pair<const char*, const std::vector<double>*> fields[] = {
      {"cd", &cd},           {"ecd", &ecd},         {"nc", &nc},
      {"v_count", &v_count}, {"f_count", &f_count}, {"v_ratio", &v_ratio},
      {"f_ratio", &f_ratio}};
  for (const auto& [name, values] : fields) {
    means[name] = stat(*values, mean);
    medians[name] = stat(*values, median);
  }
  return {{"count", items.size()},
          {"ecd_excluded", excluded},
          {"mean", means},
          {"median", medians}};
}

}  // namespace pcatlas
