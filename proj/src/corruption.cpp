#include "pcatlas/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pcatlas/error.hpp"
#include "pcatlas/rng.hpp"

namespace pcatlas {
namespace {

void require_no_holes(const PointCloud& cloud) {
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.points[i].is_hole) {
      throw Error(ErrorKind::kArgument,
                  "crop input must be hole-free (entry " + std::to_string(i) + ")");
    }
  }
}

void require_fraction(double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw Error(ErrorKind::kArgument, "crop fraction must lie in [0, 1)");
  }
}

CropResult keep_unmarked(const PointCloud& cloud, const std::vector<std::uint8_t>& removed) {
  CropResult out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (removed[i]) continue;
    out.kept.push_back(i);
    out.cloud.points.push_back(cloud.points[i]);
  }
  return out;
}

// Uniform index in [0, n) without modulo bias.
std::size_t uniform_index(SplitMix64& rng, std::size_t n) {
  const std::uint64_t bound = n;
  const std::uint64_t limit = SplitMix64::max() - SplitMix64::max() % bound;
  while (true) {
    const auto r = rng();
    if (r < limit) return static_cast<std::size_t>(r % bound);
  }
}

Vec3 gaussian3(SplitMix64& rng) {
  const auto a = standard_normal_pair(rng);
  const auto b = standard_normal_pair(rng);
  return {a[0], a[1], b[0]};
}

}  // namespace

CropStrategy strategy_from_string(std::string_view name) {
  if (name == "random") return CropStrategy::kRandomDrop;
  if (name == "center") return CropStrategy::kCenterRegionDrop;
  throw Error(ErrorKind::kArgument, "unknown crop strategy '" + std::string(name) + "'");
}

const char* to_string(CropStrategy strategy) {
  return strategy == CropStrategy::kRandomDrop ? "random" : "center";
}

void CorruptionSpec::validate() const {
  require_fraction(crop_fraction);
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorKind::kArgument, "sigma must be finite and non-negative");
  }
}

std::size_t crop_count(std::size_t n, double fraction) {
  require_fraction(fraction);
  const double exact = fraction * static_cast<double>(n);
  // Relative slack well above double rounding, far below 1 / n.
  const auto count = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  return std::min(count, n);
}

CropResult crop_random(const PointCloud& cloud, double fraction, std::uint64_t seed) {
  require_no_holes(cloud);
  const auto n = cloud.size();
  const auto k = crop_count(n, fraction);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(derive_seed(seed, "crop-random"));
  // Partial Fisher-Yates: the first k slots are a uniform k-subset.
  for (std::size_t t = 0; t < k; ++t) {
    std::swap(order[t], order[t + uniform_index(rng, n - t)]);
  }
  std::vector<std::uint8_t> removed(n, 0);
  for (std::size_t t = 0; t < k; ++t) removed[order[t]] = 1;
  return keep_unmarked(cloud, removed);
}

CropResult crop_center_region(const PointCloud& cloud, double fraction, std::uint64_t seed) {
  require_no_holes(cloud);
  const auto n = cloud.size();
  const auto k = crop_count(n, fraction);
  if (n == 0) return {};
  SplitMix64 rng(derive_seed(seed, "crop-center"));
  const auto center = uniform_index(rng, n);
  const Vec3 c = cloud.points[center].position;
  std::vector<std::pair<double, std::size_t>> ranked(n);
  for (std::size_t i = 0; i < n; ++i) {
    ranked[i] = {squared_distance(cloud.points[i].position, c), i};
  }
  std::vector<std::uint8_t> removed(n, 0);
  if (k > 0) {
    const auto cut = ranked.begin() + static_cast<std::ptrdiff_t>(k - 1);
    std::nth_element(ranked.begin(), cut, ranked.end());
    for (auto it = ranked.begin(); it <= cut; ++it) removed[it->second] = 1;
  }
  auto out = keep_unmarked(cloud, removed);
  out.seed_index = center;
  return out;
}

PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorKind::kArgument, "sigma must be finite and non-negative");
  }
  PointCloud out = cloud;
  if (sigma == 0.0) return out;
  const auto n = static_cast<std::int64_t>(cloud.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    auto& p = out.points[i];
    if (p.is_hole) continue;
    SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    p.position = p.position + gaussian3(rng) * sigma;
  }
  return out;
}

CropResult corrupt(const PointCloud& cloud, const CorruptionSpec& spec) {
  spec.validate();
  const auto crop_seed = derive_seed(spec.seed, "crop");
  auto out = spec.strategy == CropStrategy::kRandomDrop
                 ? crop_random(cloud, spec.crop_fraction, crop_seed)
                 : crop_center_region(cloud, spec.crop_fraction, crop_seed);
  out.cloud = add_gaussian_noise(out.cloud, spec.sigma, derive_seed(spec.seed, "noise"));
  return out;
}

}  // namespace pcatlas
