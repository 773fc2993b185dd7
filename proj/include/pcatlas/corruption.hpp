#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "pcatlas/geometry.hpp"

namespace pcatlas {

enum class CropStrategy { kRandomDrop, kCenterRegionDrop };

// "random" | "center"; throws Error(kArgument) otherwise.
CropStrategy strategy_from_string(std::string_view name);
const char* to_string(CropStrategy strategy);

struct CorruptionSpec {
  CropStrategy strategy = CropStrategy::kRandomDrop;
  double crop_fraction = 0.2;
  double sigma = 0.005;  // normalized units
  std::uint64_t seed = 0;

  // 0 <= crop_fraction < 1, sigma >= 0, both finite. Throws Error(kArgument).
  void validate() const;
};

// ceil(fraction * n), robust to the representation error of fractions such
// as 0.2 (0.2 * 15 must give 3, not 4).
std::size_t crop_count(std::size_t n, double fraction);

struct CropResult {
  PointCloud cloud;                        // survivors, original order
  std::vector<std::size_t> kept;           // their indices in the input
  std::optional<std::size_t> seed_index;   // center-region crops only
};

// Removes crop_count(|P|, fraction) entries chosen uniformly without
// replacement. Input must be hole-free.
CropResult crop_random(const PointCloud& cloud, double fraction, std::uint64_t seed);

// Picks a seed entry uniformly and removes the crop_count(|P|, fraction)
// entries nearest to it (itself included; ties by lowest index).
CropResult crop_center_region(const PointCloud& cloud, double fraction, std::uint64_t seed);

// Adds i.i.d. N(0, sigma^2 I) to every non-hole position; normals untouched.
// Entry i draws from its own generator, so the result is thread-count
// independent.
PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma, std::uint64_t seed);

// Crop, then noise, with sub-seeds "crop" and "noise" derived from spec.seed.
CropResult corrupt(const PointCloud& cloud, const CorruptionSpec& spec);

}  // namespace pcatlas
