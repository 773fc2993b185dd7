#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pcatlas/atlas.hpp"

namespace pcatlas {

inline constexpr int kDefaultTimesteps = 1000;
inline constexpr int kDefaultSamplerSteps = 20;

// Variance-preserving schedule tables indexed by t = 0..t_max.
struct NoiseSchedule {
  int t_max = 0;
  std::vector<double> alpha;
  std::vector<double> sigma;
};

// Cosine alpha-bar schedule (offset s = 0.008) with per-step beta clipped at
// 0.999 so alpha stays positive at t_max. alpha_t = sqrt(abar_t),
// sigma_t = sqrt(1 - abar_t).
NoiseSchedule build_cosine_schedule(int t_max = kDefaultTimesteps);

// Noise fields share the atlas layout; their mask is ignored.
// Entry e of the field draws from its own generator derived from (seed, e).
Atlas standard_normal_field(std::uint32_t side, std::uint64_t seed);

// alpha_t * X + sigma_t * eps on all channels; X's mask is kept.
Atlas forward_noise(const Atlas& x, int t, const Atlas& eps, const NoiseSchedule& schedule);

// Channelwise X_t + X_hat; the mask of X_t is kept.
Atlas condition(const Atlas& x_t, const Atlas& x_hat);

class Denoiser {
 public:
  virtual ~Denoiser() = default;
  // Predicted noise for the conditioned input X_t + X_hat at timestep t.
  virtual Atlas predict_noise(const Atlas& conditioned, int t,
                              const NoiseSchedule& schedule) const = 0;
};

// Knows the clean target and the condition, so it returns the exact noise
// (x_t - alpha_t X_true) / sigma_t. Validates sampler algebra.
class OracleDenoiser final : public Denoiser {
 public:
  OracleDenoiser(Atlas target, Atlas x_hat);
  Atlas predict_noise(const Atlas& conditioned, int t,
                      const NoiseSchedule& schedule) const override;

 private:
  Atlas target_;
  Atlas x_hat_;
};

class ZeroDenoiser final : public Denoiser {
 public:
  Atlas predict_noise(const Atlas& conditioned, int t,
                      const NoiseSchedule& schedule) const override;
};

// Mean over all channel entries of (eps - U(X_t + X_hat, t))^2.
double training_loss(const Denoiser& denoiser, const Atlas& x, const Atlas& x_hat, int t,
                     const Atlas& eps, const NoiseSchedule& schedule);

struct SamplerConfig {
  int steps = kDefaultSamplerSteps;
  NoiseSchedule schedule;
  std::uint64_t seed = 0;

  // 1 <= steps <= t_max; throws Error(kArgument).
  void validate() const;
};

// Evenly spaced descending timesteps round(t_max * (steps - k) / steps),
// k = 0..steps-1; the trajectory ends at t = 0.
std::vector<int> sampler_timesteps(int t_max, int steps);

// Deterministic DDIM trajectory from seed-drawn noise; returns the final
// x0 estimate with an all-true mask. Throws Error(kNumerical) naming the
// step when an intermediate value is not finite.
Atlas sample(const Denoiser& denoiser, const Atlas& x_hat, const SamplerConfig& config);

// Fills every hole with the channels of the nearest valid pixel in the
// 4-neighbour grid metric (ties by lowest pixel index); mask becomes
// all-true. Throws Error(kEmptyInput) for an all-hole atlas.
Atlas inpaint_nearest(const Atlas& x_hat);

}  // namespace pcatlas
