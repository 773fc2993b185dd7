#include "pcatlas/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "pcatlas/error.hpp"
#include "pcatlas/rng.hpp"

namespace pcatlas {
namespace {

constexpr double kCosineOffset = 0.008;
constexpr double kMaxBeta = 0.999;

void require_timestep(int t, const NoiseSchedule& schedule) {
  if (t < 0 || t > schedule.t_max) {
    throw Error(ErrorKind::kArgument, "timestep " + std::to_string(t) + " outside [0, " +
                                          std::to_string(schedule.t_max) + "]");
  }
}

Atlas all_valid_like(const Atlas& shape) {
  Atlas out(shape.side);
  std::fill(out.mask.begin(), out.mask.end(), 1);
  return out;
}

}  // namespace

NoiseSchedule build_cosine_schedule(int t_max) {
  if (t_max < 1) throw Error(ErrorKind::kArgument, "t_max must be at least 1");
  auto f = [&](int t) {
    const double x = (static_cast<double>(t) / t_max + kCosineOffset) / (1.0 + kCosineOffset);
    const double c = std::cos(x * std::numbers::pi / 2.0);
    return c * c;
  };
  NoiseSchedule s;
  s.t_max = t_max;
  s.alpha.resize(static_cast<std::size_t>(t_max) + 1);
  s.sigma.resize(s.alpha.size());
  double abar = 1.0;
  s.alpha[0] = 1.0;
  s.sigma[0] = 0.0;
  for (int t = 1; t <= t_max; ++t) {
    const double beta = std::min(1.0 - f(t) / f(t - 1), kMaxBeta);
    abar *= 1.0 - beta;
    s.alpha[t] = std::sqrt(abar);
    s.sigma[t] = std::sqrt(1.0 - abar);
  }
  return s;
}

Atlas standard_normal_field(std::uint32_t side, std::uint64_t seed) {
  Atlas field(side);
  std::fill(field.mask.begin(), field.mask.end(), 1);
  const auto n = static_cast<std::int64_t>(field.channels.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t e = 0; e < n; ++e) {
    SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(e)));
    field.channels[e] = standard_normal_pair(rng)[0];
  }
  return field;
}

Atlas forward_noise(const Atlas& x, int t, const Atlas& eps, const NoiseSchedule& schedule) {
  x.require_same_shape(eps);
  require_timestep(t, schedule);
  const double a = schedule.alpha[t];
  const double s = schedule.sigma[t];
  Atlas out = x;
  for (std::size_t e = 0; e < out.channels.size(); ++e) {
    out.channels[e] = a * x.channels[e] + s * eps.channels[e];
  }
  return out;
}

Atlas condition(const Atlas& x_t, const Atlas& x_hat) {
  x_t.require_same_shape(x_hat);
  Atlas out = x_t;
  for (std::size_t e = 0; e < out.channels.size(); ++e) out.channels[e] += x_hat.channels[e];
  return out;
}

OracleDenoiser::OracleDenoiser(Atlas target, Atlas x_hat)
    : target_(std::move(target)), x_hat_(std::move(x_hat)) {
  target_.require_same_shape(x_hat_);
}

Atlas OracleDenoiser::predict_noise(const Atlas& conditioned, int t,
                                    const NoiseSchedule& schedule) const {
  conditioned.require_same_shape(target_);
  require_timestep(t, schedule);
  const double a = schedule.alpha[t];
  const double s = schedule.sigma[t];
  if (s == 0.0) throw Error(ErrorKind::kArgument, "oracle is undefined at sigma = 0");
  Atlas out = all_valid_like(conditioned);
  for (std::size_t e = 0; e < out.channels.size(); ++e) {
    const double x_t = conditioned.channels[e] - x_hat_.channels[e];
    out.channels[e] = (x_t - a * target_.channels[e]) / s;
  }
  return out;
}

Atlas ZeroDenoiser::predict_noise(const Atlas& conditioned, int /*t*/,
                                  const NoiseSchedule& /*schedule*/) const {
  return all_valid_like(conditioned);
}

double training_loss(const Denoiser& denoiser, const Atlas& x, const Atlas& x_hat, int t,
                     const Atlas& eps, const NoiseSchedule& schedule) {
  x.require_same_shape(x_hat);
  const auto predicted =
      denoiser.predict_noise(condition(forward_noise(x, t, eps, schedule), x_hat), t, schedule);
  predicted.require_same_shape(eps);
  double sum = 0.0;
  for (std::size_t e = 0; e < eps.channels.size(); ++e) {
    const double d = eps.channels[e] - predicted.channels[e];
    sum += d * d;
  }
  return eps.channels.empty() ? 0.0 : sum / static_cast<double>(eps.channels.size());
}

void SamplerConfig::validate() const {
  if (schedule.t_max < 1 || schedule.alpha.size() != static_cast<std::size_t>(schedule.t_max) + 1) {
    throw Error(ErrorKind::kArgument, "sampler schedule is not built");
  }
  if (steps < 1 || steps > schedule.t_max) {
    throw Error(ErrorKind::kArgument, "steps must lie in [1, " +
                                          std::to_string(schedule.t_max) + "]");
  }
}

std::vector<int> sampler_timesteps(int t_max, int steps) {
  if (steps < 1 || steps > t_max) {
    throw Error(ErrorKind::kArgument, "steps must lie in [1, t_max]");
  }
  std::vector<int> out(static_cast<std::size_t>(steps));
  for (int k = 0; k < steps; ++k) {
    out[k] = static_cast<int>(std::llround(static_cast<double>(t_max) * (steps - k) / steps));
  }
  return out;
}

Atlas sample(const Denoiser& denoiser, const Atlas& x_hat, const SamplerConfig& config) {
  config.validate();
  const auto& schedule = config.schedule;
  const auto times = sampler_timesteps(schedule.t_max, config.steps);
  Atlas x_t = standard_normal_field(x_hat.side, derive_seed(config.seed, "sampler-init"));
  Atlas x0 = all_valid_like(x_hat);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const int t = times[k];
    const int next = k + 1 < times.size() ? times[k + 1] : 0;
    const auto eps = denoiser.predict_noise(condition(x_t, x_hat), t, schedule);
    eps.require_same_shape(x_hat);
    const double a = schedule.alpha[t];
    const double s = schedule.sigma[t];
    const double a_next = schedule.alpha[next];
    const double s_next = schedule.sigma[next];
    for (std::size_t e = 0; e < x0.channels.size(); ++e) {
      const double est = (x_t.channels[e] - s * eps.channels[e]) / a;
      if (!std::isfinite(est) || !std::isfinite(eps.channels[e])) {
        throw Error(ErrorKind::kNumerical, "non-finite value at sampler step " +
                                               std::to_string(k) + " (t=" +
                                               std::to_string(t) + ")");
      }
      x0.channels[e] = est;
      x_t.channels[e] = a_next * est + s_next * eps.channels[e];
    }
  }
  return x0;
}

Atlas inpaint_nearest(const Atlas& x_hat) {
  const auto n = x_hat.pixel_count();
  const auto side = static_cast<std::int64_t>(x_hat.side);
  constexpr auto kUnset = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> source(n, kUnset);
  std::vector<std::uint32_t> frontier;
  for (std::uint32_t p = 0; p < n; ++p) {
    if (x_hat.mask[p]) {
      source[p] = p;
      frontier.push_back(p);
    }
  }
  if (frontier.empty()) throw Error(ErrorKind::kEmptyInput, "atlas has no valid pixel");

  // Level-synchronous BFS. A pixel first reached at distance d takes the
  // smallest source among its distance-(d-1) neighbours, which is the
  // smallest source at distance d overall.
  std::vector<std::uint32_t> next;
  std::vector<std::uint8_t> reached(x_hat.mask.begin(), x_hat.mask.end());
  while (!frontier.empty()) {
    next.clear();
    for (auto p : frontier) {
      const std::int64_t r = p / side;
      const std::int64_t c = p % side;
      const std::int64_t nbr[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
      for (const auto& rc : nbr) {
        if (rc[0] < 0 || rc[0] >= side || rc[1] < 0 || rc[1] >= side) continue;
        const auto q = static_cast<std::uint32_t>(rc[0] * side + rc[1]);
        if (reached[q]) continue;
        if (source[q] == kUnset) next.push_back(q);
        source[q] = std::min(source[q], source[p]);
      }
    }
    for (auto q : next) reached[q] = 1;
    frontier.swap(next);
  }

  Atlas out = x_hat;
  for (std::size_t p = 0; p < n; ++p) {
    out.mask[p] = 1;
    if (x_hat.mask[p]) continue;
    for (std::size_t ch = 0; ch < kAtlasChannels; ++ch) out.at(ch, p) = x_hat.at(ch, source[p]);
  }
  return out;
}

}  // namespace pcatlas
