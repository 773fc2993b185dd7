#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pcatlas/diffusion.hpp"
#include "pcatlas/error.hpp"
#include "pcatlas/rng.hpp"
#include "support.hpp"

using namespace pcatlas;
using namespace pcatlas::testing;

namespace {

Atlas random_atlas(std::uint32_t side, std::uint64_t seed, double hole_rate = 0.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Atlas a(side);
  for (std::size_t p = 0; p < a.pixel_count(); ++p) {
    if (u(rng) < hole_rate) continue;
    a.mask[p] = 1;
    a.set_pixel(p, random_unit(rng) * (0.3 * u(rng)), random_unit(rng));
  }
  return a;
}

class ShiftedDenoiser final : public Denoiser {
 public:
  ShiftedDenoiser(Atlas eps, double c) : eps_(std::move(eps)), c_(c) {}
  Atlas predict_noise(const Atlas&, int, const NoiseSchedule&) const override {
    Atlas out = eps_;
    for (auto& v : out.channels) v += c_;
    return out;
  }

 private:
  Atlas eps_;
  double c_;
};

double max_abs_diff(const Atlas& a, const Atlas& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.channels.size(); ++i) {
    m = std::max(m, std::abs(a.channels[i] - b.channels[i]));
  }
  return m;
}

}  // namespace

TEST(Schedule, CosineFormulaAndInvariants) {
  const auto s = build_cosine_schedule(1000);
  ASSERT_EQ(s.alpha.size(), 1001u);
  EXPECT_EQ(s.alpha[0], 1.0);
  EXPECT_EQ(s.sigma[0], 0.0);
  for (int t = 0; t <= 1000; ++t) {
    EXPECT_NEAR(s.alpha[t] * s.alpha[t] + s.sigma[t] * s.sigma[t], 1.0, 1e-9);
    if (t > 0) {
      EXPECT_LT(s.alpha[t], s.alpha[t - 1]);
    }
  }
  EXPECT_LT(s.alpha[1000], 0.01);
  // Away from the clipped tail the table follows f(t)/f(0) directly.
  auto f = [](double t) {
    const double c = std::cos((t / 1000.0 + 0.008) / 1.008 * std::numbers::pi / 2.0);
    return c * c;
  };
  for (int t : {1, 100, 500, 900}) EXPECT_NEAR(s.alpha[t], std::sqrt(f(t) / f(0)), 1e-9);
}

TEST(ForwardNoise, Endpoints) {
  const auto s = build_cosine_schedule();
  const auto x = random_atlas(8, 1);
  const auto eps = standard_normal_field(8, 2);
  EXPECT_EQ(forward_noise(x, 0, eps, s), x);
  const auto scaled = forward_noise(x, 300, Atlas(8), s);
  for (std::size_t i = 0; i < x.channels.size(); ++i) {
    EXPECT_DOUBLE_EQ(scaled.channels[i], s.alpha[300] * x.channels[i]);
  }
  Atlas ones(8);
  std::fill(ones.channels.begin(), ones.channels.end(), 1.0);
  for (double v : forward_noise(Atlas(8), 300, ones, s).channels) {
    EXPECT_DOUBLE_EQ(v, s.sigma[300]);
  }
  EXPECT_THROW(forward_noise(x, 0, Atlas(4), s), Error);
}

TEST(ForwardNoise, Statistics) {
  const auto s = build_cosine_schedule();
  const auto x = random_atlas(4, 3);
  const int trials = 4000, t = 400;
  std::vector<double> sum(x.channels.size()), sq(x.channels.size());
  for (int k = 0; k < trials; ++k) {
    const auto xt = forward_noise(x, t, standard_normal_field(4, 1000 + k), s);
    for (std::size_t i = 0; i < sum.size(); ++i) {
      sum[i] += xt.channels[i];
      sq[i] += xt.channels[i] * xt.channels[i];
    }
  }
  const double tol = 3.0 / std::sqrt(static_cast<double>(trials));
  for (std::size_t i = 0; i < sum.size(); ++i) {
    const double mean = sum[i] / trials;
    const double sd = std::sqrt(sq[i] / trials - mean * mean);
    EXPECT_NEAR(mean, s.alpha[t] * x.channels[i], tol * s.sigma[t] * 1.5);
    EXPECT_NEAR(sd, s.sigma[t], tol * s.sigma[t]);
  }
}

TEST(NormalField, Moments) {
  const auto e = standard_normal_field(128, 5);
  double sum = 0.0, sq = 0.0;
  for (double v : e.channels) {
    sum += v;
    sq += v * v;
  }
  const double n = static_cast<double>(e.channels.size());
  EXPECT_NEAR(sum / n, 0.0, 0.02);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
  EXPECT_EQ(standard_normal_field(128, 5), e);
}

TEST(Condition, AdditiveRule) {
  const auto x = random_atlas(6, 1);
  const auto hat = random_atlas(6, 2, 0.3);
  const auto c = condition(x, hat);
  for (std::size_t i = 0; i < x.channels.size(); ++i) {
    EXPECT_EQ(c.channels[i], x.channels[i] + hat.channels[i]);
  }
  EXPECT_EQ(condition(x, Atlas(6)).channels, x.channels);
  Atlas neg = hat;
  for (auto& v : neg.channels) v = -v;
  for (double v : condition(neg, hat).channels) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(condition(x, Atlas(5)), Error);
}

TEST(TrainingLoss, ExactNoiseGivesZero) {
  const auto s = build_cosine_schedule();
  const auto x = random_atlas(16, 1);
  const auto hat = random_atlas(16, 2, 0.2);
  const auto eps = standard_normal_field(16, 3);
  EXPECT_EQ(training_loss(ShiftedDenoiser(eps, 0.0), x, hat, 500, eps, s), 0.0);
  EXPECT_NEAR(training_loss(ShiftedDenoiser(eps, 0.3), x, hat, 500, eps, s), 0.09, 1e-12);
}

TEST(TrainingLoss, ZeroDenoiserNearOne) {
  const auto s = build_cosine_schedule();
  const auto x = random_atlas(128, 1);
  const auto eps = standard_normal_field(128, 4);
  EXPECT_NEAR(training_loss(ZeroDenoiser(), x, Atlas(128), 700, eps, s), 1.0, 0.05);
}

TEST(Sampler, Timesteps) {
  // Evenly spaced from t_max down; the final step lands on t = 0.
  EXPECT_EQ(sampler_timesteps(1000, 1), (std::vector<int>{1000}));
  const auto ts = sampler_timesteps(1000, 20);
  ASSERT_EQ(ts.size(), 20u);
  EXPECT_EQ(ts.front(), 1000);
  EXPECT_EQ(ts.back(), 50);
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) EXPECT_EQ(ts[k] - ts[k + 1], 50);
  EXPECT_EQ(sampler_timesteps(10, 3), (std::vector<int>{10, 7, 3}));
}

TEST(Sampler, OracleRecoversTarget) {
  const auto target = random_atlas(32, 7);
  const auto hat = random_atlas(32, 8, 0.3);
  SamplerConfig cfg;
  cfg.schedule = build_cosine_schedule();
  const OracleDenoiser oracle(target, hat);
  Atlas out1, out20;
  for (int steps : {1, 5, 20}) {
    cfg.steps = steps;
    const auto out = sample(oracle, hat, cfg);
    EXPECT_LT(max_abs_diff(out, target), 1e-5) << steps;
    (steps == 1 ? out1 : out20) = out;
  }
  EXPECT_LT(max_abs_diff(out1, out20), 1e-5);
}

TEST(Sampler, ZeroDenoiserClosedForm) {
  SamplerConfig cfg;
  cfg.schedule = build_cosine_schedule();
  cfg.steps = 4;
  cfg.seed = 12;
  const auto out = sample(ZeroDenoiser(), Atlas(8), cfg);
  // With eps_hat = 0 every step rescales: x0 = x_T / alpha_T.
  const auto x_T = standard_normal_field(8, derive_seed(12, "sampler-init"));
  for (std::size_t i = 0; i < out.channels.size(); ++i) {
    EXPECT_NEAR(out.channels[i], x_T.channels[i] / cfg.schedule.alpha[1000],
                1e-9 * std::abs(out.channels[i]) + 1e-12);
  }
}

TEST(Sampler, NonFiniteIsNumericalError) {
  class NanDenoiser final : public Denoiser {
   public:
    Atlas predict_noise(const Atlas& c, int, const NoiseSchedule&) const override {
      Atlas out(c.side);
      out.channels[0] = std::nan("");
      return out;
    }
  };
  SamplerConfig cfg;
  cfg.schedule = build_cosine_schedule();
  try {
    sample(NanDenoiser(), Atlas(4), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
    EXPECT_NE(std::string(e.what()).find("step"), std::string::npos);
  }
}

TEST(Sampler, ConfigValidation) {
  SamplerConfig cfg;
  cfg.schedule = build_cosine_schedule(10);
  cfg.steps = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.steps = 11;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.steps = 10;
  EXPECT_NO_THROW(cfg.validate());
}

TEST(InpaintNearest, ManhattanOracle) {
  const auto a = random_atlas(12, 3, 0.7);
  const auto out = inpaint_nearest(a);
  EXPECT_EQ(out.valid_count(), out.pixel_count());
  // Independent oracle: nearest valid pixel in 4-neighbour (Manhattan)
  // distance; ties resolved to the lowest pixel index.
  const int side = 12;
  for (int p = 0; p < side * side; ++p) {
    if (a.mask[p]) {
      EXPECT_EQ(out.offset(p), a.offset(p));
      continue;
    }
    int best = -1, best_d = 1 << 30;
    for (int q = 0; q < side * side; ++q) {
      if (!a.mask[q]) continue;
      const int d = std::abs(p / side - q / side) + std::abs(p % side - q % side);
      if (d < best_d) {
        best_d = d;
        best = q;
      }
    }
    EXPECT_EQ(out.offset(p), a.offset(best)) << p;
    EXPECT_EQ(out.normal(p), a.normal(best)) << p;
  }
  EXPECT_EQ(inpaint_nearest(out), out);
}

TEST(InpaintNearest, HalfPlaneCopiesBoundaryColumn) {
  Atlas a(6);
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 3; ++c) {
      const int p = r * 6 + c;
      a.mask[p] = 1;
      a.set_pixel(p, {0.1 * r, 0.01 * c, 0}, {0, 0, 1});
    }
  }
  const auto out = inpaint_nearest(a);
  for (int r = 0; r < 6; ++r) {
    for (int c = 3; c < 6; ++c) EXPECT_EQ(out.offset(r * 6 + c), a.offset(r * 6 + 2));
  }
}

TEST(InpaintNearest, SinglePixelAndEmpty) {
  Atlas a(5);
  a.mask[7] = 1;
  a.set_pixel(7, {0.1, 0.2, 0.3}, {1, 0, 0});
  for (std::size_t p = 0; p < 25; ++p) EXPECT_EQ(inpaint_nearest(a).offset(p), a.offset(7));
  try {
    inpaint_nearest(Atlas(5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyInput);
  }
}
