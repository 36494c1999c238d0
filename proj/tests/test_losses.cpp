// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "manysr/losses.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace manysr;

// --- l1 ------------------------------------------------------------------------

TEST(L1Loss, FixedPointsAndOffset) {
  auto a = synth::random_image<double>(6, 7, 3, 1);
  EXPECT_EQ(l1_loss(a, a), 0.0);
  Tensor<double> b = a;
  for (auto& v : b.vec()) v += 0.5;
  EXPECT_NEAR(l1_loss(b, a), 0.5, 1e-12);
}

TEST(L1Loss, MatchesScalarOracle) {
  auto a = synth::random_image<double>(9, 5, 3, 2);
  auto b = synth::random_image<double>(9, 5, 3, 3);
  EXPECT_NEAR(l1_loss(a, b), oracle::l1(a, b), 1e-12);
  EXPECT_THROW(l1_loss(a, synth::random_image<double>(9, 6, 3, 4)), std::invalid_argument);
}

TEST(L1Loss, GradientMatchesFiniteDifferences) {
  auto a = synth::random_image<double>(5, 5, 3, 5);
  auto b = synth::random_image<double>(5, 5, 3, 6);
  Tensor<double> da;
  l1_loss_grad(a, b, &da);
  auto f = [&](const Tensor<double>& x) { return static_cast<double>(l1_loss(x, b)); };
  auto r = gradcheck::check(f, a, da);
  EXPECT_GT(r.fraction_ok, 0.999);
}

// --- cycle ------------------------------------------------------------------------

TEST(CycleLoss, DefinitionFixedPoint) {
  auto sr = synth::random_image<double>(16, 16, 3, 7);
  BicubicOp<double> f(16, 16, 0.25, true);
  auto lr = f.apply(sr);
  EXPECT_NEAR(cycle_loss(sr, lr, f), 0.0, 1e-15);
}

TEST(CycleLoss, ConstantImageFixedPoint) {
  auto sr = synth::constant_image<double>(16, 16, 3, 0.6);
  BicubicOp<double> f(16, 16, 0.5, true);
  auto lr = synth::constant_image<double>(8, 8, 3, 0.6);
  EXPECT_NEAR(cycle_loss(sr, lr, f), 0.0, 1e-9);
}

TEST(CycleLoss, GradientMatchesFiniteDifferences) {
  auto sr = synth::random_image<double>(8, 8, 3, 8);
  BicubicOp<double> f(8, 8, 0.5, true);
  auto lr = synth::random_image<double>(4, 4, 3, 9);
  Tensor<double> dsr;
  cycle_loss_grad(sr, lr, f, &dsr);
  auto obj = [&](const Tensor<double>& x) { return static_cast<double>(cycle_loss(x, lr, f)); };
  auto r = gradcheck::check(obj, sr, dsr, 1e-6, 1e-3);
  EXPECT_GE(r.fraction_ok, 0.95) << "worst " << r.worst_rel_err;
}

// High-frequency perturbation with near-zero downsampled trace moves the
// cycle loss far less than the strict L1 loss.
TEST(CycleLoss, IgnoresHighFrequencyDetail) {
  auto sr = synth::random_image<double>(32, 32, 3, 10);
  BicubicOp<double> f(32, 32, 0.25, true);
  auto lr = f.apply(sr);
  // checkerboard at the Nyquist rate, amplitude 0.05
  Tensor<double> perturbed = sr;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      for (int c = 0; c < 3; ++c) {
        perturbed(y, x, c) += ((x + y) % 2 == 0 ? 0.05 : -0.05);
      }
  const double cycle_change = std::abs(cycle_loss(perturbed, lr, f) - cycle_loss(sr, lr, f));
  const double l1_change = std::abs(l1_loss(perturbed, sr));
  EXPECT_NEAR(l1_change, 0.05, 1e-12);
  // border clamping leaves a small residual; two orders of magnitude is the
  // qualitative claim, the exact null-space bound lives in the acceptance
  // suite's projection check
  EXPECT_LT(cycle_change, 1e-2 * l1_change);
}

// --- perceptual --------------------------------------------------------------------

namespace {

// Recorded from the straight-line oracle below (seed 2026, inputs 14/15).
constexpr double kGoldenPerceptual = 0.18651141478079494;

// Straight-line re-implementation of the fixed-random extractor: naive conv
// loops over the same weights, no GEMM, no layer classes.
Tensor<double> naive_extractor_forward(FeatureExtractor<double>& fx, const Tensor<double>& input) {
  auto conv = [](const Tensor<double>& x, const std::vector<double>& w,
                 const std::vector<double>& b, int in_c, int out_c) {
    Tensor<double> y(x.batch(), x.height(), x.width(), out_c);
    for (int n = 0; n < x.batch(); ++n)
      for (int oy = 0; oy < x.height(); ++oy)
        for (int ox = 0; ox < x.width(); ++ox)
          for (int oc = 0; oc < out_c; ++oc) {
            double acc = b[static_cast<std::size_t>(oc)];
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 3; ++kx) {
                const int iy = oy - 1 + ky, ix = ox - 1 + kx;
                if (iy < 0 || iy >= x.height() || ix < 0 || ix >= x.width()) continue;
                for (int ic = 0; ic < in_c; ++ic) {
                  acc += w[static_cast<std::size_t>(((ky * 3 + kx) * in_c + ic) * out_c + oc)] *
                         x(n, iy, ix, ic);
                }
              }
            y(n, oy, ox, oc) = acc;
          }
    return y;
  };
  auto lrelu = [](Tensor<double> x) {
    for (auto& v : x.vec()) v = v > 0 ? v : 0.2 * v;
    return x;
  };
  auto pool = [](const Tensor<double>& x) {
    Tensor<double> y(x.batch(), x.height() / 2, x.width() / 2, x.channels());
    for (int n = 0; n < y.batch(); ++n)
      for (int oy = 0; oy < y.height(); ++oy)
        for (int ox = 0; ox < y.width(); ++ox)
          for (int c = 0; c < x.channels(); ++c) {
            double m = x(n, oy * 2, ox * 2, c);
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx) m = std::max(m, x(n, oy * 2 + dy, ox * 2 + dx, c));
            y(n, oy, ox, c) = m;
          }
    return y;
  };

  const int chans[5][2] = {{3, 16}, {16, 32}, {32, 32}, {32, 32}, {32, 32}};
  auto& convs = fx.convs();
  Tensor<double> h = input;
  h = lrelu(conv(h, convs[0].weight().value, convs[0].bias().value, chans[0][0], chans[0][1]));
  h = pool(h);
  h = lrelu(conv(h, convs[1].weight().value, convs[1].bias().value, chans[1][0], chans[1][1]));
  h = pool(h);
  h = lrelu(conv(h, convs[2].weight().value, convs[2].bias().value, chans[2][0], chans[2][1]));
  h = lrelu(conv(h, convs[3].weight().value, convs[3].bias().value, chans[3][0], chans[3][1]));
  h = conv(h, convs[4].weight().value, convs[4].bias().value, chans[4][0], chans[4][1]);
  return h;
}

}  // namespace

TEST(PerceptualLoss, IdenticalInputsGiveZero) {
  auto fx = FeatureExtractor<double>::fixed_random(42);
  auto img = synth::random_image<double>(16, 16, 3, 11);
  EXPECT_EQ(perceptual_loss(img, img, fx), 0.0);
}

TEST(PerceptualLoss, ZeroWeightExtractorGivesZero) {
  auto fx = FeatureExtractor<double>::fixed_random(42);
  for (auto& conv : fx.convs()) {
    std::fill(conv.weight().value.begin(), conv.weight().value.end(), 0.0);
    std::fill(conv.bias().value.begin(), conv.bias().value.end(), 0.0);
  }
  auto a = synth::random_image<double>(16, 16, 3, 12);
  auto b = synth::random_image<double>(16, 16, 3, 13);
  EXPECT_EQ(perceptual_loss(a, b, fx), 0.0);
}

// Fixed seed, fixed input pair: value must match the straight-line oracle
// and the frozen golden value recorded from it.
TEST(PerceptualLoss, GoldenFixtureMatchesStraightLineOracle) {
  auto fx = FeatureExtractor<double>::fixed_random(2026);
  auto sr = synth::random_image<double>(16, 16, 3, 14);
  auto hr = synth::random_image<double>(16, 16, 3, 15);
  const double value = perceptual_loss(sr, hr, fx);

  auto fa = naive_extractor_forward(fx, sr);
  auto fb = naive_extractor_forward(fx, hr);
  EXPECT_NEAR(value, oracle::l1(fa, fb), 1e-9);
  // golden regression value (recomputed by the oracle above when weights
  // or the stack change; update deliberately)
  EXPECT_NEAR(value, kGoldenPerceptual, 1e-9);
}

TEST(PerceptualLoss, GradientMatchesFiniteDifferences) {
  auto fx = FeatureExtractor<double>::fixed_random(7);
  auto sr = synth::random_image<double>(8, 8, 3, 16);
  auto hr = synth::random_image<double>(8, 8, 3, 17);
  Tensor<double> dsr;
  perceptual_loss_grad(sr, hr, fx, &dsr);
  auto obj = [&](const Tensor<double>& x) {
    auto fx2 = FeatureExtractor<double>::fixed_random(7);
    return static_cast<double>(perceptual_loss(x, hr, fx2));
  };
  auto r = gradcheck::check(obj, sr, dsr, 1e-5, 1e-3);
  EXPECT_GE(r.fraction_ok, 0.95) << "worst " << r.worst_rel_err;
}

TEST(PerceptualLoss, PretrainedBackendMissingIsExplicit) {
  EXPECT_THROW(FeatureExtractor<double>::vgg19_pretrained("/nonexistent/vgg.wts"), BackendError);
}

// --- RaGAN -----------------------------------------------------------------------

TEST(Ragan, EqualConstantLogitsGiveTwoLnTwo) {
  std::vector<double> real = {0.7, 0.7, 0.7};
  std::vector<double> fake = {0.7, 0.7};
  const double two_ln2 = 2.0 * std::log(2.0);
  EXPECT_NEAR(ragan_d_loss<double>(real, fake), two_ln2, 1e-12);
  EXPECT_NEAR(ragan_g_loss<double>(real, fake), two_ln2, 1e-12);
}

TEST(Ragan, SaturationLimit) {
  std::vector<double> real = {1000.0};
  std::vector<double> fake = {0.0};
  EXPECT_LT(ragan_d_loss<double>(real, fake), 1e-6);
}

TEST(Ragan, MatchesScalarBceOracle) {
  Rng rng(18);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> real(4), fake(4);
    for (auto& v : real) v = 3.0 * rng.normal();
    for (auto& v : fake) v = 3.0 * rng.normal();
    EXPECT_NEAR(ragan_d_loss<double>(real, fake), oracle::ragan_d<double>(real, fake), 1e-10);
    EXPECT_NEAR(ragan_g_loss<double>(real, fake), oracle::ragan_g<double>(real, fake), 1e-10);
  }
}

TEST(Ragan, InvariantUnderCommonLogitShift) {
  std::vector<double> real = {0.3, -1.2, 0.8, 2.0};
  std::vector<double> fake = {-0.5, 0.1, 1.4};
  const double d0 = ragan_d_loss<double>(real, fake);
  const double g0 = ragan_g_loss<double>(real, fake);
  for (auto& v : real) v += 123.0;
  for (auto& v : fake) v += 123.0;
  EXPECT_NEAR(ragan_d_loss<double>(real, fake), d0, 1e-9);
  EXPECT_NEAR(ragan_g_loss<double>(real, fake), g0, 1e-9);
}

TEST(Ragan, GradientsMatchFiniteDifferences) {
  std::vector<double> real = {0.4, -0.9, 1.3};
  std::vector<double> fake = {0.2, 0.6, -1.1, 0.05};
  std::vector<double> dreal, dfake;
  ragan_d_loss_grad<double>(real, fake, &dreal, &dfake);
  const double eps = 1e-6;
  for (std::size_t i = 0; i < real.size(); ++i) {
    auto r = real;
    r[i] += eps;
    const double fp = ragan_d_loss<double>(r, fake);
    r[i] -= 2 * eps;
    const double fm = ragan_d_loss<double>(r, fake);
    EXPECT_NEAR(dreal[i], (fp - fm) / (2 * eps), 1e-6);
  }
  for (std::size_t j = 0; j < fake.size(); ++j) {
    auto f = fake;
    f[j] += eps;
    const double fp = ragan_d_loss<double>(real, f);
    f[j] -= 2 * eps;
    const double fm = ragan_d_loss<double>(real, f);
    EXPECT_NEAR(dfake[j], (fp - fm) / (2 * eps), 1e-6);
  }
  ragan_g_loss_grad<double>(real, fake, &dreal, &dfake);
  for (std::size_t i = 0; i < real.size(); ++i) {
    auto r = real;
    r[i] += eps;
    const double fp = ragan_g_loss<double>(r, fake);
    r[i] -= 2 * eps;
    const double fm = ragan_g_loss<double>(r, fake);
    EXPECT_NEAR(dreal[i], (fp - fm) / (2 * eps), 1e-6);
  }
  for (std::size_t j = 0; j < fake.size(); ++j) {
    auto f = fake;
    f[j] += eps;
    const double fp = ragan_g_loss<double>(real, f);
    f[j] -= 2 * eps;
    const double fm = ragan_g_loss<double>(real, f);
    EXPECT_NEAR(dfake[j], (fp - fm) / (2 * eps), 1e-6);
  }
}

TEST(Ragan, Errors) {
  std::vector<double> ok = {1.0};
  std::vector<double> empty;
  std::vector<double> bad = {std::numeric_limits<double>::quiet_NaN()};
  EXPECT_THROW(ragan_d_loss<double>(empty, ok), std::invalid_argument);
  EXPECT_THROW(ragan_d_loss<double>(ok, bad), DivergenceError);
}

// --- composite ----------------------------------------------------------------------

TEST(TotalGeneratorLoss, WeightedCombination) {
  LossWeights w;
  w.w_content = 1.0;
  w.lambda_gan = 0.0;
  w.w_percep = 0.0;
  EXPECT_DOUBLE_EQ(total_generator_loss<double>(w, 0.37, 5.0, 9.0), 0.37);

  LossWeights eq3 = LossWeights::eq3();
  EXPECT_NEAR(total_generator_loss<double>(eq3, 1.0, 2.0, 3.0), 31.01, 1e-12);

  LossWeights gan_only;  // configuration (g): content off, perceptual off
  gan_only.w_content = 0.0;
  gan_only.w_percep = 0.0;
  gan_only.lambda_gan = 5e-3;
  EXPECT_NEAR(total_generator_loss<double>(gan_only, 123.0, 2.0, 456.0), 0.01, 1e-12);

  LossWeights bad;
  bad.w_content = -1.0;
  EXPECT_THROW(total_generator_loss<double>(bad, 1.0, 1.0, 1.0), std::invalid_argument);
}

TEST(TotalGeneratorLoss, LinearInEachComponent) {
  LossWeights w = LossWeights::eq3();
  const double base = total_generator_loss<double>(w, 1.0, 1.0, 1.0);
  EXPECT_NEAR(total_generator_loss<double>(w, 2.0, 1.0, 1.0) - base, w.w_content, 1e-12);
  EXPECT_NEAR(total_generator_loss<double>(w, 1.0, 2.0, 1.0) - base, w.lambda_gan, 1e-12);
  EXPECT_NEAR(total_generator_loss<double>(w, 1.0, 1.0, 2.0) - base, w.w_percep, 1e-12);
}

TEST(LossWeights, Presets) {
  const auto pirm = LossWeights::eq1_pirm();
  EXPECT_EQ(pirm.content_mode, ContentMode::strict_l1);
  EXPECT_DOUBLE_EQ(pirm.w_content, 10.0);
  EXPECT_DOUBLE_EQ(pirm.lambda_gan, 5e-3);
  EXPECT_DOUBLE_EQ(pirm.w_percep, 1.0);
  const auto released = LossWeights::eq1_released();
  EXPECT_DOUBLE_EQ(released.w_content, 1e-2);
  const auto eq3 = LossWeights::eq3();
  EXPECT_EQ(eq3.content_mode, ContentMode::cycle);
  EXPECT_DOUBLE_EQ(eq3.w_content, 1.0);
  EXPECT_DOUBLE_EQ(eq3.w_percep, 10.0);
}
