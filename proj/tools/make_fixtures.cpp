// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0
//
// Writes the deterministic PNG fixtures used by the test and acceptance
// suites into a target directory (default tests/fixtures). Committed
// outputs; rerun only when the fixture recipes change.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "manysr/png_io.hpp"
#include "manysr/rng.hpp"
#include "manysr/tensor.hpp"

namespace fs = std::filesystem;
using manysr::Rng;
using manysr::Tensor;

namespace {

Tensor<double> gaussian_blur(const Tensor<double>& img, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[static_cast<std::size_t>(i + radius)];
  }
  for (double& v : k) v /= sum;

  auto clampi = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };
  Tensor<double> mid(1, img.height(), img.width(), img.channels());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) {
        double acc = 0;
        for (int i = -radius; i <= radius; ++i) {
          acc += k[static_cast<std::size_t>(i + radius)] *
                 img(clampi(y + i, 0, img.height() - 1), x, c);
        }
        mid(y, x, c) = acc;
      }
  Tensor<double> out(1, img.height(), img.width(), img.channels());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) {
        double acc = 0;
        for (int i = -radius; i <= radius; ++i) {
          acc += k[static_cast<std::size_t>(i + radius)] *
                 mid(y, clampi(x + i, 0, img.width() - 1), c);
        }
        out(y, x, c) = acc;
      }
  return out;
}

// Mix of smooth shading, hard edges, and fine texture.
Tensor<double> natural_patch(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<double> img(1, h, w, 3);
  const double gx = rng.uniform(), gy = rng.uniform();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        img(y, x, c) = 0.25 + 0.35 * (gx * x / w + gy * y / h) + 0.05 * c;
      }
  for (int r = 0; r < 6; ++r) {
    const int y0 = static_cast<int>(rng.uniform_int(h));
    const int x0 = static_cast<int>(rng.uniform_int(w));
    const int rh = 4 + static_cast<int>(rng.uniform_int(h / 2));
    const int rw = 4 + static_cast<int>(rng.uniform_int(w / 2));
    const double v0 = rng.uniform(), v1 = rng.uniform(), v2 = rng.uniform();
    for (int y = y0; y < std::min(h, y0 + rh); ++y)
      for (int x = x0; x < std::min(w, x0 + rw); ++x) {
        img(y, x, 0) = v0;
        img(y, x, 1) = v1;
        img(y, x, 2) = v2;
      }
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        const double t = 0.10 * (rng.uniform() - 0.5) +
                         0.06 * std::sin(0.9 * x + 0.7 * y + c);
        img(y, x, c) = std::clamp(img(y, x, c) + t, 0.0, 1.0);
      }
  return img;
}

Tensor<double> pattern(int index, int h, int w) {
  Tensor<double> img(1, h, w, 3);
  Rng rng(1000 + static_cast<std::uint64_t>(index));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = 0;
        switch (index % 5) {
          case 0: v = (x + y * 0.5) / (w + h * 0.5); break;                    // ramp
          case 1: v = ((x / 3 + y / 3) % 2 == 0) ? 0.9 : 0.1; break;           // checker
          case 2: {                                                            // radial
            const double dx = x - w / 2.0, dy = y - h / 2.0;
            v = 0.5 + 0.5 * std::cos(std::sqrt(dx * dx + dy * dy) * 0.4 + c);
            break;
          }
          case 3: v = rng.uniform(); break;                                    // noise
          default: v = 0.5 + 0.4 * std::sin(0.35 * x + 0.1 * c) * std::cos(0.27 * y); break;
        }
        img(y, x, c) = std::clamp(v + 0.03 * c, 0.0, 1.0);
      }
  return img;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path dir = argc > 1 ? argv[1] : "tests/fixtures";
  fs::create_directories(dir);

  // Ten mixed-size images for the resampling equivalence fixtures.
  const int sizes[10][2] = {{24, 32}, {28, 44}, {32, 32}, {36, 24}, {40, 40},
                            {48, 36}, {32, 48}, {44, 28}, {36, 36}, {24, 24}};
  for (int i = 0; i < 10; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "resize_%02d.png", i);
    manysr::write_png(dir / name, pattern(i, sizes[i][0], sizes[i][1]));
  }

  // Sharp/blurred pair for blur-detection ordering.
  Tensor<double> sharp = natural_patch(96, 96, 77);
  manysr::write_png(dir / "patch_sharp.png", sharp);
  manysr::write_png(dir / "patch_blurred.png", gaussian_blur(sharp, 3.0));

  // LPIPS ordering triplet: blur should cost more than mild noise.
  Tensor<double> base = natural_patch(64, 64, 99);
  manysr::write_png(dir / "lpips_base.png", base);
  manysr::write_png(dir / "lpips_blurred.png", gaussian_blur(base, 2.0));
  Rng noise_rng(5);
  Tensor<double> noised = base;
  for (auto& v : noised.vec()) v = std::clamp(v + 0.02 * noise_rng.normal(), 0.0, 1.0);
  manysr::write_png(dir / "lpips_noised.png", noised);

  std::printf("fixtures written to %s\n", dir.string().c_str());
  return 0;
}
