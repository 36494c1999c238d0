// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0
//
// LPIPS-style perceptual distance: unit-normalize feature maps along the
// channel axis at several depths, take squared differences, average
// spatially, weight per layer, and sum. Two backends share the math:
//  - pretrained: conv weights plus learned per-channel layer weights loaded
//    from an archive (BackendError when unavailable — never a silent
//    fallback);
//  - fixed-random proxy: a seeded stack with uniform layer weights, used by
//    the hermetic test suite.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "manysr/archive.hpp"
#include "manysr/errors.hpp"
#include "manysr/nn.hpp"
#include "manysr/rng.hpp"
#include "manysr/tensor.hpp"

namespace manysr {

enum class LpipsBackend { pretrained, random_proxy };

template <typename T>
class Lpips {
 public:
  /// Hermetic proxy backend: seeded random conv stack, uniform head.
  static Lpips fixed_random(std::uint64_t seed) {
    Lpips lp;
    lp.normalize_input_ = false;
    const int chans[5][2] = {{3, 16}, {16, 32}, {32, 64}, {64, 64}, {64, 64}};
    Rng rng = Rng::derive(seed, "lpips_proxy");
    for (int i = 0; i < 5; ++i) {
      lp.convs_.emplace_back("lpips.conv" + std::to_string(i), chans[i][0], chans[i][1], 3, 1, 1, true);
      lp.convs_.back().init(rng, 0.2, 1.0);
      lp.tap_after_.push_back(i >= 1);          // taps after convs 1..4
      lp.pool_after_.push_back(i == 0 || i == 2);
      lp.head_.push_back(std::vector<T>(static_cast<std::size_t>(chans[i][1]), T(1)));
    }
    return lp;
  }

  /// VGG16-topology backend with learned per-channel head weights.
  /// Archive layout: lpips.convNN.{weight,bias} for the 13 VGG-16 convs and
  /// lpips.headK.weight (K = 0..4) for the five tap heads.
  static Lpips pretrained(const std::filesystem::path& weights_file) {
    namespace fs = std::filesystem;
    if (!fs::is_regular_file(weights_file)) {
      throw BackendError("LPIPS weights not found: " + weights_file.string() +
                         " (use the random_proxy backend for hermetic runs)");
    }
    std::vector<NamedTensor<T>> tensors;
    try {
      tensors = read_archive<T>(weights_file);
    } catch (const DataError& e) {
      throw BackendError(std::string("cannot load LPIPS weights: ") + e.what());
    }
    auto find = [&](const std::string& name) -> NamedTensor<T>& {
      for (auto& t : tensors) {
        if (t.name == name) return t;
      }
      throw BackendError("LPIPS archive missing tensor " + name);
    };

    static constexpr int kChannels[14] = {3, 64, 64, 128, 128, 256, 256, 256,
                                          512, 512, 512, 512, 512, 512};
    // Taps after the last conv of each VGG-16 block; pools between blocks.
    static constexpr bool kTap[13] = {false, true, false, true, false, false, true,
                                      false, false, true, false, false, true};
    static constexpr bool kPool[13] = {false, true, false, true, false, false, true,
                                       false, false, true, false, false, false};
    Lpips lp;
    lp.normalize_input_ = true;
    int head_index = 0;
    for (int i = 0; i < 13; ++i) {
      char id[8];
      std::snprintf(id, sizeof(id), "%02d", i + 1);
      lp.convs_.emplace_back("lpips.conv" + std::string(id), kChannels[i], kChannels[i + 1],
                             3, 1, 1, true);
      auto& w = find("lpips.conv" + std::string(id) + ".weight");
      auto& b = find("lpips.conv" + std::string(id) + ".bias");
      if (w.data.size() != lp.convs_.back().weight().value.size() ||
          b.data.size() != lp.convs_.back().bias().value.size()) {
        throw BackendError("LPIPS archive has wrong shape for conv" + std::string(id));
      }
      lp.convs_.back().weight().value = w.data;
      lp.convs_.back().bias().value = b.data;
      lp.tap_after_.push_back(kTap[i]);
      lp.pool_after_.push_back(kPool[i]);
      if (kTap[i]) {
        auto& hw = find("lpips.head" + std::to_string(head_index) + ".weight");
        if (static_cast<int>(hw.data.size()) != kChannels[i + 1]) {
          throw BackendError("LPIPS archive head weight size mismatch");
        }
        lp.head_.push_back(hw.data);
        ++head_index;
      } else {
        lp.head_.push_back({});
      }
    }
    return lp;
  }

  /// Perceptual distance, >= 0, exactly 0 for identical inputs.
  T distance(const Tensor<T>& a, const Tensor<T>& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("lpips: shape mismatch");
    std::vector<Tensor<T>> fa = taps(a);
    std::vector<Tensor<T>> fb = taps(b);
    double total = 0.0;
    for (std::size_t l = 0; l < fa.size(); ++l) {
      const Tensor<T>& xa = fa[l];
      const Tensor<T>& xb = fb[l];
      const std::vector<T>& w = head_weights_for_tap(l);
      double layer = 0.0;
      const int c = xa.channels();
      for (int n = 0; n < xa.batch(); ++n)
        for (int y = 0; y < xa.height(); ++y)
          for (int x = 0; x < xa.width(); ++x) {
            double sqa = 1e-10, sqb = 1e-10;
            for (int ci = 0; ci < c; ++ci) {
              sqa += static_cast<double>(xa(n, y, x, ci)) * static_cast<double>(xa(n, y, x, ci));
              sqb += static_cast<double>(xb(n, y, x, ci)) * static_cast<double>(xb(n, y, x, ci));
            }
            const double na = 1.0 / std::sqrt(sqa), nb = 1.0 / std::sqrt(sqb);
            for (int ci = 0; ci < c; ++ci) {
              const double d = static_cast<double>(xa(n, y, x, ci)) * na -
                               static_cast<double>(xb(n, y, x, ci)) * nb;
              layer += static_cast<double>(w[static_cast<std::size_t>(ci)]) * d * d;
            }
          }
      total += layer / (static_cast<double>(xa.batch()) * xa.height() * xa.width());
    }
    return static_cast<T>(total);
  }

 private:
  std::vector<Tensor<T>> taps(const Tensor<T>& x) {
    Tensor<T> h = x;
    if (normalize_input_) {
      // LPIPS input scaling convention: [0,1] -> [-1,1], then per-channel shift.
      static constexpr double kShift[3] = {-0.030, -0.088, -0.188};
      static constexpr double kScale[3] = {0.458, 0.448, 0.450};
      for (std::int64_t i = 0; i < h.numel(); ++i) {
        const int c = static_cast<int>(i % 3);
        h.data()[i] = static_cast<T>(((2.0 * static_cast<double>(h.data()[i]) - 1.0) - kShift[c]) /
                                     kScale[c]);
      }
    }
    std::vector<Tensor<T>> out;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      h = convs_[i].forward(h);
      nn::LeakyReLU<T> relu(0.0);
      h = relu.forward(h);
      if (tap_after_[i]) out.push_back(h);
      if (pool_after_[i] && h.height() >= 2 && h.width() >= 2) {
        nn::MaxPool2x2<T> pool;
        h = pool.forward(h);
      }
    }
    return out;
  }

  const std::vector<T>& head_weights_for_tap(std::size_t tap_index) const {
    std::size_t seen = 0;
    for (std::size_t i = 0; i < tap_after_.size(); ++i) {
      if (tap_after_[i]) {
        if (seen == tap_index) return head_[i];
        ++seen;
      }
    }
    throw std::logic_error("lpips: tap index out of range");
  }

  std::vector<nn::Conv2d<T>> convs_;
  std::vector<bool> tap_after_;
  std::vector<bool> pool_after_;
  std::vector<std::vector<T>> head_;
  bool normalize_input_ = false;
};

}  // namespace manysr
