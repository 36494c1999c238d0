// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0
//
// RRDB super-resolution generator with learned per-block, per-channel noise
// injection. Each RRDB is the ESRGAN residual-in-residual dense block
// (3 dense blocks of 5 convs, residual scaling 0.2, no batch norm). After
// every RRDB's residual addition, pixel-wise Gaussian noise scaled by a
// learned per-channel factor is added; scales start at zero and are trained
// with the rest of the network. Noise is never applied in eval mode, so
// eval outputs are a deterministic function of (params, input).

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "manysr/errors.hpp"
#include "manysr/nn.hpp"
#include "manysr/rng.hpp"
#include "manysr/tensor.hpp"

namespace manysr {

struct GeneratorConfig {
  int num_rrdb = 23;
  int trunk_channels = 64;
  int growth_channels = 32;
  int scale = 4;  // power of two, 2..16
  bool noise_enabled = true;

  int upsample_stages() const {
    int s = scale, stages = 0;
    while (s > 1) {
      s /= 2;
      ++stages;
    }
    return stages;
  }

  void validate() const {
    if (num_rrdb < 1) throw ConfigError("generator: num_rrdb must be >= 1");
    if (trunk_channels < 1 || growth_channels < 1) {
      throw ConfigError("generator: channel counts must be >= 1");
    }
    if (scale < 2 || scale > 16 || (scale & (scale - 1)) != 0) {
      throw ConfigError("generator: scale must be a power of two in [2, 16]");
    }
  }

  bool same_architecture(const GeneratorConfig& o) const {
    return num_rrdb == o.num_rrdb && trunk_channels == o.trunk_channels &&
           growth_channels == o.growth_channels && scale == o.scale;
  }
};

enum class Mode { train, eval };

namespace detail {

/// Dense block: 5 convs, each seeing the concat of the block input and all
/// previous outputs; residual scaling 0.2.
template <typename T>
class DenseBlock {
 public:
  DenseBlock() = default;
  DenseBlock(const std::string& name, int channels, int growth) : channels_(channels), growth_(growth) {
    for (int i = 0; i < 5; ++i) {
      const int in_ch = channels + i * growth;
      const int out_ch = i == 4 ? channels : growth;
      convs_.emplace_back(name + ".conv" + std::to_string(i + 1), in_ch, out_ch, 3, 1, 1, true);
    }
  }

  void init(Rng& rng, double slope, double scale) {
    for (auto& c : convs_) c.init(rng, slope, scale);
  }

  Tensor<T> forward(const Tensor<T>& x) {
    cat_ = x;
    for (int i = 0; i < 4; ++i) {
      Tensor<T> y = acts_[i].forward(convs_[i].forward(cat_));
      cat_ = concat_channels(cat_, y);
    }
    Tensor<T> y5 = convs_[4].forward(cat_);
    Tensor<T> out = x;
    for (std::int64_t i = 0; i < out.numel(); ++i) out.data()[i] += T(0.2) * y5.data()[i];
    return out;
  }

  Tensor<T> backward(const Tensor<T>& dout) {
    Tensor<T> dy5 = dout;
    for (std::int64_t i = 0; i < dy5.numel(); ++i) dy5.data()[i] *= T(0.2);
    Tensor<T> dcat = convs_[4].backward(dy5);
    // Peel the concatenation apart from the last dense output down to x.
    for (int i = 3; i >= 0; --i) {
      const int keep = channels_ + i * growth_;
      Tensor<T> dy = slice_channels(dcat, keep, keep + growth_);
      Tensor<T> dprev = slice_channels(dcat, 0, keep);
      Tensor<T> dthrough = convs_[i].backward(acts_[i].backward(dy));
      for (std::int64_t j = 0; j < dprev.numel(); ++j) dprev.data()[j] += dthrough.data()[j];
      dcat = std::move(dprev);
    }
    // Residual path.
    for (std::int64_t j = 0; j < dcat.numel(); ++j) dcat.data()[j] += dout.data()[j];
    return dcat;
  }

  void collect(nn::ParamRefs<T>& out) {
    for (auto& c : convs_) c.collect(out);
  }

 private:
  int channels_ = 0, growth_ = 0;
  std::vector<nn::Conv2d<T>> convs_;
  nn::LeakyReLU<T> acts_[4];
  Tensor<T> cat_;
};

template <typename T>
class Rrdb {
 public:
  Rrdb() = default;
  Rrdb(const std::string& name, int channels, int growth)
      : db1_(name + ".db1", channels, growth),
        db2_(name + ".db2", channels, growth),
        db3_(name + ".db3", channels, growth) {}

  void init(Rng& rng, double slope, double scale) {
    db1_.init(rng, slope, scale);
    db2_.init(rng, slope, scale);
    db3_.init(rng, slope, scale);
  }

  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> z = db3_.forward(db2_.forward(db1_.forward(x)));
    Tensor<T> out = x;
    for (std::int64_t i = 0; i < out.numel(); ++i) out.data()[i] += T(0.2) * z.data()[i];
    return out;
  }

  Tensor<T> backward(const Tensor<T>& dout) {
    Tensor<T> dz = dout;
    for (std::int64_t i = 0; i < dz.numel(); ++i) dz.data()[i] *= T(0.2);
    Tensor<T> dx = db1_.backward(db2_.backward(db3_.backward(dz)));
    for (std::int64_t i = 0; i < dx.numel(); ++i) dx.data()[i] += dout.data()[i];
    return dx;
  }

  void collect(nn::ParamRefs<T>& out) {
    db1_.collect(out);
    db2_.collect(out);
    db3_.collect(out);
  }

 private:
  DenseBlock<T> db1_, db2_, db3_;
};

}  // namespace detail

template <typename T>
class Generator {
 public:
  explicit Generator(const GeneratorConfig& cfg, std::uint64_t init_seed = 0)
      : cfg_(cfg),
        conv_first_("g.conv_first", 3, cfg.trunk_channels, 3, 1, 1, true),
        conv_body_("g.conv_body", cfg.trunk_channels, cfg.trunk_channels, 3, 1, 1, true),
        conv_hr_("g.conv_hr", cfg.trunk_channels, cfg.trunk_channels, 3, 1, 1, true),
        conv_last_("g.conv_last", cfg.trunk_channels, 3, 3, 1, 1, true) {
    cfg.validate();
    for (int b = 0; b < cfg.num_rrdb; ++b) {
      const std::string base = "g.rrdb" + std::to_string(b);
      blocks_.emplace_back(base, cfg.trunk_channels, cfg.growth_channels);
      noise_.emplace_back(base, cfg.trunk_channels);
    }
    for (int s = 0; s < cfg.upsample_stages(); ++s) {
      up_convs_.emplace_back("g.up" + std::to_string(s), cfg.trunk_channels,
                             cfg.trunk_channels, 3, 1, 1, true);
      up_samplers_.emplace_back();
      up_acts_.emplace_back(0.2);
    }

    // MSRA init scaled by 0.1 everywhere, ESRGAN's convention.
    Rng rng = Rng::derive(init_seed, "generator_init");
    conv_first_.init(rng, 0.2, 0.1);
    for (auto& b : blocks_) b.init(rng, 0.2, 0.1);
    conv_body_.init(rng, 0.2, 0.1);
    for (auto& c : up_convs_) c.init(rng, 0.2, 0.1);
    conv_hr_.init(rng, 0.2, 0.1);
    conv_last_.init(rng, 0.2, 0.1);
  }

  const GeneratorConfig& config() const { return cfg_; }

  /// SR forward pass. In train mode with noise enabled, per-block Gaussian
  /// noise seeded by noise_seed is injected; eval mode ignores the seed
  /// entirely and is bit-deterministic.
  Tensor<T> forward(const Tensor<T>& lr, Mode mode, std::uint64_t noise_seed = 0) {
    if (lr.channels() != 3) throw std::invalid_argument("Generator: input must have 3 channels");
    if (lr.height() < 8 || lr.width() < 8) {
      throw std::invalid_argument("Generator: input smaller than 8x8");
    }
    noise_active_ = (mode == Mode::train) && cfg_.noise_enabled;
    Rng rng = Rng::derive(noise_seed, "gen_noise");

    Tensor<T> fea = conv_first_.forward(lr);
    Tensor<T> x = fea;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      x = blocks_[b].forward(x);
      if (noise_active_) x = noise_[b].forward(x, rng);
    }
    Tensor<T> body = conv_body_.forward(x);
    Tensor<T> trunk = fea;
    for (std::int64_t i = 0; i < trunk.numel(); ++i) trunk.data()[i] += body.data()[i];

    Tensor<T> u = trunk;
    for (std::size_t s = 0; s < up_convs_.size(); ++s) {
      u = up_acts_[s].forward(up_convs_[s].forward(up_samplers_[s].forward(u)));
    }
    Tensor<T> out = conv_last_.forward(act_hr_.forward(conv_hr_.forward(u)));
    if (!out.all_finite()) {
      throw DivergenceError("Generator: non-finite activations in forward pass");
    }
    return out;
  }

  /// Backpropagates d(loss)/d(output), accumulating parameter gradients
  /// (including noise scales when the last forward injected noise).
  /// Returns d(loss)/d(input).
  Tensor<T> backward(const Tensor<T>& dout) {
    Tensor<T> d = conv_hr_.backward(act_hr_.backward(conv_last_.backward(dout)));
    for (std::size_t s = up_convs_.size(); s-- > 0;) {
      d = up_samplers_[s].backward(up_convs_[s].backward(up_acts_[s].backward(d)));
    }
    // d now sits at the trunk sum: fea + conv_body(body_out).
    Tensor<T> dfea = d;
    Tensor<T> dx = conv_body_.backward(d);
    for (std::size_t b = blocks_.size(); b-- > 0;) {
      if (noise_active_) dx = noise_[b].backward(dx);
      dx = blocks_[b].backward(dx);
    }
    for (std::int64_t i = 0; i < dfea.numel(); ++i) dfea.data()[i] += dx.data()[i];
    return conv_first_.backward(dfea);
  }

  nn::ParamRefs<T> params() {
    nn::ParamRefs<T> out;
    conv_first_.collect(out);
    for (auto& b : blocks_) b.collect(out);
    for (auto& nz : noise_) nz.collect(out);
    conv_body_.collect(out);
    for (auto& c : up_convs_) c.collect(out);
    conv_hr_.collect(out);
    conv_last_.collect(out);
    return out;
  }

  std::vector<nn::NoiseInjection<T>>& noise_layers() { return noise_; }
  const std::vector<nn::NoiseInjection<T>>& noise_layers() const { return noise_; }

 private:
  GeneratorConfig cfg_;
  nn::Conv2d<T> conv_first_, conv_body_, conv_hr_, conv_last_;
  std::vector<detail::Rrdb<T>> blocks_;
  std::vector<nn::NoiseInjection<T>> noise_;
  std::vector<nn::Conv2d<T>> up_convs_;
  std::vector<nn::UpsampleNearest2x<T>> up_samplers_;
  std::vector<nn::LeakyReLU<T>> up_acts_;
  nn::LeakyReLU<T> act_hr_{0.2};
  bool noise_active_ = false;
};

/// Five-number summary of |noise scale| for one block.
struct NoiseScaleSummary {
  int block_index = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

namespace detail {
inline double quantile_sorted(const std::vector<double>& v, double p) {
  if (v.size() == 1) return v[0];
  const double pos = p * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}
}  // namespace detail

/// Per-block spread of |scale|, the raw material for a depth-vs-magnitude
/// boxplot. Quartiles use linear interpolation.
template <typename T>
std::vector<NoiseScaleSummary> noise_scale_stats(const Generator<T>& gen) {
  std::vector<NoiseScaleSummary> out;
  int index = 0;
  for (const auto& layer : gen.noise_layers()) {
    std::vector<double> mags;
    mags.reserve(layer.scales().value.size());
    for (T s : layer.scales().value) mags.push_back(std::abs(static_cast<double>(s)));
    std::sort(mags.begin(), mags.end());
    NoiseScaleSummary s;
    s.block_index = index++;
    s.min = mags.front();
    s.q1 = detail::quantile_sorted(mags, 0.25);
    s.median = detail::quantile_sorted(mags, 0.5);
    s.q3 = detail::quantile_sorted(mags, 0.75);
    s.max = mags.back();
    out.push_back(s);
  }
  return out;
}

}  // namespace manysr
