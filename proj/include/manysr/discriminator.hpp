// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0
//
// VGG-style relativistic discriminator, optionally conditioned on the LR
// image: the LR input is bicubic-upsampled to HR size and concatenated onto
// the candidate, giving a 6-channel input. Body is the ESRGAN discriminator
// pattern (3x3 conv + 4x4 stride-2 conv per stage, batch norm everywhere
// except the entry conv, leaky ReLU 0.2), followed by a two-layer scoring
// head. Batch norm uses batch statistics; the discriminator only ever runs
// in training mode.

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "manysr/errors.hpp"
#include "manysr/nn.hpp"
#include "manysr/resize.hpp"
#include "manysr/tensor.hpp"

namespace manysr {

struct DiscriminatorConfig {
  int base_channels = 64;
  int input_channels = 6;  // 3 disables LR conditioning (ablation)
  int input_size = 128;

  int downsample_stages() const {
    int stages = 0;
    while ((input_size >> (stages + 1)) >= 4) ++stages;
    return stages;
  }

  void validate() const {
    if (base_channels < 1) throw ConfigError("discriminator: base_channels must be >= 1");
    if (input_channels != 3 && input_channels != 6) {
      throw ConfigError("discriminator: input_channels must be 3 or 6");
    }
    if (input_size < 4) throw ConfigError("discriminator: input_size must be >= 4");
    if (input_size % (1 << downsample_stages()) != 0) {
      throw ConfigError("discriminator: input_size must be divisible by 2^stages");
    }
  }

  bool same_architecture(const DiscriminatorConfig& o) const {
    return base_channels == o.base_channels && input_channels == o.input_channels &&
           input_size == o.input_size;
  }
};

/// Concatenates the HR-sized candidate (channels 0-2) with the
/// bicubic-upsampled LR reference (channels 3-5). The candidate dimensions
/// must be an integer multiple of the LR dimensions.
template <typename T>
Tensor<T> assemble_input(const Tensor<T>& candidate, const Tensor<T>& lr) {
  if (candidate.channels() != 3 || lr.channels() != 3) {
    throw std::invalid_argument("assemble_input: both inputs need 3 channels");
  }
  if (candidate.batch() != lr.batch()) {
    throw std::invalid_argument("assemble_input: batch mismatch");
  }
  if (candidate.height() % lr.height() != 0 || candidate.width() % lr.width() != 0 ||
      candidate.height() / lr.height() != candidate.width() / lr.width()) {
    throw std::invalid_argument("assemble_input: candidate dims must be scale * lr dims");
  }
  const int scale = candidate.height() / lr.height();
  Tensor<T> reference =
      scale == 1 ? lr : bicubic_resize(lr, static_cast<double>(scale), true);
  return concat_channels(candidate, reference);
}

template <typename T>
class Discriminator {
 public:
  explicit Discriminator(const DiscriminatorConfig& cfg, std::uint64_t init_seed = 0) : cfg_(cfg) {
    cfg.validate();
    const int stages = cfg.downsample_stages();
    int ch = cfg.base_channels;
    convs_.emplace_back("d.conv0_0", cfg.input_channels, ch, 3, 1, 1, true);
    has_bn_.push_back(false);
    for (int i = 0; i < stages; ++i) {
      const int mult = i < 3 ? (1 << i) : 8;
      const int out_ch = cfg.base_channels * mult;
      if (i > 0) {
        convs_.emplace_back("d.conv" + std::to_string(i) + "_0", ch, out_ch, 3, 1, 1, false);
        has_bn_.push_back(true);
        bns_.emplace_back("d.bn" + std::to_string(i) + "_0", out_ch);
      }
      convs_.emplace_back("d.conv" + std::to_string(i) + "_1", i > 0 ? out_ch : ch, out_ch,
                          4, 2, 1, false);
      has_bn_.push_back(true);
      bns_.emplace_back("d.bn" + std::to_string(i) + "_1", out_ch);
      ch = out_ch;
    }
    acts_.assign(convs_.size(), nn::LeakyReLU<T>(0.2));

    final_spatial_ = cfg.input_size >> stages;
    fc1_ = nn::Linear<T>("d.fc1", final_spatial_ * final_spatial_ * ch, 100);
    fc2_ = nn::Linear<T>("d.fc2", 100, 1);

    Rng rng = Rng::derive(init_seed, "discriminator_init");
    for (auto& c : convs_) c.init(rng, 0.2, 1.0);
    fc1_.init(rng, 0.2);
    fc2_.init(rng, 1.0);
  }

  const DiscriminatorConfig& config() const { return cfg_; }

  /// One finite logit per batch element.
  std::vector<T> forward(const Tensor<T>& x) {
    if (x.channels() != cfg_.input_channels || x.height() != cfg_.input_size ||
        x.width() != cfg_.input_size) {
      throw std::invalid_argument("Discriminator: input shape mismatch");
    }
    Tensor<T> h = x;
    std::size_t bn = 0;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      h = convs_[i].forward(h);
      if (has_bn_[i]) h = bns_[bn++].forward(h);
      h = acts_[i].forward(h);
    }
    h = fc2_.forward(fc_act_.forward(fc1_.forward(h)));
    std::vector<T> logits(h.data(), h.data() + h.numel());
    for (T v : logits) {
      if (!std::isfinite(static_cast<double>(v))) {
        throw DivergenceError("Discriminator: non-finite logit");
      }
    }
    return logits;
  }

  /// Accumulates parameter gradients; returns gradient w.r.t. the input.
  Tensor<T> backward(std::span<const T> dlogits) {
    Tensor<T> d(static_cast<int>(dlogits.size()), 1, 1, 1);
    std::copy(dlogits.begin(), dlogits.end(), d.data());
    d = fc1_.backward(fc_act_.backward(fc2_.backward(d)));
    std::size_t bn = bns_.size();
    for (std::size_t i = convs_.size(); i-- > 0;) {
      d = acts_[i].backward(d);
      if (has_bn_[i]) d = bns_[--bn].backward(d);
      d = convs_[i].backward(d);
    }
    return d;
  }

  nn::ParamRefs<T> params() {
    nn::ParamRefs<T> out;
    std::size_t bn = 0;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      convs_[i].collect(out);
      if (has_bn_[i]) bns_[bn++].collect(out);
    }
    fc1_.collect(out);
    fc2_.collect(out);
    return out;
  }

 private:
  DiscriminatorConfig cfg_;
  std::vector<nn::Conv2d<T>> convs_;
  std::vector<bool> has_bn_;
  std::vector<nn::BatchNorm2d<T>> bns_;
  std::vector<nn::LeakyReLU<T>> acts_;
  nn::Linear<T> fc1_, fc2_;
  nn::LeakyReLU<T> fc_act_{0.2};
  int final_spatial_ = 0;
};

}  // namespace manysr
