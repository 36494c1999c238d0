// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0
//
// Training objectives: strict L1 content loss, cycle-consistency content
// loss (L1 between the input LR and the bicubic-downsampled SR output),
// perceptual loss over frozen features, relativistic average GAN losses,
// and the weighted composite. Every loss comes with an analytic gradient
// used by the trainer and verified against finite differences in tests.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "manysr/archive.hpp"
#include "manysr/errors.hpp"
#include "manysr/nn.hpp"
#include "manysr/resize.hpp"
#include "manysr/rng.hpp"
#include "manysr/tensor.hpp"

namespace manysr {

enum class ContentMode { strict_l1, cycle, none };
enum class PerceptualMode { pretrained_features, fixed_random_features, off };

inline const char* to_string(ContentMode m) {
  switch (m) {
    case ContentMode::strict_l1: return "strict_l1";
    case ContentMode::cycle: return "cycle";
    case ContentMode::none: return "none";
  }
  return "?";
}
inline const char* to_string(PerceptualMode m) {
  switch (m) {
    case PerceptualMode::pretrained_features: return "pretrained";
    case PerceptualMode::fixed_random_features: return "random";
    case PerceptualMode::off: return "off";
  }
  return "?";
}

/// Per-term weights of the composite generator objective
///   total = w_content * content + lambda_gan * gan + w_percep * percep.
/// The two published presets disagree on where the large coefficient sits,
/// so every term is explicit and presets pick the combination.
struct LossWeights {
  double w_content = 1.0;
  double lambda_gan = 5e-3;
  double w_percep = 10.0;
  ContentMode content_mode = ContentMode::cycle;
  PerceptualMode perceptual_mode = PerceptualMode::pretrained_features;

  // PIRM-style strict-L1 objective: content (L1) at 10, perceptual at 1.
  static LossWeights eq1_pirm() {
    return {10.0, 5e-3, 1.0, ContentMode::strict_l1, PerceptualMode::pretrained_features};
  }
  // Released-model variant of the same objective with L1 at 1e-2.
  static LossWeights eq1_released() {
    return {1e-2, 5e-3, 1.0, ContentMode::strict_l1, PerceptualMode::pretrained_features};
  }
  // Cycle-consistency objective: cycle at 1, perceptual at 10.
  static LossWeights eq3() {
    return {1.0, 5e-3, 10.0, ContentMode::cycle, PerceptualMode::pretrained_features};
  }

  void validate() const {
    if (w_content < 0 || lambda_gan < 0 || w_percep < 0) {
      throw ConfigError("loss weights must be non-negative");
    }
  }
};

// ---------------------------------------------------------------------------
// L1 / cycle
// ---------------------------------------------------------------------------

template <typename T>
T l1_loss(const Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("l1_loss: shape mismatch");
  double acc = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    acc += std::abs(static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i]));
  }
  return static_cast<T>(acc / static_cast<double>(a.numel()));
}

/// Also writes d(loss)/d(a) into *da when non-null.
template <typename T>
T l1_loss_grad(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>* da) {
  if (!a.same_shape(b)) throw std::invalid_argument("l1_loss: shape mismatch");
  if (da) *da = Tensor<T>(a.batch(), a.height(), a.width(), a.channels());
  const double inv_n = 1.0 / static_cast<double>(a.numel());
  double acc = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i]);
    acc += std::abs(d);
    if (da) da->data()[i] = static_cast<T>((d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0)) * inv_n);
  }
  return static_cast<T>(acc * inv_n);
}

/// ||f(sr) - lr||_1 with f the fixed bicubic downsampler. Differentiable
/// through f via its adjoint.
template <typename T>
T cycle_loss(const Tensor<T>& sr, const Tensor<T>& lr, const BicubicOp<T>& f) {
  Tensor<T> down = f.apply(sr);
  if (!down.same_shape(lr)) throw std::invalid_argument("cycle_loss: f(sr) shape != lr shape");
  return l1_loss(down, lr);
}

template <typename T>
T cycle_loss_grad(const Tensor<T>& sr, const Tensor<T>& lr, const BicubicOp<T>& f,
                  Tensor<T>* dsr) {
  Tensor<T> down = f.apply(sr);
  if (!down.same_shape(lr)) throw std::invalid_argument("cycle_loss: f(sr) shape != lr shape");
  Tensor<T> dd;
  const T value = l1_loss_grad(down, lr, &dd);
  if (dsr) *dsr = f.adjoint(dd);
  return value;
}

// ---------------------------------------------------------------------------
// Perceptual loss over a frozen feature stack
// ---------------------------------------------------------------------------

/// Frozen convolutional feature extractor. Two weight sources:
///  - fixed_random: a seeded 5-conv stack, hermetic (no downloads);
///  - vgg19_pretrained: VGG-19 features tapped at conv5_4 pre-activation,
///    weights loaded from an archive file (BackendError when missing).
/// Weights never receive gradients; backward() only propagates to the input.
template <typename T>
class FeatureExtractor {
 public:
  static FeatureExtractor fixed_random(std::uint64_t seed) {
    FeatureExtractor fx;
    fx.normalize_ = false;
    const int chans[5][2] = {{3, 16}, {16, 32}, {32, 32}, {32, 32}, {32, 32}};
    Rng rng = Rng::derive(seed, "feature_extractor");
    for (int i = 0; i < 5; ++i) {
      fx.convs_.emplace_back("fx.conv" + std::to_string(i), chans[i][0], chans[i][1], 3, 1, 1, true);
      fx.convs_.back().init(rng, 0.2, 1.0);
    }
    // conv lrelu pool conv lrelu pool conv lrelu conv lrelu conv(tap)
    fx.steps_ = {{Step::conv, 0}, {Step::act, 0}, {Step::pool, 0},
                 {Step::conv, 1}, {Step::act, 1}, {Step::pool, 1},
                 {Step::conv, 2}, {Step::act, 2},
                 {Step::conv, 3}, {Step::act, 3},
                 {Step::conv, 4}};
    fx.acts_.assign(4, nn::LeakyReLU<T>(0.2));
    fx.pools_.assign(2, nn::MaxPool2x2<T>());
    return fx;
  }

  /// VGG-19 feature path tapped at conv5_4 pre-activation, ImageNet input
  /// normalization. The archive must hold vgg19.conv01..conv16 weight/bias
  /// tensors (weight layout [3,3,in,out]).
  static FeatureExtractor vgg19_pretrained(const std::filesystem::path& weights_file) {
    namespace fs = std::filesystem;
    if (!fs::is_regular_file(weights_file)) {
      throw BackendError("pretrained feature weights not found: " + weights_file.string() +
                         " (set loss.perceptual_mode=random for the hermetic extractor)");
    }
    std::vector<NamedTensor<T>> tensors;
    try {
      tensors = read_archive<T>(weights_file);
    } catch (const DataError& e) {
      throw BackendError(std::string("cannot load pretrained feature weights: ") + e.what());
    }
    auto find = [&](const std::string& name) -> NamedTensor<T>& {
      for (auto& t : tensors) {
        if (t.name == name) return t;
      }
      throw BackendError("pretrained feature archive missing tensor " + name);
    };

    static constexpr int kChannels[17] = {3, 64, 64, 128, 128, 256, 256, 256, 256,
                                          512, 512, 512, 512, 512, 512, 512, 512};
    FeatureExtractor fx;
    fx.normalize_ = true;
    for (int i = 0; i < 16; ++i) {
      const int in_ch = kChannels[i], out_ch = kChannels[i + 1];
      char id[8];
      std::snprintf(id, sizeof(id), "%02d", i + 1);
      fx.convs_.emplace_back("vgg19.conv" + std::string(id), in_ch, out_ch, 3, 1, 1, true);
      auto& w = find("vgg19.conv" + std::string(id) + ".weight");
      auto& b = find("vgg19.conv" + std::string(id) + ".bias");
      if (w.data.size() != fx.convs_.back().weight().value.size() ||
          b.data.size() != fx.convs_.back().bias().value.size()) {
        throw BackendError("pretrained feature archive has wrong shape for conv" + std::string(id));
      }
      fx.convs_.back().weight().value = w.data;
      fx.convs_.back().bias().value = b.data;
    }
    fx.acts_.assign(15, nn::LeakyReLU<T>(0.0));  // plain ReLU
    fx.pools_.assign(4, nn::MaxPool2x2<T>());
    int act = 0, pool = 0;
    for (int i = 0; i < 16; ++i) {
      fx.steps_.push_back({Step::conv, i});
      if (i < 15) fx.steps_.push_back({Step::act, act++});
      if (i == 1 || i == 3 || i == 7 || i == 11) fx.steps_.push_back({Step::pool, pool++});
    }
    return fx;
  }

  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> h = x;
    if (normalize_) h = normalize_forward(h);
    for (const Step& s : steps_) {
      switch (s.kind) {
        case Step::conv: h = convs_[s.index].forward(h); break;
        case Step::act: h = acts_[s.index].forward(h); break;
        case Step::pool: h = pools_[s.index].forward(h); break;
      }
    }
    return h;
  }

  Tensor<T> backward(const Tensor<T>& dfeat) {
    Tensor<T> d = dfeat;
    for (std::size_t i = steps_.size(); i-- > 0;) {
      const Step& s = steps_[i];
      switch (s.kind) {
        case Step::conv: d = convs_[s.index].backward(d); break;
        case Step::act: d = acts_[s.index].backward(d); break;
        case Step::pool: d = pools_[s.index].backward(d); break;
      }
    }
    if (normalize_) d = normalize_backward(d);
    return d;
  }

  struct Step {
    enum Kind { conv, act, pool } kind;
    int index;
  };

  // Internal, used by the pretrained loader.
  std::vector<nn::Conv2d<T>>& convs() { return convs_; }
  std::vector<nn::LeakyReLU<T>>& acts() { return acts_; }
  std::vector<nn::MaxPool2x2<T>>& pools() { return pools_; }
  std::vector<Step>& steps() { return steps_; }
  void set_imagenet_normalization(bool on) { normalize_ = on; }

 private:
  Tensor<T> normalize_forward(const Tensor<T>& x) {
    if (x.channels() != 3) throw std::invalid_argument("FeatureExtractor: need RGB input");
    Tensor<T> out = x;
    for (std::int64_t i = 0; i < out.numel(); ++i) {
      const int c = static_cast<int>(i % 3);
      out.data()[i] = static_cast<T>((static_cast<double>(out.data()[i]) - kMean[c]) / kStd[c]);
    }
    return out;
  }
  Tensor<T> normalize_backward(const Tensor<T>& d) {
    Tensor<T> out = d;
    for (std::int64_t i = 0; i < out.numel(); ++i) {
      out.data()[i] = static_cast<T>(static_cast<double>(out.data()[i]) / kStd[i % 3]);
    }
    return out;
  }

  static constexpr double kMean[3] = {0.485, 0.456, 0.406};
  static constexpr double kStd[3] = {0.229, 0.224, 0.225};

  std::vector<nn::Conv2d<T>> convs_;
  std::vector<nn::LeakyReLU<T>> acts_;
  std::vector<nn::MaxPool2x2<T>> pools_;
  std::vector<Step> steps_;
  bool normalize_ = false;
};

template <typename T>
T perceptual_loss(const Tensor<T>& sr, const Tensor<T>& hr, FeatureExtractor<T>& fx) {
  if (!sr.same_shape(hr)) throw std::invalid_argument("perceptual_loss: shape mismatch");
  Tensor<T> fb = fx.forward(hr);
  Tensor<T> fa = fx.forward(sr);
  return l1_loss(fa, fb);
}

template <typename T>
T perceptual_loss_grad(const Tensor<T>& sr, const Tensor<T>& hr, FeatureExtractor<T>& fx,
                       Tensor<T>* dsr) {
  if (!sr.same_shape(hr)) throw std::invalid_argument("perceptual_loss: shape mismatch");
  Tensor<T> fb = fx.forward(hr);
  Tensor<T> fa = fx.forward(sr);  // last forward: caches belong to sr
  Tensor<T> dfa;
  const T value = l1_loss_grad(fa, fb, &dfa);
  if (dsr) *dsr = fx.backward(dfa);
  return value;
}

// ---------------------------------------------------------------------------
// Relativistic average GAN losses
// ---------------------------------------------------------------------------

namespace detail {
inline double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

template <typename T>
void check_logits(std::span<const T> v, const char* who) {
  if (v.empty()) throw std::invalid_argument(std::string(who) + ": empty logit vector");
  for (T x : v) {
    if (!std::isfinite(static_cast<double>(x))) {
      throw DivergenceError(std::string(who) + ": non-finite logit");
    }
  }
}
template <typename T>
double mean_of(std::span<const T> v) {
  double s = 0.0;
  for (T x : v) s += static_cast<double>(x);
  return s / static_cast<double>(v.size());
}
}  // namespace detail

/// D objective: real scored against the average fake and vice versa,
/// binary cross entropy on the shifted logits. Equal constant logits give
/// 2 ln 2.
template <typename T>
T ragan_d_loss(std::span<const T> real_logits, std::span<const T> fake_logits) {
  detail::check_logits(real_logits, "ragan_d_loss");
  detail::check_logits(fake_logits, "ragan_d_loss");
  const double mr = detail::mean_of(real_logits);
  const double mf = detail::mean_of(fake_logits);
  double acc = 0.0;
  for (T r : real_logits) acc += detail::softplus(-(static_cast<double>(r) - mf)) / real_logits.size();
  for (T f : fake_logits) acc += detail::softplus(static_cast<double>(f) - mr) / fake_logits.size();
  return static_cast<T>(acc);
}

/// G objective: reversed labels of the D objective.
template <typename T>
T ragan_g_loss(std::span<const T> real_logits, std::span<const T> fake_logits) {
  detail::check_logits(real_logits, "ragan_g_loss");
  detail::check_logits(fake_logits, "ragan_g_loss");
  const double mr = detail::mean_of(real_logits);
  const double mf = detail::mean_of(fake_logits);
  double acc = 0.0;
  for (T r : real_logits) acc += detail::softplus(static_cast<double>(r) - mf) / real_logits.size();
  for (T f : fake_logits) acc += detail::softplus(-(static_cast<double>(f) - mr)) / fake_logits.size();
  return static_cast<T>(acc);
}

template <typename T>
T ragan_d_loss_grad(std::span<const T> real_logits, std::span<const T> fake_logits,
                    std::vector<T>* dreal, std::vector<T>* dfake) {
  const T value = ragan_d_loss(real_logits, fake_logits);
  const double mr = detail::mean_of(real_logits);
  const double mf = detail::mean_of(fake_logits);
  const double r_n = static_cast<double>(real_logits.size());
  const double f_n = static_cast<double>(fake_logits.size());
  double mean_sig_fake = 0.0;  // mean_j sigmoid(f_j - mr)
  for (T f : fake_logits) mean_sig_fake += detail::sigmoid(static_cast<double>(f) - mr) / f_n;
  double mean_sig_real = 0.0;  // mean_i sigmoid(mf - r_i)
  for (T r : real_logits) mean_sig_real += detail::sigmoid(mf - static_cast<double>(r)) / r_n;
  if (dreal) {
    dreal->resize(real_logits.size());
    for (std::size_t i = 0; i < real_logits.size(); ++i) {
      (*dreal)[i] = static_cast<T>(
          -(detail::sigmoid(mf - static_cast<double>(real_logits[i])) + mean_sig_fake) / r_n);
    }
  }
  if (dfake) {
    dfake->resize(fake_logits.size());
    for (std::size_t j = 0; j < fake_logits.size(); ++j) {
      (*dfake)[j] = static_cast<T>(
          (detail::sigmoid(static_cast<double>(fake_logits[j]) - mr) + mean_sig_real) / f_n);
    }
  }
  return value;
}

template <typename T>
T ragan_g_loss_grad(std::span<const T> real_logits, std::span<const T> fake_logits,
                    std::vector<T>* dreal, std::vector<T>* dfake) {
  const T value = ragan_g_loss(real_logits, fake_logits);
  const double mr = detail::mean_of(real_logits);
  const double mf = detail::mean_of(fake_logits);
  const double r_n = static_cast<double>(real_logits.size());
  const double f_n = static_cast<double>(fake_logits.size());
  double mean_sig_real = 0.0;  // mean_i sigmoid(r_i - mf)
  for (T r : real_logits) mean_sig_real += detail::sigmoid(static_cast<double>(r) - mf) / r_n;
  double mean_sig_fake = 0.0;  // mean_j sigmoid(mr - f_j)
  for (T f : fake_logits) mean_sig_fake += detail::sigmoid(mr - static_cast<double>(f)) / f_n;
  if (dreal) {
    dreal->resize(real_logits.size());
    for (std::size_t i = 0; i < real_logits.size(); ++i) {
      (*dreal)[i] = static_cast<T>(
          (detail::sigmoid(static_cast<double>(real_logits[i]) - mf) + mean_sig_fake) / r_n);
    }
  }
  if (dfake) {
    dfake->resize(fake_logits.size());
    for (std::size_t j = 0; j < fake_logits.size(); ++j) {
      (*dfake)[j] = static_cast<T>(
          -(detail::sigmoid(mr - static_cast<double>(fake_logits[j])) + mean_sig_real) / f_n);
    }
  }
  return value;
}

// ---------------------------------------------------------------------------
// Composite
// ---------------------------------------------------------------------------

/// total = w_content * content + lambda_gan * gan + w_percep * percep.
template <typename T>
T total_generator_loss(const LossWeights& weights, T content, T gan, T percep) {
  if (weights.w_content < 0 || weights.lambda_gan < 0 || weights.w_percep < 0) {
    throw std::invalid_argument("total_generator_loss: negative weights");
  }
  return static_cast<T>(weights.w_content * static_cast<double>(content) +
                        weights.lambda_gan * static_cast<double>(gan) +
                        weights.w_percep * static_cast<double>(percep));
}

}  // namespace manysr
