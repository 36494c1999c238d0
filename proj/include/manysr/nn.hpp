// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal NHWC layer zoo with explicit backward passes: im2col+GEMM
// convolutions, batch norm (batch statistics), leaky ReLU, nearest
// upsampling, max pooling, fully connected, per-channel noise injection,
// and Adam. Layers cache what their backward needs; one forward per
// backward.

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "manysr/rng.hpp"
#include "manysr/tensor.hpp"

namespace manysr::nn {

template <typename T>
using MatrixRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Named learnable tensor with its gradient accumulator.
template <typename T>
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;

  Param() = default;
  Param(std::string n, std::vector<int> s) : name(std::move(n)), shape(std::move(s)) {
    std::int64_t count = 1;
    for (int d : shape) count *= d;
    value.assign(static_cast<std::size_t>(count), T(0));
    grad.assign(static_cast<std::size_t>(count), T(0));
  }
  std::int64_t numel() const { return static_cast<std::int64_t>(value.size()); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

template <typename T>
using ParamRefs = std::vector<Param<T>*>;

template <typename T>
void zero_grads(const ParamRefs<T>& params) {
  for (auto* p : params) p->zero_grad();
}

template <typename T>
double global_grad_norm(const ParamRefs<T>& params) {
  double sq = 0.0;
  for (auto* p : params)
    for (T g : p->grad) sq += static_cast<double>(g) * static_cast<double>(g);
  return std::sqrt(sq);
}

/// Scales all gradients so the global norm is at most max_norm.
template <typename T>
void clip_grad_norm(const ParamRefs<T>& params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (norm <= max_norm || norm == 0.0) return;
  const T s = static_cast<T>(max_norm / norm);
  for (auto* p : params)
    for (T& g : p->grad) g *= s;
}

inline int conv_out_size(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

/// Gain for Kaiming init under leaky ReLU activations.
inline double kaiming_gain(double negative_slope) {
  return std::sqrt(2.0 / (1.0 + negative_slope * negative_slope));
}

template <typename T>
void kaiming_normal_(Param<T>& p, Rng& rng, int fan_in, double gain, double extra_scale = 1.0) {
  const double stddev = gain / std::sqrt(static_cast<double>(fan_in)) * extra_scale;
  for (T& v : p.value) v = static_cast<T>(rng.normal() * stddev);
}

// ---------------------------------------------------------------------------
// Conv2d
// ---------------------------------------------------------------------------

template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, int in_ch, int out_ch, int ksize, int stride, int pad, bool bias)
      : in_ch_(in_ch), out_ch_(out_ch), k_(ksize), stride_(stride), pad_(pad), has_bias_(bias),
        weight_(name + ".weight", {ksize, ksize, in_ch, out_ch}) {
    if (bias) bias_ = Param<T>(name + ".bias", {out_ch});
  }

  void init(Rng& rng, double negative_slope, double extra_scale) {
    kaiming_normal_(weight_, rng, k_ * k_ * in_ch_, kaiming_gain(negative_slope), extra_scale);
    if (has_bias_) std::fill(bias_.value.begin(), bias_.value.end(), T(0));
  }

  Tensor<T> forward(const Tensor<T>& x) {
    if (x.channels() != in_ch_) throw std::invalid_argument("Conv2d: channel mismatch");
    input_ = x;
    const int ho = conv_out_size(x.height(), k_, stride_, pad_);
    const int wo = conv_out_size(x.width(), k_, stride_, pad_);
    if (ho < 1 || wo < 1) throw std::invalid_argument("Conv2d: input too small");

    MatrixRM<T> col = im2col(x, ho, wo);
    Eigen::Map<const MatrixRM<T>> wmat(weight_.value.data(), k_ * k_ * in_ch_, out_ch_);

    Tensor<T> out(x.batch(), ho, wo, out_ch_);
    Eigen::Map<MatrixRM<T>> omat(out.data(), col.rows(), out_ch_);
    omat.noalias() = col * wmat;
    if (has_bias_) {
      Eigen::Map<const Eigen::RowVector<T, Eigen::Dynamic>> b(bias_.value.data(), out_ch_);
      omat.rowwise() += b;
    }
    return out;
  }

  /// Accumulates weight/bias grads; returns gradient w.r.t. the input.
  Tensor<T> backward(const Tensor<T>& dy) {
    const int ho = dy.height(), wo = dy.width();
    const Eigen::Index rows = static_cast<Eigen::Index>(dy.batch()) * ho * wo;
    Eigen::Map<const MatrixRM<T>> gmat(dy.data(), rows, out_ch_);

    MatrixRM<T> col = im2col(input_, ho, wo);
    Eigen::Map<MatrixRM<T>> dwmat(weight_.grad.data(), k_ * k_ * in_ch_, out_ch_);
    dwmat.noalias() += col.transpose() * gmat;
    if (has_bias_) {
      // fixed-order accumulation: Eigen's column reductions reassociate
      // depending on buffer alignment, which breaks bit-determinism
      const T* g = dy.data();
      for (std::int64_t i = 0; i < dy.numel(); ++i) {
        bias_.grad[static_cast<std::size_t>(i % out_ch_)] += g[i];
      }
    }

    Eigen::Map<const MatrixRM<T>> wmat(weight_.value.data(), k_ * k_ * in_ch_, out_ch_);
    MatrixRM<T> dcol(rows, k_ * k_ * in_ch_);
    dcol.noalias() = gmat * wmat.transpose();
    return col2im(dcol, ho, wo);
  }

  void collect(ParamRefs<T>& out) {
    out.push_back(&weight_);
    if (has_bias_) out.push_back(&bias_);
  }

  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }
  int out_channels() const { return out_ch_; }

 private:
  MatrixRM<T> im2col(const Tensor<T>& x, int ho, int wo) const {
    const int n = x.batch(), hi = x.height(), wi = x.width(), c = in_ch_;
    MatrixRM<T> col(static_cast<Eigen::Index>(n) * ho * wo, k_ * k_ * c);
    col.setZero();
    for (int b = 0; b < n; ++b)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          T* row = col.row((static_cast<Eigen::Index>(b) * ho + oy) * wo + ox).data();
          for (int ky = 0; ky < k_; ++ky) {
            const int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= hi) continue;
            for (int kx = 0; kx < k_; ++kx) {
              const int ix = ox * stride_ - pad_ + kx;
              if (ix < 0 || ix >= wi) continue;
              const T* src = &x(b, iy, ix, 0);
              std::copy(src, src + c, row + (ky * k_ + kx) * c);
            }
          }
        }
    return col;
  }

  Tensor<T> col2im(const MatrixRM<T>& dcol, int ho, int wo) const {
    const int n = input_.batch(), hi = input_.height(), wi = input_.width(), c = in_ch_;
    Tensor<T> dx(n, hi, wi, c);
    for (int b = 0; b < n; ++b)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          const T* row = dcol.row((static_cast<Eigen::Index>(b) * ho + oy) * wo + ox).data();
          for (int ky = 0; ky < k_; ++ky) {
            const int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= hi) continue;
            for (int kx = 0; kx < k_; ++kx) {
              const int ix = ox * stride_ - pad_ + kx;
              if (ix < 0 || ix >= wi) continue;
              T* dst = &dx(b, iy, ix, 0);
              const T* s = row + (ky * k_ + kx) * c;
              for (int ci = 0; ci < c; ++ci) dst[ci] += s[ci];
            }
          }
        }
    return dx;
  }

  int in_ch_ = 0, out_ch_ = 0, k_ = 0, stride_ = 1, pad_ = 0;
  bool has_bias_ = true;
  Param<T> weight_, bias_;
  Tensor<T> input_;
};

// ---------------------------------------------------------------------------
// BatchNorm2d — batch statistics over (N, H, W), population variance.
// ---------------------------------------------------------------------------

template <typename T>
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  explicit BatchNorm2d(std::string name, int channels, double eps = 1e-5)
      : c_(channels), eps_(eps),
        gamma_(name + ".gamma", {channels}), beta_(name + ".beta", {channels}) {
    std::fill(gamma_.value.begin(), gamma_.value.end(), T(1));
  }

  Tensor<T> forward(const Tensor<T>& x) {
    if (x.channels() != c_) throw std::invalid_argument("BatchNorm2d: channel mismatch");
    const std::int64_t m = static_cast<std::int64_t>(x.batch()) * x.height() * x.width();
    m_ = m;
    mean_.assign(c_, 0.0);
    invstd_.assign(c_, 0.0);

    const std::int64_t total = x.numel();
    const T* src = x.data();
    for (std::int64_t i = 0; i < total; ++i) mean_[i % c_] += static_cast<double>(src[i]);
    for (int c = 0; c < c_; ++c) mean_[c] /= static_cast<double>(m);
    std::vector<double> var(c_, 0.0);
    for (std::int64_t i = 0; i < total; ++i) {
      const double d = static_cast<double>(src[i]) - mean_[i % c_];
      var[i % c_] += d * d;
    }
    for (int c = 0; c < c_; ++c) invstd_[c] = 1.0 / std::sqrt(var[c] / static_cast<double>(m) + eps_);

    xhat_ = Tensor<T>(x.batch(), x.height(), x.width(), c_);
    Tensor<T> out(x.batch(), x.height(), x.width(), c_);
    for (std::int64_t i = 0; i < total; ++i) {
      const int c = static_cast<int>(i % c_);
      const double xh = (static_cast<double>(src[i]) - mean_[c]) * invstd_[c];
      xhat_.data()[i] = static_cast<T>(xh);
      out.data()[i] = static_cast<T>(static_cast<double>(gamma_.value[c]) * xh +
                                     static_cast<double>(beta_.value[c]));
    }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const std::int64_t total = dy.numel();
    std::vector<double> sum_dy(c_, 0.0), sum_dy_xhat(c_, 0.0);
    for (std::int64_t i = 0; i < total; ++i) {
      const int c = static_cast<int>(i % c_);
      const double g = static_cast<double>(dy.data()[i]);
      sum_dy[c] += g;
      sum_dy_xhat[c] += g * static_cast<double>(xhat_.data()[i]);
    }
    for (int c = 0; c < c_; ++c) {
      gamma_.grad[c] += static_cast<T>(sum_dy_xhat[c]);
      beta_.grad[c] += static_cast<T>(sum_dy[c]);
    }
    Tensor<T> dx(dy.batch(), dy.height(), dy.width(), c_);
    const double inv_m = 1.0 / static_cast<double>(m_);
    for (std::int64_t i = 0; i < total; ++i) {
      const int c = static_cast<int>(i % c_);
      const double g = static_cast<double>(dy.data()[i]);
      const double xh = static_cast<double>(xhat_.data()[i]);
      dx.data()[i] = static_cast<T>(static_cast<double>(gamma_.value[c]) * invstd_[c] *
                                    (g - inv_m * sum_dy[c] - xh * inv_m * sum_dy_xhat[c]));
    }
    return dx;
  }

  void collect(ParamRefs<T>& out) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
  }

 private:
  int c_ = 0;
  double eps_ = 1e-5;
  Param<T> gamma_, beta_;
  Tensor<T> xhat_;
  std::vector<double> mean_, invstd_;
  std::int64_t m_ = 0;
};

// ---------------------------------------------------------------------------
// Activations / resampling
// ---------------------------------------------------------------------------

template <typename T>
class LeakyReLU {
 public:
  explicit LeakyReLU(double slope = 0.2) : slope_(static_cast<T>(slope)) {}

  Tensor<T> forward(const Tensor<T>& x) {
    input_ = x;
    Tensor<T> out(x.batch(), x.height(), x.width(), x.channels());
    for (std::int64_t i = 0; i < x.numel(); ++i) {
      const T v = x.data()[i];
      out.data()[i] = v > T(0) ? v : slope_ * v;
    }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.batch(), dy.height(), dy.width(), dy.channels());
    for (std::int64_t i = 0; i < dy.numel(); ++i) {
      dx.data()[i] = input_.data()[i] > T(0) ? dy.data()[i] : slope_ * dy.data()[i];
    }
    return dx;
  }

 private:
  T slope_;
  Tensor<T> input_;
};

template <typename T>
class UpsampleNearest2x {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> out(x.batch(), x.height() * 2, x.width() * 2, x.channels());
    for (int n = 0; n < x.batch(); ++n)
      for (int y = 0; y < out.height(); ++y)
        for (int xx = 0; xx < out.width(); ++xx)
          for (int c = 0; c < x.channels(); ++c)
            out(n, y, xx, c) = x(n, y / 2, xx / 2, c);
    return out;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.batch(), dy.height() / 2, dy.width() / 2, dy.channels());
    for (int n = 0; n < dy.batch(); ++n)
      for (int y = 0; y < dy.height(); ++y)
        for (int xx = 0; xx < dy.width(); ++xx)
          for (int c = 0; c < dy.channels(); ++c)
            dx(n, y / 2, xx / 2, c) += dy(n, y, xx, c);
    return dx;
  }
};

template <typename T>
class MaxPool2x2 {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    in_h_ = x.height();
    in_w_ = x.width();
    const int ho = x.height() / 2, wo = x.width() / 2;
    Tensor<T> out(x.batch(), ho, wo, x.channels());
    argmax_.assign(static_cast<std::size_t>(out.numel()), 0);
    std::int64_t oi = 0;
    for (int n = 0; n < x.batch(); ++n)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox)
          for (int c = 0; c < x.channels(); ++c, ++oi) {
            T best = x(n, oy * 2, ox * 2, c);
            int best_dy = 0, best_dx = 0;
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx) {
                const T v = x(n, oy * 2 + dy, ox * 2 + dx, c);
                if (v > best) {
                  best = v;
                  best_dy = dy;
                  best_dx = dx;
                }
              }
            out.data()[oi] = best;
            argmax_[static_cast<std::size_t>(oi)] = best_dy * 2 + best_dx;
          }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.batch(), in_h_, in_w_, dy.channels());
    std::int64_t oi = 0;
    for (int n = 0; n < dy.batch(); ++n)
      for (int oy = 0; oy < dy.height(); ++oy)
        for (int ox = 0; ox < dy.width(); ++ox)
          for (int c = 0; c < dy.channels(); ++c, ++oi) {
            const int a = argmax_[static_cast<std::size_t>(oi)];
            dx(n, oy * 2 + a / 2, ox * 2 + a % 2, c) += dy.data()[oi];
          }
    return dx;
  }

 private:
  std::vector<int> argmax_;
  int in_h_ = 0, in_w_ = 0;
};

// ---------------------------------------------------------------------------
// Fully connected (flattens H*W*C)
// ---------------------------------------------------------------------------

template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(std::string name, int in_features, int out_features)
      : in_(in_features), out_(out_features),
        weight_(name + ".weight", {in_features, out_features}),
        bias_(name + ".bias", {out_features}) {}

  void init(Rng& rng, double negative_slope, double extra_scale = 1.0) {
    kaiming_normal_(weight_, rng, in_, kaiming_gain(negative_slope), extra_scale);
    std::fill(bias_.value.begin(), bias_.value.end(), T(0));
  }

  Tensor<T> forward(const Tensor<T>& x) {
    if (x.per_sample() != in_) throw std::invalid_argument("Linear: feature size mismatch");
    input_ = x;
    Eigen::Map<const MatrixRM<T>> xm(x.data(), x.batch(), in_);
    Eigen::Map<const MatrixRM<T>> wm(weight_.value.data(), in_, out_);
    Tensor<T> out(x.batch(), 1, 1, out_);
    Eigen::Map<MatrixRM<T>> om(out.data(), x.batch(), out_);
    om.noalias() = xm * wm;
    Eigen::Map<const Eigen::RowVector<T, Eigen::Dynamic>> b(bias_.value.data(), out_);
    om.rowwise() += b;
    return out;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    Eigen::Map<const MatrixRM<T>> gm(dy.data(), dy.batch(), out_);
    Eigen::Map<const MatrixRM<T>> xm(input_.data(), input_.batch(), in_);
    Eigen::Map<MatrixRM<T>> dwm(weight_.grad.data(), in_, out_);
    dwm.noalias() += xm.transpose() * gm;
    // fixed-order accumulation, see Conv2d::backward
    for (std::int64_t i = 0; i < dy.numel(); ++i) {
      bias_.grad[static_cast<std::size_t>(i % out_)] += dy.data()[i];
    }

    Eigen::Map<const MatrixRM<T>> wm(weight_.value.data(), in_, out_);
    Tensor<T> dx(input_.batch(), input_.height(), input_.width(), input_.channels());
    Eigen::Map<MatrixRM<T>> dxm(dx.data(), input_.batch(), in_);
    dxm.noalias() = gm * wm.transpose();
    return dx;
  }

  void collect(ParamRefs<T>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

 private:
  int in_ = 0, out_ = 0;
  Param<T> weight_, bias_;
  Tensor<T> input_;
};

// ---------------------------------------------------------------------------
// Noise injection: y = x + s_c * eps, per-channel learned scale.
// ---------------------------------------------------------------------------

/// out[n,h,w,c] = features[n,h,w,c] + scales[c] * noise[n,h,w,c].
/// Channels with scale exactly 0 are passed through untouched so that the
/// zero-scale path is bit-identical to no injection.
template <typename T>
Tensor<T> inject_noise(const Tensor<T>& features, std::span<const T> scales,
                       const Tensor<T>& noise) {
  if (static_cast<int>(scales.size()) != features.channels()) {
    throw std::invalid_argument("inject_noise: scale count != channels");
  }
  if (!noise.same_shape(features)) {
    throw std::invalid_argument("inject_noise: noise shape mismatch");
  }
  Tensor<T> out = features;
  const int c = features.channels();
  for (std::int64_t i = 0; i < features.numel(); ++i) {
    const T s = scales[static_cast<std::size_t>(i % c)];
    if (s != T(0)) out.data()[i] += s * noise.data()[i];
  }
  return out;
}

template <typename T>
class NoiseInjection {
 public:
  NoiseInjection() = default;
  explicit NoiseInjection(std::string name, int channels)
      : scales_(name + ".noise_scale", {channels}) {}  // zero init: starts silent

  Tensor<T> forward(const Tensor<T>& x, Rng& rng) {
    noise_ = Tensor<T>(x.batch(), x.height(), x.width(), x.channels());
    rng.fill_normal(noise_.data(), noise_.numel());
    return inject_noise<T>(x, std::span<const T>(scales_.value), noise_);
  }

  /// Deterministic variant for tests.
  Tensor<T> forward_with(const Tensor<T>& x, const Tensor<T>& noise) {
    noise_ = noise;
    return inject_noise<T>(x, std::span<const T>(scales_.value), noise_);
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const int c = dy.channels();
    for (std::int64_t i = 0; i < dy.numel(); ++i) {
      scales_.grad[static_cast<std::size_t>(i % c)] += dy.data()[i] * noise_.data()[i];
    }
    return dy;  // dx = dy
  }

  void collect(ParamRefs<T>& out) { out.push_back(&scales_); }
  Param<T>& scales() { return scales_; }
  const Param<T>& scales() const { return scales_; }

 private:
  Param<T> scales_;
  Tensor<T> noise_;
};

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

template <typename T>
struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
  std::int64_t step_count = 0;
  // Keyed by parameter name; std::map keeps serialization order stable.
  std::map<std::string, std::pair<std::vector<T>, std::vector<T>>> moments;

  void step(const ParamRefs<T>& params, double lr) {
    ++step_count;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (auto* p : params) {
      auto& [m, v] = moments[p->name];
      if (m.empty()) {
        m.assign(p->value.size(), T(0));
        v.assign(p->value.size(), T(0));
      }
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        const double g = static_cast<double>(p->grad[i]);
        const double mi = beta1 * static_cast<double>(m[i]) + (1.0 - beta1) * g;
        const double vi = beta2 * static_cast<double>(v[i]) + (1.0 - beta2) * g * g;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        p->value[i] -= static_cast<T>(lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps));
      }
    }
  }
};

}  // namespace manysr::nn
