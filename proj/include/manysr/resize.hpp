// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0
//
// Bicubic resampling following the MATLAB imresize convention: cubic kernel
// with a = -0.5, symmetric half-pixel alignment, replicated borders, and an
// antialiasing kernel widened by 1/scale when downscaling. The operator is
// linear in pixel values and exposes its adjoint, so losses can
// differentiate through it.

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "manysr/tensor.hpp"

namespace manysr {

/// Keys-style cubic kernel, a = -0.5.
inline double cubic_kernel(double x) {
  const double ax = std::abs(x);
  if (ax <= 1.0) return (1.5 * ax - 2.5) * ax * ax + 1.0;
  if (ax < 2.0) return ((-0.5 * ax + 2.5) * ax - 4.0) * ax + 2.0;
  return 0.0;
}

/// Per-output-pixel taps for one axis. weights[o * taps + t] applies to
/// input index indices[o * taps + t]; rows are normalized to sum 1.
struct ResizeAxisPlan {
  int in_size = 0;
  int out_size = 0;
  int taps = 0;
  std::vector<int> indices;
  std::vector<double> weights;
};

inline int bicubic_out_size(int in_size, double scale) {
  return static_cast<int>(std::lround(in_size * scale));
}

inline ResizeAxisPlan make_bicubic_plan(int in_size, double scale, bool antialias) {
  if (scale <= 0.0) throw std::invalid_argument("bicubic: scale must be positive");
  ResizeAxisPlan plan;
  plan.in_size = in_size;
  plan.out_size = bicubic_out_size(in_size, scale);
  if (plan.out_size < 1) throw std::invalid_argument("bicubic: output dimension < 1");

  const bool shrink = antialias && scale < 1.0;
  const double kernel_width = shrink ? 4.0 / scale : 4.0;
  plan.taps = static_cast<int>(std::ceil(kernel_width)) + 2;
  plan.indices.resize(static_cast<std::size_t>(plan.out_size) * plan.taps);
  plan.weights.resize(static_cast<std::size_t>(plan.out_size) * plan.taps);

  for (int o = 0; o < plan.out_size; ++o) {
    // Center of output pixel o in 1-based input coordinates.
    const double u = (o + 1) / scale + 0.5 * (1.0 - 1.0 / scale);
    const int left = static_cast<int>(std::floor(u - kernel_width / 2.0));
    double sum = 0.0;
    for (int t = 0; t < plan.taps; ++t) {
      const int idx1 = left + t;  // may fall outside; weight computed before clamping
      const double d = u - idx1;
      const double w = shrink ? scale * cubic_kernel(scale * d) : cubic_kernel(d);
      int clamped = idx1 < 1 ? 1 : (idx1 > in_size ? in_size : idx1);
      plan.indices[static_cast<std::size_t>(o) * plan.taps + t] = clamped - 1;
      plan.weights[static_cast<std::size_t>(o) * plan.taps + t] = w;
      sum += w;
    }
    for (int t = 0; t < plan.taps; ++t) {
      plan.weights[static_cast<std::size_t>(o) * plan.taps + t] /= sum;
    }
  }
  return plan;
}

/// Fixed linear resampling operator for one input geometry. apply() maps
/// (n, in_h, in_w, c) -> (n, out_h, out_w, c); adjoint() is its transpose
/// and maps gradients the other way.
template <typename T>
class BicubicOp {
 public:
  BicubicOp(int in_h, int in_w, double scale, bool antialias)
      : row_plan_(make_bicubic_plan(in_h, scale, antialias)),
        col_plan_(make_bicubic_plan(in_w, scale, antialias)) {}

  int in_height() const { return row_plan_.in_size; }
  int in_width() const { return col_plan_.in_size; }
  int out_height() const { return row_plan_.out_size; }
  int out_width() const { return col_plan_.out_size; }

  Tensor<T> apply(const Tensor<T>& x) const {
    check_shape(x, in_height(), in_width(), "apply");
    Tensor<T> mid = resize_rows(x, row_plan_);
    return resize_cols(mid, col_plan_);
  }

  Tensor<T> adjoint(const Tensor<T>& g) const {
    check_shape(g, out_height(), out_width(), "adjoint");
    Tensor<T> mid = adjoint_cols(g, col_plan_);
    return adjoint_rows(mid, row_plan_);
  }

 private:
  static void check_shape(const Tensor<T>& t, int h, int w, const char* what) {
    if (t.height() != h || t.width() != w) {
      throw std::invalid_argument(std::string("BicubicOp::") + what + ": shape mismatch");
    }
  }

  static Tensor<T> resize_rows(const Tensor<T>& x, const ResizeAxisPlan& p) {
    Tensor<T> out(x.batch(), p.out_size, x.width(), x.channels());
    for (int n = 0; n < x.batch(); ++n)
      for (int oy = 0; oy < p.out_size; ++oy)
        for (int xx = 0; xx < x.width(); ++xx)
          for (int c = 0; c < x.channels(); ++c) {
            double acc = 0.0;
            for (int t = 0; t < p.taps; ++t) {
              const std::size_t k = static_cast<std::size_t>(oy) * p.taps + t;
              acc += p.weights[k] * static_cast<double>(x(n, p.indices[k], xx, c));
            }
            out(n, oy, xx, c) = static_cast<T>(acc);
          }
    return out;
  }

  static Tensor<T> resize_cols(const Tensor<T>& x, const ResizeAxisPlan& p) {
    Tensor<T> out(x.batch(), x.height(), p.out_size, x.channels());
    for (int n = 0; n < x.batch(); ++n)
      for (int y = 0; y < x.height(); ++y)
        for (int ox = 0; ox < p.out_size; ++ox)
          for (int c = 0; c < x.channels(); ++c) {
            double acc = 0.0;
            for (int t = 0; t < p.taps; ++t) {
              const std::size_t k = static_cast<std::size_t>(ox) * p.taps + t;
              acc += p.weights[k] * static_cast<double>(x(n, y, p.indices[k], c));
            }
            out(n, y, ox, c) = static_cast<T>(acc);
          }
    return out;
  }

  static Tensor<T> adjoint_rows(const Tensor<T>& g, const ResizeAxisPlan& p) {
    Tensor<T> out(g.batch(), p.in_size, g.width(), g.channels());
    for (int n = 0; n < g.batch(); ++n)
      for (int oy = 0; oy < p.out_size; ++oy)
        for (int xx = 0; xx < g.width(); ++xx)
          for (int c = 0; c < g.channels(); ++c) {
            const double gv = static_cast<double>(g(n, oy, xx, c));
            for (int t = 0; t < p.taps; ++t) {
              const std::size_t k = static_cast<std::size_t>(oy) * p.taps + t;
              out(n, p.indices[k], xx, c) += static_cast<T>(p.weights[k] * gv);
            }
          }
    return out;
  }

  static Tensor<T> adjoint_cols(const Tensor<T>& g, const ResizeAxisPlan& p) {
    Tensor<T> out(g.batch(), g.height(), p.in_size, g.channels());
    for (int n = 0; n < g.batch(); ++n)
      for (int y = 0; y < g.height(); ++y)
        for (int ox = 0; ox < p.out_size; ++ox)
          for (int c = 0; c < g.channels(); ++c) {
            const double gv = static_cast<double>(g(n, y, ox, c));
            for (int t = 0; t < p.taps; ++t) {
              const std::size_t k = static_cast<std::size_t>(ox) * p.taps + t;
              out(n, y, p.indices[k], c) += static_cast<T>(p.weights[k] * gv);
            }
          }
    return out;
  }

  ResizeAxisPlan row_plan_;
  ResizeAxisPlan col_plan_;
};

/// One-shot resize. Output dimensions are round(input * scale).
template <typename T>
Tensor<T> bicubic_resize(const Tensor<T>& img, double scale, bool antialias) {
  BicubicOp<T> op(img.height(), img.width(), scale, antialias);
  return op.apply(img);
}

}  // namespace manysr
