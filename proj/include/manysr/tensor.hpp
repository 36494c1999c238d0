// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace manysr {

/// Dense NHWC tensor. Images are tensors with batch() == 1; pixel values of
/// image tensors live in [0, 1] by convention, channel order RGB.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  Tensor(int n, int h, int w, int c) : n_(n), h_(h), w_(w), c_(c) {
    if (n < 1 || h < 1 || w < 1 || c < 1) {
      throw std::invalid_argument("Tensor: all dimensions must be >= 1");
    }
    data_.assign(static_cast<std::size_t>(numel()), T(0));
  }

  static Tensor image(int h, int w, int c) { return Tensor(1, h, w, c); }

  int batch() const { return n_; }
  int height() const { return h_; }
  int width() const { return w_; }
  int channels() const { return c_; }
  bool empty() const { return data_.empty(); }
  bool is_image() const { return n_ == 1; }

  std::int64_t numel() const {
    return static_cast<std::int64_t>(n_) * h_ * w_ * c_;
  }
  std::int64_t per_sample() const {
    return static_cast<std::int64_t>(h_) * w_ * c_;
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator()(int n, int y, int x, int c) {
    assert(n >= 0 && n < n_ && y >= 0 && y < h_ && x >= 0 && x < w_ && c >= 0 && c < c_);
    return data_[((static_cast<std::size_t>(n) * h_ + y) * w_ + x) * c_ + c];
  }
  const T& operator()(int n, int y, int x, int c) const {
    assert(n >= 0 && n < n_ && y >= 0 && y < h_ && x >= 0 && x < w_ && c >= 0 && c < c_);
    return data_[((static_cast<std::size_t>(n) * h_ + y) * w_ + x) * c_ + c];
  }
  // Single-image accessors.
  T& operator()(int y, int x, int c) {
    assert(n_ == 1);
    return (*this)(0, y, x, c);
  }
  const T& operator()(int y, int x, int c) const {
    assert(n_ == 1);
    return (*this)(0, y, x, c);
  }

  bool same_shape(const Tensor& o) const {
    return n_ == o.n_ && h_ == o.h_ && w_ == o.w_ && c_ == o.c_;
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    for (const T& v : data_) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(n_, h_, w_, c_);
    for (std::int64_t i = 0; i < numel(); ++i) {
      out.data()[i] = static_cast<U>(data_[i]);
    }
    return out;
  }

 private:
  int n_ = 0, h_ = 0, w_ = 0, c_ = 0;
  std::vector<T> data_;
};

/// BT.601 luma on whatever intensity scale the input uses. 1-channel input
/// is copied through.
template <typename T>
Tensor<T> luma601(const Tensor<T>& img) {
  if (img.channels() == 1) return img;
  if (img.channels() != 3) {
    throw std::invalid_argument("luma601: expected 1 or 3 channels");
  }
  Tensor<T> out(img.batch(), img.height(), img.width(), 1);
  for (int n = 0; n < img.batch(); ++n) {
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        out(n, y, x, 0) = static_cast<T>(0.299 * img(n, y, x, 0) +
                                         0.587 * img(n, y, x, 1) +
                                         0.114 * img(n, y, x, 2));
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> crop(const Tensor<T>& img, int y0, int x0, int h, int w) {
  if (y0 < 0 || x0 < 0 || y0 + h > img.height() || x0 + w > img.width()) {
    throw std::invalid_argument("crop: window outside image");
  }
  Tensor<T> out(img.batch(), h, w, img.channels());
  for (int n = 0; n < img.batch(); ++n)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < img.channels(); ++c)
          out(n, y, x, c) = img(n, y0 + y, x0 + x, c);
  return out;
}

template <typename T>
Tensor<T> gray_to_rgb(const Tensor<T>& img) {
  if (img.channels() == 3) return img;
  if (img.channels() != 1) {
    throw std::invalid_argument("gray_to_rgb: expected 1 or 3 channels");
  }
  Tensor<T> out(img.batch(), img.height(), img.width(), 3);
  for (int n = 0; n < img.batch(); ++n)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        for (int c = 0; c < 3; ++c) out(n, y, x, c) = img(n, y, x, 0);
  return out;
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.batch() != b.batch() || a.height() != b.height() || a.width() != b.width()) {
    throw std::invalid_argument("concat_channels: spatial/batch shape mismatch");
  }
  Tensor<T> out(a.batch(), a.height(), a.width(), a.channels() + b.channels());
  for (int n = 0; n < a.batch(); ++n)
    for (int y = 0; y < a.height(); ++y)
      for (int x = 0; x < a.width(); ++x) {
        for (int c = 0; c < a.channels(); ++c) out(n, y, x, c) = a(n, y, x, c);
        for (int c = 0; c < b.channels(); ++c)
          out(n, y, x, a.channels() + c) = b(n, y, x, c);
      }
  return out;
}

/// Channels [c0, c1) as a copy.
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, int c0, int c1) {
  if (c0 < 0 || c1 <= c0 || c1 > x.channels()) {
    throw std::invalid_argument("slice_channels: bad channel range");
  }
  Tensor<T> out(x.batch(), x.height(), x.width(), c1 - c0);
  for (int n = 0; n < x.batch(); ++n)
    for (int y = 0; y < x.height(); ++y)
      for (int xx = 0; xx < x.width(); ++xx)
        for (int c = c0; c < c1; ++c) out(n, y, xx, c - c0) = x(n, y, xx, c);
  return out;
}

template <typename T>
Tensor<T> nth_image(const Tensor<T>& batch, int i) {
  if (i < 0 || i >= batch.batch()) {
    throw std::invalid_argument("nth_image: index out of range");
  }
  Tensor<T> out(1, batch.height(), batch.width(), batch.channels());
  const T* src = batch.data() + static_cast<std::size_t>(i) * batch.per_sample();
  std::copy(src, src + batch.per_sample(), out.data());
  return out;
}

template <typename T>
Tensor<T> stack_images(const std::vector<Tensor<T>>& images) {
  if (images.empty()) throw std::invalid_argument("stack_images: empty list");
  const Tensor<T>& first = images.front();
  Tensor<T> out(static_cast<int>(images.size()), first.height(), first.width(),
                first.channels());
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!images[i].same_shape(first) || images[i].batch() != 1) {
      throw std::invalid_argument("stack_images: shape mismatch");
    }
    std::copy(images[i].data(), images[i].data() + first.per_sample(),
              out.data() + static_cast<std::size_t>(i) * first.per_sample());
  }
  return out;
}

}  // namespace manysr
