// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0
//
// Training patch extraction and the bounded sample-then-discard buffer.
// Many patches are cut from each loaded image and pooled, so the expensive
// full-image decode amortizes over many training samples.

#pragma once

#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "manysr/blur.hpp"
#include "manysr/resize.hpp"
#include "manysr/rng.hpp"
#include "manysr/tensor.hpp"

namespace manysr {

template <typename T>
struct PatchRecord {
  Tensor<T> hr;  // P x P
  Tensor<T> lr;  // P/scale x P/scale, synthesized by the antialiased bicubic
  std::string source_id;
  double blur_variance = 0.0;
  int crop_y = 0;
  int crop_x = 0;
};

/// (source, crop) reference, enough to re-extract a record bit-exactly.
struct PatchCropRef {
  std::string source;
  int y = 0;
  int x = 0;
};

/// Cuts up to `count` random patches from one HR image. Crop positions come
/// from the seeded RNG (y then x per draw). With filter_blur set, up to
/// 8 * count candidates are drawn before giving up and returning fewer
/// records; candidates with Laplacian variance below blur_threshold are
/// rejected.
template <typename T>
std::vector<PatchRecord<T>> extract_patches(const Tensor<T>& img, int patch_size, int count,
                                            int scale, bool filter_blur, std::uint64_t rng_seed,
                                            std::string_view source_id = {},
                                            double blur_threshold = 100.0) {
  if (!img.is_image()) throw std::invalid_argument("extract_patches: single image expected");
  if (img.height() < patch_size || img.width() < patch_size) {
    throw std::invalid_argument("extract_patches: image smaller than patch_size");
  }
  if (scale < 1 || patch_size % scale != 0) {
    throw std::invalid_argument("extract_patches: patch_size must be divisible by scale");
  }
  std::vector<PatchRecord<T>> out;
  if (count <= 0) return out;
  out.reserve(static_cast<std::size_t>(count));

  Rng rng(rng_seed);
  const std::int64_t budget = filter_blur ? 8ll * count : count;
  BicubicOp<T> down(patch_size, patch_size, 1.0 / scale, /*antialias=*/true);
  for (std::int64_t attempt = 0; attempt < budget && static_cast<int>(out.size()) < count;
       ++attempt) {
    const int y = static_cast<int>(rng.uniform_int(img.height() - patch_size + 1));
    const int x = static_cast<int>(rng.uniform_int(img.width() - patch_size + 1));
    Tensor<T> hr = crop(img, y, x, patch_size, patch_size);
    const double var = laplacian_variance(hr);
    if (filter_blur && var < blur_threshold) continue;
    PatchRecord<T> rec;
    rec.lr = down.apply(hr);
    rec.hr = std::move(hr);
    rec.source_id = std::string(source_id);
    rec.blur_variance = var;
    rec.crop_y = y;
    rec.crop_x = x;
    out.push_back(std::move(rec));
  }
  return out;
}

/// Bounded pool of patches. push appends up to capacity and rejects the
/// excess; sample removes the returned records, so no record is ever
/// handed out twice. push and sample are mutually atomic (one background
/// filler plus one consumer is supported).
template <typename T>
class PatchBuffer {
 public:
  explicit PatchBuffer(std::size_t capacity = 1024, std::size_t per_image_yield = 128)
      : capacity_(capacity), per_image_yield_(per_image_yield) {}

  std::size_t capacity() const { return capacity_; }
  std::size_t per_image_yield() const { return per_image_yield_; }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return contents_.size();
  }

  /// Returns how many records were accepted.
  std::size_t push(std::vector<PatchRecord<T>> records) {
    std::lock_guard<std::mutex> lock(mu_);
    std::size_t accepted = 0;
    for (auto& r : records) {
      if (contents_.size() >= capacity_) break;
      contents_.push_back(std::move(r));
      ++accepted;
    }
    return accepted;
  }

  /// Uniform sample without replacement; sampled records leave the buffer.
  std::vector<PatchRecord<T>> sample(std::size_t batch, std::uint64_t rng_seed) {
    std::lock_guard<std::mutex> lock(mu_);
    if (batch > contents_.size()) {
      throw std::invalid_argument("PatchBuffer::sample: batch exceeds buffer size");
    }
    Rng rng(rng_seed);
    std::vector<PatchRecord<T>> out;
    out.reserve(batch);
    for (std::size_t k = 0; k < batch; ++k) {
      const std::size_t idx =
          static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(contents_.size())));
      out.push_back(std::move(contents_[idx]));
      contents_[idx] = std::move(contents_.back());
      contents_.pop_back();
    }
    return out;
  }

  /// Metadata snapshot (source + crop of each record, in buffer order) for
  /// checkpointing; records are rebuilt from the source images on restore.
  std::vector<PatchCropRef> crop_refs() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<PatchCropRef> out;
    out.reserve(contents_.size());
    for (const auto& r : contents_) out.push_back({r.source_id, r.crop_y, r.crop_x});
    return out;
  }

  void clear() {
    std::lock_guard<std::mutex> lock(mu_);
    contents_.clear();
  }

 private:
  std::size_t capacity_;
  std::size_t per_image_yield_;
  mutable std::mutex mu_;
  std::vector<PatchRecord<T>> contents_;
};

}  // namespace manysr
