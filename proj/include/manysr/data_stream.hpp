// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic buffered patch source for training. Images are visited in a
// per-epoch shuffled order; each visit extracts per_image_yield patches into
// the buffer, and batches are sampled without replacement. All randomness is
// derived from (seed, purpose, epoch/index/iteration), so the stream state
// is summarized by a cursor plus the buffer's crop metadata and can be
// restored bit-exactly from a checkpoint.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "manysr/errors.hpp"
#include "manysr/patches.hpp"
#include "manysr/png_io.hpp"
#include "manysr/rng.hpp"
#include "manysr/tensor.hpp"

namespace manysr {

struct DataConfig {
  std::string dir;
  int per_image_yield = 128;
  int buffer_capacity = 1024;
  double blur_threshold = 100.0;
};

struct DataCursor {
  std::int64_t epoch = 0;
  std::int64_t index = 0;  // position in the epoch permutation
};

template <typename T>
struct TrainBatch {
  Tensor<T> hr;
  Tensor<T> lr;
};

template <typename T>
class PatchStream {
 public:
  PatchStream(const DataConfig& cfg, int patch_size, int scale, bool blur_filter,
              std::uint64_t seed)
      : cfg_(cfg), patch_size_(patch_size), scale_(scale), blur_filter_(blur_filter),
        seed_(seed), buffer_(static_cast<std::size_t>(cfg.buffer_capacity),
                             static_cast<std::size_t>(cfg.per_image_yield)) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(cfg.dir)) {
      throw DataError("training data directory not found: " + cfg.dir);
    }
    for (const auto& e : fs::directory_iterator(cfg.dir)) {
      if (!e.is_regular_file()) continue;
      std::string ext = e.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(),
                     [](unsigned char c) { return std::tolower(c); });
      if (ext == ".png") files_.push_back(e.path().string());
    }
    std::sort(files_.begin(), files_.end());
    if (files_.empty()) throw DataError("no PNG files in " + cfg.dir);
    dead_.assign(files_.size(), false);
  }

  const std::vector<std::string>& files() const { return files_; }
  DataCursor cursor() const { return cursor_; }
  std::vector<PatchCropRef> buffer_state() const { return buffer_.crop_refs(); }
  std::size_t buffer_size() const { return buffer_.size(); }

  /// Samples a batch for the given training iteration, refilling first so
  /// the buffer holds at least 2 * batch_size records.
  TrainBatch<T> next_batch(int batch_size, std::int64_t iteration) {
    refill(static_cast<std::size_t>(2 * batch_size));
    auto records = buffer_.sample(static_cast<std::size_t>(batch_size),
                                  derive_seed(seed_, "sample", static_cast<std::uint64_t>(iteration)));
    std::vector<Tensor<T>> hr, lr;
    hr.reserve(records.size());
    lr.reserve(records.size());
    for (auto& r : records) {
      hr.push_back(std::move(r.hr));
      lr.push_back(std::move(r.lr));
    }
    return {stack_images(hr), stack_images(lr)};
  }

  /// Rebuilds the stream from checkpointed state: re-extracts the exact
  /// buffered crops from their source images (the dataset must be
  /// unchanged) and repositions the cursor.
  void restore(const DataCursor& cursor, const std::vector<PatchCropRef>& refs) {
    cursor_ = cursor;
    buffer_.clear();
    std::map<std::string, Tensor<T>> images;
    std::vector<PatchRecord<T>> records;
    records.reserve(refs.size());
    BicubicOp<T> down(patch_size_, patch_size_, 1.0 / scale_, /*antialias=*/true);
    for (const auto& ref : refs) {
      auto it = images.find(ref.source);
      if (it == images.end()) {
        it = images.emplace(ref.source, load_rgb(ref.source)).first;
      }
      PatchRecord<T> rec;
      rec.hr = crop(it->second, ref.y, ref.x, patch_size_, patch_size_);
      rec.lr = down.apply(rec.hr);
      rec.source_id = ref.source;
      rec.blur_variance = laplacian_variance(rec.hr);
      rec.crop_y = ref.y;
      rec.crop_x = ref.x;
      records.push_back(std::move(rec));
    }
    buffer_.push(std::move(records));
  }

 private:
  Tensor<T> load_rgb(const std::string& path) const {
    Tensor<T> img = read_png<T>(path);
    return img.channels() == 1 ? gray_to_rgb(img) : img;
  }

  void refill(std::size_t low_water) {
    std::size_t visited_without_progress = 0;
    while (buffer_.size() < low_water) {
      if (visited_without_progress > files_.size()) {
        throw DataError("patch buffer cannot be filled: every image is unusable or fully "
                        "rejected by the blur filter");
      }
      const std::size_t file_idx = current_file_index();
      const std::string& path = files_[file_idx];
      bool progressed = false;
      if (!dead_[file_idx]) {
        try {
          Tensor<T> img = load_rgb(path);
          if (img.height() < patch_size_ || img.width() < patch_size_) {
            dead_[file_idx] = true;
          } else {
            auto records = extract_patches(img, patch_size_, cfg_.per_image_yield, scale_,
                                           blur_filter_,
                                           derive_seed(seed_, "extract",
                                                       static_cast<std::uint64_t>(cursor_.epoch),
                                                       static_cast<std::uint64_t>(cursor_.index)),
                                           path, cfg_.blur_threshold);
            progressed = buffer_.push(std::move(records)) > 0;
          }
        } catch (const DataError&) {
          dead_[file_idx] = true;
        }
      }
      advance_cursor();
      visited_without_progress = progressed ? 0 : visited_without_progress + 1;
    }
  }

  std::size_t current_file_index() {
    if (permutation_epoch_ != cursor_.epoch) {
      permutation_.resize(files_.size());
      for (std::size_t i = 0; i < files_.size(); ++i) permutation_[i] = i;
      Rng rng = Rng::derive(seed_, "order", static_cast<std::uint64_t>(cursor_.epoch));
      rng.shuffle(permutation_);
      permutation_epoch_ = cursor_.epoch;
    }
    return permutation_[static_cast<std::size_t>(cursor_.index)];
  }

  void advance_cursor() {
    if (++cursor_.index >= static_cast<std::int64_t>(files_.size())) {
      cursor_.index = 0;
      ++cursor_.epoch;
    }
  }

  DataConfig cfg_;
  int patch_size_;
  int scale_;
  bool blur_filter_;
  std::uint64_t seed_;
  PatchBuffer<T> buffer_;
  std::vector<std::string> files_;
  std::vector<bool> dead_;
  std::vector<std::size_t> permutation_;
  std::int64_t permutation_epoch_ = -1;
  DataCursor cursor_;
};

}  // namespace manysr
