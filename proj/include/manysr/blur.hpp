// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0
//
// Laplacian-variance blur detection. A patch is converted to BT.601 luma on
// the 0-255 scale, filtered with the 4-neighbor Laplacian over the valid
// region (no padding), and classified blurry when the population variance
// of the response falls below the threshold (default 100).

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "manysr/errors.hpp"
#include "manysr/png_io.hpp"
#include "manysr/rng.hpp"
#include "manysr/tensor.hpp"

namespace manysr {

template <typename T>
double laplacian_variance(const Tensor<T>& patch) {
  if (!patch.is_image()) throw std::invalid_argument("laplacian_variance: single image expected");
  if (patch.height() < 3 || patch.width() < 3) {
    throw std::invalid_argument("laplacian_variance: patch smaller than 3x3");
  }
  Tensor<T> luma = luma601(patch);
  const int h = luma.height(), w = luma.width();
  std::vector<double> response;
  response.reserve(static_cast<std::size_t>(h - 2) * (w - 2));
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const double v = 255.0 * (static_cast<double>(luma(y - 1, x, 0)) +
                                static_cast<double>(luma(y + 1, x, 0)) +
                                static_cast<double>(luma(y, x - 1, 0)) +
                                static_cast<double>(luma(y, x + 1, 0)) -
                                4.0 * static_cast<double>(luma(y, x, 0)));
      response.push_back(v);
    }
  }
  double mean = 0.0;
  for (double v : response) mean += v;
  mean /= static_cast<double>(response.size());
  double var = 0.0;
  for (double v : response) var += (v - mean) * (v - mean);
  return var / static_cast<double>(response.size());
}

template <typename T>
bool is_blurry(const Tensor<T>& patch, double threshold = 100.0) {
  return laplacian_variance(patch) < threshold;
}

struct BlurReport {
  std::int64_t total_patches = 0;
  std::int64_t blurry_patches = 0;
  double threshold = 100.0;
  std::vector<double> per_patch_variances;
  std::vector<std::string> unreadable_files;
  std::vector<std::string> skipped_files;  // readable but smaller than the patch

  double fraction() const {
    return total_patches == 0 ? 0.0
                              : static_cast<double>(blurry_patches) / static_cast<double>(total_patches);
  }

  /// Counts per variance bin of width bin_width; last entry is overflow.
  std::vector<std::int64_t> variance_histogram(double bin_width = 10.0, int bins = 50) const {
    std::vector<std::int64_t> hist(static_cast<std::size_t>(bins) + 1, 0);
    for (double v : per_patch_variances) {
      const int b = static_cast<int>(v / bin_width);
      ++hist[static_cast<std::size_t>(std::min(b, bins))];
    }
    return hist;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["total"] = total_patches;
    j["blurry"] = blurry_patches;
    j["threshold"] = threshold;
    j["fraction"] = fraction();
    j["variance_histogram"] = variance_histogram();
    j["histogram_bin_width"] = 10.0;
    j["unreadable_files"] = unreadable_files;
    j["skipped_files"] = skipped_files;
    return j;
  }
};

/// Samples sample_count random patch_size crops across the readable images
/// of a flat directory and reports the blurry fraction. Unreadable or
/// too-small files are listed in the report, not fatal.
template <typename T>
BlurReport scan_dataset(const std::filesystem::path& dir, int patch_size,
                        std::int64_t sample_count, double threshold, std::uint64_t rng_seed) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("scan_dataset: not a directory: " + dir.string());

  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("scan_dataset: no PNG files in " + dir.string());

  BlurReport report;
  report.threshold = threshold;

  // Validate headers first; full decode happens one image at a time below.
  std::vector<std::string> usable;
  for (const std::string& f : files) {
    PngInfo info;
    if (!read_png_info(f, &info)) {
      report.unreadable_files.push_back(f);
    } else if (info.height < patch_size || info.width < patch_size) {
      report.skipped_files.push_back(f);
    } else {
      usable.push_back(f);
    }
  }
  if (usable.empty()) throw DataError("scan_dataset: no usable images in " + dir.string());

  // Assign each draw an image, then crop with per-image streams so results
  // do not depend on iteration order.
  std::vector<std::int64_t> draws_per_image(usable.size(), 0);
  Rng pick = Rng::derive(rng_seed, "scan_pick");
  for (std::int64_t i = 0; i < sample_count; ++i) {
    ++draws_per_image[static_cast<std::size_t>(pick.uniform_int(static_cast<std::int64_t>(usable.size())))];
  }
  for (std::size_t k = 0; k < usable.size(); ++k) {
    if (draws_per_image[k] == 0) continue;
    Tensor<T> img;
    try {
      img = read_png<T>(usable[k]);
    } catch (const DataError&) {
      report.unreadable_files.push_back(usable[k]);
      continue;
    }
    Rng crop_rng = Rng::derive(rng_seed, "scan_crop", k);
    for (std::int64_t i = 0; i < draws_per_image[k]; ++i) {
      const int y = static_cast<int>(crop_rng.uniform_int(img.height() - patch_size + 1));
      const int x = static_cast<int>(crop_rng.uniform_int(img.width() - patch_size + 1));
      const double var = laplacian_variance(crop(img, y, x, patch_size, patch_size));
      report.per_patch_variances.push_back(var);
      ++report.total_patches;
      if (var < threshold) ++report.blurry_patches;
    }
  }
  return report;
}

}  // namespace manysr
