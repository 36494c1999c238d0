// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0
//
// 8-bit PNG read/write (RGB or grayscale) via libpng. Palette and low-depth
// images are expanded, 16-bit is reduced, alpha is stripped.

#pragma once

#include <png.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include "manysr/errors.hpp"
#include "manysr/tensor.hpp"

namespace manysr {

template <typename T>
Tensor<T> read_png(const std::filesystem::path& path) {
  std::FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (!fp) throw DataError("cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw DataError("libpng init failed for " + path.string());
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw DataError("not a decodable PNG: " + path.string());
  }
  png_init_io(png, fp);
  png_read_png(png, info,
               PNG_TRANSFORM_STRIP_16 | PNG_TRANSFORM_STRIP_ALPHA |
                   PNG_TRANSFORM_PACKING | PNG_TRANSFORM_EXPAND,
               nullptr);

  const int h = static_cast<int>(png_get_image_height(png, info));
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int c = static_cast<int>(png_get_channels(png, info));
  png_bytepp rows = png_get_rows(png, info);

  if (c != 1 && c != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw DataError("unsupported channel count in " + path.string());
  }

  Tensor<T> img = Tensor<T>::image(h, w, c);
  for (int y = 0; y < h; ++y) {
    const png_bytep row = rows[y];
    for (int x = 0; x < w * c; ++x) {
      img.data()[static_cast<std::size_t>(y) * w * c + x] =
          static_cast<T>(row[x] / 255.0);
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}

struct PngInfo {
  int height = 0;
  int width = 0;
  int channels = 0;
};

/// Reads only the IHDR, cheaply. Returns false for unreadable files.
/// channels is reported after the 8-bit RGB/gray normalization applied by
/// read_png (palette -> 3, alpha stripped).
inline bool read_png_info(const std::filesystem::path& path, PngInfo* out) {
  std::FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (!fp) return false;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  out->height = static_cast<int>(png_get_image_height(png, info));
  out->width = static_cast<int>(png_get_image_width(png, info));
  const int color = png_get_color_type(png, info);
  out->channels = (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) ? 1 : 3;
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return true;
}

/// Writes an image tensor as 8-bit PNG; values are clamped to [0,1] and
/// rounded to the nearest of 256 levels.
template <typename T>
void write_png(const std::filesystem::path& path, const Tensor<T>& img) {
  if (!img.is_image() || (img.channels() != 1 && img.channels() != 3)) {
    throw std::invalid_argument("write_png: need single image with 1 or 3 channels");
  }
  std::FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw DataError("cannot write " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw DataError("libpng init failed for " + path.string());
  }

  const int h = img.height(), w = img.width(), c = img.channels();
  std::vector<png_byte> bytes(static_cast<std::size_t>(h) * w * c);
  for (std::int64_t i = 0; i < img.numel(); ++i) {
    double v = static_cast<double>(img.data()[i]);
    v = v >= 0.0 ? (v > 1.0 ? 1.0 : v) : 0.0;  // NaN maps to 0
    bytes[static_cast<std::size_t>(i)] = static_cast<png_byte>(v * 255.0 + 0.5);
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[y] = bytes.data() + static_cast<std::size_t>(y) * w * c;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw DataError("PNG encode failed: " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_rows(png, info, rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace manysr
