// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0
//
// Flat binary tensor archive: little-endian, scalar width recorded in the
// header, deterministic layout (save -> load -> save is byte-identical).

#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "manysr/errors.hpp"

namespace manysr {

template <typename T>
struct NamedTensor {
  std::string name;
  std::vector<std::int64_t> dims;
  std::vector<T> data;
};

namespace detail {
constexpr char kArchiveMagic[8] = {'M', 'S', 'R', 'W', 'T', 'S', '0', '1'};

template <typename V>
void write_pod(std::ofstream& f, const V& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(V));
}
template <typename V>
V read_pod(std::ifstream& f) {
  V v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(V));
  return v;
}
}  // namespace detail

template <typename T>
void write_archive(const std::filesystem::path& path, const std::vector<NamedTensor<T>>& tensors) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write archive " + path.string());
  f.write(detail::kArchiveMagic, sizeof(detail::kArchiveMagic));
  detail::write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(sizeof(T)));
  detail::write_pod<std::uint64_t>(f, tensors.size());
  for (const auto& t : tensors) {
    detail::write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(t.name.size()));
    f.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    detail::write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(t.dims.size()));
    for (std::int64_t d : t.dims) detail::write_pod<std::int64_t>(f, d);
    f.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(T)));
  }
  if (!f) throw DataError("short write on archive " + path.string());
}

template <typename T>
std::vector<NamedTensor<T>> read_archive(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open archive " + path.string());
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, detail::kArchiveMagic, sizeof(magic)) != 0) {
    throw DataError("not a manysr tensor archive: " + path.string());
  }
  const auto scalar = detail::read_pod<std::uint32_t>(f);
  if (scalar != sizeof(T)) {
    throw DataError("archive scalar width " + std::to_string(scalar) + " != requested " +
                    std::to_string(sizeof(T)) + ": " + path.string());
  }
  const auto count = detail::read_pod<std::uint64_t>(f);
  std::vector<NamedTensor<T>> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedTensor<T> t;
    const auto name_len = detail::read_pod<std::uint32_t>(f);
    t.name.resize(name_len);
    f.read(t.name.data(), name_len);
    const auto ndim = detail::read_pod<std::uint32_t>(f);
    t.dims.resize(ndim);
    std::int64_t numel = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      t.dims[d] = detail::read_pod<std::int64_t>(f);
      numel *= t.dims[d];
    }
    if (!f || numel < 0) throw DataError("corrupt archive " + path.string());
    t.data.resize(static_cast<std::size_t>(numel));
    f.read(reinterpret_cast<char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * sizeof(T)));
    if (!f) throw DataError("truncated archive " + path.string());
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace manysr
