// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0
//
// Evaluation: PSNR, SSIM (11x11 Gaussian window, sigma 1.5, k1=0.01,
// k2=0.03 on [0,1] data), LPIPS adapter, multi-checkpoint score averaging
// in the "LPIPS / PSNR / SSIM" reporting order, and the sample-diversity
// probe for the one-to-many property.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "manysr/checkpoint.hpp"
#include "manysr/errors.hpp"
#include "manysr/generator.hpp"
#include "manysr/losses.hpp"
#include "manysr/lpips.hpp"
#include "manysr/png_io.hpp"
#include "manysr/resize.hpp"
#include "manysr/tensor.hpp"

namespace manysr {

/// 10*log10(1/MSE) on [0,1] data; identical inputs give the +inf sentinel.
template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("psnr: shape mismatch");
  double mse = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i]);
    mse += d * d;
  }
  mse /= static_cast<double>(a.numel());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

namespace detail {
inline const std::vector<double>& ssim_window() {
  static const std::vector<double> w = [] {
    std::vector<double> k(11);
    double sum = 0;
    for (int i = 0; i < 11; ++i) {
      const double d = i - 5.0;
      k[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
      sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
  }();
  return w;
}
}  // namespace detail

/// Mean local SSIM over all valid 11x11 windows, averaged across channels.
template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("ssim: shape mismatch");
  if (a.height() < 11 || a.width() < 11) {
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");
  }
  constexpr double kC1 = 0.01 * 0.01;  // (k1*L)^2, L = 1
  constexpr double kC2 = 0.03 * 0.03;
  const auto& win = detail::ssim_window();

  double total = 0.0;
  std::int64_t count = 0;
  for (int n = 0; n < a.batch(); ++n) {
    for (int c = 0; c < a.channels(); ++c) {
      for (int y = 0; y + 11 <= a.height(); ++y) {
        for (int x = 0; x + 11 <= a.width(); ++x) {
          double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
          for (int wy = 0; wy < 11; ++wy) {
            for (int wx = 0; wx < 11; ++wx) {
              const double w = win[wy] * win[wx];
              const double va = a(n, y + wy, x + wx, c);
              const double vb = b(n, y + wy, x + wx, c);
              mx += w * va;
              my += w * vb;
              sxx += w * va * va;
              syy += w * vb * vb;
              sxy += w * va * vb;
            }
          }
          const double vx = sxx - mx * mx;
          const double vy = syy - my * my;
          const double cov = sxy - mx * my;
          total += ((2 * mx * my + kC1) * (2 * cov + kC2)) /
                   ((mx * mx + my * my + kC1) * (vx + vy + kC2));
          ++count;
        }
      }
    }
  }
  return total / static_cast<double>(count);
}

/// Scores in the paper's reporting order. lpips is NaN when no backend was
/// supplied to evaluate().
struct ScoreTriple {
  double lpips = std::numeric_limits<double>::quiet_NaN();
  double psnr = 0.0;
  double ssim = 0.0;

  std::string formatted() const {
    char buf[96];
    if (std::isnan(lpips)) {
      std::snprintf(buf, sizeof(buf), "- / %.4f / %.4f", psnr, ssim);
    } else {
      std::snprintf(buf, sizeof(buf), "%.4f / %.4f / %.4f", lpips, psnr, ssim);
    }
    return buf;
  }
};

struct EvalProtocol {
  std::vector<std::filesystem::path> checkpoint_set;
  std::filesystem::path dataset;
  int crop_border = -1;  // -1: crop scale pixels from each side
  bool luma_only = true;
};

namespace detail {
template <typename T>
Tensor<T> eval_view(const Tensor<T>& img, int border, bool luma) {
  Tensor<T> v = img;
  if (border > 0) {
    if (img.height() <= 2 * border || img.width() <= 2 * border) {
      throw std::invalid_argument("evaluate: crop border larger than image");
    }
    v = crop(v, border, border, img.height() - 2 * border, img.width() - 2 * border);
  }
  return luma ? luma601(v) : v;
}

inline std::vector<std::string> list_pngs(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("evaluate: not a directory: " + dir.string());
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("evaluate: empty dataset " + dir.string());
  return files;
}
}  // namespace detail

/// Per-checkpoint scores, eval mode (noise off), arithmetically averaged
/// across the checkpoint set. +inf PSNR sentinels are excluded from the
/// average with a warning on stderr. LR inputs are synthesized from the HR
/// images with the antialiased bicubic, mirroring the training pipeline.
template <typename T>
ScoreTriple evaluate(const EvalProtocol& protocol, Lpips<T>* lpips_backend = nullptr) {
  if (protocol.checkpoint_set.empty()) {
    throw std::invalid_argument("evaluate: empty checkpoint set");
  }
  const std::vector<std::string> files = detail::list_pngs(protocol.dataset);

  double lpips_sum = 0, psnr_sum = 0, ssim_sum = 0;
  int lpips_n = 0;
  for (const auto& ckpt : protocol.checkpoint_set) {
    auto gen = load_generator<T>(ckpt);
    const int scale = gen->config().scale;
    const int border = protocol.crop_border >= 0 ? protocol.crop_border : scale;
    double ck_psnr = 0, ck_ssim = 0, ck_lpips = 0;
    int psnr_count = 0, img_count = 0;
    for (const std::string& f : files) {
      Tensor<T> hr = read_png<T>(f);
      if (hr.channels() == 1) hr = gray_to_rgb(hr);
      const int h = (hr.height() / scale) * scale;
      const int w = (hr.width() / scale) * scale;
      if (h < 8 * scale || w < 8 * scale) continue;  // too small to super-resolve
      hr = crop(hr, 0, 0, h, w);
      Tensor<T> lr = bicubic_resize(hr, 1.0 / scale, true);
      Tensor<T> sr = gen->forward(lr, Mode::eval);

      Tensor<T> sr_v = detail::eval_view(sr, border, protocol.luma_only);
      Tensor<T> hr_v = detail::eval_view(hr, border, protocol.luma_only);
      const double p = psnr(sr_v, hr_v);
      if (std::isinf(p)) {
        std::fprintf(stderr, "warning: +inf PSNR on %s excluded from the average\n", f.c_str());
      } else {
        ck_psnr += p;
        ++psnr_count;
      }
      ck_ssim += ssim(sr_v, hr_v);
      if (lpips_backend) ck_lpips += static_cast<double>(lpips_backend->distance(sr, hr));
      ++img_count;
    }
    if (img_count == 0) throw DataError("evaluate: no usable images in " + protocol.dataset.string());
    psnr_sum += psnr_count > 0 ? ck_psnr / psnr_count : std::numeric_limits<double>::infinity();
    ssim_sum += ck_ssim / img_count;
    if (lpips_backend) {
      lpips_sum += ck_lpips / img_count;
      ++lpips_n;
    }
  }
  ScoreTriple out;
  const double n = static_cast<double>(protocol.checkpoint_set.size());
  out.psnr = psnr_sum / n;
  out.ssim = ssim_sum / n;
  if (lpips_n > 0) out.lpips = lpips_sum / static_cast<double>(lpips_n);
  return out;
}

/// Mean pairwise L1 distance between n sampled SR outputs of one LR input.
/// Returns 0 (not an error) when noise is disabled.
template <typename T>
double diversity(Generator<T>& gen, const Tensor<T>& lr, int n_samples,
                 std::span<const std::uint64_t> seeds) {
  if (n_samples < 2) throw std::invalid_argument("diversity: n_samples must be >= 2");
  if (static_cast<int>(seeds.size()) < n_samples) {
    throw std::invalid_argument("diversity: need one seed per sample");
  }
  if (!gen.config().noise_enabled) return 0.0;
  std::vector<Tensor<T>> samples;
  samples.reserve(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    samples.push_back(gen.forward(lr, Mode::train, seeds[static_cast<std::size_t>(i)]));
  }
  double total = 0.0;
  int pairs = 0;
  for (int i = 0; i < n_samples; ++i) {
    for (int j = i + 1; j < n_samples; ++j) {
      total += static_cast<double>(l1_loss(samples[i], samples[j]));
      ++pairs;
    }
  }
  return total / pairs;
}

// --- reporting -------------------------------------------------------------

inline std::string render_scores_markdown(
    const std::vector<std::pair<std::string, ScoreTriple>>& rows) {
  std::string out = "| Dataset | LPIPS / PSNR / SSIM |\n|---|---|\n";
  for (const auto& [name, score] : rows) {
    out += "| " + name + " | " + score.formatted() + " |\n";
  }
  return out;
}

inline nlohmann::json scores_to_json(
    const std::vector<std::pair<std::string, ScoreTriple>>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [name, score] : rows) {
    nlohmann::json r;
    r["dataset"] = name;
    r["lpips"] = std::isnan(score.lpips) ? nlohmann::json(nullptr) : nlohmann::json(score.lpips);
    r["psnr"] = std::isinf(score.psnr) ? nlohmann::json("inf") : nlohmann::json(score.psnr);
    r["ssim"] = score.ssim;
    j.push_back(r);
  }
  return j;
}

inline void write_noise_scale_csv(const std::filesystem::path& path,
                                  const std::vector<NoiseScaleSummary>& stats) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << "block_index,min,q1,median,q3,max\n";
  char line[160];
  for (const auto& s : stats) {
    std::snprintf(line, sizeof(line), "%d,%.10g,%.10g,%.10g,%.10g,%.10g\n", s.block_index, s.min,
                  s.q1, s.median, s.q3, s.max);
    f << line;
  }
}

/// Minimal self-contained SVG boxplot of |noise scale| against block depth.
inline void write_noise_scale_svg(const std::filesystem::path& path,
                                  const std::vector<NoiseScaleSummary>& stats) {
  if (stats.empty()) throw std::invalid_argument("write_noise_scale_svg: no stats");
  const int w = 80 + static_cast<int>(stats.size()) * 40, h = 260;
  double vmax = 1e-12;
  for (const auto& s : stats) vmax = std::max(vmax, s.max);
  auto ypos = [&](double v) { return 220.0 - 180.0 * (v / vmax); };

  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
  f << "<line x1='40' y1='220' x2='" << (w - 20) << "' y2='220' stroke='black'/>\n";
  f << "<line x1='40' y1='220' x2='40' y2='30' stroke='black'/>\n";
  f << "<text x='8' y='34' font-size='10'>" << vmax << "</text>\n";
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto& s = stats[i];
    const double cx = 60.0 + static_cast<double>(i) * 40.0;
    f << "<line x1='" << cx << "' y1='" << ypos(s.min) << "' x2='" << cx << "' y2='"
      << ypos(s.max) << "' stroke='black'/>\n";
    f << "<rect x='" << cx - 10 << "' y='" << ypos(s.q3) << "' width='20' height='"
      << std::max(1.0, ypos(s.q1) - ypos(s.q3)) << "' fill='#9ecae1' stroke='black'/>\n";
    f << "<line x1='" << cx - 10 << "' y1='" << ypos(s.median) << "' x2='" << cx + 10 << "' y2='"
      << ypos(s.median) << "' stroke='black' stroke-width='2'/>\n";
    f << "<text x='" << cx - 4 << "' y='236' font-size='10'>" << s.block_index << "</text>\n";
  }
  f << "<text x='" << (w / 2 - 30) << "' y='254' font-size='10'>RRDB block</text>\n";
  f << "</svg>\n";
}

}  // namespace manysr
