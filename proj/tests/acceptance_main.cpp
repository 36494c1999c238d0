// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Runs every release criterion at its pinned tolerance
// and prints one [PASS]/[FAIL] line per criterion; exit code is the number
// of failures. Heavier end-to-end checks (training smoke, determinism)
// build their synthetic datasets under the system temp directory.

#include <Eigen/Dense>

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "manysr/blur.hpp"
#include "manysr/config.hpp"
#include "manysr/discriminator.hpp"
#include "manysr/generator.hpp"
#include "manysr/losses.hpp"
#include "manysr/metrics.hpp"
#include "manysr/patches.hpp"
#include "manysr/png_io.hpp"
#include "manysr/resize.hpp"
#include "manysr/trainer.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using namespace manysr;

namespace {

struct Criterion {
  std::string name;
  std::function<bool(std::string&)> run;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

fs::path fixture(const char* name) { return fs::path(MANYSR_FIXTURE_DIR) / name; }

fs::path scratch_dir(const char* tag) {
  const fs::path dir = fs::temp_directory_path() / (std::string("manysr_accept_") + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------------------
// 1. Bicubic fixture equivalence vs the kernel-summation oracle.
// ---------------------------------------------------------------------------
bool bicubic_fixture_equivalence(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  int images = 0;
  for (int i = 0; i < 10; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "resize_%02d.png", i);
    const Tensor<double> img = read_png<double>(fixture(name));
    ++images;
    for (double scale : {0.25, 0.5, 2.0, 4.0}) {
      const Tensor<double> got = bicubic_resize(img, scale, true);
      const Tensor<double> want = oracle::bicubic_resize(img, scale, true);
      if (!got.same_shape(want)) {
        detail = fmt("shape mismatch on %s scale %g", name, scale);
        return false;
      }
      for (std::int64_t k = 0; k < got.numel(); ++k) {
        worst = std::max(worst, std::abs(got.data()[k] - want.data()[k]));
      }
    }
  }
  const double secs = seconds_since(t0);
  detail = fmt("%d fixtures x 4 scales, max |err| %.3g, %.2f s", images, worst, secs);
  return worst <= 1e-6 && secs < 5.0;
}

// ---------------------------------------------------------------------------
// 2. Blur classifier: oracle agreement + sharp/blurred separation.
// ---------------------------------------------------------------------------
bool blur_classifier_agreement(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(4242);
  int agree = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    Tensor<double> patch = synth::random_image<double>(24, 24, 3, 50000 + i);
    const int kind = i % 3;
    if (kind == 1) patch = synth::gaussian_blur(patch, 0.8 + 2.5 * rng.uniform());
    if (kind == 2) {
      const double v = rng.uniform();
      for (auto& p : patch.vec()) p = v + 0.01 * (p - 0.5);  // near-flat
    }
    const bool impl = is_blurry(patch, 100.0);
    const bool ref = oracle::laplacian_variance(patch) < 100.0;
    agree += impl == ref ? 1 : 0;
  }

  int correct = 0;
  for (int i = 0; i < 100; ++i) {
    auto sharp = synth::checkerboard<double>(96, 96, 3, 1 + i % 2);
    auto blurred = synth::gaussian_blur(sharp, 3.0);
    correct += is_blurry(sharp, 100.0) ? 0 : 1;
    correct += is_blurry(blurred, 100.0) ? 1 : 0;
  }
  const double secs = seconds_since(t0);
  detail = fmt("oracle agreement %d/%d, separation %d/200, %.2f s", agree, n, correct, secs);
  return agree == n && correct >= 190 && secs < 30.0;
}

// ---------------------------------------------------------------------------
// 3. Gradient checks: cycle, perceptual (random features), noise-scale
//    path, discriminator input. 64-bit, rel err <= 1e-3 on >= 95% coords.
// ---------------------------------------------------------------------------
bool gradient_checks(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string parts;

  {  // cycle loss w.r.t. sr, 8x8
    auto sr = synth::random_image<double>(8, 8, 3, 61);
    BicubicOp<double> f(8, 8, 0.5, true);
    auto lr = synth::random_image<double>(4, 4, 3, 62);
    Tensor<double> dsr;
    cycle_loss_grad(sr, lr, f, &dsr);
    auto obj = [&](const Tensor<double>& x) { return static_cast<double>(cycle_loss(x, lr, f)); };
    const auto r = gradcheck::check(obj, sr, dsr, 1e-6, 1e-3);
    parts += fmt("cycle %.1f%% ", 100 * r.fraction_ok);
    if (r.fraction_ok < 0.95) {
      detail = parts + fmt("(worst %.2g)", r.worst_rel_err);
      return false;
    }
  }
  {  // perceptual loss w.r.t. sr, random-features mode, 8x8
    auto fx = FeatureExtractor<double>::fixed_random(63);
    auto sr = synth::random_image<double>(8, 8, 3, 64);
    auto hr = synth::random_image<double>(8, 8, 3, 65);
    Tensor<double> dsr;
    perceptual_loss_grad(sr, hr, fx, &dsr);
    auto obj = [&](const Tensor<double>& x) {
      auto fx2 = FeatureExtractor<double>::fixed_random(63);
      return static_cast<double>(perceptual_loss(x, hr, fx2));
    };
    const auto r = gradcheck::check(obj, sr, dsr, 1e-5, 1e-3);
    parts += fmt("percep %.1f%% ", 100 * r.fraction_ok);
    if (r.fraction_ok < 0.95) {
      detail = parts + fmt("(worst %.2g)", r.worst_rel_err);
      return false;
    }
  }
  {  // noise-scale path on a tiny generator, L2 objective
    GeneratorConfig cfg;
    cfg.num_rrdb = 1;
    cfg.trunk_channels = 8;
    cfg.growth_channels = 4;
    cfg.scale = 2;
    cfg.noise_enabled = true;
    Generator<double> gen(cfg, 66);
    for (auto& layer : gen.noise_layers())
      for (auto& s : layer.scales().value) s = 0.25;
    auto lr_in = synth::random_image<double>(16, 16, 3, 67);
    auto target = synth::random_image<double>(32, 32, 3, 68);
    const std::uint64_t noise_seed = 69;
    auto objective = [&]() {
      auto sr = gen.forward(lr_in, Mode::train, noise_seed);
      double acc = 0;
      for (std::int64_t i = 0; i < sr.numel(); ++i) {
        const double d = sr.data()[i] - target.data()[i];
        acc += 0.5 * d * d;
      }
      return acc;
    };
    nn::zero_grads(gen.params());
    auto sr = gen.forward(lr_in, Mode::train, noise_seed);
    Tensor<double> dsr(sr.batch(), sr.height(), sr.width(), sr.channels());
    for (std::int64_t i = 0; i < sr.numel(); ++i) dsr.data()[i] = sr.data()[i] - target.data()[i];
    gen.backward(dsr);
    auto& scales = gen.noise_layers()[0].scales();
    const auto r = gradcheck::check_params(objective, scales.value, scales.grad, 1e-5, 1e-3);
    parts += fmt("noise-scales %.1f%% ", 100 * r.fraction_ok);
    if (r.fraction_ok < 0.95) {
      detail = parts + fmt("(worst %.2g)", r.worst_rel_err);
      return false;
    }
  }
  {  // discriminator input, 8x8, 6 channels
    DiscriminatorConfig cfg;
    cfg.base_channels = 4;
    cfg.input_channels = 6;
    cfg.input_size = 8;
    Discriminator<double> d(cfg, 70);
    Tensor<double> x(2, 8, 8, 6);
    Rng rng(71);
    for (auto& v : x.vec()) v = rng.uniform();
    auto obj = [&](const Tensor<double>& xin) {
      Discriminator<double> d2 = d;
      double acc = 0;
      for (double v : d2.forward(xin)) acc += v;
      return acc;
    };
    d.forward(x);
    nn::zero_grads(d.params());
    std::vector<double> ones = {1.0, 1.0};
    auto dx = d.backward(ones);
    const auto r = gradcheck::check(obj, x, dx, 1e-5, 1e-3);
    parts += fmt("disc-input %.1f%% ", 100 * r.fraction_ok);
    if (r.fraction_ok < 0.95) {
      detail = parts + fmt("(worst %.2g)", r.worst_rel_err);
      return false;
    }
  }
  const double secs = seconds_since(t0);
  detail = parts + fmt("| %.1f s", secs);
  return secs < 120.0;
}

// ---------------------------------------------------------------------------
// 4. One-to-many contract.
// ---------------------------------------------------------------------------
bool one_to_many_contract(std::string& detail) {
  GeneratorConfig cfg;
  cfg.num_rrdb = 2;
  cfg.trunk_channels = 8;
  cfg.growth_channels = 4;
  cfg.scale = 2;
  cfg.noise_enabled = true;
  Generator<float> gen(cfg, 81);
  auto lr = synth::random_image<float>(16, 16, 3, 82);

  auto eval_a = gen.forward(lr, Mode::eval, 1);
  auto eval_b = gen.forward(lr, Mode::eval, 999);
  for (std::int64_t i = 0; i < eval_a.numel(); ++i) {
    if (eval_a.data()[i] != eval_b.data()[i]) {
      detail = "eval mode depends on the seed";
      return false;
    }
  }
  auto train_zero = gen.forward(lr, Mode::train, 7);  // scales are still zero
  for (std::int64_t i = 0; i < eval_a.numel(); ++i) {
    if (train_zero.data()[i] != eval_a.data()[i]) {
      detail = "zero-scale train mode differs from eval mode";
      return false;
    }
  }
  for (auto& layer : gen.noise_layers())
    for (auto& s : layer.scales().value) s = 0.3f;
  auto sample_a = gen.forward(lr, Mode::train, 1);
  auto sample_b = gen.forward(lr, Mode::train, 2);
  bool differ = false;
  for (std::int64_t i = 0; i < sample_a.numel(); ++i) {
    differ |= sample_a.data()[i] != sample_b.data()[i];
  }
  if (!differ) {
    detail = "distinct seeds produced identical samples";
    return false;
  }
  detail = "eval bit-deterministic; zero-scale bit-equal; seeds diverge";
  return true;
}

// ---------------------------------------------------------------------------
// 5. Cycle-loss null space: kernel perturbations are invisible to the cycle
//    loss but not to the strict L1 loss.
// ---------------------------------------------------------------------------
Eigen::MatrixXd plan_matrix(const ResizeAxisPlan& plan) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(plan.out_size, plan.in_size);
  for (int o = 0; o < plan.out_size; ++o) {
    for (int t = 0; t < plan.taps; ++t) {
      const std::size_t k = static_cast<std::size_t>(o) * plan.taps + t;
      a(o, plan.indices[k]) += plan.weights[k];
    }
  }
  return a;
}

bool cycle_null_space(std::string& detail) {
  const int hr_size = 32, scale = 4;
  BicubicOp<double> f(hr_size, hr_size, 1.0 / scale, true);
  auto sr = synth::random_image<double>(hr_size, hr_size, 3, 91);
  Tensor<double> lr = f.apply(sr);

  // Projector onto the kernel of the per-axis operator: P = I - A^+ A.
  const Eigen::MatrixXd a = plan_matrix(make_bicubic_plan(hr_size, 1.0 / scale, true));
  const Eigen::MatrixXd pinv = a.transpose() * (a * a.transpose()).ldlt().solve(
                                   Eigen::MatrixXd::Identity(a.rows(), a.rows()));
  const Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(hr_size, hr_size) - pinv * a;

  // Project a random image onto the operator kernel, channel by channel.
  Tensor<double> delta(1, hr_size, hr_size, 3);
  auto noise = synth::random_image<double>(hr_size, hr_size, 3, 92);
  for (int c = 0; c < 3; ++c) {
    Eigen::MatrixXd r(hr_size, hr_size);
    for (int y = 0; y < hr_size; ++y)
      for (int x = 0; x < hr_size; ++x) r(y, x) = noise(y, x, c) - 0.5;
    const Eigen::MatrixXd k = proj * r * proj;
    for (int y = 0; y < hr_size; ++y)
      for (int x = 0; x < hr_size; ++x) delta(y, x, c) = k(y, x);
  }
  // Normalize the perturbation to mean |delta| = 0.02.
  double mean_abs = 0;
  for (double v : delta.vec()) mean_abs += std::abs(v);
  mean_abs /= static_cast<double>(delta.numel());
  for (auto& v : delta.vec()) v *= 0.02 / mean_abs;

  Tensor<double> perturbed = sr;
  for (std::int64_t i = 0; i < sr.numel(); ++i) perturbed.data()[i] += delta.data()[i];

  const double cycle_base = cycle_loss(sr, lr, f);
  const double cycle_perturbed = cycle_loss(perturbed, lr, f);
  const double cycle_change = std::abs(cycle_perturbed - cycle_base);
  const double l1_change = std::abs(l1_loss(perturbed, sr));  // hr fixture = sr itself
  detail = fmt("cycle change %.3g (<= 1e-8), l1 change %.3g (>= 1e-3)", cycle_change, l1_change);
  return cycle_change <= 1e-8 && l1_change >= 1e-3;
}

// ---------------------------------------------------------------------------
// 6. RaGAN symmetry point.
// ---------------------------------------------------------------------------
bool ragan_symmetry(std::string& detail) {
  std::vector<double> real = {1.7, 1.7, 1.7, 1.7};
  std::vector<double> fake = {1.7, 1.7, 1.7, 1.7};
  const double expect = 2.0 * std::log(2.0);
  const double d = ragan_d_loss<double>(real, fake);
  const double g = ragan_g_loss<double>(real, fake);
  detail = fmt("D %.9f, G %.9f, target %.9f", d, g, expect);
  return std::abs(d - expect) <= 1e-6 && std::abs(g - expect) <= 1e-6;
}

// ---------------------------------------------------------------------------
// 7. Schedule correctness.
// ---------------------------------------------------------------------------
bool schedule_correctness(std::string& detail) {
  const auto s = ScheduleSpec::with_milestones(1e-4, {50000, 100000, 200000, 300000}, 2.0);
  const std::pair<std::int64_t, double> expected[] = {
      {0, 1e-4}, {50000, 5e-5}, {100000, 2.5e-5}, {200000, 1.25e-5}, {300000, 6.25e-6}};
  for (const auto& [it, lr] : expected) {
    if (lr_at(s, it) != lr) {
      detail = fmt("lr_at(%" PRId64 ") = %.10g, expected %.10g", it, lr_at(s, it), lr);
      return false;
    }
  }
  detail = "all five milestone values exact";
  return true;
}

// ---------------------------------------------------------------------------
// 8. Desk-scale training smoke; 9. determinism + resume. The dataset and
// shrunken table1 presets are shared.
// ---------------------------------------------------------------------------
fs::path make_smoke_dataset() {
  const fs::path dir = scratch_dir("dataset");
  for (int i = 0; i < 16; ++i) {
    char name[16];
    std::snprintf(name, sizeof(name), "img%02d.png", i);
    write_png(dir / name, synth::natural_image<double>(128, 128, 9000 + i));
  }
  return dir;
}

std::vector<std::string> desk_overrides(const fs::path& data, int iterations) {
  return {
      "data.dir=" + data.string(),
      "run.batch_size=4",
      "run.total_iterations=" + std::to_string(iterations),
      "run.patch_size=64",
      "run.checkpoint_every=100",
      "run.seed=2026",
      "gen.num_rrdb=3",
      "gen.trunk_channels=32",
      "gen.growth_channels=16",
      "disc.base_channels=32",
      "data.per_image_yield=32",
      "data.buffer_capacity=256",
  };
}

std::vector<double> csv_column(const fs::path& csv, int col) {
  std::ifstream f(csv);
  std::string line;
  std::getline(f, line);  // header
  std::vector<double> out;
  while (std::getline(f, line)) {
    std::stringstream ss(line);
    std::string cell;
    for (int c = 0; c <= col; ++c) std::getline(ss, cell, ',');
    out.push_back(std::stod(cell));
  }
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

bool desk_training_smoke(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path data = make_smoke_dataset();
  const fs::path out_pre = scratch_dir("smoke_pre");
  const fs::path out_gan = scratch_dir("smoke_gan");

  // Stage 1: table1_a shrunk to desk scale, 200 iterations.
  auto pre_cfg = build_run_config(std::nullopt, "table1_a", desk_overrides(data, 200),
                                  Stage::pretrain);
  const fs::path pre_ckpt = pretrain<float>(pre_cfg.run, out_pre);
  const auto content = csv_column(out_pre / "loss_log.csv", 1);
  if (content.size() != 200) {
    detail = fmt("expected 200 pretrain rows, got %zu", content.size());
    return false;
  }
  double first = 0, last = 0;
  for (int i = 0; i < 20; ++i) {
    first += content[static_cast<std::size_t>(i)] / 20.0;
    last += content[content.size() - 20 + static_cast<std::size_t>(i)] / 20.0;
  }
  const bool improved = last <= 0.7 * first;

  // Stage 2: table1_f shrunk (cycle + noise + conditioned D + blur filter),
  // hermetic perceptual mode, initialized from the pretrained model.
  auto gan_overrides = desk_overrides(data, 100);
  gan_overrides.push_back("loss.perceptual_mode=random");
  auto gan_cfg = build_run_config(std::nullopt, "table1_f", gan_overrides, Stage::gan);
  Trainer<float> trainer(gan_cfg.run, out_gan);
  trainer.init_generator_from(pre_ckpt);
  trainer.train();

  bool finite = true;
  for (int col : {1, 2, 3, 4, 5}) {
    for (double v : csv_column(out_gan / "loss_log.csv", col)) finite &= std::isfinite(v);
  }
  const bool noise_grads = trainer.max_noise_scale_grad() > 0.0;
  // learned noise spread against depth (the qualitative depth profile)
  std::string medians;
  for (const auto& s : noise_scale_stats(trainer.generator())) {
    medians += fmt("%s%.2g", medians.empty() ? "" : "/", s.median);
  }
  const double secs = seconds_since(t0);
  detail = fmt("windowed L1 %.4f -> %.4f (%.0f%%), gan losses finite=%d, max |noise grad| %.3g, "
               "block |scale| medians %s, %.0f s",
               first, last, 100.0 * (1.0 - last / std::max(first, 1e-12)), finite ? 1 : 0,
               trainer.max_noise_scale_grad(), medians.c_str(), secs);
  fs::remove_all(data);
  fs::remove_all(out_pre);
  fs::remove_all(out_gan);
  return improved && finite && noise_grads && secs < 900.0;
}

bool determinism_and_resume(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path data = make_smoke_dataset();
  const fs::path out_a = scratch_dir("det_a");
  const fs::path out_b = scratch_dir("det_b");
  const fs::path out_r = scratch_dir("det_r");

  auto overrides = desk_overrides(data, 40);
  for (auto& o : overrides) {
    if (o.rfind("run.checkpoint_every=", 0) == 0) o = "run.checkpoint_every=20";
  }
  overrides.push_back("loss.perceptual_mode=random");
  auto cfg = build_run_config(std::nullopt, "table1_f", overrides, Stage::gan);

  train_gan<float>(cfg.run, {}, out_a);
  train_gan<float>(cfg.run, {}, out_b);
  const std::string csv_a = read_file(out_a / "loss_log.csv");
  const std::string csv_b = read_file(out_b / "loss_log.csv");
  const bool identical = !csv_a.empty() && csv_a == csv_b;

  resume_training<float>(out_a / "ckpt_00000020", out_r);
  std::istringstream fa(csv_a);
  std::vector<std::string> lines_a;
  std::string line;
  while (std::getline(fa, line)) lines_a.push_back(line);
  std::istringstream fr(read_file(out_r / "loss_log.csv"));
  std::vector<std::string> lines_r;
  while (std::getline(fr, line)) lines_r.push_back(line);
  bool resume_ok = lines_r.size() == 21;  // header + rows 21..40
  for (std::size_t i = 1; resume_ok && i < lines_r.size(); ++i) {
    resume_ok = lines_r[i] == lines_a[20 + i];
  }
  // resumed final weights equal the uninterrupted run's bit for bit
  auto full = load_checkpoint<float>(out_a / "ckpt_00000040");
  auto resumed = load_checkpoint<float>(out_r / "ckpt_00000040");
  auto pa = full.generator->params(), pb = resumed.generator->params();
  bool weights_ok = true;
  for (std::size_t i = 0; i < pa.size() && weights_ok; ++i) {
    weights_ok = pa[i]->value == pb[i]->value;
  }
  const double secs = seconds_since(t0);
  detail = fmt("paired CSVs byte-identical=%d, resume rows match=%d, resumed weights equal=%d, "
               "%.0f s",
               identical ? 1 : 0, resume_ok ? 1 : 0, weights_ok ? 1 : 0, secs);
  fs::remove_all(data);
  fs::remove_all(out_a);
  fs::remove_all(out_b);
  fs::remove_all(out_r);
  return identical && resume_ok && weights_ok;
}

// ---------------------------------------------------------------------------
// 10. Buffer property suite: 10,000 random push/sample interleavings.
// ---------------------------------------------------------------------------
bool buffer_properties(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  PatchBuffer<float> buf(1024, 128);
  Rng rng(10101);
  std::int64_t accepted = 0, sampled = 0;
  std::set<std::string> ever_sampled;
  std::int64_t id = 0;
  for (int step = 0; step < 10000; ++step) {
    if (rng.uniform() < 0.5) {
      const int n = 1 + static_cast<int>(rng.uniform_int(64));
      std::vector<PatchRecord<float>> records(static_cast<std::size_t>(n));
      for (auto& r : records) r.source_id = std::to_string(id++);
      accepted += static_cast<std::int64_t>(buf.push(std::move(records)));
    } else if (buf.size() > 0) {
      const std::size_t n =
          static_cast<std::size_t>(1 + rng.uniform_int(static_cast<std::int64_t>(buf.size())));
      for (auto& r : buf.sample(n, rng.next_u64())) {
        if (!ever_sampled.insert(r.source_id).second) {
          detail = "a record was sampled twice";
          return false;
        }
      }
      sampled += static_cast<std::int64_t>(n);
    }
    if (buf.size() > 1024) {
      detail = "capacity bound violated";
      return false;
    }
    if (static_cast<std::int64_t>(buf.size()) != accepted - sampled) {
      detail = fmt("conservation violated at step %d", step);
      return false;
    }
  }
  detail = fmt("10000 interleavings, %" PRId64 " accepted, %" PRId64 " sampled, %.2f s", accepted,
               sampled, seconds_since(t0));
  return true;
}

// ---------------------------------------------------------------------------
// 11. Metric oracles.
// ---------------------------------------------------------------------------
bool metric_oracles(std::string& detail) {
  double worst_psnr = 0, worst_ssim = 0;
  for (int s = 0; s < 5; ++s) {
    auto a = synth::random_image<double>(20, 24, 3, 7000 + s);
    auto b = synth::gaussian_blur(a, 0.8);
    worst_psnr = std::max(worst_psnr, std::abs(psnr(a, b) - oracle::psnr(a, b)));
    worst_ssim = std::max(worst_ssim, std::abs(ssim(a, b) - oracle::ssim(a, b)));
    if (psnr(a, a) != std::numeric_limits<double>::infinity() || ssim(a, a) != 1.0) {
      detail = "identical-input fixed points not exact";
      return false;
    }
  }
  detail = fmt("max |psnr err| %.3g (<= 1e-9), max |ssim err| %.3g (<= 1e-6)", worst_psnr,
               worst_ssim);
  return worst_psnr <= 1e-9 && worst_ssim <= 1e-6;
}

}  // namespace

int main() {
  std::vector<Criterion> criteria = {
      {"bicubic-fixture-equivalence", bicubic_fixture_equivalence},
      {"blur-classifier-oracle-agreement", blur_classifier_agreement},
      {"gradient-checks", gradient_checks},
      {"one-to-many-contract", one_to_many_contract},
      {"cycle-loss-null-space", cycle_null_space},
      {"ragan-symmetry-point", ragan_symmetry},
      {"schedule-correctness", schedule_correctness},
      {"desk-scale-training-smoke", desk_training_smoke},
      {"determinism-and-resume", determinism_and_resume},
      {"buffer-property-suite", buffer_properties},
      {"metric-oracles", metric_oracles},
  };

  int failures = 0;
  for (auto& c : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] %s%s%s\n", ok ? "PASS" : "FAIL", c.name.c_str(),
                detail.empty() ? "" : " — ", detail.c_str());
    std::fflush(stdout);
    failures += ok ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures;
}
