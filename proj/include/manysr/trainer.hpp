// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0
//
// Two-stage training driver. Stage 1 pretrains the generator with plain L1;
// stage 2 runs adversarial training with the composite objective (content /
// RaGAN / perceptual), one generator step and one discriminator step per
// iteration on the same batch, Adam for both. Checkpoints carry enough
// state (weights, Adam moments, data cursor, buffered crop refs) that a
// resumed run reproduces an uninterrupted one bit for bit.

#pragma once

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "manysr/checkpoint.hpp"
#include "manysr/data_stream.hpp"
#include "manysr/discriminator.hpp"
#include "manysr/generator.hpp"
#include "manysr/losses.hpp"
#include "manysr/run_config.hpp"
#include "manysr/schedule.hpp"

namespace manysr {

namespace detail {
inline std::filesystem::path default_vgg_weights() {
  const char* dir = std::getenv("MANYSR_WEIGHTS_DIR");
  return std::filesystem::path(dir ? dir : ".") / "vgg19_features.wts";
}
}  // namespace detail

template <typename T>
class Trainer {
 public:
  Trainer(RunConfig config, std::filesystem::path out_dir)
      : cfg_(std::move(config)), out_dir_(std::move(out_dir)) {
    cfg_.validate_and_sync();
    std::filesystem::create_directories(out_dir_);
    gen_ = std::make_unique<Generator<T>>(cfg_.gen, cfg_.seed);
    // The stage gates only the adversarial machinery; content/perceptual
    // terms follow the loss config in either stage.
    if (cfg_.stage == Stage::gan) {
      disc_ = std::make_unique<Discriminator<T>>(cfg_.disc, cfg_.seed + 1);
    }
    if (cfg_.loss.content_mode == ContentMode::cycle) {
      downsampler_ = std::make_unique<BicubicOp<T>>(cfg_.patch_size, cfg_.patch_size,
                                                    1.0 / cfg_.scale, true);
    }
    if (cfg_.loss.perceptual_mode == PerceptualMode::fixed_random_features) {
      fx_ = std::make_unique<FeatureExtractor<T>>(
          FeatureExtractor<T>::fixed_random(derive_seed(cfg_.seed, "feature_stack")));
    } else if (cfg_.loss.perceptual_mode == PerceptualMode::pretrained_features) {
      const std::filesystem::path path = cfg_.percep_weights.empty()
                                             ? detail::default_vgg_weights()
                                             : std::filesystem::path(cfg_.percep_weights);
      fx_ = std::make_unique<FeatureExtractor<T>>(FeatureExtractor<T>::vgg19_pretrained(path));
    }
    stream_ = std::make_unique<PatchStream<T>>(cfg_.data, cfg_.patch_size, cfg_.scale,
                                               cfg_.blur_filter, cfg_.seed);
  }

  /// Initialize the generator from a checkpoint (the PSNR-pretrained model
  /// seeding the GAN stage). Architecture must match.
  void init_generator_from(const std::filesystem::path& checkpoint) {
    const nlohmann::json manifest = read_manifest(checkpoint);
    const GeneratorConfig init_cfg = generator_config_from_json(manifest.at("config").at("generator"));
    if (!init_cfg.same_architecture(cfg_.gen)) {
      throw ConfigError("init checkpoint generator architecture does not match run config");
    }
    auto tensors = read_archive<T>(checkpoint_base(checkpoint).replace_extension(".wts"));
    detail::load_params(tensors, gen_->params());
  }

  /// Restore full training state from a checkpoint of the same stage.
  void restore(const std::filesystem::path& checkpoint) {
    LoadedCheckpoint<T> ck = load_checkpoint<T>(checkpoint);
    if (ck.config.stage != cfg_.stage) {
      throw ConfigError("resume: checkpoint stage does not match run stage");
    }
    if (!ck.config.same_architecture(cfg_)) {
      throw ConfigError("resume: checkpoint architecture does not match run config");
    }
    auto params = gen_->params();
    auto tensors = read_archive<T>(checkpoint_base(checkpoint).replace_extension(".wts"));
    detail::load_params(tensors, params);
    opt_g_ = std::move(ck.opt_g);
    if (disc_ && ck.discriminator) {
      detail::load_params(tensors, disc_->params());
      opt_d_ = std::move(ck.opt_d);
    }
    iteration_ = ck.iteration;
    stream_->restore(ck.cursor, ck.buffer);
  }

  /// Runs to cfg.total_iterations; returns the final checkpoint base path.
  std::filesystem::path train() {
    const std::filesystem::path csv_path = out_dir_ / "loss_log.csv";
    std::FILE* csv = std::fopen(csv_path.string().c_str(), "w");
    if (!csv) throw DataError("cannot write " + csv_path.string());
    std::fprintf(csv, "iteration,content,gan_g,gan_d,percep,total,lr_g,lr_d\n");

    std::filesystem::path last = save(iteration_);
    while (iteration_ < cfg_.total_iterations) {
      const std::int64_t i = iteration_ + 1;
      StepLog log;
      try {
        TrainBatch<T> batch = stream_->next_batch(cfg_.batch_size, i);
        log = step(i, batch);
      } catch (const DivergenceError& e) {
        std::fclose(csv);
        dump_divergence(i, e.what());
        throw;
      }
      if (!std::isfinite(log.total) || !std::isfinite(log.gan_d)) {
        std::fclose(csv);
        dump_divergence(i, "non-finite loss");
        throw DivergenceError("non-finite loss at iteration " + std::to_string(i));
      }
      iteration_ = i;
      std::fprintf(csv, "%" PRId64 ",%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", i,
                   log.content, log.gan_g, log.gan_d, log.percep, log.total, log.lr_g, log.lr_d);
      track_collapse(log.gan_d);
      if (i % 100 == 0 || i == cfg_.total_iterations) {
        std::printf("iter %" PRId64 "/%" PRId64 " | content %.5g | gan_g %.5g | gan_d %.5g | "
                    "percep %.5g | total %.5g\n",
                    i, cfg_.total_iterations, log.content, log.gan_g, log.gan_d, log.percep,
                    log.total);
        std::fflush(stdout);
      }
      if (i % cfg_.checkpoint_every == 0 || i == cfg_.total_iterations) last = save(i);
    }
    std::fclose(csv);
    return last;
  }

  std::int64_t iteration() const { return iteration_; }
  Stage stage() const { return cfg_.stage; }
  const RunConfig& config() const { return cfg_; }
  Generator<T>& generator() { return *gen_; }
  Discriminator<T>* discriminator() { return disc_.get(); }
  double max_noise_scale_grad() const { return max_noise_scale_grad_; }

 private:
  struct StepLog {
    double content = 0, gan_g = 0, gan_d = 0, percep = 0, total = 0, lr_g = 0, lr_d = 0;
  };

  StepLog step(std::int64_t i, const TrainBatch<T>& batch) {
    StepLog log;
    log.lr_g = lr_at(cfg_.sched_g, i - 1);
    log.lr_d = lr_at(cfg_.sched_d, i - 1);

    // --- generator step ---
    Tensor<T> sr = gen_->forward(batch.lr, Mode::train, derive_seed(cfg_.seed, "gnoise",
                                                                    static_cast<std::uint64_t>(i)));
    Tensor<T> dsr(sr.batch(), sr.height(), sr.width(), sr.channels());

    if (cfg_.loss.content_mode == ContentMode::strict_l1) {
      Tensor<T> d;
      log.content = static_cast<double>(l1_loss_grad(sr, batch.hr, &d));
      axpy(dsr, d, cfg_.loss.w_content);
    } else if (cfg_.loss.content_mode == ContentMode::cycle) {
      Tensor<T> d;
      log.content = static_cast<double>(cycle_loss_grad(sr, batch.lr, *downsampler_, &d));
      axpy(dsr, d, cfg_.loss.w_content);
    }
    if (fx_) {
      Tensor<T> d;
      log.percep = static_cast<double>(perceptual_loss_grad(sr, batch.hr, *fx_, &d));
      axpy(dsr, d, cfg_.loss.w_percep);
    }

    const bool gan_active = cfg_.stage == Stage::gan && cfg_.loss.lambda_gan > 0;
    Tensor<T> real_in, fake_in;
    if (gan_active) {
      real_in = cfg_.condition_discriminator ? assemble_input(batch.hr, batch.lr) : batch.hr;
      fake_in = cfg_.condition_discriminator ? assemble_input(sr, batch.lr) : sr;
      std::vector<T> logits_real = disc_->forward(real_in);
      std::vector<T> logits_fake = disc_->forward(fake_in);  // caches now hold the fake pass
      std::vector<T> dfake;
      log.gan_g = static_cast<double>(
          ragan_g_loss_grad<T>(logits_real, logits_fake, nullptr, &dfake));
      for (T& v : dfake) v *= static_cast<T>(cfg_.loss.lambda_gan);
      nn::zero_grads(disc_->params());  // scratch pass, D is not being updated here
      Tensor<T> dfake_in = disc_->backward(dfake);
      nn::zero_grads(disc_->params());
      Tensor<T> dsr_gan =
          cfg_.condition_discriminator ? slice_channels(dfake_in, 0, 3) : std::move(dfake_in);
      axpy(dsr, dsr_gan, 1.0);  // lambda already applied to the logit gradient

      log.total = static_cast<double>(total_generator_loss<T>(
          cfg_.loss, static_cast<T>(log.content), static_cast<T>(log.gan_g),
          static_cast<T>(log.percep)));
    } else {
      log.total = static_cast<double>(total_generator_loss<T>(
          cfg_.loss, static_cast<T>(log.content), T(0), static_cast<T>(log.percep)));
    }

    auto g_params = gen_->params();
    nn::zero_grads(g_params);
    gen_->backward(dsr);
    if (cfg_.grad_clip > 0) nn::clip_grad_norm(g_params, cfg_.grad_clip);
    track_noise_grad();
    opt_g_.step(g_params, log.lr_g);

    // --- discriminator step (same batch, generator output detached) ---
    if (gan_active) {
      std::vector<T> logits_fake = disc_->forward(fake_in);
      std::vector<T> logits_real = disc_->forward(real_in);  // caches hold the real pass
      std::vector<T> dreal, dfake;
      log.gan_d = static_cast<double>(
          ragan_d_loss_grad<T>(logits_real, logits_fake, &dreal, &dfake));
      auto d_params = disc_->params();
      nn::zero_grads(d_params);
      disc_->backward(dreal);
      disc_->forward(fake_in);  // rebuild fake-pass caches
      disc_->backward(dfake);
      if (cfg_.grad_clip > 0) nn::clip_grad_norm(d_params, cfg_.grad_clip);
      opt_d_.step(d_params, log.lr_d);
    }
    return log;
  }

  static void axpy(Tensor<T>& acc, const Tensor<T>& x, double a) {
    for (std::int64_t i = 0; i < acc.numel(); ++i) {
      acc.data()[i] += static_cast<T>(a * static_cast<double>(x.data()[i]));
    }
  }

  void track_noise_grad() {
    for (const auto& layer : gen_->noise_layers()) {
      for (T g : layer.scales().grad) {
        const double a = std::abs(static_cast<double>(g));
        if (a > max_noise_scale_grad_) max_noise_scale_grad_ = a;
      }
    }
  }

  void track_collapse(double gan_d) {
    if (cfg_.stage != Stage::gan || cfg_.loss.lambda_gan <= 0) return;
    if (gan_d < 1e-4) {
      if (++collapse_streak_ == 500) {
        std::fprintf(stderr,
                     "warning: discriminator loss below 1e-4 for 500 consecutive iterations "
                     "(possible collapse)\n");
        collapse_streak_ = 0;
      }
    } else {
      collapse_streak_ = 0;
    }
  }

  std::filesystem::path save(std::int64_t i) {
    char name[32];
    std::snprintf(name, sizeof(name), "ckpt_%08" PRId64, i);
    const std::filesystem::path base = out_dir_ / name;
    save_checkpoint(base, cfg_, i, *gen_, disc_.get(), opt_g_, disc_ ? &opt_d_ : nullptr,
                    stream_->cursor(), stream_->buffer_state());
    return base;
  }

  void dump_divergence(std::int64_t i, const std::string& reason) {
    nlohmann::json j;
    j["iteration"] = i;
    j["reason"] = reason;
    nlohmann::json norms;
    for (const auto* p : gen_->params()) {
      double sq = 0;
      for (T v : p->value) sq += static_cast<double>(v) * static_cast<double>(v);
      norms[p->name] = std::sqrt(sq);
    }
    j["generator_param_norms"] = norms;
    std::ofstream f(out_dir_ / "divergence_dump.json", std::ios::trunc);
    if (f) f << j.dump(2) << "\n";
  }

  RunConfig cfg_;
  std::filesystem::path out_dir_;
  std::unique_ptr<Generator<T>> gen_;
  std::unique_ptr<Discriminator<T>> disc_;
  std::unique_ptr<BicubicOp<T>> downsampler_;
  std::unique_ptr<FeatureExtractor<T>> fx_;
  std::unique_ptr<PatchStream<T>> stream_;
  nn::Adam<T> opt_g_, opt_d_;
  std::int64_t iteration_ = 0;
  int collapse_streak_ = 0;
  double max_noise_scale_grad_ = 0.0;
};

/// PSNR-oriented pretraining: strict L1, no GAN, no perceptual term.
template <typename T>
std::filesystem::path pretrain(RunConfig cfg, const std::filesystem::path& out_dir) {
  cfg.stage = Stage::pretrain;
  cfg.loss.content_mode = ContentMode::strict_l1;
  cfg.loss.lambda_gan = 0;
  cfg.loss.perceptual_mode = PerceptualMode::off;
  Trainer<T> trainer(cfg, out_dir);
  return trainer.train();
}

/// GAN stage; init_checkpoint (usually the pretrained model) may be empty
/// for a cold start.
template <typename T>
std::filesystem::path train_gan(RunConfig cfg, const std::filesystem::path& init_checkpoint,
                                const std::filesystem::path& out_dir) {
  cfg.stage = Stage::gan;
  Trainer<T> trainer(cfg, out_dir);
  if (!init_checkpoint.empty()) trainer.init_generator_from(init_checkpoint);
  return trainer.train();
}

/// Continues an interrupted run from its checkpoint; bit-compatible with an
/// uninterrupted run of the same config and seed.
template <typename T>
std::filesystem::path resume_training(const std::filesystem::path& checkpoint,
                                      const std::filesystem::path& out_dir,
                                      std::optional<std::int64_t> total_override = {}) {
  LoadedCheckpoint<T> ck = load_checkpoint<T>(checkpoint);
  RunConfig cfg = ck.config;
  if (total_override) cfg.total_iterations = *total_override;
  Trainer<T> trainer(cfg, out_dir);
  trainer.restore(checkpoint);
  return trainer.train();
}

}  // namespace manysr
