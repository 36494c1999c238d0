// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "manysr/data_stream.hpp"
#include "manysr/discriminator.hpp"
#include "manysr/errors.hpp"
#include "manysr/generator.hpp"
#include "manysr/losses.hpp"
#include "manysr/schedule.hpp"

namespace manysr {

enum class Stage { pretrain, gan };

inline const char* to_string(Stage s) { return s == Stage::pretrain ? "pretrain" : "gan"; }

/// Full description of one training run. scale/noise/conditioning flags are
/// mirrored into the network configs by validate_and_sync().
struct RunConfig {
  Stage stage = Stage::pretrain;
  int batch_size = 16;
  std::int64_t total_iterations = 500000;
  int patch_size = 128;
  int scale = 4;
  bool blur_filter = false;
  bool noise_enabled = false;
  bool condition_discriminator = true;
  std::int64_t checkpoint_every = 5000;
  std::uint64_t seed = 0;
  double grad_clip = 0.0;       // 0 disables clipping
  std::string percep_weights;   // pretrained feature archive; empty = $MANYSR_WEIGHTS_DIR default

  GeneratorConfig gen;
  DiscriminatorConfig disc;
  LossWeights loss;
  ScheduleSpec sched_g = ScheduleSpec::periodic(2e-4, 200000);
  ScheduleSpec sched_d = ScheduleSpec::periodic(2e-4, 200000);
  DataConfig data;

  void validate_and_sync() {
    if (batch_size < 1) throw ConfigError("run: batch_size must be >= 1");
    if (total_iterations < 0) throw ConfigError("run: total_iterations must be >= 0");
    if (patch_size < 1) throw ConfigError("run: patch_size must be >= 1");
    if (checkpoint_every < 1) throw ConfigError("run: checkpoint_every must be >= 1");
    if (grad_clip < 0) throw ConfigError("run: grad_clip must be >= 0");
    if (patch_size % scale != 0) throw ConfigError("run: patch_size must be divisible by scale");
    if (data.per_image_yield < 1) throw ConfigError("data: per_image_yield must be >= 1");
    if (data.buffer_capacity < 2 * batch_size) {
      throw ConfigError("data: buffer_capacity must be >= 2 * batch_size");
    }
    gen.scale = scale;
    gen.noise_enabled = noise_enabled;
    disc.input_channels = condition_discriminator ? 6 : 3;
    disc.input_size = patch_size;
    gen.validate();
    if (stage == Stage::gan && loss.lambda_gan > 0) disc.validate();
    loss.validate();
    sched_g.validate();
    sched_d.validate();
  }

  bool same_architecture(const RunConfig& o) const {
    return gen.same_architecture(o.gen) && disc.same_architecture(o.disc);
  }
};

}  // namespace manysr
