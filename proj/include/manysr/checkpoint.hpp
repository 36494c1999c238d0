// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoints: a tensor archive (<base>.wts) holding generator,
// discriminator, and Adam moment tensors, plus a sidecar JSON manifest
// (<base>.json) with config, iteration, loss weights, the run seed, and the
// data-stream state needed for bit-exact resume.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "manysr/archive.hpp"
#include "manysr/run_config.hpp"

namespace manysr {

inline constexpr int kCheckpointFormatVersion = 1;

// --- config <-> json -------------------------------------------------------

inline nlohmann::json to_json(const GeneratorConfig& c) {
  return {{"num_rrdb", c.num_rrdb},
          {"trunk_channels", c.trunk_channels},
          {"growth_channels", c.growth_channels},
          {"scale", c.scale},
          {"noise_enabled", c.noise_enabled}};
}
inline GeneratorConfig generator_config_from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  c.num_rrdb = j.at("num_rrdb");
  c.trunk_channels = j.at("trunk_channels");
  c.growth_channels = j.at("growth_channels");
  c.scale = j.at("scale");
  c.noise_enabled = j.at("noise_enabled");
  return c;
}

inline nlohmann::json to_json(const DiscriminatorConfig& c) {
  return {{"base_channels", c.base_channels},
          {"input_channels", c.input_channels},
          {"input_size", c.input_size}};
}
inline DiscriminatorConfig discriminator_config_from_json(const nlohmann::json& j) {
  DiscriminatorConfig c;
  c.base_channels = j.at("base_channels");
  c.input_channels = j.at("input_channels");
  c.input_size = j.at("input_size");
  return c;
}

inline nlohmann::json to_json(const LossWeights& w) {
  return {{"w_content", w.w_content},
          {"lambda_gan", w.lambda_gan},
          {"w_percep", w.w_percep},
          {"content_mode", to_string(w.content_mode)},
          {"perceptual_mode", to_string(w.perceptual_mode)}};
}
inline ContentMode content_mode_from_string(const std::string& s) {
  if (s == "strict_l1") return ContentMode::strict_l1;
  if (s == "cycle") return ContentMode::cycle;
  if (s == "none") return ContentMode::none;
  throw ConfigError("unknown content_mode: " + s);
}
inline PerceptualMode perceptual_mode_from_string(const std::string& s) {
  if (s == "pretrained") return PerceptualMode::pretrained_features;
  if (s == "random") return PerceptualMode::fixed_random_features;
  if (s == "off") return PerceptualMode::off;
  throw ConfigError("unknown perceptual_mode: " + s);
}
inline LossWeights loss_weights_from_json(const nlohmann::json& j) {
  LossWeights w;
  w.w_content = j.at("w_content");
  w.lambda_gan = j.at("lambda_gan");
  w.w_percep = j.at("w_percep");
  w.content_mode = content_mode_from_string(j.at("content_mode"));
  w.perceptual_mode = perceptual_mode_from_string(j.at("perceptual_mode"));
  return w;
}

inline nlohmann::json to_json(const ScheduleSpec& s) {
  return {{"initial_lr", s.initial_lr},
          {"decay_factor", s.decay_factor},
          {"milestones", s.milestones},
          {"period", s.period}};
}
inline ScheduleSpec schedule_from_json(const nlohmann::json& j) {
  ScheduleSpec s;
  s.initial_lr = j.at("initial_lr");
  s.decay_factor = j.at("decay_factor");
  s.milestones = j.at("milestones").get<std::vector<std::int64_t>>();
  s.period = j.at("period");
  return s;
}

inline nlohmann::json to_json(const RunConfig& c) {
  return {{"stage", to_string(c.stage)},
          {"batch_size", c.batch_size},
          {"total_iterations", c.total_iterations},
          {"patch_size", c.patch_size},
          {"scale", c.scale},
          {"blur_filter", c.blur_filter},
          {"noise_enabled", c.noise_enabled},
          {"condition_discriminator", c.condition_discriminator},
          {"checkpoint_every", c.checkpoint_every},
          {"seed", c.seed},
          {"grad_clip", c.grad_clip},
          {"percep_weights", c.percep_weights},
          {"generator", to_json(c.gen)},
          {"discriminator", to_json(c.disc)},
          {"loss_weights", to_json(c.loss)},
          {"sched_g", to_json(c.sched_g)},
          {"sched_d", to_json(c.sched_d)},
          {"data", {{"dir", c.data.dir},
                    {"per_image_yield", c.data.per_image_yield},
                    {"buffer_capacity", c.data.buffer_capacity},
                    {"blur_threshold", c.data.blur_threshold}}}};
}
inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  c.stage = j.at("stage") == "gan" ? Stage::gan : Stage::pretrain;
  c.batch_size = j.at("batch_size");
  c.total_iterations = j.at("total_iterations");
  c.patch_size = j.at("patch_size");
  c.scale = j.at("scale");
  c.blur_filter = j.at("blur_filter");
  c.noise_enabled = j.at("noise_enabled");
  c.condition_discriminator = j.at("condition_discriminator");
  c.checkpoint_every = j.at("checkpoint_every");
  c.seed = j.at("seed");
  c.grad_clip = j.at("grad_clip");
  c.percep_weights = j.at("percep_weights");
  c.gen = generator_config_from_json(j.at("generator"));
  c.disc = discriminator_config_from_json(j.at("discriminator"));
  c.loss = loss_weights_from_json(j.at("loss_weights"));
  c.sched_g = schedule_from_json(j.at("sched_g"));
  c.sched_d = schedule_from_json(j.at("sched_d"));
  c.data.dir = j.at("data").at("dir");
  c.data.per_image_yield = j.at("data").at("per_image_yield");
  c.data.buffer_capacity = j.at("data").at("buffer_capacity");
  c.data.blur_threshold = j.at("data").at("blur_threshold");
  return c;
}

// --- checkpoint save/load --------------------------------------------------

namespace detail {
template <typename T>
void append_params(std::vector<NamedTensor<T>>& out, const nn::ParamRefs<T>& params) {
  for (const auto* p : params) {
    NamedTensor<T> t;
    t.name = p->name;
    for (int d : p->shape) t.dims.push_back(d);
    t.data = p->value;
    out.push_back(std::move(t));
  }
}

template <typename T>
void append_adam(std::vector<NamedTensor<T>>& out, const nn::Adam<T>& opt, const std::string& prefix) {
  for (const auto& [name, mv] : opt.moments) {
    out.push_back({prefix + ".m." + name, {static_cast<std::int64_t>(mv.first.size())}, mv.first});
    out.push_back({prefix + ".v." + name, {static_cast<std::int64_t>(mv.second.size())}, mv.second});
  }
}

template <typename T>
void load_params(const std::vector<NamedTensor<T>>& tensors, const nn::ParamRefs<T>& params) {
  for (auto* p : params) {
    bool found = false;
    for (const auto& t : tensors) {
      if (t.name != p->name) continue;
      if (t.data.size() != p->value.size()) {
        throw ConfigError("checkpoint tensor " + t.name + " has wrong size");
      }
      p->value = t.data;
      found = true;
      break;
    }
    if (!found) throw ConfigError("checkpoint is missing tensor " + p->name);
  }
}

template <typename T>
void load_adam(const std::vector<NamedTensor<T>>& tensors, nn::Adam<T>& opt,
               const std::string& prefix) {
  for (const auto& t : tensors) {
    if (t.name.rfind(prefix + ".m.", 0) == 0) {
      opt.moments[t.name.substr(prefix.size() + 3)].first = t.data;
    } else if (t.name.rfind(prefix + ".v.", 0) == 0) {
      opt.moments[t.name.substr(prefix.size() + 3)].second = t.data;
    }
  }
}
}  // namespace detail

inline std::filesystem::path checkpoint_base(const std::filesystem::path& p) {
  if (p.extension() == ".json" || p.extension() == ".wts") {
    return std::filesystem::path(p).replace_extension();
  }
  return p;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& base, const RunConfig& config,
                     std::int64_t iteration, Generator<T>& gen, Discriminator<T>* disc,
                     const nn::Adam<T>& opt_g, const nn::Adam<T>* opt_d,
                     const DataCursor& cursor, const std::vector<PatchCropRef>& buffer) {
  std::vector<NamedTensor<T>> tensors;
  detail::append_params(tensors, gen.params());
  detail::append_adam(tensors, opt_g, "adam.g");
  if (disc) {
    detail::append_params(tensors, disc->params());
    if (opt_d) detail::append_adam(tensors, *opt_d, "adam.d");
  }
  write_archive(std::filesystem::path(base).replace_extension(".wts"), tensors);

  nlohmann::json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["kind"] = "manysr-checkpoint";
  j["iteration"] = iteration;
  j["stage"] = to_string(config.stage);
  j["rng_seed"] = config.seed;
  j["config"] = to_json(config);
  j["loss_weights"] = to_json(config.loss);
  j["adam"] = {{"beta1", opt_g.beta1}, {"beta2", opt_g.beta2}, {"eps", opt_g.eps},
               {"g_steps", opt_g.step_count}, {"d_steps", opt_d ? opt_d->step_count : 0}};
  nlohmann::json buf = nlohmann::json::array();
  for (const auto& r : buffer) buf.push_back({r.source, r.y, r.x});
  j["data_state"] = {{"epoch", cursor.epoch}, {"index", cursor.index}, {"buffer", buf}};

  std::ofstream f(std::filesystem::path(base).replace_extension(".json"), std::ios::trunc);
  if (!f) throw DataError("cannot write checkpoint manifest " + base.string());
  f << j.dump(2) << "\n";
}

template <typename T>
struct LoadedCheckpoint {
  RunConfig config;
  std::int64_t iteration = 0;
  std::unique_ptr<Generator<T>> generator;
  std::unique_ptr<Discriminator<T>> discriminator;  // null if absent from archive
  nn::Adam<T> opt_g, opt_d;
  DataCursor cursor;
  std::vector<PatchCropRef> buffer;
};

inline nlohmann::json read_manifest(const std::filesystem::path& path) {
  const auto base = checkpoint_base(path);
  std::ifstream f(std::filesystem::path(base).replace_extension(".json"));
  if (!f) throw DataError("cannot open checkpoint manifest " + base.string() + ".json");
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad checkpoint manifest: " + std::string(e.what()));
  }
  if (!j.contains("format_version") ||
      j.at("format_version").get<int>() > kCheckpointFormatVersion) {
    throw ConfigError("unsupported checkpoint manifest version in " + path.string());
  }
  return j;
}

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::filesystem::path& path) {
  const auto base = checkpoint_base(path);
  const nlohmann::json j = read_manifest(base);

  LoadedCheckpoint<T> ck;
  ck.config = run_config_from_json(j.at("config"));
  ck.iteration = j.at("iteration");
  ck.cursor.epoch = j.at("data_state").at("epoch");
  ck.cursor.index = j.at("data_state").at("index");
  for (const auto& e : j.at("data_state").at("buffer")) {
    ck.buffer.push_back({e.at(0).get<std::string>(), e.at(1).get<int>(), e.at(2).get<int>()});
  }

  auto tensors = read_archive<T>(std::filesystem::path(base).replace_extension(".wts"));
  ck.generator = std::make_unique<Generator<T>>(ck.config.gen);
  detail::load_params(tensors, ck.generator->params());
  ck.opt_g.beta1 = j.at("adam").at("beta1");
  ck.opt_g.beta2 = j.at("adam").at("beta2");
  ck.opt_g.eps = j.at("adam").at("eps");
  ck.opt_g.step_count = j.at("adam").at("g_steps");
  detail::load_adam(tensors, ck.opt_g, "adam.g");

  const bool has_disc = std::any_of(tensors.begin(), tensors.end(), [](const auto& t) {
    return t.name.rfind("d.", 0) == 0;
  });
  if (has_disc) {
    ck.discriminator = std::make_unique<Discriminator<T>>(ck.config.disc);
    detail::load_params(tensors, ck.discriminator->params());
    ck.opt_d.beta1 = ck.opt_g.beta1;
    ck.opt_d.beta2 = ck.opt_g.beta2;
    ck.opt_d.eps = ck.opt_g.eps;
    ck.opt_d.step_count = j.at("adam").at("d_steps");
    detail::load_adam(tensors, ck.opt_d, "adam.d");
  }
  return ck;
}

/// Lightweight load for evaluation/inference: generator weights only.
template <typename T>
std::unique_ptr<Generator<T>> load_generator(const std::filesystem::path& path) {
  const auto base = checkpoint_base(path);
  const nlohmann::json j = read_manifest(base);
  const GeneratorConfig cfg = generator_config_from_json(j.at("config").at("generator"));
  auto tensors = read_archive<T>(std::filesystem::path(base).replace_extension(".wts"));
  auto gen = std::make_unique<Generator<T>>(cfg);
  detail::load_params(tensors, gen->params());
  return gen;
}

}  // namespace manysr
