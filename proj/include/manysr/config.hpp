// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0
//
// Declarative key-value run configuration (schema v1) with named presets.
// Resolution order: preset keys, then config-file keys, then command-line
// overrides; unknown keys are rejected. Every run can render its effective
// configuration as sorted key=value text for provenance snapshots.

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "manysr/checkpoint.hpp"
#include "manysr/run_config.hpp"

namespace manysr {

using KvMap = std::map<std::string, std::string>;

inline constexpr int kConfigSchemaVersion = 1;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  const auto b = s.find_last_not_of(" \t\r\n");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "config_version", "preset",
      "data.dir", "data.per_image_yield", "data.buffer_capacity", "data.blur_threshold",
      "run.stage", "run.seed", "run.batch_size", "run.total_iterations", "run.patch_size",
      "run.scale", "run.blur_filter", "run.noise_enabled", "run.condition_discriminator",
      "run.checkpoint_every", "run.grad_clip",
      "gen.num_rrdb", "gen.trunk_channels", "gen.growth_channels",
      "disc.base_channels",
      "loss.preset", "loss.content_mode", "loss.perceptual_mode", "loss.w_content",
      "loss.lambda_gan", "loss.w_percep", "loss.percep_weights",
      "sched.g.initial_lr", "sched.g.decay_factor", "sched.g.milestones", "sched.g.period",
      "sched.d.initial_lr", "sched.d.decay_factor", "sched.d.milestones", "sched.d.period",
  };
  return keys;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("config: " + key + " expects a boolean, got '" + v + "'");
}

inline std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("config: " + key + " expects an integer, got '" + v + "'");
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " expects a number, got '" + v + "'");
  }
}

inline std::vector<std::int64_t> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<std::int64_t> out;
  if (detail::trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(key, trim(item)));
  return out;
}

}  // namespace detail

inline KvMap parse_config_text(std::istream& in, const std::string& origin) {
  KvMap kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (!detail::known_keys().count(key)) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    kv[key] = value;
  }
  return kv;
}

inline KvMap parse_config_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path.string());
  KvMap kv = parse_config_text(f, path.string());
  if (!kv.count("config_version")) {
    throw ConfigError(path.string() + ": missing config_version");
  }
  if (detail::parse_int("config_version", kv.at("config_version")) != kConfigSchemaVersion) {
    throw ConfigError(path.string() + ": unsupported config_version (expected " +
                      std::to_string(kConfigSchemaVersion) + ")");
  }
  return kv;
}

/// "dotted.key=value" command-line override.
inline void apply_override(KvMap& kv, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = detail::trim(assignment.substr(0, eq));
  if (!detail::known_keys().count(key)) {
    throw ConfigError("override: unknown key '" + key + "'");
  }
  kv[key] = detail::trim(assignment.substr(eq + 1));
}

/// Named run presets. table1_* mirror the published x4 ablation ladder at
/// full training scale; table2_* carry the x16 recipe (RRDB trunk standing
/// in for the receptive-field architecture); desk_* are minute-scale
/// configurations for smoke runs on a single CPU.
inline const std::map<std::string, KvMap>& presets() {
  static const std::map<std::string, KvMap> table = [] {
    std::map<std::string, KvMap> p;

    KvMap pre = {
        {"run.stage", "pretrain"},
        {"run.batch_size", "16"}, {"run.total_iterations", "500000"},
        {"run.patch_size", "128"}, {"run.scale", "4"},
        {"run.blur_filter", "false"}, {"run.noise_enabled", "false"},
        {"run.checkpoint_every", "5000"},
        {"gen.num_rrdb", "23"}, {"gen.trunk_channels", "64"}, {"gen.growth_channels", "32"},
        {"loss.content_mode", "strict_l1"}, {"loss.perceptual_mode", "off"},
        {"loss.w_content", "1"}, {"loss.lambda_gan", "0"}, {"loss.w_percep", "0"},
        {"sched.g.initial_lr", "2e-4"}, {"sched.g.decay_factor", "2"},
        {"sched.g.period", "200000"}, {"sched.g.milestones", ""},
        {"sched.d.initial_lr", "2e-4"}, {"sched.d.decay_factor", "2"},
        {"sched.d.period", "200000"}, {"sched.d.milestones", ""},
    };
    p["table1_a"] = pre;
    KvMap b = pre;
    b["run.blur_filter"] = "true";
    p["table1_b"] = b;

    KvMap gan = {
        {"run.stage", "gan"},
        {"run.batch_size", "16"}, {"run.total_iterations", "500000"},
        {"run.patch_size", "128"}, {"run.scale", "4"},
        {"run.blur_filter", "true"}, {"run.noise_enabled", "false"},
        {"run.condition_discriminator", "false"},
        {"run.checkpoint_every", "5000"},
        {"gen.num_rrdb", "23"}, {"gen.trunk_channels", "64"}, {"gen.growth_channels", "32"},
        {"disc.base_channels", "64"},
        {"loss.preset", "eq1_pirm"},
        {"sched.g.initial_lr", "1e-4"}, {"sched.g.decay_factor", "2"},
        {"sched.g.milestones", "50000,100000,200000,300000"}, {"sched.g.period", "0"},
        {"sched.d.initial_lr", "1e-4"}, {"sched.d.decay_factor", "2"},
        {"sched.d.milestones", "50000,100000,200000,300000"}, {"sched.d.period", "0"},
    };
    p["table1_c"] = gan;
    KvMap d = gan;
    d["run.condition_discriminator"] = "true";
    p["table1_d"] = d;
    KvMap e = d;
    e["run.noise_enabled"] = "true";
    p["table1_e"] = e;
    KvMap f = e;
    f["loss.preset"] = "eq3";
    p["table1_f"] = f;
    KvMap g = f;
    g["loss.content_mode"] = "none";
    g["loss.perceptual_mode"] = "off";
    g["loss.w_content"] = "0";
    g["loss.w_percep"] = "0";
    p["table1_g"] = g;

    // x16 recipe: batch 4, 200k iterations, initial lr 2e-5 decayed at
    // [50k, 100k].
    KvMap t2 = gan;
    t2["run.scale"] = "16";
    t2["run.patch_size"] = "512";
    t2["run.batch_size"] = "4";
    t2["run.total_iterations"] = "200000";
    t2["sched.g.initial_lr"] = "2e-5";
    t2["sched.g.milestones"] = "50000,100000";
    t2["sched.d.initial_lr"] = "2e-5";
    t2["sched.d.milestones"] = "50000,100000";
    p["table2_c"] = t2;
    KvMap t2d = t2;
    t2d["run.condition_discriminator"] = "true";
    t2d["run.noise_enabled"] = "true";
    p["table2_d"] = t2d;
    KvMap t2e = t2d;
    t2e["loss.preset"] = "eq3";
    p["table2_e"] = t2e;

    // Desk-scale: tiny nets, minutes on one CPU, hermetic perceptual mode.
    KvMap desk = {
        {"run.stage", "pretrain"},
        {"run.batch_size", "4"}, {"run.total_iterations", "200"},
        {"run.patch_size", "64"}, {"run.scale", "4"},
        {"run.blur_filter", "false"}, {"run.noise_enabled", "false"},
        {"run.checkpoint_every", "100"},
        {"gen.num_rrdb", "3"}, {"gen.trunk_channels", "32"}, {"gen.growth_channels", "16"},
        {"disc.base_channels", "32"},
        {"loss.content_mode", "strict_l1"}, {"loss.perceptual_mode", "off"},
        {"loss.w_content", "1"}, {"loss.lambda_gan", "0"}, {"loss.w_percep", "0"},
        {"sched.g.initial_lr", "2e-4"}, {"sched.g.decay_factor", "2"},
        {"sched.g.milestones", ""}, {"sched.g.period", "0"},
        {"sched.d.initial_lr", "1e-4"}, {"sched.d.decay_factor", "2"},
        {"sched.d.milestones", ""}, {"sched.d.period", "0"},
        {"data.per_image_yield", "32"}, {"data.buffer_capacity", "256"},
    };
    p["desk_psnr"] = desk;
    KvMap desk_gan = desk;
    // drop the pretrain loss keys so the eq3 preset takes effect
    for (const char* k : {"loss.content_mode", "loss.w_content", "loss.lambda_gan", "loss.w_percep"}) {
      desk_gan.erase(k);
    }
    desk_gan["run.stage"] = "gan";
    desk_gan["run.total_iterations"] = "100";
    desk_gan["run.blur_filter"] = "true";
    desk_gan["run.noise_enabled"] = "true";
    desk_gan["run.condition_discriminator"] = "true";
    desk_gan["loss.preset"] = "eq3";
    desk_gan["loss.perceptual_mode"] = "random";
    desk_gan["sched.g.initial_lr"] = "1e-4";
    p["desk_gan"] = desk_gan;

    return p;
  }();
  return table;
}

/// Merges preset < file < overrides, then materializes a RunConfig.
/// subcommand_stage is the stage implied by the CLI entry point; a
/// conflicting run.stage key is a config error.
struct BuiltConfig {
  RunConfig run;
  KvMap effective;
};

inline BuiltConfig build_run_config(const std::optional<std::filesystem::path>& config_file,
                                    const std::optional<std::string>& preset_flag,
                                    const std::vector<std::string>& overrides,
                                    std::optional<Stage> subcommand_stage) {
  KvMap file_kv;
  if (config_file) file_kv = parse_config_file(*config_file);

  std::optional<std::string> preset_name = preset_flag;
  if (!preset_name && file_kv.count("preset")) preset_name = file_kv.at("preset");

  KvMap merged;
  if (preset_name) {
    const auto it = presets().find(*preset_name);
    if (it == presets().end()) {
      std::string names;
      for (const auto& [n, _] : presets()) names += n + " ";
      throw ConfigError("unknown preset '" + *preset_name + "' (available: " + names + ")");
    }
    merged = it->second;
  }
  for (const auto& [k, v] : file_kv) {
    if (k == "preset" || k == "config_version") continue;
    merged[k] = v;
  }
  for (const auto& o : overrides) apply_override(merged, o);

  RunConfig cfg;
  // Loss preset first, explicit loss.* keys refine it.
  if (merged.count("loss.preset")) {
    const std::string lp = merged.at("loss.preset");
    if (lp == "eq1_pirm") cfg.loss = LossWeights::eq1_pirm();
    else if (lp == "eq1_released") cfg.loss = LossWeights::eq1_released();
    else if (lp == "eq3") cfg.loss = LossWeights::eq3();
    else throw ConfigError("unknown loss.preset '" + lp + "'");
  }

  for (const auto& [key, value] : merged) {
    using namespace detail;
    if (key == "loss.preset") continue;
    else if (key == "data.dir") cfg.data.dir = value;
    else if (key == "data.per_image_yield") cfg.data.per_image_yield = static_cast<int>(parse_int(key, value));
    else if (key == "data.buffer_capacity") cfg.data.buffer_capacity = static_cast<int>(parse_int(key, value));
    else if (key == "data.blur_threshold") cfg.data.blur_threshold = parse_double(key, value);
    else if (key == "run.stage") {
      if (value != "pretrain" && value != "gan") throw ConfigError("run.stage must be pretrain or gan");
      cfg.stage = value == "gan" ? Stage::gan : Stage::pretrain;
    } else if (key == "run.seed") cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "run.batch_size") cfg.batch_size = static_cast<int>(parse_int(key, value));
    else if (key == "run.total_iterations") cfg.total_iterations = parse_int(key, value);
    else if (key == "run.patch_size") cfg.patch_size = static_cast<int>(parse_int(key, value));
    else if (key == "run.scale") cfg.scale = static_cast<int>(parse_int(key, value));
    else if (key == "run.blur_filter") cfg.blur_filter = parse_bool(key, value);
    else if (key == "run.noise_enabled") cfg.noise_enabled = parse_bool(key, value);
    else if (key == "run.condition_discriminator") cfg.condition_discriminator = parse_bool(key, value);
    else if (key == "run.checkpoint_every") cfg.checkpoint_every = parse_int(key, value);
    else if (key == "run.grad_clip") cfg.grad_clip = parse_double(key, value);
    else if (key == "gen.num_rrdb") cfg.gen.num_rrdb = static_cast<int>(parse_int(key, value));
    else if (key == "gen.trunk_channels") cfg.gen.trunk_channels = static_cast<int>(parse_int(key, value));
    else if (key == "gen.growth_channels") cfg.gen.growth_channels = static_cast<int>(parse_int(key, value));
    else if (key == "disc.base_channels") cfg.disc.base_channels = static_cast<int>(parse_int(key, value));
    else if (key == "loss.content_mode") cfg.loss.content_mode = content_mode_from_string(value);
    else if (key == "loss.perceptual_mode") cfg.loss.perceptual_mode = perceptual_mode_from_string(value);
    else if (key == "loss.w_content") cfg.loss.w_content = parse_double(key, value);
    else if (key == "loss.lambda_gan") cfg.loss.lambda_gan = parse_double(key, value);
    else if (key == "loss.w_percep") cfg.loss.w_percep = parse_double(key, value);
    else if (key == "loss.percep_weights") cfg.percep_weights = value;
    else if (key == "sched.g.initial_lr") cfg.sched_g.initial_lr = parse_double(key, value);
    else if (key == "sched.g.decay_factor") cfg.sched_g.decay_factor = parse_double(key, value);
    else if (key == "sched.g.milestones") cfg.sched_g.milestones = parse_int_list(key, value);
    else if (key == "sched.g.period") cfg.sched_g.period = parse_int(key, value);
    else if (key == "sched.d.initial_lr") cfg.sched_d.initial_lr = parse_double(key, value);
    else if (key == "sched.d.decay_factor") cfg.sched_d.decay_factor = parse_double(key, value);
    else if (key == "sched.d.milestones") cfg.sched_d.milestones = parse_int_list(key, value);
    else if (key == "sched.d.period") cfg.sched_d.period = parse_int(key, value);
    else throw ConfigError("config: unhandled key '" + key + "'");
  }

  if (subcommand_stage) {
    if (merged.count("run.stage") && cfg.stage != *subcommand_stage) {
      throw ConfigError(std::string("config stage '") + to_string(cfg.stage) +
                        "' conflicts with the subcommand (expected " +
                        to_string(*subcommand_stage) + ")");
    }
    cfg.stage = *subcommand_stage;
  }
  cfg.validate_and_sync();

  BuiltConfig out;
  out.run = cfg;
  out.effective = merged;
  out.effective["run.stage"] = to_string(cfg.stage);
  out.effective["config_version"] = std::to_string(kConfigSchemaVersion);
  if (preset_name) out.effective["preset"] = *preset_name;
  return out;
}

/// Sorted key=value text, one per line (std::map iterates sorted).
inline std::string render_effective(const KvMap& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

}  // namespace manysr
