// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0
//
// manysr command-line interface. Subcommands: blur-scan, prepare,
// train-psnr, train-gan, eval, sr, noise-stats. Every run writes an
// effective-config snapshot beside its artifacts; --dry-run validates and
// prints the resolved plan without side effects. Exit codes: 0 success,
// 2 config error, 3 data error, 4 numeric divergence, 5 missing backend,
// 1 anything else.

#include <algorithm>
#include <cctype>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "manysr/blur.hpp"
#include "manysr/config.hpp"
#include "manysr/metrics.hpp"
#include "manysr/png_io.hpp"
#include "manysr/trainer.hpp"

namespace fs = std::filesystem;
using Scalar = float;

namespace {

constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kOk = 0,
  kOtherError = 1,
  kConfigError = 2,
  kDataError = 3,
  kDivergence = 4,
  kMissingBackend = 5,
};

void write_snapshot(const fs::path& dir, const std::string& subcommand, const std::string& text) {
  fs::create_directories(dir);
  std::ofstream f(dir / ("effective_config." + subcommand + ".txt"), std::ios::trunc);
  f << text;
}

std::string flags_text(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

struct TrainArgs {
  std::string config_file;
  std::string preset;
  std::vector<std::string> overrides;
  std::string data_dir;
  std::string out_dir = "runs/out";
  std::string init_checkpoint;
  std::string resume_checkpoint;
  std::int64_t iterations_override = -1;
  std::int64_t seed_override = -1;
  bool dry_run = false;
};

void add_train_options(CLI::App* cmd, TrainArgs& args) {
  cmd->add_option("--config", args.config_file, "key=value config file (schema v1)");
  cmd->add_option("--preset", args.preset, "named preset (table1_a..g, table2_c..e, desk_*)");
  cmd->add_option("--set", args.overrides, "dotted-key=value override, repeatable");
  cmd->add_option("--data", args.data_dir, "HR image directory (shorthand for --set data.dir=...)");
  cmd->add_option("--out", args.out_dir, "output directory for checkpoints and logs");
  cmd->add_option("--resume", args.resume_checkpoint, "resume from this checkpoint");
  cmd->add_option("--iterations", args.iterations_override, "override total iterations (resume only)");
  cmd->add_option("--seed", args.seed_override, "shorthand for --set run.seed=...");
  cmd->add_flag("--dry-run", args.dry_run, "validate and print the plan, no side effects");
}

int run_train(const TrainArgs& args, manysr::Stage stage) {
  using namespace manysr;
  if (!args.resume_checkpoint.empty()) {
    if (!args.config_file.empty() || !args.preset.empty() || !args.overrides.empty()) {
      throw ConfigError("--resume uses the checkpoint's embedded config; drop --config/--preset/--set");
    }
    if (args.dry_run) {
      const auto manifest = read_manifest(args.resume_checkpoint);
      std::printf("resume plan:\n  checkpoint: %s\n  iteration: %" PRId64 "\n  stage: %s\n",
                  args.resume_checkpoint.c_str(), manifest.at("iteration").get<std::int64_t>(),
                  manifest.at("stage").get<std::string>().c_str());
      return kOk;
    }
    std::optional<std::int64_t> total;
    if (args.iterations_override >= 0) total = args.iterations_override;
    const fs::path last = resume_training<Scalar>(args.resume_checkpoint, args.out_dir, total);
    const auto manifest = read_manifest(last);
    write_snapshot(args.out_dir, stage == Stage::gan ? "train-gan" : "train-psnr",
                   manifest.at("config").dump(2) + "\n");
    std::printf("final checkpoint: %s\n", last.string().c_str());
    return kOk;
  }

  std::vector<std::string> overrides = args.overrides;
  if (!args.data_dir.empty()) overrides.push_back("data.dir=" + args.data_dir);
  if (args.seed_override >= 0) overrides.push_back("run.seed=" + std::to_string(args.seed_override));
  if (args.iterations_override >= 0) {
    overrides.push_back("run.total_iterations=" + std::to_string(args.iterations_override));
  }
  std::optional<fs::path> cfg_file;
  if (!args.config_file.empty()) cfg_file = args.config_file;
  std::optional<std::string> preset;
  if (!args.preset.empty()) preset = args.preset;

  BuiltConfig built = build_run_config(cfg_file, preset, overrides, stage);
  if (built.run.data.dir.empty()) {
    throw ConfigError("no training data directory (set data.dir or pass --data)");
  }
  const std::string effective = render_effective(built.effective);
  if (args.dry_run) {
    std::printf("effective config:\n%s", effective.c_str());
    std::printf("plan: %s for %" PRId64 " iterations, artifacts under %s\n",
                to_string(built.run.stage), built.run.total_iterations, args.out_dir.c_str());
    return kOk;
  }
  write_snapshot(args.out_dir, stage == Stage::gan ? "train-gan" : "train-psnr", effective);

  fs::path last;
  if (stage == Stage::pretrain) {
    last = pretrain<Scalar>(built.run, args.out_dir);
  } else {
    last = train_gan<Scalar>(built.run, args.init_checkpoint, args.out_dir);
  }
  std::printf("final checkpoint: %s\n", last.string().c_str());
  return kOk;
}

int run_blur_scan(const std::string& data_dir, int patch, std::int64_t samples, double threshold,
                  std::int64_t seed, const std::string& out, bool dry_run) {
  using namespace manysr;
  const auto flags = flags_text({{"data", data_dir},
                                 {"patch", std::to_string(patch)},
                                 {"samples", std::to_string(samples)},
                                 {"threshold", std::to_string(threshold)},
                                 {"seed", std::to_string(seed)},
                                 {"out", out}});
  if (dry_run) {
    if (!fs::is_directory(data_dir)) throw DataError("not a directory: " + data_dir);
    std::printf("blur-scan plan:\n%swould write report to %s\n", flags.c_str(), out.c_str());
    return kOk;
  }
  BlurReport report = scan_dataset<Scalar>(data_dir, patch, samples, threshold,
                                           static_cast<std::uint64_t>(seed));
  const fs::path out_path(out);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  std::ofstream f(out_path, std::ios::trunc);
  if (!f) throw DataError("cannot write " + out);
  f << report.to_json().dump(2) << "\n";
  write_snapshot(out_path.has_parent_path() ? out_path.parent_path() : fs::path("."),
                 "blur-scan", flags);
  std::printf("scanned %" PRId64 " patches: %" PRId64 " blurry (fraction %.4f, threshold %g)\n",
              report.total_patches, report.blurry_patches, report.fraction(), report.threshold);
  return kOk;
}

int run_prepare(const std::string& data_dir, int patch, int scale, const std::string& out,
                bool dry_run) {
  using namespace manysr;
  if (!fs::is_directory(data_dir)) throw DataError("not a directory: " + data_dir);
  if (patch % scale != 0) throw ConfigError("patch size must be divisible by scale");
  const auto flags = flags_text({{"data", data_dir},
                                 {"patch", std::to_string(patch)},
                                 {"scale", std::to_string(scale)},
                                 {"out", out}});
  if (dry_run) {
    std::printf("prepare plan:\n%swould write manifest to %s\n", flags.c_str(), out.c_str());
    return kOk;
  }
  nlohmann::json files = nlohmann::json::array();
  int usable = 0;
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(data_dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") names.push_back(e.path().string());
  }
  std::sort(names.begin(), names.end());
  for (const auto& name : names) {
    PngInfo info;
    nlohmann::json entry;
    entry["path"] = name;
    if (!read_png_info(name, &info)) {
      entry["usable"] = false;
      entry["reason"] = "unreadable";
    } else {
      entry["height"] = info.height;
      entry["width"] = info.width;
      entry["channels"] = info.channels;
      const bool ok = info.height >= patch && info.width >= patch;
      entry["usable"] = ok;
      if (!ok) entry["reason"] = "smaller than patch size";
      usable += ok ? 1 : 0;
    }
    files.push_back(entry);
  }
  if (usable == 0) throw DataError("no usable images in " + data_dir);
  nlohmann::json manifest;
  manifest["dataset"] = data_dir;
  manifest["patch_size"] = patch;
  manifest["scale"] = scale;
  manifest["usable_count"] = usable;
  manifest["files"] = files;
  const fs::path out_path(out);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  std::ofstream f(out_path, std::ios::trunc);
  if (!f) throw DataError("cannot write " + out);
  f << manifest.dump(2) << "\n";
  write_snapshot(out_path.has_parent_path() ? out_path.parent_path() : fs::path("."), "prepare",
                 flags);
  std::printf("manifest: %d usable of %zu files\n", usable, names.size());
  return kOk;
}

std::vector<fs::path> resolve_checkpoints(const std::vector<std::string>& explicit_ckpts,
                                          const std::string& ckpt_dir, int last_n) {
  using namespace manysr;
  std::vector<fs::path> out;
  for (const auto& c : explicit_ckpts) out.emplace_back(c);
  if (!ckpt_dir.empty()) {
    std::vector<fs::path> found;
    for (const auto& e : fs::directory_iterator(ckpt_dir)) {
      if (e.is_regular_file() && e.path().extension() == ".json" &&
          e.path().filename().string().rfind("ckpt_", 0) == 0) {
        found.push_back(e.path());
      }
    }
    std::sort(found.begin(), found.end());
    const std::size_t take = std::min<std::size_t>(found.size(), static_cast<std::size_t>(last_n));
    out.insert(out.end(), found.end() - static_cast<std::ptrdiff_t>(take), found.end());
  }
  if (out.empty()) throw ConfigError("no checkpoints given (use --checkpoint or --checkpoint-dir)");
  return out;
}

int run_eval(const std::vector<std::string>& ckpts, const std::string& ckpt_dir, int last_n,
             const std::vector<std::string>& datasets, const std::string& lpips_spec,
             int crop_border, bool rgb, std::int64_t lpips_seed, const std::string& out,
             bool dry_run) {
  using namespace manysr;
  const std::vector<fs::path> checkpoints = resolve_checkpoints(ckpts, ckpt_dir, last_n);
  if (datasets.empty()) throw ConfigError("eval: no --data directories given");

  std::unique_ptr<Lpips<Scalar>> lpips;
  if (lpips_spec == "proxy") {
    lpips = std::make_unique<Lpips<Scalar>>(
        Lpips<Scalar>::fixed_random(static_cast<std::uint64_t>(lpips_seed)));
  } else if (lpips_spec != "off") {
    lpips = std::make_unique<Lpips<Scalar>>(Lpips<Scalar>::pretrained(lpips_spec));
  }

  std::string flags = "lpips = " + lpips_spec + "\ncrop_border = " + std::to_string(crop_border) +
                      "\nluma_only = " + (rgb ? std::string("false") : std::string("true")) + "\n";
  for (const auto& c : checkpoints) flags += "checkpoint = " + c.string() + "\n";
  for (const auto& d : datasets) flags += "dataset = " + d + "\n";

  if (dry_run) {
    std::printf("eval plan:\n%s", flags.c_str());
    return kOk;
  }

  std::vector<std::pair<std::string, ScoreTriple>> rows;
  for (const auto& d : datasets) {
    EvalProtocol protocol;
    protocol.checkpoint_set = checkpoints;
    protocol.dataset = d;
    protocol.crop_border = crop_border;
    protocol.luma_only = !rgb;
    rows.emplace_back(fs::path(d).filename().string(), evaluate<Scalar>(protocol, lpips.get()));
  }
  const std::string md = render_scores_markdown(rows);
  std::printf("%s", md.c_str());
  if (!out.empty()) {
    const fs::path base(out);
    if (base.has_parent_path()) fs::create_directories(base.parent_path());
    std::ofstream fm(base.string() + ".md", std::ios::trunc);
    fm << md;
    std::ofstream fj(base.string() + ".json", std::ios::trunc);
    fj << scores_to_json(rows).dump(2) << "\n";
    write_snapshot(base.has_parent_path() ? base.parent_path() : fs::path("."), "eval", flags);
  }
  return kOk;
}

int run_sr(const std::string& ckpt, const std::string& input, const std::string& out_dir,
           int samples, std::int64_t seed, bool dry_run) {
  using namespace manysr;
  if (samples < 1) throw ConfigError("--samples must be >= 1");
  const auto flags = flags_text({{"checkpoint", ckpt},
                                 {"input", input},
                                 {"out", out_dir},
                                 {"samples", std::to_string(samples)},
                                 {"seed", std::to_string(seed)}});
  if (dry_run) {
    read_manifest(ckpt);
    if (!fs::is_regular_file(input)) throw DataError("input image not found: " + input);
    std::printf("sr plan:\n%swould write %d sample(s)\n", flags.c_str(), samples);
    return kOk;
  }
  auto gen = load_generator<Scalar>(ckpt);
  Tensor<Scalar> lr = read_png<Scalar>(input);
  if (lr.channels() == 1) lr = gray_to_rgb(lr);

  fs::create_directories(out_dir);
  const std::string stem = fs::path(input).stem().string();
  const bool stochastic = gen->config().noise_enabled;
  std::vector<Tensor<Scalar>> outputs;
  for (int k = 0; k < samples; ++k) {
    const std::uint64_t sample_seed = derive_seed(static_cast<std::uint64_t>(seed), "sr_sample",
                                                  static_cast<std::uint64_t>(k));
    Tensor<Scalar> sr = stochastic ? gen->forward(lr, Mode::train, sample_seed)
                                   : gen->forward(lr, Mode::eval);
    char name[64];
    std::snprintf(name, sizeof(name), "%s_sr_%02d.png", stem.c_str(), k);
    write_png(fs::path(out_dir) / name, sr);
    outputs.push_back(std::move(sr));
  }
  write_snapshot(out_dir, "sr", flags);
  if (samples > 1) {
    double total = 0;
    int pairs = 0;
    for (std::size_t i = 0; i < outputs.size(); ++i)
      for (std::size_t j = i + 1; j < outputs.size(); ++j) {
        total += static_cast<double>(l1_loss(outputs[i], outputs[j]));
        ++pairs;
      }
    std::printf("wrote %d samples (%s); mean pairwise L1 %.6g\n", samples,
                stochastic ? "stochastic" : "noise disabled, identical", total / pairs);
  } else {
    std::printf("wrote 1 sample\n");
  }
  return kOk;
}

int run_noise_stats(const std::string& ckpt, const std::string& out_csv, const std::string& out_svg,
                    bool dry_run) {
  using namespace manysr;
  const auto flags = flags_text({{"checkpoint", ckpt}, {"out", out_csv}, {"svg", out_svg}});
  if (dry_run) {
    read_manifest(ckpt);
    std::printf("noise-stats plan:\n%s", flags.c_str());
    return kOk;
  }
  auto gen = load_generator<Scalar>(ckpt);
  const auto stats = noise_scale_stats(*gen);
  const fs::path out_path(out_csv);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  write_noise_scale_csv(out_path, stats);
  if (!out_svg.empty()) write_noise_scale_svg(out_svg, stats);
  write_snapshot(out_path.has_parent_path() ? out_path.parent_path() : fs::path("."),
                 "noise-stats", flags);
  std::printf("wrote per-block noise scale summaries for %zu blocks\n", stats.size());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"manysr: one-to-many perceptual super-resolution pipeline"};
  app.set_version_flag("--version", std::string("manysr ") + kVersion);
  app.require_subcommand(1);

  // blur-scan
  auto* scan = app.add_subcommand("blur-scan", "Laplacian-variance blur statistics of a dataset");
  std::string scan_data, scan_out = "blur_report.json";
  int scan_patch = 96;
  std::int64_t scan_samples = 16000, scan_seed = 0;
  double scan_threshold = 100.0;
  bool scan_dry = false;
  scan->add_option("--data", scan_data, "flat directory of PNG images")->required();
  scan->add_option("--patch", scan_patch, "patch size (default 96)");
  scan->add_option("--samples", scan_samples, "number of random patches (default 16000)");
  scan->add_option("--threshold", scan_threshold, "blur threshold (default 100)");
  scan->add_option("--seed", scan_seed, "RNG seed");
  scan->add_option("--out", scan_out, "report JSON path");
  scan->add_flag("--dry-run", scan_dry, "validate and print the plan");

  // prepare
  auto* prep = app.add_subcommand("prepare", "validate a dataset and write its manifest");
  std::string prep_data, prep_out = "dataset_manifest.json";
  int prep_patch = 128, prep_scale = 4;
  bool prep_dry = false;
  prep->add_option("--data", prep_data, "flat directory of PNG images")->required();
  prep->add_option("--patch", prep_patch, "training patch size");
  prep->add_option("--scale", prep_scale, "super-resolution scale");
  prep->add_option("--out", prep_out, "manifest JSON path");
  prep->add_flag("--dry-run", prep_dry, "validate and print the plan");

  // train-psnr / train-gan
  auto* tp = app.add_subcommand("train-psnr", "stage 1: PSNR-oriented L1 pretraining");
  TrainArgs tp_args;
  add_train_options(tp, tp_args);
  auto* tg = app.add_subcommand("train-gan", "stage 2: adversarial training");
  TrainArgs tg_args;
  add_train_options(tg, tg_args);
  tg->add_option("--init", tg_args.init_checkpoint, "initialize the generator from this checkpoint");

  // eval
  auto* ev = app.add_subcommand("eval", "score checkpoints on datasets (LPIPS / PSNR / SSIM)");
  std::vector<std::string> ev_ckpts, ev_datasets;
  std::string ev_ckpt_dir, ev_lpips = "off", ev_out;
  int ev_last = 5, ev_border = -1;
  std::int64_t ev_lpips_seed = 0;
  bool ev_rgb = false, ev_dry = false;
  ev->add_option("--checkpoint", ev_ckpts, "checkpoint path, repeatable");
  ev->add_option("--checkpoint-dir", ev_ckpt_dir, "directory of checkpoints");
  ev->add_option("--last", ev_last, "take the last N checkpoints of --checkpoint-dir (default 5)");
  ev->add_option("--data", ev_datasets, "evaluation dataset directory, repeatable")->required();
  ev->add_option("--lpips", ev_lpips, "LPIPS backend: off, proxy, or a weights archive path");
  ev->add_option("--lpips-seed", ev_lpips_seed, "seed of the proxy backend");
  ev->add_option("--crop-border", ev_border, "border crop in pixels (-1 = scale)");
  ev->add_flag("--rgb", ev_rgb, "score on RGB instead of BT.601 luma");
  ev->add_option("--out", ev_out, "report path prefix (writes .md and .json)");
  ev->add_flag("--dry-run", ev_dry, "validate and print the plan");

  // sr
  auto* sr = app.add_subcommand("sr", "super-resolve an image, N samples via noise seeds");
  std::string sr_ckpt, sr_input, sr_out = "sr_out";
  int sr_samples = 1;
  std::int64_t sr_seed = 0;
  bool sr_dry = false;
  sr->add_option("--checkpoint", sr_ckpt, "generator checkpoint")->required();
  sr->add_option("--input", sr_input, "LR input PNG")->required();
  sr->add_option("--out", sr_out, "output directory");
  sr->add_option("--samples", sr_samples, "number of samples (distinct seeds)");
  sr->add_option("--seed", sr_seed, "base seed");
  sr->add_flag("--dry-run", sr_dry, "validate and print the plan");

  // noise-stats
  auto* ns = app.add_subcommand("noise-stats", "per-block noise scale five-number summaries");
  std::string ns_ckpt, ns_out = "noise_stats.csv", ns_svg;
  bool ns_dry = false;
  ns->add_option("--checkpoint", ns_ckpt, "generator checkpoint")->required();
  ns->add_option("--out", ns_out, "CSV output path");
  ns->add_option("--svg", ns_svg, "also write a boxplot SVG");
  ns->add_flag("--dry-run", ns_dry, "validate and print the plan");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (scan->parsed()) {
      return run_blur_scan(scan_data, scan_patch, scan_samples, scan_threshold, scan_seed,
                           scan_out, scan_dry);
    }
    if (prep->parsed()) return run_prepare(prep_data, prep_patch, prep_scale, prep_out, prep_dry);
    if (tp->parsed()) return run_train(tp_args, manysr::Stage::pretrain);
    if (tg->parsed()) return run_train(tg_args, manysr::Stage::gan);
    if (ev->parsed()) {
      return run_eval(ev_ckpts, ev_ckpt_dir, ev_last, ev_datasets, ev_lpips, ev_border, ev_rgb,
                      ev_lpips_seed, ev_out, ev_dry);
    }
    if (sr->parsed()) return run_sr(sr_ckpt, sr_input, sr_out, sr_samples, sr_seed, sr_dry);
    if (ns->parsed()) return run_noise_stats(ns_ckpt, ns_out, ns_svg, ns_dry);
  } catch (const manysr::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const manysr::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kDataError;
  } catch (const manysr::DivergenceError& e) {
    std::fprintf(stderr, "numeric divergence: %s\n", e.what());
    return kDivergence;
  } catch (const manysr::BackendError& e) {
    std::fprintf(stderr, "missing backend: %s\n", e.what());
    return kMissingBackend;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kOtherError;
  }
  return kOk;
}
