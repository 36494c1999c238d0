// Copyright (C) 2026 manysr authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end tests of the CLI binary: exit codes, artifacts, dry runs, and
// a miniature train -> sr -> eval -> noise-stats workflow.

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "manysr/png_io.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string output;
};

CmdResult run_cli(const std::string& args) {
  const std::string cmd = std::string(MANYSR_CLI_PATH) + " " + args + " 2>&1";
  std::array<char, 4096> buf;
  CmdResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return result;
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe)) result.output += buf.data();
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

fs::path make_dataset(const char* tag, int images = 4, int size = 48) {
  const fs::path dir = fs::temp_directory_path() / (std::string("manysr_cli_") + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (int i = 0; i < images; ++i) {
    manysr::write_png(dir / ("img" + std::to_string(i) + ".png"),
                      synth::natural_image<double>(size, size, 300 + i));
  }
  return dir;
}

const std::string kTinyOverrides =
    " --set run.batch_size=2 --set run.total_iterations=4 --set run.patch_size=16"
    " --set run.scale=2 --set run.checkpoint_every=2 --set gen.num_rrdb=1"
    " --set gen.trunk_channels=8 --set gen.growth_channels=4 --set disc.base_channels=4"
    " --set data.per_image_yield=8 --set data.buffer_capacity=32";

}  // namespace

TEST(Cli, VersionAndHelp) {
  EXPECT_EQ(run_cli("--version").exit_code, 0);
  const auto help = run_cli("--help");
  EXPECT_EQ(help.exit_code, 0);
  for (const char* sub : {"blur-scan", "prepare", "train-psnr", "train-gan", "eval", "sr",
                          "noise-stats"}) {
    EXPECT_NE(help.output.find(sub), std::string::npos) << sub;
  }
}

TEST(Cli, NoSubcommandIsConfigError) {
  EXPECT_EQ(run_cli("").exit_code, 2);
  EXPECT_EQ(run_cli("frobnicate").exit_code, 2);
}

TEST(Cli, BlurScanProducesReport) {
  const fs::path data = make_dataset("scan");
  const fs::path out = fs::temp_directory_path() / "manysr_cli_scan_out" / "report.json";
  fs::remove_all(out.parent_path());
  const auto r = run_cli("blur-scan --data " + data.string() + " --patch 16 --samples 50 --out " +
                         out.string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  std::ifstream f(out);
  ASSERT_TRUE(f.good());
  nlohmann::json j;
  f >> j;
  EXPECT_EQ(j.at("total"), 50);
  EXPECT_EQ(j.at("threshold"), 100.0);
  EXPECT_TRUE(j.contains("fraction"));
  EXPECT_TRUE(j.contains("variance_histogram"));
  EXPECT_TRUE(fs::exists(out.parent_path() / "effective_config.blur-scan.txt"));
  fs::remove_all(data);
  fs::remove_all(out.parent_path());
}

TEST(Cli, BlurScanMissingDataIsDataError) {
  EXPECT_EQ(run_cli("blur-scan --data /nonexistent_dir_xyz --out /tmp/r.json").exit_code, 3);
}

TEST(Cli, DryRunHasNoSideEffects) {
  const fs::path data = make_dataset("dry");
  const fs::path out = fs::temp_directory_path() / "manysr_cli_dry_out";
  fs::remove_all(out);
  const auto r = run_cli("train-psnr --preset desk_psnr --data " + data.string() + " --out " +
                         out.string() + " --dry-run");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("effective config"), std::string::npos);
  EXPECT_NE(r.output.find("run.stage = pretrain"), std::string::npos);
  EXPECT_FALSE(fs::exists(out));
  fs::remove_all(data);
}

TEST(Cli, UnknownConfigKeyIsConfigError) {
  const fs::path data = make_dataset("badkey");
  const auto r = run_cli("train-psnr --data " + data.string() + " --set bogus.key=1 --dry-run");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("unknown key"), std::string::npos);
  fs::remove_all(data);
}

TEST(Cli, MissingLpipsBackendExitCode) {
  const auto r = run_cli("eval --checkpoint /tmp/nope.json --data /tmp --lpips /no/such/file.wts");
  EXPECT_EQ(r.exit_code, 5) << r.output;
}

TEST(Cli, DivergenceExitCode) {
  const fs::path data = make_dataset("diverge", 3, 48);
  const fs::path out = fs::temp_directory_path() / "manysr_cli_diverge_out";
  fs::remove_all(out);
  const auto r = run_cli("train-psnr --data " + data.string() + kTinyOverrides +
                         " --set run.total_iterations=50 --set sched.g.initial_lr=1e8 --out " +
                         out.string());
  EXPECT_EQ(r.exit_code, 4) << r.output;
  EXPECT_TRUE(fs::exists(out / "divergence_dump.json"));
  fs::remove_all(data);
  fs::remove_all(out);
}

TEST(Cli, BlurScanDryRun) {
  const fs::path data = make_dataset("scandry");
  const fs::path out = fs::temp_directory_path() / "manysr_cli_scandry_report.json";
  fs::remove(out);
  const auto r = run_cli("blur-scan --data " + data.string() + " --out " + out.string() +
                         " --dry-run");
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_FALSE(fs::exists(out));
  fs::remove_all(data);
}

TEST(Cli, EndToEndTinyWorkflow) {
  const fs::path data = make_dataset("e2e", 4, 48);
  const fs::path root = fs::temp_directory_path() / "manysr_cli_e2e_out";
  fs::remove_all(root);
  const fs::path pre = root / "pre", gan = root / "gan", sr_out = root / "sr";

  // stage 1
  auto r = run_cli("train-psnr --data " + data.string() + kTinyOverrides + " --seed 5 --out " +
                   pre.string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  ASSERT_TRUE(fs::exists(pre / "ckpt_00000004.json"));
  EXPECT_TRUE(fs::exists(pre / "effective_config.train-psnr.txt"));
  EXPECT_TRUE(fs::exists(pre / "loss_log.csv"));

  // stage 2, initialized from stage 1, with noise + conditioning + cycle
  r = run_cli("train-gan --data " + data.string() + kTinyOverrides +
              " --set run.noise_enabled=true --set run.condition_discriminator=true"
              " --set loss.preset=eq3 --set loss.perceptual_mode=random --seed 5 --init " +
              (pre / "ckpt_00000004").string() + " --out " + gan.string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const fs::path final_ckpt = gan / "ckpt_00000004";
  ASSERT_TRUE(fs::exists(fs::path(final_ckpt).replace_extension(".json")));

  // sr with two samples: distinct noise seeds give distinct files
  manysr::write_png(root / "input_lr.png", synth::natural_image<double>(24, 24, 9));
  r = run_cli("sr --checkpoint " + final_ckpt.string() + " --input " +
              (root / "input_lr.png").string() + " --samples 2 --out " + sr_out.string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_TRUE(fs::exists(sr_out / "input_lr_sr_00.png"));
  EXPECT_TRUE(fs::exists(sr_out / "input_lr_sr_01.png"));
  auto sr0 = manysr::read_png<double>(sr_out / "input_lr_sr_00.png");
  EXPECT_EQ(sr0.height(), 48);
  EXPECT_EQ(sr0.width(), 48);

  // eval: proxy LPIPS on the training dataset, last 2 checkpoints
  r = run_cli("eval --checkpoint-dir " + gan.string() + " --last 2 --data " + data.string() +
              " --lpips proxy --out " + (root / "scores").string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("LPIPS / PSNR / SSIM"), std::string::npos);
  EXPECT_TRUE(fs::exists(root / "scores.md"));
  EXPECT_TRUE(fs::exists(root / "scores.json"));

  // noise-stats CSV + SVG
  r = run_cli("noise-stats --checkpoint " + final_ckpt.string() + " --out " +
              (root / "noise.csv").string() + " --svg " + (root / "noise.svg").string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  std::ifstream csv(root / "noise.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "block_index,min,q1,median,q3,max");

  // resume path: --resume with conflicting flags is a config error
  r = run_cli("train-gan --resume " + final_ckpt.string() + " --preset desk_gan --out /tmp/x");
  EXPECT_EQ(r.exit_code, 2);

  fs::remove_all(data);
  fs::remove_all(root);
}

TEST(Cli, SrDeterministicWhenNoiseDisabled) {
  const fs::path data = make_dataset("srdet", 3, 48);
  const fs::path root = fs::temp_directory_path() / "manysr_cli_srdet_out";
  fs::remove_all(root);
  auto r = run_cli("train-psnr --data " + data.string() + kTinyOverrides +
                   " --set run.total_iterations=1 --out " + (root / "run").string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  manysr::write_png(root / "lr.png", synth::natural_image<double>(16, 16, 4));
  for (int trial = 0; trial < 2; ++trial) {
    r = run_cli("sr --checkpoint " + (root / "run" / "ckpt_00000001").string() + " --input " +
                (root / "lr.png").string() + " --samples 1 --seed " + std::to_string(trial) +
                " --out " + (root / ("sr" + std::to_string(trial))).string());
    ASSERT_EQ(r.exit_code, 0) << r.output;
  }
  auto a = manysr::read_png<double>(root / "sr0" / "lr_sr_00.png");
  auto b = manysr::read_png<double>(root / "sr1" / "lr_sr_00.png");
  for (std::int64_t i = 0; i < a.numel(); ++i) ASSERT_EQ(a.data()[i], b.data()[i]);
  fs::remove_all(data);
  fs::remove_all(root);
}
