// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <sstream>

#include "cli.hpp"
#include "hpcflow/perf.hpp"
#include "hpcflow/text.hpp"
#include "support/fs.hpp"
#include "support/oracle.hpp"

namespace hpcflow::cli {
namespace {

namespace fs = std::filesystem;
using testing::config_path;
using testing::fixture_path;
using testing::slurp;

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result hpcflow(std::vector<std::string> args) {
  args.insert(args.begin(), "hpcflow");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string cfg(const char* rel) { return config_path(rel).string(); }
std::string lint_fixture(const char* name) { return fixture_path(std::string("lint/") + name + ".Dockerfile").string(); }
std::string bench(int g) { return fixture_path("bench/resnet50_" + std::to_string(g) + "gpu.log").string(); }

std::vector<std::string> rows(const std::string& csv) {
  std::vector<std::string> out;
  for (auto line : text::lines(csv))
    if (!line.empty()) out.emplace_back(line);
  return out;
}

std::vector<std::string> job_args(const char* sub, const char* profile, const char* spec, int nodes, int gpus) {
  return {"job",     sub,       "--profile",   cfg(profile), "--spec", cfg(spec), "--nodes", std::to_string(nodes),
          "--gpus-per-node", std::to_string(gpus)};
}

TEST(CliProfile, Validate) {
  EXPECT_EQ(hpcflow({"profile", "validate", cfg("clusters/csic.profile")}).code, kOk);
  EXPECT_EQ(hpcflow({"profile", "validate", "/nonexistent.profile"}).code, kOperationalError);

  testing::TempDir dir;
  auto text = slurp(config_path("clusters/csic.profile"));
  auto pos = text.find("module_loads = openmpi/4.0.1");
  text.replace(pos, 28, "module_loads = openmpi/4.0.1, , cuda");
  testing::spit(dir / "bad.profile", text);
  auto r = hpcflow({"profile", "validate", "--machine", (dir / "bad.profile").string()});
  EXPECT_EQ(r.code, kOperationalError);
  EXPECT_EQ(r.out.rfind("error:module_loads:", 0), 0u) << r.out;
}

TEST(CliImage, GenWritesDockerfileAndEntrypoint) {
  testing::TempDir dir;
  auto r = hpcflow({"image", "gen", "--spec", cfg("env/benchmark-entrypoint.env"), "--out", (dir / "Dockerfile").string(),
                    "--machine"});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(rows(r.out).size(), 2u);
  for (const auto& line : rows(r.out)) EXPECT_TRUE(fs::exists(line.substr(line.find(':') + 1))) << line;
  // The generated image lints clean.
  EXPECT_EQ(hpcflow({"image", "lint", (dir / "Dockerfile").string()}).code, kOk);
}

TEST(CliImage, GenFailures) {
  testing::TempDir dir;
  testing::spit(dir / "bad.env", "[environment]\nstrategy = bogus\n");
  EXPECT_EQ(hpcflow({"image", "gen", "--spec", (dir / "bad.env").string(), "--out", (dir / "D").string()}).code,
            kOperationalError);
  EXPECT_EQ(hpcflow({"image", "gen", "--spec", cfg("env/benchmark-tags.env"), "--out", "/nonexistent/dir/Dockerfile"}).code,
            kOperationalError);
  EXPECT_EQ(hpcflow({"image", "gen", "--out", (dir / "D").string()}).code, kUsage);
}

TEST(CliImage, LintExitCodes) {
  auto smelly = hpcflow({"image", "lint", "--machine", lint_fixture("01_tf1_download_then_later_delete")});
  EXPECT_EQ(smelly.code, kLintErrors);
  EXPECT_EQ(smelly.out.rfind("TF1:error:4:", 0), 0u) << smelly.out;
  EXPECT_EQ(hpcflow({"image", "lint", lint_fixture("07_clean_workflow_image")}).code, kOk);
  // Warnings alone do not fail.
  EXPECT_EQ(hpcflow({"image", "lint", lint_fixture("04_tf3_apt_cache_left")}).code, kOk);

  testing::TempDir dir;
  testing::spit(dir / "Dockerfile", "RUN echo before from\n");
  auto bad = hpcflow({"image", "lint", (dir / "Dockerfile").string()});
  EXPECT_EQ(bad.code, kOperationalError);
  EXPECT_FALSE(bad.err.empty());
}

TEST(CliImage, EntrypointScript) {
  auto r = hpcflow({"image", "entrypoint", "--spec", cfg("env/benchmark-entrypoint.env")});
  EXPECT_EQ(r.code, kOk);
  EXPECT_EQ(r.out.rfind("#!/bin/sh\n", 0), 0u);
}

TEST(CliJob, GenCsicTwoByTwo) {
  testing::TempDir dir;
  auto args = job_args("gen", "clusters/csic.profile", "env/benchmark-entrypoint.env", 2, 2);
  args.insert(args.end(), {"--out", (dir / "job.sh").string(), "--", "python", "train.py"});
  auto r = hpcflow(args);
  ASSERT_EQ(r.code, kOk) << r.err;
  const auto script = slurp(dir / "job.sh");
  EXPECT_NE(script.find("-np 4"), std::string::npos) << script;
  EXPECT_NE(script.find("#SBATCH --nodes=2"), std::string::npos) << script;
  EXPECT_TRUE(fs::exists(dir / "job.sh.setup.sh"));
}

TEST(CliJob, GenFailures) {
  testing::TempDir dir;
  const auto out = (dir / "job.sh").string();
  auto mismatch = job_args("gen", "clusters/forhlr2.profile", "env/benchmark-ngc.env", 1, 4);
  mismatch.insert(mismatch.end(), {"--out", out, "--", "python", "x.py"});
  auto r = hpcflow(mismatch);
  EXPECT_EQ(r.code, kOperationalError);
  EXPECT_NE(r.err.find("OpenMPI"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(out));

  auto too_big = job_args("gen", "clusters/csic.profile", "env/benchmark-entrypoint.env", 21, 2);
  too_big.insert(too_big.end(), {"--out", out});
  EXPECT_EQ(hpcflow(too_big).code, kOperationalError);

  auto zero = job_args("gen", "clusters/csic.profile", "env/benchmark-entrypoint.env", 0, 2);
  zero.insert(zero.end(), {"--out", out});
  EXPECT_EQ(hpcflow(zero).code, kUsage);
}

TEST(CliJob, DryRun) {
  auto r = hpcflow(job_args("dry-run", "clusters/csic.profile", "env/benchmark-entrypoint.env", 2, 2));
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(rows(r.out).size(), 4u) << r.out;
  EXPECT_NE(r.out.find("\"$HOME/.local/udocker/udocker/udocker\" pull"), std::string::npos) << r.out;

  auto args = job_args("dry-run", "clusters/csic.profile", "env/benchmark-entrypoint.env", 2, 2);
  args.push_back("--launch");
  auto with_launch = hpcflow(args);
  ASSERT_EQ(rows(with_launch.out).size(), 5u);
  EXPECT_EQ(rows(with_launch.out).back().rfind("mpirun ", 0), 0u);
}

TEST(CliJob, MockRun) {
  auto args = job_args("mock-run", "clusters/csic.profile", "env/benchmark-entrypoint.env", 2, 2);
  args.push_back("--machine");
  auto r = hpcflow(args);
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(rows(r.out), (std::vector<std::string>{"rank,node_index,local_rank,size,exit_code", "0,0,0,4,0", "1,0,1,4,0",
                                                   "2,1,0,4,0", "3,1,1,4,0"}));
  EXPECT_NE(r.err.find("completed"), std::string::npos);

  args.insert(args.end(), {"--rank-command", "false"});
  auto failing = hpcflow(args);
  EXPECT_NE(failing.code, kOk);
  EXPECT_NE(failing.err.find("failed"), std::string::npos);
}

TEST(CliPerf, PredictPresets) {
  for (const char* model : {"inceptionv3", "resnet50", "resnet101"}) {
    auto r = hpcflow({"perf", "predict", "--model", model, "--images-per-sec", "300", "--link-bandwidth", "1.25e10",
                      "--gpus-per-node", "2"});
    ASSERT_EQ(r.code, kOk) << r.err;
    auto lines = rows(r.out);
    ASSERT_EQ(lines.size(), 7u);
    EXPECT_EQ(lines[1].rfind("1,300,1,0,", 0), 0u) << lines[1];
  }
}

TEST(CliPerf, PredictIdealAndUsage) {
  auto r = hpcflow({"perf", "predict", "--model", "resnet50", "--images-per-sec", "100", "--ideal", "--p-max", "8"});
  ASSERT_EQ(r.code, kOk);
  auto lines = rows(r.out);
  ASSERT_EQ(lines.size(), 9u);
  for (int p = 1; p <= 8; ++p) {
    auto cells = text::split_list(lines[p]);
    EXPECT_EQ(cells[0], std::to_string(p));
    EXPECT_EQ(std::stod(cells[2]), p);
  }
  EXPECT_EQ(hpcflow({"perf", "predict", "--model", "resnet50", "--images-per-sec", "100", "--ideal", "--p-min", "0"}).code,
            kUsage);
  EXPECT_EQ(hpcflow({"perf", "predict", "--model", "resnet50", "--ideal"}).code, kUsage);
  EXPECT_EQ(hpcflow({"perf", "predict", "--model", "vgg", "--images-per-sec", "1", "--ideal"}).code, kOperationalError);
}

TEST(CliPerf, BenchReportMatchesOracle) {
  std::vector<std::string> args = {"perf", "bench-report", "--warmup", "10"};
  for (int g = 1; g <= 6; ++g) args.push_back(bench(g));
  auto r = hpcflow(args);
  ASSERT_EQ(r.code, kOk) << r.err;
  auto lines = rows(r.out);
  ASSERT_EQ(lines.size(), 7u);
  EXPECT_EQ(lines[0], "gpus,mean,ci95,speedup");
  double base = 0;
  for (int g = 1; g <= 6; ++g) {
    auto samples = perf::parse_bench_log(slurp(bench(g)), 10).samples;
    auto cells = text::split_list(lines[g]);
    const double mean = testing::oracle::mean(samples);
    if (g == 1) base = mean;
    EXPECT_EQ(std::stoi(cells[0]), g);
    EXPECT_TRUE(testing::oracle::close_rel(std::stod(cells[1]), mean, 1e-9));
    EXPECT_TRUE(testing::oracle::close_rel(std::stod(cells[2]), testing::oracle::ci95_half_width(samples), 1e-8));
    EXPECT_TRUE(testing::oracle::close_rel(std::stod(cells[3]), mean / base, 1e-9));
  }
}

TEST(CliPerf, BenchReportFailures) {
  EXPECT_EQ(hpcflow({"perf", "bench-report", bench(2), bench(3)}).code, kOperationalError);
  EXPECT_EQ(hpcflow({"perf", "bench-report", "--warmup", "20", bench(1)}).code, kOperationalError);
  EXPECT_EQ(hpcflow({"perf", "bench-report", "/nonexistent.log"}).code, kOperationalError);
}

TEST(CliPerf, LearningRate) {
  auto r = hpcflow({"perf", "lr", "--base", "0.0001", "--gpus", "4"});
  ASSERT_EQ(r.code, kOk);
  EXPECT_DOUBLE_EQ(std::stod(r.out), 0.0004);
  EXPECT_EQ(hpcflow({"perf", "lr", "--base", "0.0001", "--gpus", "0"}).code, kUsage);
}

TEST(CliUdocker, InstallScriptIsUserLevel) {
  auto r = hpcflow({"udocker", "install-script"});
  ASSERT_EQ(r.code, kOk);
  EXPECT_EQ(r.out.rfind("#!/bin/sh", 0), 0u);
  EXPECT_EQ(r.out.find("sudo"), std::string::npos);
}

TEST(CliUsage, UnknownAndMissingSubcommands) {
  EXPECT_EQ(hpcflow({}).code, kUsage);
  EXPECT_EQ(hpcflow({"frobnicate"}).code, kUsage);
  EXPECT_EQ(hpcflow({"--help"}).code, kOk);
}

TEST(CliBinary, ExitCodePropagates) {
  const std::string bin = HPCFLOW_BINARY;
  EXPECT_EQ(std::system((bin + " image lint " + lint_fixture("01_tf1_download_then_later_delete") + " >/dev/null").c_str()) >> 8,
            kLintErrors);
  EXPECT_EQ(std::system((bin + " profile validate " + cfg("clusters/csic.profile") + " >/dev/null").c_str()) >> 8, kOk);
}

}  // namespace
}  // namespace hpcflow::cli
