// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hpcflow::perf {

struct ModelSpec {
  std::string name;
  std::uint64_t param_count = 1;
  std::uint32_t bytes_per_param = 4;
  std::uint32_t batch_per_gpu = 1;

  double payload_bytes() const { return static_cast<double>(param_count) * bytes_per_param; }
};

/// Reference models: the three image classifiers of the TensorFlow benchmark
/// and the fully convolutional downscaling network.
std::span<const ModelSpec> model_presets();
std::optional<ModelSpec> find_preset(std::string_view name);

struct ScalingInputs {
  ModelSpec model;
  double single_gpu_images_per_sec = 1.0;
  double link_bandwidth = 1.0;        // bytes/s between nodes
  double link_latency = 0.0;          // seconds per ring step
  int gpus_per_node = 1;
  double intra_node_bandwidth = 1.0;  // bytes/s inside a node, >= link_bandwidth
};

/// Throws std::domain_error when a rate, bandwidth or count is not positive
/// or the intra-node bandwidth is below the link bandwidth.
void check(const ScalingInputs& in);

struct ScalingEstimate {
  int p = 1;
  double predicted_images_per_sec = 0.0;
  double speedup = 1.0;
  double comm_seconds_per_step = 0.0;
  double comp_seconds_per_step = 0.0;
};

/// Bytes each worker sends in a bandwidth-optimal ring allreduce:
/// reduce-scatter plus allgather, 2(p-1)/p of the payload.
double allreduce_bytes(int p, double payload);

/// Step time = compute + allreduce transfer over the slowest link in use +
/// 2(p-1) latency hops. Intra-node bandwidth applies while p fits one node.
ScalingEstimate predict(const ScalingInputs& in, int p);

/// Linear learning-rate scaling with the number of workers.
double scale_learning_rate(double base_lr, int p);

struct BenchRun {
  std::string label;
  int gpus = 1;
  std::vector<double> samples;
  std::size_t warmup_count = 0;
};

/// Reads `iter <k>: <value> images/sec` lines. Blank lines are skipped and
/// `# label: <text>` / `# gpus: <n>` header comments fill the run's label and
/// GPU count. The first `warmup_count` samples are dropped.
BenchRun parse_bench_log(std::string_view text, std::size_t warmup_count);

struct BenchSummary {
  double mean = 0.0;
  double ci95_half_width = 0.0;
  std::size_t n = 0;
  bool ci_defined = false;
  std::optional<double> speedup_vs_baseline;
};

/// Two-sided 97.5% Student-t quantile for `df` degrees of freedom.
double t_quantile_975(std::size_t df);

/// Mean and Student-t 95% half-width, t(0.975, n-1) * s / sqrt(n). A single
/// sample has no interval: the half-width is 0 and `ci_defined` is false.
BenchSummary summarize(const BenchRun& run, const BenchRun* baseline = nullptr);

/// (gpus, speedup) rows sorted by GPU count, speedup relative to the single
/// 1-GPU run. Throws std::invalid_argument without a baseline or with
/// repeated GPU counts.
std::vector<std::pair<int, double>> speedup_table(std::span<const BenchRun> runs);

}  // namespace hpcflow::perf
