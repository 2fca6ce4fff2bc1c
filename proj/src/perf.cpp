// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "hpcflow/perf.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <regex>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

#include "hpcflow/error.hpp"
#include "hpcflow/text.hpp"

namespace hpcflow::perf {

namespace {

const std::array<ModelSpec, 4> kPresets{{
    {"inceptionv3", 23'851'784, 4, 256},
    {"resnet50", 25'636'712, 4, 256},
    {"resnet101", 44'707'176, 4, 128},
    {"downscaling-fcn", 1'615'671, 4, 32},
}};

double effective_bandwidth(const ScalingInputs& in, int p) {
  return p <= in.gpus_per_node ? in.intra_node_bandwidth : in.link_bandwidth;
}

}  // namespace

std::span<const ModelSpec> model_presets() { return kPresets; }

std::optional<ModelSpec> find_preset(std::string_view name) {
  for (const auto& m : kPresets) {
    if (m.name == name) return m;
  }
  return std::nullopt;
}

void check(const ScalingInputs& in) {
  if (in.model.param_count == 0 || in.model.bytes_per_param == 0 || in.model.batch_per_gpu == 0)
    throw std::domain_error("model parameters, bytes per parameter and batch must be positive");
  if (!(in.single_gpu_images_per_sec > 0)) throw std::domain_error("single-GPU throughput must be positive");
  if (!(in.link_bandwidth > 0) || !(in.intra_node_bandwidth > 0)) throw std::domain_error("bandwidths must be positive");
  if (in.intra_node_bandwidth < in.link_bandwidth)
    throw std::domain_error("intra-node bandwidth must not be below the link bandwidth");
  if (!(in.link_latency >= 0)) throw std::domain_error("latency must be non-negative");
  if (in.gpus_per_node < 1) throw std::domain_error("gpus_per_node must be ≥ 1");
}

double allreduce_bytes(int p, double payload) {
  if (p < 1) throw std::domain_error("worker count must be ≥ 1");
  if (payload < 0) throw std::domain_error("payload must be non-negative");
  if (p == 1) return 0.0;
  return 2.0 * static_cast<double>(p - 1) * payload / static_cast<double>(p);
}

ScalingEstimate predict(const ScalingInputs& in, int p) {
  check(in);
  if (p < 1) throw std::domain_error("worker count must be ≥ 1");

  auto step = [&](int workers, double& comm) {
    const double bytes = allreduce_bytes(workers, in.model.payload_bytes());
    comm = workers == 1 ? 0.0 : bytes / effective_bandwidth(in, workers) + 2.0 * (workers - 1) * in.link_latency;
    return static_cast<double>(in.model.batch_per_gpu) / in.single_gpu_images_per_sec;
  };

  ScalingEstimate est;
  est.p = p;
  double comm1 = 0.0;
  const double comp = step(1, comm1);
  double comm = 0.0;
  step(p, comm);
  est.comp_seconds_per_step = comp;
  est.comm_seconds_per_step = comm;

  const double t1 = comp + comm1;
  const double tp = comp + comm;
  est.predicted_images_per_sec = p * static_cast<double>(in.model.batch_per_gpu) / tp;
  // p * (t1 / tp) keeps speedup(1) and the zero-communication case exact.
  est.speedup = p * (t1 / tp);
  return est;
}

double scale_learning_rate(double base_lr, int p) {
  if (!(base_lr > 0)) throw std::domain_error("base learning rate must be positive");
  if (p < 1) throw std::domain_error("worker count must be ≥ 1");
  return base_lr * p;
}

BenchRun parse_bench_log(std::string_view text, std::size_t warmup_count) {
  static const std::regex sample_re(R"(iter\s+([0-9]+)\s*:\s*(\S+)\s+images/sec)");
  static const std::regex header_re(R"(#\s*(label|gpus)\s*:\s*(.*))");

  BenchRun run;
  std::vector<double> all;
  const auto lines = text::lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line(text::trim(lines[i]));
    if (line.empty()) continue;
    std::smatch m;
    if (line.front() == '#') {
      if (std::regex_match(line, m, header_re)) {
        const std::string value(text::trim(m[2].str()));
        if (m[1] == "label") {
          run.label = value;
        } else {
          int gpus = 0;
          auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), gpus);
          if (ec != std::errc() || ptr != value.data() + value.size() || gpus < 1)
            throw ParseError(i + 1, "gpus header must be a positive integer");
          run.gpus = gpus;
        }
      }
      continue;
    }
    if (!std::regex_match(line, m, sample_re))
      throw ParseError(i + 1, "expected 'iter <k>: <value> images/sec', got '" + line + "'");
    const std::string num = m[2].str();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), value);
    if (ec != std::errc() || ptr != num.data() + num.size() || !std::isfinite(value) || value < 0)
      throw ParseError(i + 1, "bad throughput value '" + num + "'");
    all.push_back(value);
  }
  if (warmup_count >= all.size())
    throw ValidationError("warm-up of " + std::to_string(warmup_count) + " iterations leaves no samples out of " +
                          std::to_string(all.size()));
  run.warmup_count = warmup_count;
  run.samples.assign(all.begin() + static_cast<std::ptrdiff_t>(warmup_count), all.end());
  return run;
}

double t_quantile_975(std::size_t df) {
  if (df == 0) throw std::domain_error("t quantile needs at least one degree of freedom");
  boost::math::students_t dist(static_cast<double>(df));
  return boost::math::quantile(dist, 0.975);
}

BenchSummary summarize(const BenchRun& run, const BenchRun* baseline) {
  if (run.samples.empty()) throw std::invalid_argument("benchmark run has no samples");
  BenchSummary s;
  s.n = run.samples.size();

  // Welford: one pass, stable for long runs of near-equal values.
  double mean = 0.0, m2 = 0.0;
  std::size_t k = 0;
  for (double x : run.samples) {
    ++k;
    const double delta = x - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (x - mean);
  }
  s.mean = mean;
  if (s.n > 1) {
    const double sd = std::sqrt(m2 / static_cast<double>(s.n - 1));
    s.ci95_half_width = t_quantile_975(s.n - 1) * sd / std::sqrt(static_cast<double>(s.n));
    s.ci_defined = true;
  }
  if (baseline) {
    const auto base = summarize(*baseline);
    if (!(base.mean > 0)) throw std::domain_error("baseline mean throughput is zero");
    s.speedup_vs_baseline = s.mean / base.mean;
  }
  return s;
}

std::vector<std::pair<int, double>> speedup_table(std::span<const BenchRun> runs) {
  std::map<int, const BenchRun*> by_gpus;
  for (const auto& r : runs) {
    if (!by_gpus.emplace(r.gpus, &r).second)
      throw std::invalid_argument("two runs share the GPU count " + std::to_string(r.gpus));
  }
  auto base = by_gpus.find(1);
  if (base == by_gpus.end()) throw std::invalid_argument("no 1-GPU baseline run");

  std::vector<std::pair<int, double>> rows;
  for (const auto& [gpus, run] : by_gpus) {
    rows.emplace_back(gpus, run == base->second ? 1.0 : *summarize(*run, base->second).speedup_vs_baseline);
  }
  return rows;
}

}  // namespace hpcflow::perf
