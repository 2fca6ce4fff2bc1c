// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "hpcflow/dockerfile.hpp"
#include "hpcflow/error.hpp"
#include "hpcflow/launch.hpp"
#include "hpcflow/lint.hpp"
#include "hpcflow/perf.hpp"
#include "hpcflow/profiles.hpp"
#include "hpcflow/recon.hpp"
#include "hpcflow/runner.hpp"
#include "hpcflow/text.hpp"

namespace hpcflow::cli {

namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view content, bool executable = false) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
  out.close();
  if (!out) throw Error("cannot write '" + path.string() + "'");
  if (executable) {
    std::error_code ec;
    fs::permissions(path, fs::perms::owner_exec | fs::perms::group_exec | fs::perms::others_exec,
                    fs::perm_options::add, ec);
  }
}

template <typename Fn>
auto with_path(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ParseError& e) {
    throw ParseError(0, path + ": " + e.what());
  }
}

void print_notes(std::ostream& err, const std::string& path, const std::vector<ParseNote>& notes) {
  for (const auto& n : notes) err << path << ":" << n.line << ": note: " << n.message << "\n";
}

struct JobInputs {
  std::string profile_path;
  std::string spec_path;
  int nodes = 1;
  int gpus_per_node = 1;
  std::string tags;
  std::string container_name = "hpcflow";
  std::string job_name = "hpcflow";
  std::string walltime;
  std::string workdir = "$HOME:/workspace";
  std::vector<std::string> env;
  std::vector<std::string> command;
};

void add_job_options(CLI::App* cmd, JobInputs& in) {
  cmd->add_option("--profile", in.profile_path, "Cluster profile")->required();
  cmd->add_option("--spec", in.spec_path, "Environment spec")->required();
  cmd->add_option("--nodes", in.nodes, "Nodes to use")->check(CLI::PositiveNumber);
  cmd->add_option("--gpus-per-node", in.gpus_per_node, "GPUs (ranks) per node")->check(CLI::PositiveNumber);
  cmd->add_option("--tags", in.tags, "Available image tags: a file with one per line, or a comma-separated list");
  cmd->add_option("--container-name", in.container_name, "udocker container name");
  cmd->add_option("--job-name", in.job_name, "Batch job name");
  cmd->add_option("--walltime", in.walltime, "HH:MM:SS (default from the profile)");
  cmd->add_option("--workdir", in.workdir, "host:container mount for the working directory");
  cmd->add_option("--env", in.env, "NAME=VALUE forwarded to every rank");
  cmd->add_option("command", in.command, "Command run inside the container (after --)");
}

struct Job {
  ClusterProfile cluster;
  EnvironmentSpec spec;
  launch::JobRequest request;
  recon::ReconcilePlan recon;
  launch::LaunchPlan plan;
};

std::optional<std::vector<std::string>> load_tags(const std::string& arg) {
  if (arg.empty()) return std::nullopt;
  std::vector<std::string> tags;
  if (fs::exists(arg)) {
    for (const auto& line : text::lines(read_file(arg))) {
      auto t = text::trim(line);
      if (!t.empty() && t.front() != '#') tags.emplace_back(t);
    }
  } else {
    tags = text::split_list(arg);
  }
  return tags;
}

Job build_job(const JobInputs& in, std::ostream& err) {
  Job job;
  std::vector<ParseNote> notes;
  job.cluster = with_path(in.profile_path, [&] { return parse_cluster_profile(read_file(in.profile_path), &notes); });
  print_notes(err, in.profile_path, notes);
  notes.clear();
  job.spec = with_path(in.spec_path, [&] { return parse_env_spec(read_file(in.spec_path), &notes); });
  print_notes(err, in.spec_path, notes);

  auto& req = job.request;
  req.nodes = in.nodes;
  req.gpus_per_node = in.gpus_per_node;
  req.container_name = in.container_name;
  req.job_name = in.job_name;
  req.walltime = in.walltime;
  req.user_command = in.command;
  auto colon = in.workdir.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == in.workdir.size())
    throw ValidationError("--workdir must be host:container, got '" + in.workdir + "'");
  req.workdir_mount = {in.workdir.substr(0, colon), in.workdir.substr(colon + 1)};
  for (const auto& kv : in.env) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("--env expects NAME=VALUE, got '" + kv + "'");
    req.extra_env[kv.substr(0, eq)] = kv.substr(eq + 1);
  }

  job.recon = recon::reconcile(job.spec, job.cluster, load_tags(in.tags));
  job.plan = launch::plan_launch(job.cluster, job.recon, req);
  return job;
}

// ---------------------------------------------------------------------------

int profile_validate(const std::string& path, bool machine, std::ostream& out, std::ostream& err) {
  std::vector<ParseNote> notes;
  auto profile = with_path(path, [&] { return parse_cluster_profile(read_file(path), &notes); });
  print_notes(err, path, notes);
  auto issues = validate_profile(profile);
  bool errors = false;
  for (const auto& i : issues) {
    errors |= i.severity == Severity::error;
    if (machine)
      out << to_string(i.severity) << ":" << i.field << ":" << i.message << "\n";
    else
      out << path << ": " << to_string(i.severity) << ": " << i.message << "\n";
  }
  if (!machine && issues.empty())
    out << path << ": ok (" << profile.name << ", " << profile.gpu_nodes << " nodes x " << profile.gpus_per_node
        << " GPUs, OpenMPI " << profile.openmpi_version.str() << ")\n";
  return errors ? kOperationalError : kOk;
}

int image_gen(const std::string& spec_path, const std::string& out_path, bool machine, std::ostream& out,
              std::ostream& err) {
  std::vector<ParseNote> notes;
  auto spec = with_path(spec_path, [&] { return parse_env_spec(read_file(spec_path), &notes); });
  print_notes(err, spec_path, notes);

  auto ast = dockerfile::generate(spec);
  const fs::path dockerfile_path(out_path);
  write_file(dockerfile_path, dockerfile::render(ast));
  std::vector<fs::path> written{dockerfile_path};
  if (spec.strategy == Strategy::entrypoint) {
    auto script_path = dockerfile_path.parent_path() / dockerfile::entrypoint_script_name(spec);
    write_file(script_path, recon::generate_entrypoint(recon::EntrypointConfig::from_spec(spec)), true);
    written.push_back(script_path);
  }
  for (const auto& p : written) out << (machine ? "written:" : "wrote ") << p.string() << "\n";
  return kOk;
}

int image_lint(const std::string& path, bool machine, std::ostream& out) {
  auto ast = with_path(path, [&] { return dockerfile::parse(read_file(path), path); });
  auto report = lint::lint(ast);
  out << (machine ? lint::render_machine(report) : lint::render_human(report, path));
  return report.has_errors() ? kLintErrors : kOk;
}

int job_gen(const JobInputs& in, const std::string& out_path, bool machine, std::ostream& out, std::ostream& err) {
  auto job = build_job(in, err);
  auto script = launch::render_job_script(job.plan, job.cluster, job.request);
  auto setup = launch::render_udocker_setup(job.recon, job.request.container_name, job.cluster.container_runtime_path);

  const fs::path script_path(out_path);
  fs::path setup_path = script_path;
  setup_path += ".setup.sh";
  write_file(script_path, script.text, true);
  write_file(setup_path, "#!/bin/sh\nset -e\n" + runner::dry_run(setup), true);
  if (machine) {
    out << "written:" << script_path.string() << "\nwritten:" << setup_path.string() << "\n";
  } else {
    out << "wrote " << script_path.string() << " (" << job.plan.total_ranks << " ranks on " << job.plan.nodes
        << " node(s), image " << job.recon.image_ref << ")\n";
    out << "wrote " << setup_path.string() << " (run once on the cluster before submitting)\n";
    out << "submit with: sbatch " << script_path.string() << "\n";
  }
  err << "recon: " << job.recon.match_note << "\n";
  return kOk;
}

int job_dry_run(const JobInputs& in, bool with_launch, std::ostream& out, std::ostream& err) {
  auto job = build_job(in, err);
  auto commands = launch::render_udocker_setup(job.recon, job.request.container_name, job.cluster.container_runtime_path);
  if (with_launch) commands.push_back(launch::launcher_command(job.plan, job.cluster));
  runner::RecordingExecutor recorder;
  runner::execute_all(recorder, commands);
  out << runner::dry_run(recorder.recorded());
  return kOk;
}

int job_mock_run(const JobInputs& in, const std::string& rank_command, bool machine, std::ostream& out,
                 std::ostream& err) {
  auto job = build_job(in, err);
  auto rank_cmd = text::words(rank_command);
  if (rank_cmd.empty()) throw ValidationError("--rank-command is empty");

  launch::JobScript script;
  if (job.cluster.scheduler == Scheduler::slurm) {
    script = launch::render_job_script(job.plan, job.cluster, job.request);
  } else {
    script.scheduler = Scheduler::none;
    script.plan = job.plan;
    script.text = text::shell_join(launch::launcher_command(job.plan, job.cluster)) + "\n";
  }

  runner::MockScheduler scheduler(rank_cmd);
  auto id = scheduler.submit(std::move(script));
  err << "job " << id << " submitted\n";
  runner::JobState state = runner::JobState::pending;
  while (state == runner::JobState::pending || state == runner::JobState::running) {
    state = scheduler.poll(id);
    err << "job " << id << " " << runner::to_string(state) << "\n";
  }

  const auto& job_result = scheduler.job(id);
  auto value = [](const runner::EnvSnapshot& env, const char* key) {
    auto it = env.find(key);
    return it == env.end() ? std::string("?") : it->second;
  };
  if (machine) out << "rank,node_index,local_rank,size,exit_code\n";
  else out << "rank  node  local  size  exit\n";
  for (const auto& r : job_result.rank_results) {
    if (machine) {
      out << r.rank << "," << value(r.env, "NODE_INDEX") << "," << value(r.env, "LOCAL_RANK") << ","
          << value(r.env, "SIZE") << "," << r.exit_code << "\n";
    } else {
      out << std::left << std::setw(6) << r.rank << std::setw(6) << value(r.env, "NODE_INDEX") << std::setw(7)
          << value(r.env, "LOCAL_RANK") << std::setw(6) << value(r.env, "SIZE") << r.exit_code << "\n";
      if (!r.error.empty()) err << "rank " << r.rank << ": " << r.error;
    }
  }
  return state == runner::JobState::completed ? kOk : kOperationalError;
}

struct PredictArgs {
  std::string model;
  std::uint64_t params = 0;
  std::uint32_t batch = 0;
  std::uint32_t bytes_per_param = 4;
  double images_per_sec = 0;
  double link_bandwidth = 0;
  double intra_bandwidth = 0;
  double latency = 0;
  int gpus_per_node = 1;
  int p_min = 1;
  int p_max = 6;
  bool ideal = false;
};

int perf_predict(const PredictArgs& a, std::ostream& out) {
  perf::ScalingInputs in;
  if (!a.model.empty()) {
    auto preset = perf::find_preset(a.model);
    if (!preset) throw ValidationError("unknown model preset '" + a.model + "'");
    in.model = *preset;
  } else {
    in.model.name = "custom";
  }
  if (a.params) in.model.param_count = a.params;
  if (a.batch) in.model.batch_per_gpu = a.batch;
  in.model.bytes_per_param = a.bytes_per_param;
  if (a.model.empty() && (!a.params || !a.batch)) throw ValidationError("give --model or both --params and --batch");

  in.single_gpu_images_per_sec = a.images_per_sec;
  in.gpus_per_node = a.gpus_per_node;
  if (a.ideal) {
    in.link_bandwidth = in.intra_node_bandwidth = std::numeric_limits<double>::infinity();
    in.link_latency = 0;
  } else {
    if (!(a.link_bandwidth > 0)) throw ValidationError("--link-bandwidth is required unless --ideal");
    in.link_bandwidth = a.link_bandwidth;
    in.intra_node_bandwidth = a.intra_bandwidth > 0 ? a.intra_bandwidth : a.link_bandwidth;
    in.link_latency = a.latency;
  }
  if (a.p_max < a.p_min) throw ValidationError("--p-max is below --p-min");

  out << "p,images_per_sec,speedup,comm_s,comp_s\n";
  out << std::setprecision(10);
  for (int p = a.p_min; p <= a.p_max; ++p) {
    auto est = perf::predict(in, p);
    out << est.p << "," << est.predicted_images_per_sec << "," << est.speedup << "," << est.comm_seconds_per_step
        << "," << est.comp_seconds_per_step << "\n";
  }
  return kOk;
}

int perf_bench_report(const std::vector<std::string>& logs, std::size_t warmup, std::ostream& out) {
  std::vector<perf::BenchRun> runs;
  for (const auto& path : logs) {
    auto run = with_path(path, [&] { return perf::parse_bench_log(read_file(path), warmup); });
    if (run.label.empty()) run.label = fs::path(path).stem().string();
    runs.push_back(std::move(run));
  }
  auto table = perf::speedup_table(runs);
  out << "gpus,mean,ci95,speedup\n";
  out << std::setprecision(10);
  for (const auto& [gpus, speedup] : table) {
    const auto& run = *std::find_if(runs.begin(), runs.end(), [&](const perf::BenchRun& r) { return r.gpus == gpus; });
    auto s = perf::summarize(run);
    out << gpus << "," << s.mean << "," << s.ci95_half_width << "," << speedup << "\n";
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Container workflow toolkit for distributed deep learning on HPC clusters", "hpcflow"};
  app.require_subcommand(1);
  bool machine = false;
  app.add_flag("--machine", machine, "Machine-readable output on stdout")->configurable(false);

  int status = kOk;
  std::function<int()> action;

  // profile validate
  auto* profile = app.add_subcommand("profile", "Cluster profiles")->require_subcommand(1);
  std::string profile_path;
  auto* validate = profile->add_subcommand("validate", "Parse and check a cluster profile");
  validate->add_option("path", profile_path, "Profile file")->required();
  validate->add_flag("--machine", machine);
  validate->callback([&] { action = [&] { return profile_validate(profile_path, machine, out, err); }; });

  // image gen | lint | entrypoint
  auto* image = app.add_subcommand("image", "Dockerfiles and entrypoints")->require_subcommand(1);
  std::string spec_path, out_path, dockerfile_path;
  auto* gen = image->add_subcommand("gen", "Generate the Dockerfile (and entrypoint script) for a spec");
  gen->add_option("--spec", spec_path, "Environment spec")->required();
  gen->add_option("--out", out_path, "Dockerfile to write")->required();
  gen->add_flag("--machine", machine);
  gen->callback([&] { action = [&] { return image_gen(spec_path, out_path, machine, out, err); }; });

  auto* lint_cmd = image->add_subcommand("lint", "Report Dockerfile smells");
  lint_cmd->add_option("path", dockerfile_path, "Dockerfile")->required();
  lint_cmd->add_flag("--machine", machine);
  lint_cmd->callback([&] { action = [&] { return image_lint(dockerfile_path, machine, out); }; });

  auto* entry = image->add_subcommand("entrypoint", "Print the entrypoint script for a spec");
  entry->add_option("--spec", spec_path, "Environment spec")->required();
  entry->callback([&] {
    action = [&] {
      auto spec = with_path(spec_path, [&] { return parse_env_spec(read_file(spec_path)); });
      out << recon::generate_entrypoint(recon::EntrypointConfig::from_spec(spec));
      return kOk;
    };
  });

  // job gen | dry-run | mock-run
  auto* job = app.add_subcommand("job", "Launch planning")->require_subcommand(1);
  JobInputs inputs;
  auto* job_gen_cmd = job->add_subcommand("gen", "Write the batch script and udocker setup commands");
  add_job_options(job_gen_cmd, inputs);
  job_gen_cmd->add_option("--out", out_path, "Batch script to write")->required();
  job_gen_cmd->add_flag("--machine", machine);
  job_gen_cmd->callback([&] { action = [&] { return job_gen(inputs, out_path, machine, out, err); }; });

  bool with_launch = false;
  auto* dry = job->add_subcommand("dry-run", "Print the udocker setup commands without running them");
  add_job_options(dry, inputs);
  dry->add_flag("--launch", with_launch, "Append the mpirun launcher line");
  dry->add_flag("--machine", machine);
  dry->callback([&] { action = [&] { return job_dry_run(inputs, with_launch, out, err); }; });

  std::string rank_command = "env";
  auto* mock = job->add_subcommand("mock-run", "Run the rank grid locally through the mock scheduler");
  add_job_options(mock, inputs);
  mock->add_option("--rank-command", rank_command, "Program each rank runs (default: env)");
  mock->add_flag("--machine", machine);
  mock->callback([&] { action = [&] { return job_mock_run(inputs, rank_command, machine, out, err); }; });

  // udocker install-script
  auto* udocker = app.add_subcommand("udocker", "udocker helpers")->require_subcommand(1);
  launch::InstallConfig install;
  auto* install_cmd = udocker->add_subcommand("install-script", "Print a user-level udocker install script");
  install_cmd->add_option("--prefix", install.prefix, "Install prefix");
  install_cmd->add_option("--url", install.release_url, "Release tarball URL");
  install_cmd->callback([&] {
    action = [&] {
      out << launch::render_install_script(install);
      return kOk;
    };
  });

  // perf predict | bench-report | lr
  auto* perf_cmd = app.add_subcommand("perf", "Scaling model and benchmark statistics")->require_subcommand(1);
  PredictArgs predict;
  auto* pred = perf_cmd->add_subcommand("predict", "Predicted speedup table (CSV)");
  pred->add_option("--model", predict.model, "Preset: inceptionv3, resnet50, resnet101, downscaling-fcn");
  pred->add_option("--params", predict.params, "Parameter count")->check(CLI::PositiveNumber);
  pred->add_option("--batch", predict.batch, "Batch per GPU")->check(CLI::PositiveNumber);
  pred->add_option("--bytes-per-param", predict.bytes_per_param)->check(CLI::PositiveNumber);
  pred->add_option("--images-per-sec", predict.images_per_sec, "Single-GPU throughput")
      ->required()
      ->check(CLI::PositiveNumber);
  pred->add_option("--link-bandwidth", predict.link_bandwidth, "Inter-node bytes/s")->check(CLI::PositiveNumber);
  pred->add_option("--intra-bandwidth", predict.intra_bandwidth, "Intra-node bytes/s")->check(CLI::PositiveNumber);
  pred->add_option("--latency", predict.latency, "Seconds per ring step")->check(CLI::NonNegativeNumber);
  pred->add_option("--gpus-per-node", predict.gpus_per_node)->check(CLI::PositiveNumber);
  pred->add_option("--p-min", predict.p_min)->check(CLI::PositiveNumber);
  pred->add_option("--p-max", predict.p_max)->check(CLI::PositiveNumber);
  pred->add_flag("--ideal", predict.ideal, "No communication cost");
  pred->add_flag("--machine", machine);
  pred->callback([&] { action = [&] { return perf_predict(predict, out); }; });

  std::vector<std::string> logs;
  std::size_t warmup = 10;
  auto* bench = perf_cmd->add_subcommand("bench-report", "Mean, 95% CI and speedup per log (CSV)");
  bench->add_option("logs", logs, "Benchmark logs, one per GPU count")->required();
  bench->add_option("--warmup", warmup, "Leading iterations to drop");
  bench->add_flag("--machine", machine);
  bench->callback([&] { action = [&] { return perf_bench_report(logs, warmup, out); }; });

  double base_lr = 0;
  int lr_gpus = 1;
  auto* lr = perf_cmd->add_subcommand("lr", "Linearly scaled learning rate");
  lr->add_option("--base", base_lr, "Single-GPU learning rate")->required()->check(CLI::PositiveNumber);
  lr->add_option("--gpus", lr_gpus, "Worker count")->required()->check(CLI::PositiveNumber);
  lr->callback([&] {
    action = [&] {
      out << std::setprecision(10) << perf::scale_learning_rate(base_lr, lr_gpus) << "\n";
      return kOk;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::Success&) {
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "hpcflow: " << e.what() << "\n";
    err << "run 'hpcflow --help' for usage\n";
    return kUsage;
  }

  if (!action) return kUsage;
  try {
    status = action();
  } catch (const Error& e) {
    err << "hpcflow: " << e.what() << "\n";
    status = kOperationalError;
  } catch (const std::domain_error& e) {
    err << "hpcflow: " << e.what() << "\n";
    status = kOperationalError;
  } catch (const std::invalid_argument& e) {
    err << "hpcflow: " << e.what() << "\n";
    status = kOperationalError;
  } catch (const fs::filesystem_error& e) {
    err << "hpcflow: " << e.what() << "\n";
    status = kOperationalError;
  }
  return status;
}

}  // namespace hpcflow::cli
