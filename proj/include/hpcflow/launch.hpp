// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hpcflow/profiles.hpp"
#include "hpcflow/recon.hpp"

namespace hpcflow::launch {

using Command = std::vector<std::string>;

struct JobRequest {
  int nodes = 1;
  int gpus_per_node = 1;
  std::string container_name = "hpcflow";
  PathPair workdir_mount{"$HOME", "/workspace"};
  std::vector<std::string> user_command;
  std::string job_name = "hpcflow";
  // HH:MM:SS; empty means the cluster profile's default.
  std::string walltime;
  std::map<std::string, std::string> extra_env;
};

/// Exported variable; no value means the submitting shell's value is forwarded.
struct EnvExport {
  std::string name;
  std::optional<std::string> value;

  friend bool operator==(const EnvExport&, const EnvExport&) = default;
};

struct LaunchPlan {
  int nodes = 1;
  int gpus_per_node = 1;
  int total_ranks = 1;
  int slots_per_node = 1;
  std::vector<std::string> mpirun_args;
  std::vector<EnvExport> env_exports;
  std::vector<std::string> udocker_run_args;
  std::vector<std::pair<std::string, std::string>> scheduler_directives;

  friend bool operator==(const LaunchPlan&, const LaunchPlan&) = default;
};

struct JobScript {
  std::string text;
  Scheduler scheduler = Scheduler::slurm;
  LaunchPlan plan;
};

/// True for HH:MM:SS with minutes and seconds below 60.
bool is_walltime(std::string_view s);

/// One rank per GPU, placed `gpus_per_node` per node. Throws
/// ValidationError for requests the cluster cannot hold, malformed names or
/// walltimes, and an empty command when the image has no entrypoint.
LaunchPlan plan_launch(const ClusterProfile& cluster, const recon::ReconcilePlan& recon, const JobRequest& req);

/// The single launcher invocation: `mpirun <args> <runtime> run <udocker args>`.
Command launcher_command(const LaunchPlan& plan, const ClusterProfile& cluster);

/// Slurm batch script: shebang, `#SBATCH` directives, module loads, exports,
/// and exactly one mpirun line. Throws ValidationError for `scheduler = none`.
JobScript render_job_script(const LaunchPlan& plan, const ClusterProfile& cluster, const JobRequest& req);

/// pull, create, setup --nvidia, and (entrypoint strategy only) the first
/// run that installs the cluster's OpenMPI and Horovod.
std::vector<Command> render_udocker_setup(const recon::ReconcilePlan& recon, std::string_view container_name,
                                          std::string_view udocker = "udocker");

inline constexpr std::string_view kDefaultUdockerUrl =
    "https://github.com/indigo-dc/udocker/releases/download/1.3.17/udocker-1.3.17.tar.gz";
inline constexpr std::string_view kDefaultUdockerPrefix = "$HOME/.local/udocker";

struct InstallConfig {
  std::string release_url = std::string(kDefaultUdockerUrl);
  std::string prefix = std::string(kDefaultUdockerPrefix);
};

/// POSIX sh that fetches the udocker release tarball into a user-writable
/// prefix and prints the PATH line to use it.
std::string render_install_script(const InstallConfig& config = {});

/// Tokens that require elevated rights anywhere in `script`, one entry per
/// offending line as `<line>: <token>`. Empty means the script runs as an
/// ordinary user.
std::vector<std::string> privileged_tokens(std::string_view script);

/// Host-side companion to privileged_tokens: writes (redirections, mkdir, cp,
/// mv, tee, ln, install, rm, `tar -C`) into system directories such as /etc,
/// /usr or /opt. Not meaningful for scripts that run inside the container,
/// whose file system belongs to the user.
std::vector<std::string> system_path_writes(std::string_view script);

}  // namespace hpcflow::launch
