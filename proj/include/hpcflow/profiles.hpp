// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hpcflow {

/// `MAJOR.MINOR.PATCH`. A `MAJOR.MINOR` spelling parses with patch 0 and
/// `patch_specified == false`; ordering and equality look at the numbers only.
struct SemVer {
  unsigned major = 0;
  unsigned minor = 0;
  unsigned patch = 0;
  bool patch_specified = true;

  static SemVer parse(std::string_view text);
  /// Renders `MAJOR.MINOR` when the patch was never stated.
  std::string str() const;

  friend std::strong_ordering operator<=>(const SemVer& a, const SemVer& b) {
    if (auto c = a.major <=> b.major; c != 0) return c;
    if (auto c = a.minor <=> b.minor; c != 0) return c;
    return a.patch <=> b.patch;
  }
  friend bool operator==(const SemVer& a, const SemVer& b) { return (a <=> b) == 0; }
};

struct PathPair {
  std::string source;
  std::string target;
  friend bool operator==(const PathPair&, const PathPair&) = default;
};

enum class Scheduler { slurm, none };

std::string_view to_string(Scheduler s);

struct ClusterProfile {
  std::string name;
  Scheduler scheduler = Scheduler::slurm;
  int gpus_per_node = 1;
  int gpu_nodes = 1;
  SemVer openmpi_version;
  std::vector<std::string> module_loads;
  std::string interconnect;
  std::string container_runtime_path;
  std::optional<std::string> partition;
  std::optional<std::string> account;
  std::vector<PathPair> default_mounts;
  std::string default_walltime = "01:00:00";
  // Tokens inserted into every mpirun line; OpenMPI majors differ in MCA syntax.
  std::vector<std::string> mpirun_transport_args = {"-mca", "pml", "ob1", "-mca", "btl", "^openib"};
  // Value passed to `udocker run --user=`; expanded by the batch shell.
  std::string udocker_user = "$USER";

  friend bool operator==(const ClusterProfile&, const ClusterProfile&) = default;
};

enum class Severity { error, warning, info };

std::string_view to_string(Severity s);

struct ValidationIssue {
  Severity severity = Severity::error;
  std::string field;
  std::string message;
};

/// Non-fatal observations made while parsing (unknown keys, defaulted tags).
struct ParseNote {
  std::size_t line = 0;
  std::string message;
};

ClusterProfile parse_cluster_profile(std::string_view text, std::vector<ParseNote>* notes = nullptr);

std::string render_cluster_profile(const ClusterProfile& profile);

/// Empty iff the profile satisfies every invariant and the runtime path is an
/// absolute path. Count and name violations are errors; those can only arise
/// from hand-built profiles because the parser rejects them.
std::vector<ValidationIssue> validate_profile(const ClusterProfile& profile);

enum class Strategy { tags, ngc, entrypoint };

std::string_view to_string(Strategy s);

enum class PackageManager { apt, yum, apk };

struct EnvironmentSpec {
  std::string base_image;  // normalized: always carries a tag or digest
  // Published image the cluster pulls; when empty the base image itself.
  std::string image;
  Strategy strategy = Strategy::entrypoint;
  std::optional<SemVer> openmpi_version;
  std::string horovod_version;
  std::vector<std::string> system_packages;
  PackageManager package_manager = PackageManager::apt;
  std::vector<PathPair> code_copies;
  std::optional<std::string> entrypoint_path;
  std::string registry = "docker.io";
  // Installer templates; `{openmpi_version}` and `{horovod_version}` are
  // substituted where they run.
  std::string install_openmpi;
  std::string install_horovod;

  /// Image reference the cluster works with, tag defaulted and registry applied.
  std::string published_image() const;

  friend bool operator==(const EnvironmentSpec&, const EnvironmentSpec&) = default;
};

std::string default_openmpi_installer();
std::string default_horovod_installer();

/// Throws ValidationError when the strategy and its required fields disagree.
void check_strategy_fields(const EnvironmentSpec& spec);

EnvironmentSpec parse_env_spec(std::string_view text, std::vector<ParseNote>* notes = nullptr);

}  // namespace hpcflow
