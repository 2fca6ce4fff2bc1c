// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hpcflow/profiles.hpp"

namespace hpcflow::recon {

struct ReconcilePlan {
  std::string image_ref;
  // Appended to `udocker run <container>`; the entrypoint strategy puts the
  // two version strings first.
  std::vector<std::string> runtime_args;
  Strategy strategy_used = Strategy::entrypoint;
  std::string match_note;

  friend bool operator==(const ReconcilePlan&, const ReconcilePlan&) = default;
};

enum class MatchKind { none, major_minor, exact };

/// The single place that decides whether two OpenMPI versions are compatible:
/// equal major.minor, and equal patch when both sides stated one.
MatchKind match_versions(const SemVer& image_side, const SemVer& cluster_side);

/// OpenMPI version encoded by a tag of the form `ompi<MAJOR>.<MINOR>[-<variant>]`.
std::optional<SemVer> tag_version(std::string_view tag);

/// Tag whose encoded version equals the cluster's major.minor; among several
/// variants the lexicographically smallest wins.
std::string select_tag(std::span<const std::string> available_tags, const SemVer& cluster_mpi);

ReconcilePlan reconcile(const EnvironmentSpec& spec, const ClusterProfile& cluster,
                        const std::optional<std::vector<std::string>>& available_tags = std::nullopt);

/// Fallback OpenMPI version baked into the image's default CMD when the
/// environment spec leaves it to the cluster.
inline constexpr std::string_view kFallbackOpenMpiVersion = "4.0.1";

/// `[openmpi, horovod]` used as the image's default CMD under the entrypoint strategy.
std::vector<std::string> default_version_args(const EnvironmentSpec& spec);

inline constexpr std::string_view kDefaultStateDir = "/opt/.hpcflow";

struct EntrypointConfig {
  std::vector<std::string> installers = {default_openmpi_installer(), default_horovod_installer()};
  std::string state_dir = std::string(kDefaultStateDir);
  std::string fallback_shell = "/bin/bash";

  static EntrypointConfig from_spec(const EnvironmentSpec& spec);
};

/// Replaces `{openmpi_version}` and `{horovod_version}` in an installer template.
std::string expand_installer(std::string_view tmpl, std::string_view openmpi, std::string_view horovod);

/// POSIX sh entrypoint:
///
///   entry.sh <openmpi_version> <horovod_version> [cmd...]
///
/// Missing or malformed versions print usage to stderr and exit 2. The
/// marker `${HPCFLOW_STATE_DIR:-<state_dir>}/installed-<ompi>-<hvd>` skips the
/// installers; otherwise they run in order, the first failure's exit status
/// is returned and no marker is written, and on success the marker is written
/// via temp file + rename. The script then execs `cmd...`, or the fallback
/// shell when no command was given.
std::string generate_entrypoint(const EntrypointConfig& config = {});

}  // namespace hpcflow::recon
