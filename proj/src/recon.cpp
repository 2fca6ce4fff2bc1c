// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "hpcflow/recon.hpp"

#include <algorithm>
#include <regex>

#include "hpcflow/error.hpp"
#include "hpcflow/image_ref.hpp"
#include "hpcflow/text.hpp"

namespace hpcflow::recon {

MatchKind match_versions(const SemVer& image_side, const SemVer& cluster_side) {
  if (image_side.major != cluster_side.major || image_side.minor != cluster_side.minor) return MatchKind::none;
  if (image_side.patch_specified && cluster_side.patch_specified)
    return image_side.patch == cluster_side.patch ? MatchKind::exact : MatchKind::none;
  return MatchKind::major_minor;
}

std::optional<SemVer> tag_version(std::string_view tag) {
  static const std::regex re("ompi([0-9]+)\\.([0-9]+)(-.+)?");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(tag.begin(), tag.end(), m, re)) return std::nullopt;
  try {
    return SemVer::parse(m[1].str() + "." + m[2].str());
  } catch (const ParseError&) {
    return std::nullopt;
  }
}

std::string select_tag(std::span<const std::string> available_tags, const SemVer& cluster_mpi) {
  std::vector<std::string> matching;
  std::vector<std::string> encoded;
  for (const auto& tag : available_tags) {
    auto v = tag_version(tag);
    if (!v) continue;
    encoded.push_back(v->str());
    if (v->major == cluster_mpi.major && v->minor == cluster_mpi.minor) matching.push_back(tag);
  }
  if (matching.empty()) {
    std::sort(encoded.begin(), encoded.end());
    encoded.erase(std::unique(encoded.begin(), encoded.end()), encoded.end());
    throw ValidationError("no tag for OpenMPI " + std::to_string(cluster_mpi.major) + "." +
                          std::to_string(cluster_mpi.minor) + " (available: " +
                          (encoded.empty() ? std::string("none") : text::join(encoded, ", ")) + ")");
  }
  return *std::min_element(matching.begin(), matching.end());
}

ReconcilePlan reconcile(const EnvironmentSpec& spec, const ClusterProfile& cluster,
                        const std::optional<std::vector<std::string>>& available_tags) {
  check_strategy_fields(spec);
  ReconcilePlan plan;
  plan.strategy_used = spec.strategy;

  switch (spec.strategy) {
    case Strategy::tags: {
      if (!available_tags) throw ValidationError("strategy 'tags' needs the list of available image tags");
      auto tag = select_tag(*available_tags, cluster.openmpi_version);
      auto ref = ImageRef::parse(spec.published_image());
      ref.tag = tag;
      ref.digest.reset();
      plan.image_ref = ref.str();
      plan.match_note = "tag " + tag + " encodes cluster OpenMPI " + std::to_string(cluster.openmpi_version.major) +
                        "." + std::to_string(cluster.openmpi_version.minor);
      break;
    }
    case Strategy::ngc: {
      plan.image_ref = spec.published_image();
      switch (match_versions(*spec.openmpi_version, cluster.openmpi_version)) {
        case MatchKind::none:
          throw ValidationError("image OpenMPI " + spec.openmpi_version->str() + " does not match cluster OpenMPI " +
                                cluster.openmpi_version.str());
        case MatchKind::major_minor:
          plan.match_note = "major.minor match";
          break;
        case MatchKind::exact:
          plan.match_note = "exact match";
          break;
      }
      break;
    }
    case Strategy::entrypoint:
      plan.image_ref = spec.published_image();
      plan.runtime_args = {cluster.openmpi_version.str(), spec.horovod_version};
      plan.match_note = "entrypoint installs cluster OpenMPI " + cluster.openmpi_version.str() + " at first start";
      break;
  }
  return plan;
}

std::vector<std::string> default_version_args(const EnvironmentSpec& spec) {
  std::string ompi = spec.openmpi_version ? spec.openmpi_version->str() : std::string(kFallbackOpenMpiVersion);
  return {ompi, spec.horovod_version};
}

EntrypointConfig EntrypointConfig::from_spec(const EnvironmentSpec& spec) {
  EntrypointConfig c;
  c.installers = {spec.install_openmpi, spec.install_horovod};
  return c;
}

std::string expand_installer(std::string_view tmpl, std::string_view openmpi, std::string_view horovod) {
  static constexpr std::string_view kOmpi = "{openmpi_version}";
  static constexpr std::string_view kHvd = "{horovod_version}";
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl.substr(i, kOmpi.size()) == kOmpi) {
      out += openmpi;
      i += kOmpi.size();
    } else if (tmpl.substr(i, kHvd.size()) == kHvd) {
      out += horovod;
      i += kHvd.size();
    } else {
      out += tmpl[i++];
    }
  }
  return out;
}

std::string generate_entrypoint(const EntrypointConfig& config) {
  std::string s;
  s += "#!/bin/sh\n";
  s += "# Installs the requested OpenMPI and Horovod versions on first start, then\n";
  s += "# runs the given command.\n";
  s += "#\n";
  s += "#   usage: entry.sh <openmpi_version> <horovod_version> [command...]\n";
  s += "#\n";
  s += "# HPCFLOW_STATE_DIR overrides where the installed-version markers live.\n";
  s += "\n";
  s += "usage() {\n";
  s += "    echo \"usage: $0 <openmpi_version> <horovod_version> [command...]\" >&2\n";
  s += "    exit 2\n";
  s += "}\n";
  s += "\n";
  s += "valid_version() {\n";
  s += "    case $1 in\n";
  s += "        '' | *[!0-9A-Za-z._+-]*) return 1 ;;\n";
  s += "    esac\n";
  s += "    return 0\n";
  s += "}\n";
  s += "\n";
  s += "[ \"$#\" -ge 2 ] || usage\n";
  s += "valid_version \"$1\" || usage\n";
  s += "valid_version \"$2\" || usage\n";
  s += "\n";
  s += "HPCFLOW_OPENMPI_VERSION=$1\n";
  s += "HPCFLOW_HOROVOD_VERSION=$2\n";
  s += "export HPCFLOW_OPENMPI_VERSION HPCFLOW_HOROVOD_VERSION\n";
  s += "shift 2\n";
  s += "\n";
  s += "state_dir=${HPCFLOW_STATE_DIR:-" + config.state_dir + "}\n";
  s += "marker=\"$state_dir/installed-$HPCFLOW_OPENMPI_VERSION-$HPCFLOW_HOROVOD_VERSION\"\n";
  s += "\n";
  s += "if [ ! -f \"$marker\" ]; then\n";
  s += "    echo \"installing OpenMPI $HPCFLOW_OPENMPI_VERSION and Horovod $HPCFLOW_HOROVOD_VERSION\" >&2\n";
  s += "    mkdir -p \"$state_dir\" || exit $?\n";
  for (std::size_t i = 0; i < config.installers.size(); ++i) {
    auto cmd = expand_installer(config.installers[i], "${HPCFLOW_OPENMPI_VERSION}", "${HPCFLOW_HOROVOD_VERSION}");
    s += "    (\n";
    s += "        " + cmd + "\n";
    s += "    ) || {\n";
    s += "        status=$?\n";
    s += "        echo \"installer step " + std::to_string(i + 1) + " failed with status $status\" >&2\n";
    s += "        exit \"$status\"\n";
    s += "    }\n";
  }
  s += "    tmp=\"$marker.tmp.$$\"\n";
  s += "    echo \"openmpi=$HPCFLOW_OPENMPI_VERSION horovod=$HPCFLOW_HOROVOD_VERSION\" > \"$tmp\" || exit $?\n";
  s += "    mv -f \"$tmp\" \"$marker\" || exit $?\n";
  s += "fi\n";
  s += "\n";
  s += "if [ \"$#\" -eq 0 ]; then\n";
  s += "    exec " + config.fallback_shell + "\n";
  s += "fi\n";
  s += "exec \"$@\"\n";
  return s;
}

}  // namespace hpcflow::recon
