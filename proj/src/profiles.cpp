// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "hpcflow/profiles.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include "hpcflow/error.hpp"
#include "hpcflow/image_ref.hpp"
#include "hpcflow/kvfile.hpp"
#include "hpcflow/text.hpp"

namespace hpcflow {

namespace {

bool parse_unsigned(std::string_view s, unsigned& out) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool has_whitespace(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; });
}

class Reader {
 public:
  Reader(std::string_view text, std::vector<ParseNote>* notes) : doc_(kvfile::Document::parse(text)), notes_(notes) {}

  const kvfile::Entry* optional(std::string_view key) {
    used_.insert(std::string(key));
    return doc_.find(key);
  }

  const kvfile::Entry& required(std::string_view key) {
    if (auto* e = optional(key)) return *e;
    throw ParseError(0, "missing mandatory key '" + std::string(key) + "'");
  }

  int count(std::string_view key) {
    const auto& e = required(key);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (ec != std::errc() || ptr != e.value.data() + e.value.size())
      throw ParseError(e.line, std::string(key) + " must be an integer, got '" + e.value + "'");
    if (v < 1) throw ParseError(e.line, std::string(key) + " must be ≥ 1");
    if (v > 1'000'000) throw ParseError(e.line, std::string(key) + " is implausibly large");
    return static_cast<int>(v);
  }

  SemVer version(const kvfile::Entry& e) {
    try {
      return SemVer::parse(e.value);
    } catch (const ParseError& err) {
      throw ParseError(e.line, err.what());
    }
  }

  std::vector<PathPair> pairs(std::string_view key) {
    std::vector<PathPair> out;
    auto* e = optional(key);
    if (!e) return out;
    for (const auto& item : text::split_list(e->value)) {
      auto colon = item.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == item.size())
        throw ParseError(e->line, std::string(key) + ": expected 'source:target', got '" + item + "'");
      out.push_back(PathPair{item.substr(0, colon), item.substr(colon + 1)});
    }
    return out;
  }

  void note(std::size_t line, std::string message) {
    if (notes_) notes_->push_back(ParseNote{line, std::move(message)});
  }

  void report_unknown() {
    for (const auto& e : doc_.entries()) {
      if (!used_.count(e.key)) note(e.line, "unknown key '" + e.key + "' ignored");
    }
  }

 private:
  kvfile::Document doc_;
  std::vector<ParseNote>* notes_;
  std::set<std::string> used_;
};

std::string render_pairs(const std::vector<PathPair>& pairs) {
  std::vector<std::string> parts;
  for (const auto& p : pairs) parts.push_back(p.source + ":" + p.target);
  return text::join(parts, ", ");
}

}  // namespace

SemVer SemVer::parse(std::string_view text) {
  auto t = text::trim(text);
  auto fail = [&] { return ParseError(0, "unparseable version '" + std::string(t) + "' (expected MAJOR.MINOR[.PATCH])"); };
  auto parts = text::split_list(t, '.');
  if (parts.size() != 2 && parts.size() != 3) throw fail();
  SemVer v;
  if (!parse_unsigned(parts[0], v.major) || !parse_unsigned(parts[1], v.minor)) throw fail();
  if (parts.size() == 3) {
    if (!parse_unsigned(parts[2], v.patch)) throw fail();
    v.patch_specified = true;
  } else {
    v.patch = 0;
    v.patch_specified = false;
  }
  return v;
}

std::string SemVer::str() const {
  std::string out = std::to_string(major) + "." + std::to_string(minor);
  if (patch_specified) out += "." + std::to_string(patch);
  return out;
}

std::string_view to_string(Scheduler s) { return s == Scheduler::slurm ? "slurm" : "none"; }

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::error: return "error";
    case Severity::warning: return "warning";
    case Severity::info: return "info";
  }
  return "error";
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::tags: return "tags";
    case Strategy::ngc: return "ngc";
    case Strategy::entrypoint: return "entrypoint";
  }
  return "entrypoint";
}

ClusterProfile parse_cluster_profile(std::string_view text, std::vector<ParseNote>* notes) {
  Reader r(text, notes);
  ClusterProfile p;

  const auto& name = r.required("name");
  if (!text::is_identifier(name.value)) throw ParseError(name.line, "name must be an identifier, got '" + name.value + "'");
  p.name = name.value;

  const auto& sched = r.required("scheduler");
  if (sched.value == "slurm")
    p.scheduler = Scheduler::slurm;
  else if (sched.value == "none")
    p.scheduler = Scheduler::none;
  else
    throw ParseError(sched.line, "scheduler must be 'slurm' or 'none', got '" + sched.value + "'");

  p.gpus_per_node = r.count("gpus_per_node");
  p.gpu_nodes = r.count("gpu_nodes");
  p.openmpi_version = r.version(r.required("openmpi_version"));
  p.container_runtime_path = r.required("container_runtime_path").value;

  if (auto* e = r.optional("module_loads")) p.module_loads = text::split_list(e->value);
  if (auto* e = r.optional("interconnect")) p.interconnect = e->value;
  if (auto* e = r.optional("partition"); e && !e->value.empty()) p.partition = e->value;
  if (auto* e = r.optional("account"); e && !e->value.empty()) p.account = e->value;
  p.default_mounts = r.pairs("default_mounts");
  if (auto* e = r.optional("default_walltime")) p.default_walltime = e->value;
  if (auto* e = r.optional("mpirun_transport_args")) p.mpirun_transport_args = text::words(e->value);
  if (auto* e = r.optional("udocker_user")) p.udocker_user = e->value;

  r.report_unknown();
  return p;
}

std::string render_cluster_profile(const ClusterProfile& p) {
  std::ostringstream out;
  out << "[cluster]\n";
  out << "name = " << p.name << "\n";
  out << "scheduler = " << to_string(p.scheduler) << "\n";
  out << "gpus_per_node = " << p.gpus_per_node << "\n";
  out << "gpu_nodes = " << p.gpu_nodes << "\n";
  out << "openmpi_version = " << p.openmpi_version.str() << "\n";
  out << "module_loads = " << text::join(p.module_loads, ", ") << "\n";
  out << "interconnect = " << p.interconnect << "\n";
  out << "container_runtime_path = " << p.container_runtime_path << "\n";
  if (p.partition) out << "partition = " << *p.partition << "\n";
  if (p.account) out << "account = " << *p.account << "\n";
  out << "default_mounts = " << render_pairs(p.default_mounts) << "\n";
  out << "\n[launch]\n";
  out << "default_walltime = " << p.default_walltime << "\n";
  out << "mpirun_transport_args = " << text::join(p.mpirun_transport_args, " ") << "\n";
  out << "udocker_user = " << p.udocker_user << "\n";
  return out.str();
}

std::vector<ValidationIssue> validate_profile(const ClusterProfile& p) {
  std::vector<ValidationIssue> issues;
  auto add = [&](Severity s, std::string field, std::string msg) {
    issues.push_back(ValidationIssue{s, std::move(field), std::move(msg)});
  };

  if (!text::is_identifier(p.name)) add(Severity::error, "name", "name must be an identifier");
  if (p.gpus_per_node < 1) add(Severity::error, "gpus_per_node", "gpus_per_node must be ≥ 1");
  if (p.gpu_nodes < 1) add(Severity::error, "gpu_nodes", "gpu_nodes must be ≥ 1");

  for (std::size_t i = 0; i < p.module_loads.size(); ++i) {
    const auto& m = p.module_loads[i];
    if (m.empty())
      add(Severity::error, "module_loads", "module_loads entry " + std::to_string(i + 1) + " is empty");
    else if (has_whitespace(m))
      add(Severity::error, "module_loads", "module_loads entry '" + m + "' contains whitespace");
  }

  if (p.container_runtime_path.empty())
    add(Severity::error, "container_runtime_path", "container_runtime_path is empty");
  else if (p.container_runtime_path.front() != '/' && p.container_runtime_path.front() != '$')
    add(Severity::warning, "container_runtime_path",
        "container_runtime_path '" + p.container_runtime_path + "' is not absolute; batch jobs may start elsewhere");

  for (const auto& m : p.default_mounts) {
    if (m.target.empty() || m.target.front() != '/')
      add(Severity::error, "default_mounts", "mount target '" + m.target + "' must be an absolute container path");
  }
  return issues;
}

std::string default_openmpi_installer() {
  return "curl -fsSL -o /tmp/openmpi-{openmpi_version}.tar.gz "
         "https://download.open-mpi.org/release/open-mpi/v$(echo {openmpi_version} | cut -d. -f1,2)/"
         "openmpi-{openmpi_version}.tar.gz"
         " && tar xzf /tmp/openmpi-{openmpi_version}.tar.gz -C /tmp"
         " && cd /tmp/openmpi-{openmpi_version}"
         " && ./configure --prefix=/usr/local"
         " && make -j\"$(nproc)\" install"
         " && cd /"
         " && rm -rf /tmp/openmpi-{openmpi_version}.tar.gz /tmp/openmpi-{openmpi_version}";
}

std::string default_horovod_installer() {
  return "HOROVOD_GPU_OPERATIONS=NCCL HOROVOD_WITH_TENSORFLOW=1 "
         "pip install --no-cache-dir horovod=={horovod_version}";
}

std::string EnvironmentSpec::published_image() const {
  auto ref = ImageRef::parse(image.empty() ? base_image : image);
  return ref.with_default_tag().resolved_against(registry).str();
}

void check_strategy_fields(const EnvironmentSpec& spec) {
  switch (spec.strategy) {
    case Strategy::tags:
      if (spec.openmpi_version)
        throw ValidationError(
            "strategy 'tags' defers the OpenMPI version to the cluster-specific tag; remove openmpi_version "
            "(image tags strategy)");
      break;
    case Strategy::ngc:
      if (!spec.openmpi_version)
        throw ValidationError(
            "strategy 'ngc' needs openmpi_version: the prebuilt image fixes it (NGC catalog strategy)");
      break;
    case Strategy::entrypoint:
      if (!spec.entrypoint_path || spec.entrypoint_path->empty())
        throw ValidationError("strategy 'entrypoint' needs entrypoint_path (entrypoint installer strategy)");
      if (spec.entrypoint_path->front() != '/')
        throw ValidationError("entrypoint_path must be an absolute image path");
      break;
  }
  if (spec.horovod_version.empty()) throw ValidationError("horovod_version is empty");
}

EnvironmentSpec parse_env_spec(std::string_view text, std::vector<ParseNote>* notes) {
  Reader r(text, notes);
  EnvironmentSpec s;

  const auto& base = r.required("base_image");
  ImageRef ref;
  try {
    ref = ImageRef::parse(base.value);
  } catch (const ParseError& e) {
    throw ParseError(base.line, e.what());
  }
  if (!ref.tag && !ref.digest)
    r.note(base.line, "base_image '" + base.value + "' has no tag; using ':latest' (unpinned tag)");
  s.base_image = ref.with_default_tag().str();

  if (auto* e = r.optional("image"); e && !e->value.empty()) {
    try {
      s.image = ImageRef::parse(e->value).str();
    } catch (const ParseError& err) {
      throw ParseError(e->line, err.what());
    }
  }

  const auto& strat = r.required("strategy");
  if (strat.value == "tags")
    s.strategy = Strategy::tags;
  else if (strat.value == "ngc")
    s.strategy = Strategy::ngc;
  else if (strat.value == "entrypoint")
    s.strategy = Strategy::entrypoint;
  else
    throw ParseError(strat.line, "strategy must be one of tags, ngc, entrypoint; got '" + strat.value + "'");

  s.horovod_version = r.required("horovod_version").value;
  if (auto* e = r.optional("openmpi_version"); e && !e->value.empty()) s.openmpi_version = r.version(*e);
  if (auto* e = r.optional("system_packages")) s.system_packages = text::split_list(e->value);
  for (const auto& pkg : s.system_packages) {
    if (pkg.empty() || has_whitespace(pkg)) throw ParseError(r.optional("system_packages")->line, "invalid package name '" + pkg + "'");
  }
  if (auto* e = r.optional("package_manager")) {
    if (e->value == "apt")
      s.package_manager = PackageManager::apt;
    else if (e->value == "yum")
      s.package_manager = PackageManager::yum;
    else if (e->value == "apk")
      s.package_manager = PackageManager::apk;
    else
      throw ParseError(e->line, "package_manager must be apt, yum or apk");
  }
  s.code_copies = r.pairs("code_copies");
  if (auto* e = r.optional("entrypoint_path"); e && !e->value.empty()) s.entrypoint_path = e->value;
  if (auto* e = r.optional("registry"); e && !e->value.empty()) s.registry = e->value;
  auto* ompi = r.optional("install_openmpi");
  s.install_openmpi = ompi && !ompi->value.empty() ? ompi->value : default_openmpi_installer();
  auto* hvd = r.optional("install_horovod");
  s.install_horovod = hvd && !hvd->value.empty() ? hvd->value : default_horovod_installer();

  r.report_unknown();

  try {
    check_strategy_fields(s);
  } catch (const ValidationError& e) {
    throw ParseError(strat.line, e.what());
  }
  return s;
}

}  // namespace hpcflow
