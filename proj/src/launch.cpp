// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "hpcflow/launch.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>

#include "hpcflow/error.hpp"
#include "hpcflow/lint.hpp"
#include "hpcflow/text.hpp"

namespace hpcflow::launch {

namespace {

bool is_env_name(std::string_view s) {
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s.front()))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

std::string escape_double_quoted(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\' || c == '`') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

bool is_walltime(std::string_view s) {
  static const std::regex re("([0-9]+):([0-5][0-9]):([0-5][0-9])");
  return std::regex_match(s.begin(), s.end(), re);
}

LaunchPlan plan_launch(const ClusterProfile& cluster, const recon::ReconcilePlan& recon, const JobRequest& req) {
  if (req.nodes < 1) throw ValidationError("nodes must be ≥ 1");
  if (req.gpus_per_node < 1) throw ValidationError("gpus_per_node must be ≥ 1");
  if (req.nodes > cluster.gpu_nodes)
    throw ValidationError("request needs " + std::to_string(req.nodes) + " nodes but cluster '" + cluster.name +
                          "' has " + std::to_string(cluster.gpu_nodes) + " GPU nodes");
  if (req.gpus_per_node > cluster.gpus_per_node)
    throw ValidationError("request needs " + std::to_string(req.gpus_per_node) + " GPUs per node but cluster '" +
                          cluster.name + "' has " + std::to_string(cluster.gpus_per_node));
  if (!text::is_identifier(req.container_name))
    throw ValidationError("container name '" + req.container_name + "' is not an identifier");
  if (!text::is_identifier(req.job_name)) throw ValidationError("job name '" + req.job_name + "' is not an identifier");
  const std::string walltime = req.walltime.empty() ? cluster.default_walltime : req.walltime;
  if (!is_walltime(walltime)) throw ValidationError("walltime '" + walltime + "' is not HH:MM:SS");
  if (req.user_command.empty() && recon.strategy_used != Strategy::entrypoint)
    throw ValidationError("an empty command needs the entrypoint strategy (the image has no default command)");
  for (const auto& [name, value] : req.extra_env) {
    if (!is_env_name(name)) throw ValidationError("invalid environment variable name '" + name + "'");
  }

  LaunchPlan plan;
  plan.nodes = req.nodes;
  plan.gpus_per_node = req.gpus_per_node;
  plan.total_ranks = req.nodes * req.gpus_per_node;
  plan.slots_per_node = req.gpus_per_node;

  plan.env_exports = {{"NCCL_DEBUG", "INFO"}, {"LD_LIBRARY_PATH", std::nullopt}, {"PATH", std::nullopt}};
  for (const auto& [name, value] : req.extra_env) {
    auto it = std::find_if(plan.env_exports.begin(), plan.env_exports.end(),
                           [&](const EnvExport& e) { return e.name == name; });
    if (it != plan.env_exports.end())
      it->value = value;
    else
      plan.env_exports.push_back({name, value});
  }

  auto& m = plan.mpirun_args;
  m = {"-np", std::to_string(plan.total_ranks), "--map-by", "ppr:" + std::to_string(req.gpus_per_node) + ":node",
       "-bind-to", "none"};
  // GPU collectives go through NCCL inside Horovod; these select the MPI side.
  m.insert(m.end(), cluster.mpirun_transport_args.begin(), cluster.mpirun_transport_args.end());
  for (const auto& e : plan.env_exports) {
    m.push_back("-x");
    m.push_back(e.name);
  }

  auto& u = plan.udocker_run_args;
  u = {"--hostauth", "--user=" + cluster.udocker_user,
       "--volume=" + req.workdir_mount.source + ":" + req.workdir_mount.target};
  for (const auto& mount : cluster.default_mounts) u.push_back("--volume=" + mount.source + ":" + mount.target);
  u.push_back(req.container_name);
  u.insert(u.end(), recon.runtime_args.begin(), recon.runtime_args.end());
  u.insert(u.end(), req.user_command.begin(), req.user_command.end());

  auto& d = plan.scheduler_directives;
  d = {{"job-name", req.job_name},
       {"nodes", std::to_string(req.nodes)},
       {"ntasks-per-node", std::to_string(req.gpus_per_node)},
       {"gres", "gpu:" + std::to_string(req.gpus_per_node)},
       {"time", walltime}};
  if (cluster.partition) d.emplace_back("partition", *cluster.partition);
  if (cluster.account) d.emplace_back("account", *cluster.account);
  return plan;
}

Command launcher_command(const LaunchPlan& plan, const ClusterProfile& cluster) {
  Command cmd{"mpirun"};
  cmd.insert(cmd.end(), plan.mpirun_args.begin(), plan.mpirun_args.end());
  cmd.push_back(cluster.container_runtime_path);
  cmd.push_back("run");
  cmd.insert(cmd.end(), plan.udocker_run_args.begin(), plan.udocker_run_args.end());
  return cmd;
}

JobScript render_job_script(const LaunchPlan& plan, const ClusterProfile& cluster, const JobRequest& req) {
  if (cluster.scheduler == Scheduler::none)
    throw ValidationError("cluster '" + cluster.name +
                          "' has no batch scheduler; run the plan with the mock runner (job mock-run)");
  if (plan.total_ranks != req.nodes * req.gpus_per_node)
    throw ValidationError("launch plan does not belong to this request");

  std::string s = "#!/bin/sh\n";
  for (const auto& [key, value] : plan.scheduler_directives) s += "#SBATCH --" + key + "=" + value + "\n";
  s += "\n";
  for (const auto& module : cluster.module_loads) s += "module load " + module + "\n";
  bool any_export = false;
  for (const auto& e : plan.env_exports) {
    if (!e.value) continue;
    if (!any_export) s += "\n";
    any_export = true;
    s += "export " + e.name + "=" + text::shell_quote(*e.value) + "\n";
  }
  s += "\n";
  s += text::shell_join(launcher_command(plan, cluster)) + "\n";
  return JobScript{std::move(s), cluster.scheduler, plan};
}

std::vector<Command> render_udocker_setup(const recon::ReconcilePlan& recon, std::string_view container_name,
                                          std::string_view udocker) {
  if (!text::is_identifier(container_name))
    throw ValidationError("container name '" + std::string(container_name) + "' is not an identifier");
  const std::string exe(udocker);
  const std::string name(container_name);
  std::vector<Command> cmds{
      {exe, "pull", recon.image_ref},
      {exe, "create", "--name=" + name, recon.image_ref},
      {exe, "setup", "--nvidia", name},
  };
  if (recon.strategy_used == Strategy::entrypoint) {
    Command run{exe, "run", name};
    run.insert(run.end(), recon.runtime_args.begin(), recon.runtime_args.end());
    cmds.push_back(std::move(run));
  }
  return cmds;
}

std::string render_install_script(const InstallConfig& config) {
  std::string s;
  s += "#!/bin/sh\n";
  s += "# Installs udocker for the current user. Nothing here needs administrator rights.\n";
  s += "set -eu\n";
  s += "\n";
  s += "url=\"" + escape_double_quoted(config.release_url) + "\"\n";
  s += "prefix=\"" + escape_double_quoted(config.prefix) + "\"\n";
  s += "\n";
  s += "mkdir -p \"$prefix\"\n";
  s += "tmp=$(mktemp -d \"${TMPDIR:-/tmp}/udocker.XXXXXX\")\n";
  s += "trap 'rm -rf \"$tmp\"' EXIT INT TERM\n";
  s += "\n";
  s += "curl -fsSL -o \"$tmp/udocker.tar.gz\" \"$url\"\n";
  s += "tar xzf \"$tmp/udocker.tar.gz\" -C \"$prefix\" --strip-components=1\n";
  s += "chmod u+x \"$prefix/udocker/udocker\"\n";
  s += "\"$prefix/udocker/udocker\" install\n";
  s += "\n";
  s += "echo \"udocker installed in $prefix/udocker\"\n";
  s += "echo \"add it to your PATH with:\"\n";
  s += "echo \"  export PATH=\\\"$prefix/udocker:\\$PATH\\\"\"\n";
  return s;
}

std::vector<std::string> privileged_tokens(std::string_view script) {
  static constexpr std::array<std::string_view, 22> kPrivileged{
      "sudo",    "su",      "doas",     "pkexec",   "runuser", "setcap",  "chown",   "chgrp",
      "mount",   "umount",  "insmod",   "modprobe", "rmmod",   "useradd", "usermod", "groupadd",
      "visudo",  "systemctl", "chroot", "setenforce", "sysctl", "passwd"};
  std::vector<std::string> hits;
  const auto all = text::lines(script);
  for (std::size_t i = 0; i < all.size(); ++i) {
    auto line = text::trim(all[i]);
    if (line.empty() || line.front() == '#') continue;
    for (const auto& cmd : lint::shell::split_commands(line)) {
      for (std::size_t w = 0; w < cmd.size(); ++w) {
        auto word = cmd[w];
        auto slash = word.rfind('/');
        auto prog = slash == std::string::npos ? word : word.substr(slash + 1);
        bool command_position = w == 0 || cmd[w - 1] == "exec" || cmd[w - 1] == "command";
        if (command_position &&
            std::find(kPrivileged.begin(), kPrivileged.end(), prog) != kPrivileged.end())
          hits.push_back(std::to_string(i + 1) + ": " + prog);
        // `chmod u+s`, `chmod 4755`: set-id bits.
        if (command_position && prog == "chmod" && w + 1 < cmd.size()) {
          const auto& mode = cmd[w + 1];
          bool symbolic_setid = mode.find('s') != std::string::npos && mode.find('+') != std::string::npos;
          bool octal_setid = mode.size() == 4 && std::all_of(mode.begin(), mode.end(), ::isdigit) && mode[0] != '0';
          if (symbolic_setid || octal_setid) hits.push_back(std::to_string(i + 1) + ": chmod " + mode);
        }
      }
    }
  }
  return hits;
}

std::vector<std::string> system_path_writes(std::string_view script) {
  static constexpr std::array<std::string_view, 13> kSystemDirs{
      "/etc", "/usr", "/bin", "/sbin", "/lib", "/lib64", "/opt", "/var", "/boot", "/root", "/sys", "/proc", "/dev"};
  auto is_system = [](std::string_view path) {
    if (path == "/dev/null" || path == "/dev/stdout" || path == "/dev/stderr") return false;
    return std::any_of(kSystemDirs.begin(), kSystemDirs.end(), [&](std::string_view dir) {
      return path.compare(0, dir.size(), dir) == 0 && (path.size() == dir.size() || path[dir.size()] == '/');
    });
  };

  std::vector<std::string> hits;
  const auto all = text::lines(script);
  for (std::size_t i = 0; i < all.size(); ++i) {
    auto line = text::trim(all[i]);
    if (line.empty() || line.front() == '#') continue;
    for (const auto& cmd : lint::shell::split_commands(line)) {
      std::vector<std::string> targets;
      for (std::size_t w = 0; w < cmd.size(); ++w) {
        const auto& word = cmd[w];
        auto gt = word.find('>');
        if (gt != std::string::npos) {
          auto after = word.find_first_not_of('>', gt);
          std::string rest = after == std::string::npos ? std::string() : word.substr(after);
          if (rest.empty() && w + 1 < cmd.size()) rest = cmd[w + 1];
          if (!rest.empty() && rest.front() != '&') targets.push_back(rest);
        }
      }
      if (!cmd.empty()) {
        auto prog = cmd[0].substr(cmd[0].rfind('/') == std::string::npos ? 0 : cmd[0].rfind('/') + 1);
        if (prog == "mkdir" || prog == "cp" || prog == "mv" || prog == "touch" || prog == "tee" || prog == "ln" ||
            prog == "install" || prog == "rm") {
          for (std::size_t w = 1; w < cmd.size(); ++w) {
            if (!cmd[w].empty() && cmd[w].front() != '-') targets.push_back(cmd[w]);
          }
        }
        if (prog == "tar") {
          for (std::size_t w = 1; w + 1 < cmd.size(); ++w) {
            if (cmd[w] == "-C" || cmd[w] == "--directory") targets.push_back(cmd[w + 1]);
          }
        }
      }
      for (const auto& t : targets) {
        if (is_system(t)) hits.push_back(std::to_string(i + 1) + ": " + t);
      }
    }
  }
  return hits;
}

}  // namespace hpcflow::launch
