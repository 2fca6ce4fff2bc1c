// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "hpcflow/runner.hpp"

#include <algorithm>

#include "hpcflow/error.hpp"
#include "hpcflow/process.hpp"
#include "hpcflow/text.hpp"

namespace hpcflow::runner {

ExecOutcome RecordingExecutor::execute(const Command& cmd) {
  recorded_.push_back(cmd);
  return {};
}

ExecOutcome LocalExecutor::execute(const Command& cmd) {
  process::Spec spec;
  spec.argv = cmd;
  auto r = process::run(spec);
  ExecOutcome out;
  out.exit_code = r.exit_code;
  out.output = r.out + r.err;
  if (r.spawn_error) out.output += *r.spawn_error + "\n";
  return out;
}

std::vector<ExecOutcome> execute_all(CommandExecutor& executor, std::span<const Command> commands) {
  std::vector<ExecOutcome> outcomes;
  for (const auto& cmd : commands) {
    outcomes.push_back(executor.execute(cmd));
    if (outcomes.back().exit_code != 0) break;
  }
  return outcomes;
}

std::string dry_run(std::span<const Command> commands) {
  std::string out;
  for (const auto& cmd : commands) out += text::shell_join(cmd) + "\n";
  return out;
}

std::string dry_run(const launch::LaunchPlan& plan, const ClusterProfile& cluster) {
  const Command cmd = launch::launcher_command(plan, cluster);
  return dry_run(std::span<const Command>(&cmd, 1));
}

EnvSnapshot parse_env_snapshot(std::string_view text) {
  EnvSnapshot env;
  for (const auto& line : text::lines(text)) {
    auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) continue;
    auto key = line.substr(0, eq);
    bool valid = std::all_of(key.begin(), key.end(),
                             [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
    if (valid) env[key] = line.substr(eq + 1);
  }
  return env;
}

std::string render_env_snapshot(const EnvSnapshot& env) {
  std::string out;
  for (const auto& [k, v] : env) out += k + "=" + v + "\n";
  return out;
}

RankRun mock_run_ranks(const launch::LaunchPlan& plan, const Command& rank_command, const RankEnvAliases& aliases) {
  if (plan.total_ranks < 1 || plan.gpus_per_node < 1) throw ValidationError("launch plan has no ranks");
  if (rank_command.empty()) throw ValidationError("rank command is empty");

  std::vector<process::Child> children;
  children.reserve(static_cast<std::size_t>(plan.total_ranks));
  for (int rank = 0; rank < plan.total_ranks; ++rank) {
    process::Spec spec;
    spec.argv = rank_command;
    for (const auto& e : plan.env_exports) {
      if (e.value) spec.env[e.name] = *e.value;
    }
    std::map<std::string, std::string> vars{
        {"RANK", std::to_string(rank)},
        {"SIZE", std::to_string(plan.total_ranks)},
        {"LOCAL_RANK", std::to_string(rank % plan.gpus_per_node)},
        {"NODE_INDEX", std::to_string(rank / plan.gpus_per_node)},
    };
    for (const auto& [alias, canonical] : aliases) {
      auto it = vars.find(canonical);
      if (it == vars.end()) throw ValidationError("alias '" + alias + "' names unknown rank variable '" + canonical + "'");
      spec.env[alias] = it->second;
    }
    for (auto& [k, v] : vars) spec.env[k] = v;
    children.emplace_back(spec);
  }

  RankRun run;
  run.success = true;
  for (int rank = 0; rank < plan.total_ranks; ++rank) {
    auto r = children[static_cast<std::size_t>(rank)].wait();
    RankResult rr;
    rr.rank = rank;
    rr.exit_code = r.exit_code;
    rr.output = r.out;
    rr.env = parse_env_snapshot(r.out);
    rr.error = r.spawn_error.value_or(r.err);
    if (rr.exit_code != 0) run.success = false;
    run.results.push_back(std::move(rr));
  }
  return run;
}

std::string_view to_string(JobState s) {
  switch (s) {
    case JobState::pending: return "pending";
    case JobState::running: return "running";
    case JobState::completed: return "completed";
    case JobState::failed: return "failed";
  }
  return "failed";
}

MockScheduler::MockScheduler(Command rank_command, RankEnvAliases aliases)
    : rank_command_(std::move(rank_command)), aliases_(std::move(aliases)) {}

std::uint64_t MockScheduler::submit(launch::JobScript script) {
  std::size_t launchers = 0;
  for (const auto& line : text::lines(script.text)) {
    if (text::trim(line).rfind("mpirun ", 0) == 0) ++launchers;
  }
  if (launchers != 1)
    throw ValidationError("job script must contain exactly one mpirun line, found " + std::to_string(launchers));
  const auto& plan = script.plan;
  if (plan.total_ranks < 1 || plan.total_ranks != plan.nodes * plan.gpus_per_node)
    throw ValidationError("job script carries an inconsistent launch plan");

  MockJob job;
  job.job_id = next_id_++;
  job.script = std::move(script);
  jobs_.push_back(std::move(job));
  return jobs_.back().job_id;
}

JobState MockScheduler::poll(std::uint64_t job_id) {
  auto& job = find(job_id);
  switch (job.state) {
    case JobState::pending:
      job.state = JobState::running;
      break;
    case JobState::running: {
      auto run = mock_run_ranks(job.script.plan, rank_command_, aliases_);
      job.rank_results = std::move(run.results);
      job.state = run.success ? JobState::completed : JobState::failed;
      break;
    }
    case JobState::completed:
    case JobState::failed:
      break;
  }
  return job.state;
}

const MockJob& MockScheduler::job(std::uint64_t job_id) const {
  auto it = std::find_if(jobs_.begin(), jobs_.end(), [&](const MockJob& j) { return j.job_id == job_id; });
  if (it == jobs_.end()) throw ValidationError("unknown job id " + std::to_string(job_id));
  return *it;
}

MockJob& MockScheduler::find(std::uint64_t job_id) { return const_cast<MockJob&>(std::as_const(*this).job(job_id)); }

}  // namespace hpcflow::runner
