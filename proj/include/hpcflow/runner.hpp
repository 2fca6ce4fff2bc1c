// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hpcflow/launch.hpp"

namespace hpcflow::runner {

using launch::Command;

struct Capabilities {
  bool records_only = false;
  bool executes_locally = false;
};

struct ExecOutcome {
  int exit_code = 0;
  std::string output;
};

/// Receives every command it is handed, in order. Implementations either
/// record or execute; none may drop a command.
class CommandExecutor {
 public:
  virtual ~CommandExecutor() = default;
  virtual Capabilities capabilities() const = 0;
  virtual ExecOutcome execute(const Command& cmd) = 0;
};

class RecordingExecutor final : public CommandExecutor {
 public:
  Capabilities capabilities() const override { return {true, false}; }
  ExecOutcome execute(const Command& cmd) override;
  const std::vector<Command>& recorded() const { return recorded_; }

 private:
  std::vector<Command> recorded_;
};

class LocalExecutor final : public CommandExecutor {
 public:
  Capabilities capabilities() const override { return {false, true}; }
  ExecOutcome execute(const Command& cmd) override;
};

/// Runs commands in order, stopping after the first non-zero exit. Returns
/// the outcomes of the commands that ran.
std::vector<ExecOutcome> execute_all(CommandExecutor& executor, std::span<const Command> commands);

/// One shell-quoted command per line, exactly what an executor would receive.
std::string dry_run(std::span<const Command> commands);

/// Transcript of the launcher invocation for a plan.
std::string dry_run(const launch::LaunchPlan& plan, const ClusterProfile& cluster);

using EnvSnapshot = std::map<std::string, std::string>;

/// `KEY=VALUE` lines; lines that are not assignments are skipped.
EnvSnapshot parse_env_snapshot(std::string_view text);
std::string render_env_snapshot(const EnvSnapshot& env);

struct RankResult {
  int rank = 0;
  int exit_code = -1;
  EnvSnapshot env;  // what the rank process printed as KEY=VALUE lines
  std::string output;
  std::string error;

  friend bool operator==(const RankResult&, const RankResult&) = default;
};

struct RankRun {
  std::vector<RankResult> results;  // ordered by rank
  bool success = false;
};

/// Extra spellings for the rank variables, alias -> one of RANK, SIZE,
/// LOCAL_RANK, NODE_INDEX.
using RankEnvAliases = std::map<std::string, std::string>;

/// Starts `plan.total_ranks` copies of `rank_command` at once, each with
/// RANK, SIZE, LOCAL_RANK (= rank mod gpus_per_node) and NODE_INDEX
/// (= rank div gpus_per_node) plus the plan's valued exports, then waits for
/// all of them. Spawn failures land in the rank's `error`.
RankRun mock_run_ranks(const launch::LaunchPlan& plan, const Command& rank_command,
                       const RankEnvAliases& aliases = {});

enum class JobState { pending, running, completed, failed };

std::string_view to_string(JobState s);

struct MockJob {
  std::uint64_t job_id = 0;
  JobState state = JobState::pending;
  launch::JobScript script;
  std::vector<RankResult> rank_results;
};

/// In-process stand-in for the batch system. Time advances only through
/// poll(): pending -> running on the first poll, running -> completed or
/// failed on the next, which is when the ranks actually run.
class MockScheduler {
 public:
  explicit MockScheduler(Command rank_command, RankEnvAliases aliases = {});

  /// Throws ValidationError for scripts without exactly one mpirun line or
  /// with an inconsistent plan.
  std::uint64_t submit(launch::JobScript script);
  JobState poll(std::uint64_t job_id);
  const MockJob& job(std::uint64_t job_id) const;

 private:
  MockJob& find(std::uint64_t job_id);

  Command rank_command_;
  RankEnvAliases aliases_;
  std::uint64_t next_id_ = 1;
  std::vector<MockJob> jobs_;
};

}  // namespace hpcflow::runner
