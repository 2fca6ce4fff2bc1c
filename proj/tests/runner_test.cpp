// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <set>

#include "hpcflow/error.hpp"
#include "hpcflow/runner.hpp"
#include "hpcflow/text.hpp"
#include "support/fs.hpp"
#include "support/gen.hpp"

namespace hpcflow::runner {
namespace {

using launch::JobRequest;
using launch::LaunchPlan;
using testing::config_path;
using testing::slurp;

ClusterProfile csic() { return parse_cluster_profile(slurp(config_path("clusters/csic.profile"))); }
EnvironmentSpec entry_spec() { return parse_env_spec(slurp(config_path("env/benchmark-entrypoint.env"))); }

JobRequest request(int nodes, int gpus) {
  JobRequest r;
  r.nodes = nodes;
  r.gpus_per_node = gpus;
  r.user_command = {"python", "train.py"};
  return r;
}

LaunchPlan plan_for(int nodes, int gpus) {
  const auto c = csic();
  return launch::plan_launch(c, recon::reconcile(entry_spec(), c), request(nodes, gpus));
}

launch::JobScript script_for(int nodes, int gpus) {
  const auto c = csic();
  const auto req = request(nodes, gpus);
  return launch::render_job_script(launch::plan_launch(c, recon::reconcile(entry_spec(), c), req), c, req);
}

int as_int(const EnvSnapshot& env, const char* key) {
  auto it = env.find(key);
  return it == env.end() ? -1 : std::stoi(it->second);
}

const Command kEnv = {"env"};

TEST(DryRun, SetupTranscriptOneLinePerCommand) {
  const auto c = csic();
  const auto setup = launch::render_udocker_setup(recon::reconcile(entry_spec(), c), "hpcflow");
  const auto transcript = dry_run(setup);
  EXPECT_EQ(std::count(transcript.begin(), transcript.end(), '\n'), 4);
  EXPECT_NE(transcript.find("udocker pull hpcflow/multigpu-horovod:base"), std::string::npos) << transcript;
  EXPECT_EQ(dry_run(std::vector<Command>{}), "");
}

TEST(DryRun, MatchesRecordingExecutor) {
  const auto setup = launch::render_udocker_setup(recon::reconcile(entry_spec(), csic()), "hpcflow");
  RecordingExecutor rec;
  const auto outcomes = execute_all(rec, setup);
  EXPECT_EQ(outcomes.size(), setup.size());
  EXPECT_EQ(rec.recorded(), setup);
  EXPECT_EQ(dry_run(rec.recorded()), dry_run(setup));
  EXPECT_TRUE(rec.capabilities().records_only);
}

TEST(DryRun, QuotesArguments) {
  EXPECT_EQ(dry_run(std::vector<Command>{{"echo", "a b", "it's"}}), "echo 'a b' 'it'\\''s'\n");
}

TEST(DryRun, LauncherTranscriptIsOneMpirunLine) {
  const auto out = dry_run(plan_for(2, 2), csic());
  EXPECT_EQ(std::count(out.begin(), out.end(), '\n'), 1);
  EXPECT_EQ(out.rfind("mpirun ", 0), 0u) << out;
  EXPECT_NE(out.find("-np 4"), std::string::npos);
}

TEST(LocalExecutor, RunsAndStopsAtFirstFailure) {
  LocalExecutor local;
  const std::vector<Command> cmds = {{"sh", "-c", "echo one"}, {"sh", "-c", "exit 3"}, {"sh", "-c", "echo never"}};
  const auto outcomes = execute_all(local, cmds);
  ASSERT_EQ(outcomes.size(), 2u);
  EXPECT_EQ(outcomes[0].exit_code, 0);
  EXPECT_EQ(outcomes[0].output, "one\n");
  EXPECT_EQ(outcomes[1].exit_code, 3);
}

TEST(EnvSnapshot, ParseRenderRoundTrip) {
  const auto env = parse_env_snapshot("A=1\nnot an assignment\nB=x=y\n");
  EXPECT_EQ(env, (EnvSnapshot{{"A", "1"}, {"B", "x=y"}}));
  EXPECT_EQ(parse_env_snapshot(render_env_snapshot(env)), env);
}

TEST(MockRunRanks, TwoByTwoGrid) {
  const auto run = mock_run_ranks(plan_for(2, 2), kEnv);
  ASSERT_TRUE(run.success);
  ASSERT_EQ(run.results.size(), 4u);
  const int local[] = {0, 1, 0, 1}, node[] = {0, 0, 1, 1};
  for (int r = 0; r < 4; ++r) {
    const auto& env = run.results[r].env;
    EXPECT_EQ(run.results[r].rank, r);
    EXPECT_EQ(as_int(env, "RANK"), r);
    EXPECT_EQ(as_int(env, "SIZE"), 4);
    EXPECT_EQ(as_int(env, "LOCAL_RANK"), local[r]);
    EXPECT_EQ(as_int(env, "NODE_INDEX"), node[r]);
  }
}

TEST(MockRunRanks, SingleRankAndAliases) {
  const auto run = mock_run_ranks(plan_for(1, 1), kEnv, {{"OMPI_COMM_WORLD_RANK", "RANK"}});
  ASSERT_TRUE(run.success);
  ASSERT_EQ(run.results.size(), 1u);
  EXPECT_EQ(as_int(run.results[0].env, "RANK"), 0);
  EXPECT_EQ(as_int(run.results[0].env, "SIZE"), 1);
  EXPECT_EQ(as_int(run.results[0].env, "OMPI_COMM_WORLD_RANK"), 0);
}

TEST(MockRunRanks, OneFailingRankFailsTheRunButAllAreCollected) {
  const auto run = mock_run_ranks(plan_for(2, 2), {"sh", "-c", "test \"$RANK\" != 2"});
  EXPECT_FALSE(run.success);
  ASSERT_EQ(run.results.size(), 4u);
  for (int r = 0; r < 4; ++r) EXPECT_EQ(run.results[r].exit_code == 0, r != 2) << r;
}

TEST(MockRunRanks, SpawnFailureIsReported) {
  const auto run = mock_run_ranks(plan_for(1, 1), {"/nonexistent/hpcflow-binary"});
  EXPECT_FALSE(run.success);
  EXPECT_NE(run.results.at(0).exit_code, 0);
}

TEST(MockRunRanksProperty, GridCoverIsCompleteAndDisjoint) {
  testing::gen::Rng rng(9);
  for (int i = 0; i < 12; ++i) {
    const int nodes = testing::gen::between(rng, 1, 4);
    const int gpus = testing::gen::between(rng, 1, 2);
    const auto run = mock_run_ranks(plan_for(nodes, gpus), kEnv);
    ASSERT_TRUE(run.success);
    ASSERT_EQ(static_cast<int>(run.results.size()), nodes * gpus);
    std::set<std::pair<int, int>> cover;
    std::set<int> ranks;
    for (const auto& r : run.results) {
      const int n = as_int(r.env, "NODE_INDEX"), l = as_int(r.env, "LOCAL_RANK");
      ASSERT_GE(n, 0);
      ASSERT_LT(n, nodes);
      ASSERT_GE(l, 0);
      ASSERT_LT(l, gpus);
      ASSERT_EQ(as_int(r.env, "SIZE"), nodes * gpus);
      ASSERT_EQ(as_int(r.env, "RANK"), n * gpus + l);
      cover.emplace(n, l);
      ranks.insert(as_int(r.env, "RANK"));
    }
    ASSERT_EQ(static_cast<int>(cover.size()), nodes * gpus);
    ASSERT_EQ(static_cast<int>(ranks.size()), nodes * gpus);
  }
}

TEST(MockScheduler, LifecycleToCompleted) {
  MockScheduler sched(kEnv);
  const auto a = sched.submit(script_for(2, 2));
  const auto b = sched.submit(script_for(1, 1));
  EXPECT_EQ(a, 1u);
  EXPECT_EQ(b, 2u);
  EXPECT_EQ(sched.job(a).state, JobState::pending);
  EXPECT_TRUE(sched.job(a).rank_results.empty());
  EXPECT_EQ(sched.poll(a), JobState::running);
  EXPECT_TRUE(sched.job(a).rank_results.empty());
  EXPECT_EQ(sched.poll(a), JobState::completed);
  EXPECT_EQ(sched.job(a).rank_results.size(), 4u);
  EXPECT_EQ(sched.poll(a), JobState::completed);
  EXPECT_EQ(sched.job(b).state, JobState::pending);
  EXPECT_EQ(to_string(JobState::completed), "completed");
}

TEST(MockScheduler, FailingRankFailsJob) {
  MockScheduler sched({"sh", "-c", "exit 1"});
  const auto id = sched.submit(script_for(1, 2));
  sched.poll(id);
  EXPECT_EQ(sched.poll(id), JobState::failed);
  EXPECT_EQ(sched.job(id).rank_results.size(), 2u);
}

TEST(MockScheduler, RejectsScriptsWithoutLauncherAndUnknownIds) {
  MockScheduler sched(kEnv);
  auto script = script_for(1, 1);
  script.text = "#!/bin/bash\necho hello\n";
  EXPECT_THROW(sched.submit(script), ValidationError);
  EXPECT_ANY_THROW(sched.poll(99));
}

}  // namespace
}  // namespace hpcflow::runner
