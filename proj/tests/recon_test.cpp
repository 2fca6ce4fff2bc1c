// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "hpcflow/error.hpp"
#include "hpcflow/recon.hpp"
#include "support/fs.hpp"
#include "support/gen.hpp"

namespace hpcflow::recon {
namespace {

using testing::config_path;
using testing::slurp;

ClusterProfile csic() { return parse_cluster_profile(slurp(config_path("clusters/csic.profile"))); }
EnvironmentSpec spec(const char* rel) { return parse_env_spec(slurp(config_path(rel))); }

ClusterProfile with_mpi(const char* version) {
  auto c = csic();
  c.openmpi_version = SemVer::parse(version);
  return c;
}

TEST(MatchVersions, Predicate) {
  EXPECT_EQ(match_versions(SemVer::parse("4.0.1"), SemVer::parse("4.0.1")), MatchKind::exact);
  EXPECT_EQ(match_versions(SemVer::parse("4.0"), SemVer::parse("4.0.5")), MatchKind::major_minor);
  EXPECT_EQ(match_versions(SemVer::parse("4.0.5"), SemVer::parse("4.0")), MatchKind::major_minor);
  EXPECT_EQ(match_versions(SemVer::parse("4.0.1"), SemVer::parse("4.0.2")), MatchKind::none);
  EXPECT_EQ(match_versions(SemVer::parse("3.1.6"), SemVer::parse("4.0.1")), MatchKind::none);
  EXPECT_EQ(match_versions(SemVer::parse("4.1"), SemVer::parse("4.0")), MatchKind::none);
}

TEST(TagVersion, Grammar) {
  EXPECT_EQ(tag_version("ompi4.1")->str(), "4.1");
  EXPECT_EQ(tag_version("ompi4.1-cuda10")->str(), "4.1");
  EXPECT_FALSE(tag_version("ompi4"));
  EXPECT_FALSE(tag_version("latest"));
  EXPECT_FALSE(tag_version("ompi4.1.2"));
  EXPECT_FALSE(tag_version("ompi4.1-"));
}

TEST(SelectTag, MatchesMajorMinor) {
  const std::vector<std::string> tags = {"ompi3.0", "ompi4.0", "ompi4.1"};
  EXPECT_EQ(select_tag(tags, SemVer::parse("4.1.2")), "ompi4.1");
}

TEST(SelectTag, NoMatchListsAvailableVersions) {
  const std::vector<std::string> tags = {"ompi3.0"};
  try {
    select_tag(tags, SemVer::parse("4.0.0"));
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("no tag for OpenMPI 4.0"), std::string::npos) << msg;
    EXPECT_NE(msg.find("3.0"), std::string::npos) << msg;
  }
}

TEST(SelectTag, VariantTieBreakIsLexicographic) {
  const std::vector<std::string> tags = {"ompi4.1-cuda11", "ompi4.1-cuda10"};
  EXPECT_EQ(select_tag(tags, SemVer::parse("4.1.0")), "ompi4.1-cuda10");
}

TEST(Reconcile, EntrypointPassesClusterVersions) {
  auto plan = reconcile(spec("env/benchmark-entrypoint.env"), csic());
  EXPECT_EQ(plan.strategy_used, Strategy::entrypoint);
  EXPECT_EQ(plan.runtime_args, (std::vector<std::string>{"4.0.1", "0.21.3"}));
  EXPECT_EQ(plan.image_ref, "hpcflow/multigpu-horovod:base");
}

TEST(Reconcile, TagsCarrySelectedTag) {
  const std::vector<std::string> tags = {"ompi3.1", "ompi4.0", "ompi4.1"};
  auto plan = reconcile(spec("env/benchmark-tags.env"), csic(), tags);
  EXPECT_EQ(plan.image_ref, "hpcflow/multigpu-horovod:ompi4.0");
  EXPECT_TRUE(plan.runtime_args.empty());
  auto forhlr2 = parse_cluster_profile(slurp(config_path("clusters/forhlr2.profile")));
  EXPECT_EQ(reconcile(spec("env/benchmark-tags.env"), forhlr2, tags).image_ref, "hpcflow/multigpu-horovod:ompi3.1");
  EXPECT_THROW(reconcile(spec("env/benchmark-tags.env"), csic()), ValidationError);
}

TEST(Reconcile, NgcMajorMinorMatch) {
  auto s = spec("env/benchmark-ngc.env");  // image states 4.0
  auto plan = reconcile(s, with_mpi("4.0.3"));
  EXPECT_EQ(plan.match_note, "major.minor match");
  EXPECT_EQ(plan.image_ref, "nvcr.io/nvidia/tensorflow:20.12-tf2-py3");
  EXPECT_TRUE(plan.runtime_args.empty());

  s.openmpi_version = SemVer::parse("4.0.3");
  EXPECT_EQ(reconcile(s, with_mpi("4.0.3")).match_note, "exact match");
}

TEST(Reconcile, NgcMismatchIsError) {
  auto s = spec("env/benchmark-ngc.env");
  s.openmpi_version = SemVer::parse("3.1.6");
  EXPECT_THROW(reconcile(s, with_mpi("4.0.1")), ValidationError);
  s.openmpi_version = SemVer::parse("4.0.1");
  EXPECT_THROW(reconcile(s, with_mpi("4.0.2")), ValidationError);
}

TEST(ReconcileProperty, DeterministicAndEntrypointIgnoresTags) {
  testing::gen::Rng rng(3);
  const auto s = spec("env/benchmark-entrypoint.env");
  for (int i = 0; i < 200; ++i) {
    auto cluster = testing::gen::cluster_profile(rng);
    std::vector<std::string> tags;
    const int n = testing::gen::between(rng, 0, 4);
    for (int k = 0; k < n; ++k) tags.push_back(testing::gen::identifier(rng));
    const auto without = reconcile(s, cluster);
    ASSERT_EQ(reconcile(s, cluster), without);
    ASSERT_EQ(reconcile(s, cluster, tags), without);
  }
}

TEST(DefaultVersionArgs, FallbackAndNgcVersion) {
  EXPECT_EQ(default_version_args(spec("env/benchmark-entrypoint.env")),
            (std::vector<std::string>{std::string(kFallbackOpenMpiVersion), "0.21.3"}));
}

TEST(ExpandInstaller, ReplacesEveryPlaceholder) {
  EXPECT_EQ(expand_installer("a{openmpi_version}b{openmpi_version}{horovod_version}", "4.0.1", "0.21.3"),
            "a4.0.1b4.0.10.21.3");
}

TEST(GenerateEntrypoint, PureTemplate) {
  EXPECT_EQ(generate_entrypoint(), generate_entrypoint());
  const auto script = generate_entrypoint();
  EXPECT_EQ(script.rfind("#!/bin/sh\n", 0), 0u);
  EXPECT_NE(script.find("exec /bin/bash"), std::string::npos);
  EXPECT_NE(script.find("exec \"$@\""), std::string::npos);
}

}  // namespace
}  // namespace hpcflow::recon
