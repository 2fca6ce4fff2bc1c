// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "hpcflow/error.hpp"
#include "hpcflow/image_ref.hpp"

namespace hpcflow {
namespace {

TEST(ImageRef, ParsesComponents) {
  auto r = ImageRef::parse("nvcr.io/nvidia/tensorflow:20.12-tf2-py3");
  EXPECT_EQ(r.domain, "nvcr.io");
  EXPECT_EQ(r.path, "nvidia/tensorflow");
  EXPECT_EQ(r.tag, "20.12-tf2-py3");
  EXPECT_FALSE(r.digest);

  auto local = ImageRef::parse("localhost:5000/img@sha256:" + std::string(64, 'a'));
  EXPECT_EQ(local.domain, "localhost:5000");
  EXPECT_FALSE(local.tag);
  EXPECT_TRUE(local.digest);
  EXPECT_TRUE(local.pinned());

  auto hub = ImageRef::parse("hpcflow/multigpu-horovod:base");
  EXPECT_FALSE(hub.domain);
  EXPECT_EQ(hub.repository(), "hpcflow/multigpu-horovod");
}

TEST(ImageRef, DefaultTagNormalization) {
  auto r = ImageRef::parse("org/img");
  EXPECT_FALSE(r.pinned());
  EXPECT_EQ(r.with_default_tag().str(), "org/img:latest");
  EXPECT_FALSE(ImageRef::parse("org/img:latest").pinned());
  EXPECT_EQ(ImageRef::parse("org/img:1.0").with_default_tag().str(), "org/img:1.0");
}

TEST(ImageRef, RegistryResolution) {
  auto r = ImageRef::parse("org/img:1");
  EXPECT_EQ(r.resolved_against("docker.io").str(), "org/img:1");
  EXPECT_EQ(r.resolved_against("registry.example.org").str(), "registry.example.org/org/img:1");
  EXPECT_EQ(ImageRef::parse("quay.io/org/img:1").resolved_against("registry.example.org").str(), "quay.io/org/img:1");
}

TEST(ImageRef, RejectsMalformed) {
  for (const char* bad : {"", "Upper/Case", "img:", "img:-tag", "a//b", "img@sha256:xyz", ":tag"}) {
    EXPECT_THROW(ImageRef::parse(bad), ParseError) << bad;
  }
}

TEST(ImageRef, StrRoundTrips) {
  for (const char* ref : {"ubuntu:18.04", "nvcr.io/nvidia/tensorflow:20.12-tf2-py3", "a/b/c", "host:1/x_y.z:t"}) {
    EXPECT_EQ(ImageRef::parse(ref).str(), ref);
    EXPECT_EQ(ImageRef::parse(ImageRef::parse(ref).str()), ImageRef::parse(ref));
  }
}

}  // namespace
}  // namespace hpcflow
