// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace hpcflow {

inline constexpr std::string_view kDefaultRegistry = "docker.io";

/// A container image reference: `[domain/]path[:tag][@digest]`.
///
/// Parsing follows the distribution reference grammar: the first path
/// component is a domain when it contains '.' or ':' or is `localhost`;
/// path components are lowercase alphanumerics joined by `.`, `_`, `__` or
/// dashes; a tag is `[A-Za-z0-9_][A-Za-z0-9_.-]{0,127}`.
struct ImageRef {
  std::optional<std::string> domain;
  std::string path;
  std::optional<std::string> tag;
  std::optional<std::string> digest;

  static ImageRef parse(std::string_view ref);

  /// Tag, or digest pin, is present and the tag is not `latest`.
  bool pinned() const;

  /// Copy with `latest` filled in when neither tag nor digest is present.
  ImageRef with_default_tag() const;

  /// Copy whose domain is `registry` when none was written and `registry`
  /// is not the public default.
  ImageRef resolved_against(std::string_view registry) const;

  /// Repository without tag or digest.
  std::string repository() const;

  std::string str() const;

  friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

}  // namespace hpcflow
