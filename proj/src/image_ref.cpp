// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "hpcflow/image_ref.hpp"

#include <regex>

#include "hpcflow/error.hpp"

namespace hpcflow {

namespace {

const std::regex& component_re() {
  static const std::regex re("[a-z0-9]+(?:(?:[._]|__|-+)[a-z0-9]+)*");
  return re;
}

const std::regex& tag_re() {
  static const std::regex re("[A-Za-z0-9_][A-Za-z0-9_.-]{0,127}");
  return re;
}

const std::regex& digest_re() {
  static const std::regex re("[A-Za-z][A-Za-z0-9]*(?:[-_+.][A-Za-z][A-Za-z0-9]*)*:[0-9a-fA-F]{32,}");
  return re;
}

bool looks_like_domain(std::string_view c) {
  return c.find('.') != std::string_view::npos || c.find(':') != std::string_view::npos || c == "localhost";
}

}  // namespace

ImageRef ImageRef::parse(std::string_view ref) {
  const std::string original(ref);
  auto fail = [&](const std::string& why) -> ParseError {
    return ParseError(0, "invalid image reference '" + original + "': " + why);
  };
  if (ref.empty()) throw fail("empty");

  ImageRef out;
  if (auto at = ref.find('@'); at != std::string_view::npos) {
    std::string digest(ref.substr(at + 1));
    if (!std::regex_match(digest, digest_re())) throw fail("bad digest");
    out.digest = digest;
    ref = ref.substr(0, at);
  }

  if (auto slash = ref.find('/'); slash != std::string_view::npos && looks_like_domain(ref.substr(0, slash))) {
    out.domain = std::string(ref.substr(0, slash));
    ref = ref.substr(slash + 1);
  }

  if (auto colon = ref.rfind(':'); colon != std::string_view::npos) {
    std::string tag(ref.substr(colon + 1));
    if (!std::regex_match(tag, tag_re())) throw fail("bad tag '" + tag + "'");
    out.tag = tag;
    ref = ref.substr(0, colon);
  }

  if (ref.empty()) throw fail("missing repository");
  std::size_t start = 0;
  while (true) {
    auto slash = ref.find('/', start);
    std::string comp(ref.substr(start, slash == std::string_view::npos ? std::string_view::npos : slash - start));
    if (!std::regex_match(comp, component_re())) throw fail("bad path component '" + comp + "'");
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  out.path = std::string(ref);
  return out;
}

bool ImageRef::pinned() const {
  if (digest) return true;
  return tag && *tag != "latest";
}

ImageRef ImageRef::with_default_tag() const {
  ImageRef copy = *this;
  if (!copy.tag && !copy.digest) copy.tag = "latest";
  return copy;
}

ImageRef ImageRef::resolved_against(std::string_view registry) const {
  ImageRef copy = *this;
  if (!copy.domain && !registry.empty() && registry != kDefaultRegistry) copy.domain = std::string(registry);
  return copy;
}

std::string ImageRef::repository() const {
  return domain ? *domain + "/" + path : path;
}

std::string ImageRef::str() const {
  std::string out = repository();
  if (tag) out += ":" + *tag;
  if (digest) out += "@" + *digest;
  return out;
}

}  // namespace hpcflow
