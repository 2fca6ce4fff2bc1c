// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "hpcflow/kvfile.hpp"

#include <algorithm>

#include "hpcflow/error.hpp"
#include "hpcflow/text.hpp"

namespace hpcflow::kvfile {

namespace {

bool is_key(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return (c >= 'a' && c <= 'z') || c == '_'; });
}

}  // namespace

Document Document::parse(std::string_view text) {
  Document doc;
  std::string section;
  auto all = text::lines(text);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const std::size_t lineno = i + 1;
    auto line = text::trim(all[i]);
    if (line.empty() || line.front() == '#') continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(lineno, "unterminated section header");
      auto name = text::trim(line.substr(1, line.size() - 2));
      if (!is_key(name)) throw ParseError(lineno, "invalid section name '" + std::string(name) + "'");
      section = std::string(name);
      continue;
    }

    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(lineno, "expected 'key = value'");
    auto key = text::trim(line.substr(0, eq));
    if (!is_key(key)) throw ParseError(lineno, "invalid key '" + std::string(key) + "'");
    if (doc.find(key)) throw ParseError(lineno, "duplicate key '" + std::string(key) + "'");
    doc.entries_.push_back(Entry{section, std::string(key), std::string(text::trim(line.substr(eq + 1))), lineno});
  }
  return doc;
}

const Entry* Document::find(std::string_view key) const {
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.key == key; });
  return it == entries_.end() ? nullptr : &*it;
}

}  // namespace hpcflow::kvfile
