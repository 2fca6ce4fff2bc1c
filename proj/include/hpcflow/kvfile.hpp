// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hpcflow::kvfile {

// Sectioned key=value text shared by cluster profiles and environment specs:
//
//   # comment
//   [section]
//   key = value
//
// Keys match [a-z_]+, values run to end of line and are trimmed. Sections
// only group keys for readers; a key may appear at most once per file.

struct Entry {
  std::string section;
  std::string key;
  std::string value;
  std::size_t line = 0;
};

class Document {
 public:
  static Document parse(std::string_view text);

  const std::vector<Entry>& entries() const { return entries_; }
  const Entry* find(std::string_view key) const;

 private:
  std::vector<Entry> entries_;
};

}  // namespace hpcflow::kvfile
