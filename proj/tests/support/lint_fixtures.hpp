// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Labeled Dockerfile corpus: each `<name>.Dockerfile` has a `<name>.expected`
// listing one `RULE:severity:line` per expected finding (empty file: none).

#include <algorithm>
#include <string>
#include <vector>

#include "hpcflow/dockerfile.hpp"
#include "hpcflow/lint.hpp"
#include "hpcflow/text.hpp"
#include "support/fs.hpp"

namespace hpcflow::testing {

struct LintFixture {
  std::string name;
  fs::path dockerfile;
  std::vector<std::string> expected;  // sorted labels
};

inline std::vector<LintFixture> lint_fixtures() {
  std::vector<LintFixture> out;
  for (const auto& entry : fs::directory_iterator(fixture_path("lint"))) {
    if (entry.path().extension() != ".Dockerfile") continue;
    LintFixture f;
    f.name = entry.path().stem().string();
    f.dockerfile = entry.path();
    auto labels = entry.path();
    labels.replace_extension(".expected");
    for (const auto& line : text::lines(slurp(labels))) {
      auto t = text::trim(line);
      if (!t.empty()) f.expected.emplace_back(t);
    }
    std::sort(f.expected.begin(), f.expected.end());
    out.push_back(std::move(f));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

inline std::vector<std::string> finding_labels(const lint::SmellReport& report) {
  std::vector<std::string> labels;
  for (const auto& f : report.findings)
    labels.push_back(f.rule_id + ":" + std::string(to_string(f.severity)) + ":" + std::to_string(f.line));
  std::sort(labels.begin(), labels.end());
  return labels;
}

}  // namespace hpcflow::testing
