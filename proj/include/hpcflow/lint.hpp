// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hpcflow/dockerfile.hpp"
#include "hpcflow/profiles.hpp"

namespace hpcflow::lint {

struct RuleInfo {
  std::string_view id;
  Severity severity;
  std::string_view summary;
};

/// Registered rules, in id order:
///
///   E1  info     ENTRYPOINT without CMD in the same stage.
///   P1  warning  FROM with no tag or with `latest`.
///   TF1 error    A RUN downloads or extracts a path that a later RUN removes.
///   TF2 warning  A copied local archive is extracted by a later RUN; ADD does both.
///   TF3 warning  Package manager runs without cleaning its cache in the same RUN.
///
/// Detection is by shell-word patterns, not shell evaluation: paths built from
/// variables or command substitutions, and removals through tools other than
/// `rm`, go unnoticed.
std::span<const RuleInfo> rules();

struct SmellFinding {
  std::string rule_id;
  Severity severity = Severity::warning;
  std::size_t line = 0;
  std::string message;
  std::string suggestion;

  friend bool operator==(const SmellFinding&, const SmellFinding&) = default;
};

struct SmellReport {
  std::vector<SmellFinding> findings;
  std::map<Severity, std::size_t> counts;

  std::size_t count(Severity s) const;
  bool has_errors() const { return count(Severity::error) > 0; }
};

/// Findings sorted by line, then rule id.
SmellReport lint(const dockerfile::DockerfileAst& ast);

/// One `rule_id:severity:line:message` line per finding.
std::string render_machine(const SmellReport& report);

/// Human report with suggestions, ending in a severity summary.
std::string render_human(const SmellReport& report, std::string_view source_name);

namespace shell {

/// Splits a shell-form command line into simple commands at `&&`, `||`, `;`,
/// `|`, `&` and parentheses. Quotes are removed; `$(...)` stays one word.
std::vector<std::vector<std::string>> split_commands(std::string_view line);

}  // namespace shell

}  // namespace hpcflow::lint
