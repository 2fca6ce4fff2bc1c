// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <sys/types.h>
#include <vector>

namespace hpcflow::process {

struct Spec {
  std::vector<std::string> argv;
  // Added to (or overriding) the parent environment.
  std::map<std::string, std::string> env;
  std::optional<std::string> stdin_data;
  std::optional<std::string> cwd;
};

struct Result {
  int exit_code = -1;  // 128 + signal for signalled children
  std::string out;
  std::string err;
  std::optional<std::string> spawn_error;
};

/// Started child whose output goes to private temp files, so many children
/// can run at once without pipe back-pressure.
class Child {
 public:
  explicit Child(const Spec& spec);
  Child(Child&&) noexcept;
  Child& operator=(Child&&) = delete;
  Child(const Child&) = delete;
  ~Child();

  /// Blocks until exit and collects output. Call at most once.
  Result wait();

 private:
  pid_t pid_ = -1;
  std::string dir_;
  std::optional<std::string> spawn_error_;
};

Result run(const Spec& spec);

/// The current process environment as a map.
std::map<std::string, std::string> current_environment();

}  // namespace hpcflow::process
