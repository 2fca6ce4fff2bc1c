// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>

namespace hpcflow::cli {

inline constexpr int kOk = 0;
inline constexpr int kOperationalError = 1;
inline constexpr int kUsage = 2;
inline constexpr int kLintErrors = 3;

/// Parses `hpcflow <noun> <verb> ...` and runs it. Never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hpcflow::cli
