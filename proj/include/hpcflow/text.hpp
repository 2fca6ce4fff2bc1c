// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hpcflow::text {

std::string_view trim(std::string_view s);

/// Splits on `sep`, trimming each piece. An all-blank input yields no pieces.
std::vector<std::string> split_list(std::string_view s, char sep = ',');

/// Splits into lines, dropping a trailing '\r' from each.
std::vector<std::string> lines(std::string_view s);

/// Splits on ASCII whitespace runs.
std::vector<std::string> words(std::string_view s);

std::string join(std::span<const std::string> parts, std::string_view sep);

bool starts_with_ci(std::string_view s, std::string_view prefix);
std::string to_upper(std::string_view s);

/// True for `[A-Za-z0-9][A-Za-z0-9_.-]*`.
bool is_identifier(std::string_view s);

/// Quotes one argument for POSIX sh. Plain words stay bare; words holding a
/// `$` (and no other shell-active quote characters) are double-quoted so the
/// reference still expands; everything else is single-quoted.
std::string shell_quote(std::string_view arg);

/// Renders an argument vector as one shell command line.
std::string shell_join(std::span<const std::string> argv);

}  // namespace hpcflow::text
