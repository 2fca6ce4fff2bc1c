// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hpcflow/profiles.hpp"

namespace hpcflow::dockerfile {

enum class Kind {
  FROM, RUN, COPY, ADD, ENV, ARG, WORKDIR, ENTRYPOINT, CMD, EXPOSE, USER, LABEL, VOLUME, COMMENT, UNKNOWN
};

std::string_view to_string(Kind k);

struct LineSpan {
  std::size_t first = 0;
  std::size_t last = 0;
};

/// One Dockerfile instruction.
///
/// `args` is the argument text with continuations joined and outer
/// whitespace trimmed. For COMMENT it is the text after `#`; for UNKNOWN it
/// is the whole instruction line, keyword included, so it renders verbatim.
/// When `exec_form` is set, `tokens` holds the bracketed list.
///
/// Equality is structural and ignores `line_span`: collapsing continuation
/// lines moves instructions without changing them.
struct Instruction {
  Kind kind = Kind::UNKNOWN;
  std::string args;
  bool exec_form = false;
  std::vector<std::string> tokens;
  LineSpan line_span;

  static Instruction shell(Kind kind, std::string args);
  static Instruction exec(Kind kind, std::vector<std::string> tokens);
  static Instruction comment(std::string text);
  static Instruction unknown(std::string raw);

  friend bool operator==(const Instruction& a, const Instruction& b) {
    if (a.kind != b.kind || a.exec_form != b.exec_form) return false;
    return a.exec_form ? a.tokens == b.tokens : a.args == b.args;
  }
};

struct DockerfileAst {
  std::vector<Instruction> instructions;
  std::optional<std::string> source_name;

  friend bool operator==(const DockerfileAst& a, const DockerfileAst& b) { return a.instructions == b.instructions; }
};

/// Parses Dockerfile text. Unknown directives become UNKNOWN; an instruction
/// other than ARG or a comment ahead of the first FROM is a ParseError, as is
/// an `escape` parser directive.
DockerfileAst parse(std::string_view text, std::optional<std::string> source_name = std::nullopt);

/// Canonical text: one line per instruction, exec form as `["a", "b"]`.
std::string render(const DockerfileAst& ast);

/// Renders one instruction without the trailing newline.
std::string render(const Instruction& instr);

/// Throws ValidationError when a layer-producing instruction precedes FROM.
void check_structure(const DockerfileAst& ast);

/// Builds the workflow Dockerfile for an environment spec.
DockerfileAst generate(const EnvironmentSpec& spec);

/// Local file name the generated entrypoint script is copied from.
std::string entrypoint_script_name(const EnvironmentSpec& spec);

}  // namespace hpcflow::dockerfile
