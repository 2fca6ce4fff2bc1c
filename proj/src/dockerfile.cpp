// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "hpcflow/dockerfile.hpp"

#include <array>
#include <regex>
#include <utility>

#include <json.hpp>

#include "hpcflow/error.hpp"
#include "hpcflow/recon.hpp"
#include "hpcflow/text.hpp"

namespace hpcflow::dockerfile {

namespace {

constexpr std::array<std::pair<Kind, std::string_view>, 13> kKeywords{{
    {Kind::FROM, "FROM"},
    {Kind::RUN, "RUN"},
    {Kind::COPY, "COPY"},
    {Kind::ADD, "ADD"},
    {Kind::ENV, "ENV"},
    {Kind::ARG, "ARG"},
    {Kind::WORKDIR, "WORKDIR"},
    {Kind::ENTRYPOINT, "ENTRYPOINT"},
    {Kind::CMD, "CMD"},
    {Kind::EXPOSE, "EXPOSE"},
    {Kind::USER, "USER"},
    {Kind::LABEL, "LABEL"},
    {Kind::VOLUME, "VOLUME"},
}};

std::optional<Kind> keyword_kind(std::string_view word) {
  auto upper = text::to_upper(word);
  for (const auto& [kind, name] : kKeywords) {
    if (upper == name) return kind;
  }
  return std::nullopt;
}

bool accepts_exec_form(Kind k) {
  switch (k) {
    case Kind::RUN: case Kind::CMD: case Kind::ENTRYPOINT: case Kind::COPY: case Kind::ADD: case Kind::VOLUME:
      return true;
    default:
      return false;
  }
}

std::optional<std::vector<std::string>> parse_exec_tokens(std::string_view args) {
  if (args.empty() || args.front() != '[') return std::nullopt;
  auto j = nlohmann::json::parse(args, nullptr, /*allow_exceptions=*/false);
  if (!j.is_array()) return std::nullopt;
  std::vector<std::string> tokens;
  for (const auto& item : j) {
    if (!item.is_string()) return std::nullopt;
    tokens.push_back(item.get<std::string>());
  }
  return tokens;
}

bool is_escape_directive(std::string_view comment_body) {
  static const std::regex re("\\s*escape\\s*=.*", std::regex::icase);
  return std::regex_match(comment_body.begin(), comment_body.end(), re);
}

bool precedes_from_ok(Kind k) { return k == Kind::FROM || k == Kind::ARG || k == Kind::COMMENT; }

Instruction build(std::string_view joined, LineSpan span) {
  auto full = text::trim(joined);
  auto ws = full.find_first_of(" \t");
  auto keyword = full.substr(0, ws);
  auto rest = ws == std::string_view::npos ? std::string_view{} : text::trim(full.substr(ws));

  Instruction instr;
  if (auto kind = keyword_kind(keyword)) {
    instr.kind = *kind;
    if (accepts_exec_form(*kind)) {
      if (auto tokens = parse_exec_tokens(rest)) {
        instr.exec_form = true;
        instr.tokens = std::move(*tokens);
      }
    }
    instr.args = std::string(rest);
  } else {
    instr.kind = Kind::UNKNOWN;
    instr.args = std::string(full);
  }
  instr.line_span = span;
  return instr;
}

std::string exec_list(const std::vector<std::string>& tokens) {
  std::string out = "[";
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ", ";
    out += nlohmann::json(tokens[i]).dump();
  }
  out += "]";
  return out;
}

std::string basename(std::string_view path) {
  auto slash = path.rfind('/');
  return std::string(slash == std::string_view::npos ? path : path.substr(slash + 1));
}

std::string package_install(const EnvironmentSpec& spec) {
  const auto pkgs = text::join(spec.system_packages, " ");
  switch (spec.package_manager) {
    case PackageManager::apt:
      return "apt-get update && apt-get install -y --no-install-recommends " + pkgs +
             " && rm -rf /var/lib/apt/lists/*";
    case PackageManager::yum:
      return "yum install -y " + pkgs + " && yum clean all && rm -rf /var/cache/yum";
    case PackageManager::apk:
      return "apk add --no-cache " + pkgs;
  }
  return {};
}

}  // namespace

std::string_view to_string(Kind k) {
  if (k == Kind::COMMENT) return "COMMENT";
  if (k == Kind::UNKNOWN) return "UNKNOWN";
  for (const auto& [kind, name] : kKeywords) {
    if (kind == k) return name;
  }
  return "UNKNOWN";
}

Instruction Instruction::shell(Kind kind, std::string args) {
  Instruction i;
  i.kind = kind;
  i.args = std::move(args);
  return i;
}

Instruction Instruction::exec(Kind kind, std::vector<std::string> tokens) {
  Instruction i;
  i.kind = kind;
  i.exec_form = true;
  i.tokens = std::move(tokens);
  i.args = exec_list(i.tokens);
  return i;
}

Instruction Instruction::comment(std::string text) {
  Instruction i;
  i.kind = Kind::COMMENT;
  i.args = std::move(text);
  return i;
}

Instruction Instruction::unknown(std::string raw) {
  Instruction i;
  i.kind = Kind::UNKNOWN;
  i.args = std::move(raw);
  return i;
}

DockerfileAst parse(std::string_view text, std::optional<std::string> source_name) {
  DockerfileAst ast;
  ast.source_name = std::move(source_name);

  const auto all = text::lines(text);
  bool seen_from = false;
  bool seen_instruction = false;

  auto emit = [&](Instruction instr) {
    if (!seen_from && !precedes_from_ok(instr.kind)) {
      throw ParseError(instr.line_span.first,
                       std::string(to_string(instr.kind)) + " instruction before the first FROM");
    }
    if (instr.kind == Kind::FROM) seen_from = true;
    ast.instructions.push_back(std::move(instr));
  };

  std::size_t i = 0;
  while (i < all.size()) {
    const std::size_t lineno = i + 1;
    auto trimmed = text::trim(all[i]);
    if (trimmed.empty()) {
      ++i;
      continue;
    }
    if (trimmed.front() == '#') {
      auto body = text::trim(trimmed.substr(1));
      if (!seen_instruction && is_escape_directive(body))
        throw ParseError(lineno, "escape parser directive is not supported");
      auto c = Instruction::comment(std::string(body));
      c.line_span = {lineno, lineno};
      emit(std::move(c));
      ++i;
      continue;
    }

    seen_instruction = true;
    std::string joined;
    std::size_t last = lineno;
    bool continued = true;
    bool first_line = true;
    while (continued && i < all.size()) {
      std::string_view line = all[i];
      auto t = text::trim(line);
      last = i + 1;
      ++i;
      if (!first_line && (t.empty() || t.front() == '#')) continue;
      first_line = false;
      // Trailing whitespace after the backslash is tolerated.
      auto end = line.find_last_not_of(" \t");
      if (end != std::string_view::npos && line[end] == '\\') {
        joined.append(line.substr(0, end));
        continued = true;
      } else {
        joined.append(line);
        continued = false;
      }
    }
    emit(build(joined, LineSpan{lineno, last}));
  }
  return ast;
}

std::string render(const Instruction& instr) {
  switch (instr.kind) {
    case Kind::COMMENT:
      return instr.args.empty() ? "#" : "# " + instr.args;
    case Kind::UNKNOWN:
      return instr.args;
    default:
      break;
  }
  std::string out(to_string(instr.kind));
  if (instr.exec_form) return out + " " + exec_list(instr.tokens);
  if (!instr.args.empty()) out += " " + instr.args;
  return out;
}

std::string render(const DockerfileAst& ast) {
  std::string out;
  for (const auto& instr : ast.instructions) {
    out += render(instr);
    out += '\n';
  }
  return out;
}

void check_structure(const DockerfileAst& ast) {
  bool seen_from = false;
  for (const auto& instr : ast.instructions) {
    if (instr.kind == Kind::FROM) seen_from = true;
    if (!seen_from && !precedes_from_ok(instr.kind))
      throw ValidationError(std::string(to_string(instr.kind)) + " instruction before the first FROM");
    if (instr.line_span.first > instr.line_span.last) throw ValidationError("instruction line span is inverted");
  }
}

std::string entrypoint_script_name(const EnvironmentSpec& spec) {
  return spec.entrypoint_path ? basename(*spec.entrypoint_path) : std::string("entry.sh");
}

DockerfileAst generate(const EnvironmentSpec& spec) {
  check_strategy_fields(spec);
  DockerfileAst ast;
  auto& out = ast.instructions;

  out.push_back(Instruction::shell(Kind::FROM, spec.base_image));
  if (spec.strategy == Strategy::tags) out.push_back(Instruction::shell(Kind::ARG, "OPENMPI_VERSION"));

  if (!spec.system_packages.empty()) out.push_back(Instruction::shell(Kind::RUN, package_install(spec)));
  for (const auto& copy : spec.code_copies)
    out.push_back(Instruction::shell(Kind::COPY, copy.source + " " + copy.target));

  switch (spec.strategy) {
    case Strategy::tags:
      // One image per tag: the build passes --build-arg OPENMPI_VERSION=<cluster version>.
      out.push_back(Instruction::shell(
          Kind::RUN, recon::expand_installer(spec.install_openmpi, "${OPENMPI_VERSION}", spec.horovod_version)));
      out.push_back(Instruction::shell(
          Kind::RUN, recon::expand_installer(spec.install_horovod, "${OPENMPI_VERSION}", spec.horovod_version)));
      break;
    case Strategy::ngc:
      // The prebuilt image already carries matching OpenMPI and Horovod.
      break;
    case Strategy::entrypoint: {
      const auto& path = *spec.entrypoint_path;
      out.push_back(Instruction::shell(Kind::COPY, entrypoint_script_name(spec) + " " + path));
      out.push_back(Instruction::shell(Kind::RUN, "chmod +x " + path));
      out.push_back(Instruction::exec(Kind::ENTRYPOINT, {path}));
      out.push_back(Instruction::exec(Kind::CMD, recon::default_version_args(spec)));
      break;
    }
  }

  for (std::size_t i = 0; i < out.size(); ++i) out[i].line_span = {i + 1, i + 1};
  return ast;
}

}  // namespace hpcflow::dockerfile
