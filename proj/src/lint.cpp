// Copyright 2026 The hpcflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "hpcflow/lint.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <array>
#include <optional>
#include <set>
#include <sstream>

#include "hpcflow/error.hpp"
#include "hpcflow/image_ref.hpp"
#include "hpcflow/text.hpp"

namespace hpcflow::lint {

using dockerfile::DockerfileAst;
using dockerfile::Instruction;
using dockerfile::Kind;

namespace {

constexpr std::array<RuleInfo, 5> kRules{{
    {"E1", Severity::info, "ENTRYPOINT without CMD default arguments"},
    {"P1", Severity::warning, "unpinned base image tag"},
    {"TF1", Severity::error, "temporary file removed in a later layer"},
    {"TF2", Severity::warning, "local archive copied then extracted; use ADD"},
    {"TF3", Severity::warning, "package manager cache left in the layer"},
}};

// ---------------------------------------------------------------------------
// paths

std::string normalize_path(std::string_view path) {
  std::vector<std::string> parts;
  for (const auto& piece : text::split_list(path, '/')) {
    if (piece.empty() || piece == ".") continue;
    if (piece == "..") {
      if (!parts.empty()) parts.pop_back();
      continue;
    }
    parts.push_back(piece);
  }
  return "/" + text::join(parts, "/");
}

std::string resolve(std::string_view cwd, std::string_view path) {
  if (!path.empty() && path.front() == '/') return normalize_path(path);
  return normalize_path(std::string(cwd) + "/" + std::string(path));
}

std::string basename(std::string_view path) {
  while (path.size() > 1 && path.back() == '/') path.remove_suffix(1);
  auto slash = path.rfind('/');
  return std::string(slash == std::string_view::npos ? path : path.substr(slash + 1));
}

std::string url_basename(std::string_view url) {
  if (auto q = url.find_first_of("?#"); q != std::string_view::npos) url = url.substr(0, q);
  return basename(url);
}

bool is_archive(std::string_view name) {
  for (std::string_view ext : {".tar", ".tar.gz", ".tgz", ".zip", ".tar.bz2", ".tar.xz", ".tbz2", ".txz"}) {
    if (name.size() > ext.size() && name.substr(name.size() - ext.size()) == ext) return true;
  }
  return false;
}

std::string archive_stem(std::string_view name) {
  for (std::string_view ext : {".tar.gz", ".tar.bz2", ".tar.xz", ".tgz", ".tbz2", ".txz", ".tar", ".zip"}) {
    if (name.size() > ext.size() && name.substr(name.size() - ext.size()) == ext)
      return std::string(name.substr(0, name.size() - ext.size()));
  }
  return std::string(name);
}

bool has_glob(std::string_view s) { return s.find_first_of("*?[") != std::string_view::npos; }

bool dynamic(std::string_view s) { return s.find('$') != std::string_view::npos || s.find('`') != std::string_view::npos; }

// ---------------------------------------------------------------------------
// command helpers

/// Drops leading `NAME=value` assignments.
std::span<const std::string> program_words(const std::vector<std::string>& cmd) {
  std::size_t i = 0;
  while (i < cmd.size()) {
    const auto& w = cmd[i];
    auto eq = w.find('=');
    if (eq == std::string::npos || eq == 0 || w.front() == '-') break;
    if (!std::all_of(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(eq),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }))
      break;
    ++i;
  }
  return std::span<const std::string>(cmd).subspan(i);
}

bool has_assignment(const std::vector<std::string>& cmd, std::string_view name) {
  for (const auto& w : cmd) {
    if (w.size() > name.size() && w.compare(0, name.size(), name) == 0 && w[name.size()] == '=') return true;
  }
  return false;
}

std::string program_name(std::span<const std::string> words) {
  return words.empty() ? std::string() : basename(words.front());
}

struct Created {
  std::string path;
  bool directory = false;
  std::size_t line = 0;
};

/// Paths written by a download or extraction command, resolved against cwd.
std::vector<Created> created_by(std::span<const std::string> w, std::string_view cwd, std::size_t line) {
  std::vector<Created> out;
  const auto prog = program_name(w);
  auto add = [&](std::string_view p, bool dir) {
    if (p.empty() || dynamic(p) || p == "-") return;
    auto resolved = resolve(cwd, p);
    if (resolved == "/") return;
    out.push_back(Created{resolved, dir, line});
  };

  if (prog == "wget") {
    std::optional<std::string> output, prefix;
    std::vector<std::string> urls;
    for (std::size_t i = 1; i < w.size(); ++i) {
      const auto& a = w[i];
      if (a == "-O" || a == "--output-document") {
        if (i + 1 < w.size()) output = w[++i];
      } else if (a.rfind("--output-document=", 0) == 0) {
        output = a.substr(18);
      } else if (a.rfind("-O", 0) == 0 && a.size() > 2) {
        output = a.substr(2);
      } else if (a == "-P" || a == "--directory-prefix") {
        if (i + 1 < w.size()) prefix = w[++i];
      } else if (a.rfind("--directory-prefix=", 0) == 0) {
        prefix = a.substr(19);
      } else if (!a.empty() && a.front() != '-') {
        urls.push_back(a);
      }
    }
    if (output) {
      add(*output, false);
    } else {
      for (const auto& u : urls) {
        auto name = url_basename(u);
        if (name.empty() || dynamic(name)) continue;
        add(prefix ? *prefix + "/" + name : name, false);
      }
    }
  } else if (prog == "curl") {
    bool remote_name = false;
    std::vector<std::string> urls;
    for (std::size_t i = 1; i < w.size(); ++i) {
      const auto& a = w[i];
      if (a == "--output") {
        if (i + 1 < w.size()) add(w[++i], false);
      } else if (a.rfind("--output=", 0) == 0) {
        add(a.substr(9), false);
      } else if (a == "--remote-name") {
        remote_name = true;
      } else if (a.size() > 1 && a[0] == '-' && a[1] != '-') {
        auto o = a.find('o', 1);
        if (a.find('O', 1) != std::string::npos) remote_name = true;
        if (o != std::string::npos) {
          if (o + 1 < a.size())
            add(a.substr(o + 1), false);
          else if (i + 1 < w.size())
            add(w[++i], false);
        }
      } else if (!a.empty() && a.front() != '-') {
        urls.push_back(a);
      }
    }
    if (remote_name) {
      for (const auto& u : urls) add(url_basename(u), false);
    }
  } else if (prog == "tar") {
    bool extract = false;
    std::optional<std::string> archive, dir;
    for (std::size_t i = 1; i < w.size(); ++i) {
      const auto& a = w[i];
      if (a == "-C" || a == "--directory") {
        if (i + 1 < w.size()) dir = w[++i];
      } else if (a.rfind("--directory=", 0) == 0) {
        dir = a.substr(12);
      } else if (a.rfind("-C", 0) == 0 && a.size() > 2) {
        dir = a.substr(2);
      } else if (a == "--extract" || a == "--get") {
        extract = true;
      } else if (a.rfind("--file=", 0) == 0) {
        archive = a.substr(7);
      } else if (a == "--file") {
        if (i + 1 < w.size()) archive = w[++i];
      } else if ((a.size() > 1 && a[0] == '-' && a[1] != '-') || (i == 1 && !a.empty() && a[0] != '-')) {
        // Short option cluster, with or without the leading dash (`xzf`).
        if (a.find('x') != std::string::npos) extract = true;
        auto f = a.find('f');
        if (f != std::string::npos) {
          if (f + 1 < a.size())
            archive = a.substr(f + 1);
          else if (i + 1 < w.size())
            archive = w[++i];
        }
      }
    }
    if (extract) {
      if (dir)
        add(*dir, true);
      else if (archive)
        add(archive_stem(basename(*archive)), true);
    }
  } else if (prog == "unzip") {
    for (std::size_t i = 1; i + 1 < w.size(); ++i) {
      if (w[i] == "-d") add(w[i + 1], true);
    }
  }
  return out;
}

/// Archive operand of a `tar x` or `unzip` command.
std::optional<std::string> extracted_archive(std::span<const std::string> w) {
  const auto prog = program_name(w);
  if (prog == "tar") {
    bool extract = false;
    std::optional<std::string> archive;
    for (std::size_t i = 1; i < w.size(); ++i) {
      const auto& a = w[i];
      if (a == "--extract" || a == "--get") {
        extract = true;
      } else if (a.rfind("--file=", 0) == 0) {
        archive = a.substr(7);
      } else if (a == "--file" || a == "-C" || a == "--directory") {
        if (i + 1 < w.size()) {
          if (a == "--file") archive = w[i + 1];
          ++i;
        }
      } else if ((a.size() > 1 && a[0] == '-' && a[1] != '-') || (i == 1 && !a.empty() && a[0] != '-')) {
        if (a.find('x') != std::string::npos) extract = true;
        auto f = a.find('f');
        if (f != std::string::npos) {
          if (f + 1 < a.size())
            archive = a.substr(f + 1);
          else if (i + 1 < w.size())
            archive = w[++i];
        }
      }
    }
    if (extract && archive) return archive;
  } else if (prog == "unzip") {
    for (std::size_t i = 1; i < w.size(); ++i) {
      if (w[i] == "-d") {
        ++i;
        continue;
      }
      if (!w[i].empty() && w[i].front() != '-') return w[i];
    }
  }
  return std::nullopt;
}

std::vector<std::string> removed_by(std::span<const std::string> w) {
  std::vector<std::string> out;
  if (program_name(w) != "rm") return out;
  bool options_done = false;
  for (std::size_t i = 1; i < w.size(); ++i) {
    if (!options_done && w[i] == "--") {
      options_done = true;
      continue;
    }
    if (!options_done && !w[i].empty() && w[i].front() == '-') continue;
    out.push_back(w[i]);
  }
  return out;
}

bool removal_hits(const std::string& removed, const Created& c) {
  if (removed == c.path) return true;
  if (has_glob(removed) && fnmatch(removed.c_str(), c.path.c_str(), FNM_PATHNAME) == 0) return true;
  // Removing a directory that holds the file.
  if (c.path.size() > removed.size() && c.path.compare(0, removed.size(), removed) == 0 &&
      (removed == "/" || c.path[removed.size()] == '/'))
    return true;
  // Removing part of an extracted tree.
  if (c.directory && removed.size() > c.path.size() && removed.compare(0, c.path.size(), c.path) == 0 &&
      removed[c.path.size()] == '/')
    return true;
  return false;
}

// ---------------------------------------------------------------------------
// package managers

struct ManagerUse {
  std::string name;
  bool cleaned = false;
};

std::optional<std::string> package_manager(std::span<const std::string> w) {
  auto prog = program_name(w);
  auto sub = [&](std::size_t idx) -> std::string {
    for (std::size_t i = idx; i < w.size(); ++i) {
      if (!w[i].empty() && w[i].front() != '-') return w[i];
    }
    return {};
  };
  if (prog == "apt-get" || prog == "apt") {
    auto s = sub(1);
    if (s == "install" || s == "update" || s == "upgrade" || s == "dist-upgrade") return std::string("apt");
  } else if (prog == "yum" || prog == "dnf" || prog == "microdnf") {
    auto s = sub(1);
    if (s == "install" || s == "update" || s == "upgrade") return prog == "yum" ? std::string("yum") : std::string("dnf");
  } else if (prog == "apk") {
    auto s = sub(1);
    if (s == "add" || s == "update" || s == "upgrade") return std::string("apk");
  } else if (prog == "pip" || prog == "pip3") {
    if (sub(1) == "install") return std::string("pip");
  } else if ((prog == "python" || prog == "python3") && w.size() > 3 && w[1] == "-m" &&
             (w[2] == "pip" || w[2] == "pip3")) {
    if (sub(3) == "install") return std::string("pip");
  } else if (prog == "conda" || prog == "mamba") {
    auto s = sub(1);
    if (s == "install" || s == "create") return std::string("conda");
  }
  return std::nullopt;
}

bool rm_under(std::span<const std::string> w, std::initializer_list<std::string_view> prefixes) {
  for (const auto& r : removed_by(w)) {
    for (auto p : prefixes) {
      if (r.compare(0, p.size(), p) == 0) return true;
    }
  }
  return false;
}

bool contains(std::span<const std::string> w, std::string_view token) {
  return std::find(w.begin(), w.end(), token) != w.end();
}

/// Whether `cmd` (raw, including env assignments) clears the cache of `manager`.
bool cleans(const std::string& manager, const std::vector<std::string>& cmd) {
  auto w = program_words(cmd);
  auto prog = program_name(w);
  if (manager == "apt") {
    if ((prog == "apt-get" || prog == "apt") && contains(w, "clean")) return true;
    return rm_under(w, {"/var/lib/apt/lists"});
  }
  if (manager == "yum" || manager == "dnf") {
    if ((prog == "yum" || prog == "dnf" || prog == "microdnf") && contains(w, "clean")) return true;
    return rm_under(w, {"/var/cache/yum", "/var/cache/dnf"});
  }
  if (manager == "apk") {
    if (prog == "apk" && contains(w, "--no-cache")) return true;
    return rm_under(w, {"/var/cache/apk"});
  }
  if (manager == "pip") {
    if (package_manager(w) == std::optional<std::string>("pip") &&
        (contains(w, "--no-cache-dir") || has_assignment(cmd, "PIP_NO_CACHE_DIR")))
      return true;
    if ((prog == "pip" || prog == "pip3") && contains(w, "cache") && contains(w, "purge")) return true;
    return rm_under(w, {"/root/.cache", "~/.cache", "$HOME/.cache"});
  }
  if (manager == "conda") {
    return (prog == "conda" || prog == "mamba") && contains(w, "clean");
  }
  return false;
}

std::string cleanup_hint(const std::string& manager) {
  if (manager == "apt") return "end the RUN with `&& rm -rf /var/lib/apt/lists/*`";
  if (manager == "yum" || manager == "dnf") return "end the RUN with `&& " + manager + " clean all`";
  if (manager == "apk") return "use `apk add --no-cache`";
  if (manager == "pip") return "use `pip install --no-cache-dir`";
  return "end the RUN with `&& conda clean -afy`";
}

// ---------------------------------------------------------------------------

std::vector<std::string> run_lines(const Instruction& instr) {
  if (instr.exec_form) {
    // ["sh", "-c", "<script>"] is the only exec form with shell words worth scanning.
    if (instr.tokens.size() == 3 && (instr.tokens[1] == "-c")) return {instr.tokens[2]};
    return {text::join(instr.tokens, " ")};
  }
  return {instr.args};
}

struct CopySource {
  std::string name;
  std::size_t line = 0;
  bool reported = false;
};

std::vector<std::string> copy_operands(const Instruction& instr) {
  std::vector<std::string> ops = instr.exec_form ? instr.tokens : text::words(instr.args);
  ops.erase(std::remove_if(ops.begin(), ops.end(), [](const std::string& s) { return s.rfind("--", 0) == 0; }),
            ops.end());
  return ops;
}

bool copies_from_stage(const Instruction& instr) {
  auto check = [](const std::string& w) { return w.rfind("--from", 0) == 0; };
  if (instr.exec_form) return std::any_of(instr.tokens.begin(), instr.tokens.end(), check);
  auto w = text::words(instr.args);
  return std::any_of(w.begin(), w.end(), check);
}

class StageLinter {
 public:
  explicit StageLinter(std::vector<SmellFinding>& out) : out_(out) {}

  void visit(const Instruction& instr) {
    const auto line = instr.line_span.first;
    switch (instr.kind) {
      case Kind::WORKDIR:
        if (!instr.args.empty() && !dynamic(instr.args)) workdir_ = resolve(workdir_, instr.args);
        break;
      case Kind::COPY:
        if (!copies_from_stage(instr)) {
          auto ops = copy_operands(instr);
          for (std::size_t i = 0; i + 1 < ops.size(); ++i) {
            if (is_archive(ops[i])) copies_.push_back(CopySource{basename(ops[i]), line});
          }
        }
        break;
      case Kind::RUN:
        visit_run(instr, line);
        break;
      case Kind::ENTRYPOINT:
        entrypoint_line_ = line;
        break;
      case Kind::CMD:
        has_cmd_ = true;
        break;
      default:
        break;
    }
  }

  void finish() {
    if (entrypoint_line_ && !has_cmd_) {
      out_.push_back(SmellFinding{
          "E1", Severity::info, *entrypoint_line_, "ENTRYPOINT has no CMD supplying default arguments",
          "add a CMD with the default arguments, e.g. the default version arguments of the entrypoint"});
    }
  }

 private:
  void visit_run(const Instruction& instr, std::size_t line) {
    std::vector<Created> local;
    std::vector<ManagerUse> managers;
    std::set<std::string> flagged;
    std::vector<std::vector<std::string>> all_cmds;

    for (const auto& script : run_lines(instr)) {
      auto cmds = shell::split_commands(script);
      std::string cwd = workdir_;
      for (const auto& cmd : cmds) {
        all_cmds.push_back(cmd);
        auto w = program_words(cmd);
        if (w.empty()) continue;
        if (program_name(w) == "cd") {
          if (w.size() > 1 && !dynamic(w[1]))
            cwd = resolve(cwd, w[1]);
          else
            cwd = "/";
          continue;
        }

        for (const auto& raw : removed_by(w)) {
          if (dynamic(raw)) continue;
          auto target = resolve(cwd, raw);
          local.erase(std::remove_if(local.begin(), local.end(),
                                     [&](const Created& c) { return removal_hits(target, c); }),
                      local.end());
          for (auto it = created_.begin(); it != created_.end();) {
            if (removal_hits(target, *it)) {
              if (flagged.insert(it->path).second) {
                out_.push_back(SmellFinding{
                    "TF1", Severity::error, line,
                    "removes '" + it->path + "' created by the RUN at line " + std::to_string(it->line) +
                        "; the earlier layer still holds it",
                    "delete it in the same RUN that creates it, e.g. `... && rm -rf " + it->path + "`"});
              }
              it = created_.erase(it);
            } else {
              ++it;
            }
          }
        }

        for (auto& c : created_by(w, cwd, line)) local.push_back(std::move(c));

        if (auto archive = extracted_archive(w)) {
          auto name = basename(*archive);
          for (auto& copy : copies_) {
            if (!copy.reported && copy.name == name) {
              copy.reported = true;
              out_.push_back(SmellFinding{
                  "TF2", Severity::warning, copy.line,
                  "archive '" + copy.name + "' is copied and then extracted at line " + std::to_string(line) +
                      "; the compressed copy stays in its own layer",
                  "use ADD instead of COPY so the archive is unpacked while it is added"});
            }
          }
        }

        if (auto m = package_manager(w)) {
          if (std::none_of(managers.begin(), managers.end(), [&](const ManagerUse& u) { return u.name == *m; }))
            managers.push_back(ManagerUse{*m});
        }
      }
    }

    for (auto& use : managers) {
      for (const auto& cmd : all_cmds) {
        if (cleans(use.name, cmd)) use.cleaned = true;
      }
      if (!use.cleaned) {
        out_.push_back(SmellFinding{"TF3", Severity::warning, line,
                                    use.name + " runs without removing its package cache in the same RUN",
                                    cleanup_hint(use.name)});
      }
    }

    for (auto& c : local) created_.push_back(std::move(c));
  }

  std::vector<SmellFinding>& out_;
  std::string workdir_ = "/";
  std::vector<Created> created_;
  std::vector<CopySource> copies_;
  std::optional<std::size_t> entrypoint_line_;
  bool has_cmd_ = false;
};

void check_from(const Instruction& instr, const std::set<std::string>& stage_names, std::vector<SmellFinding>& out) {
  auto w = text::words(instr.args);
  auto it = std::find_if(w.begin(), w.end(), [](const std::string& s) { return s.rfind("--", 0) != 0; });
  if (it == w.end()) return;
  const auto& image = *it;
  if (dynamic(image) || image == "scratch") return;
  auto lower = image;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (stage_names.count(lower)) return;

  ImageRef ref;
  try {
    ref = ImageRef::parse(image);
  } catch (const Error&) {
    return;
  }
  if (ref.pinned()) return;
  out.push_back(SmellFinding{"P1", Severity::warning, instr.line_span.first,
                             "base image '" + image + "' is not pinned to a version tag",
                             "use an explicit tag or digest, e.g. '" + ref.repository() + ":<version>'"});
}

std::optional<std::string> stage_alias(const Instruction& instr) {
  auto w = text::words(instr.args);
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    if (text::to_upper(w[i]) == "AS") {
      auto name = w[i + 1];
      std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
      return name;
    }
  }
  return std::nullopt;
}

}  // namespace

std::span<const RuleInfo> rules() { return kRules; }

std::size_t SmellReport::count(Severity s) const {
  auto it = counts.find(s);
  return it == counts.end() ? 0 : it->second;
}

SmellReport lint(const DockerfileAst& ast) {
  std::vector<SmellFinding> findings;
  std::set<std::string> stage_names;
  std::optional<StageLinter> stage;

  for (const auto& instr : ast.instructions) {
    if (instr.kind == Kind::FROM) {
      if (stage) stage->finish();
      stage.emplace(findings);
      check_from(instr, stage_names, findings);
      if (auto alias = stage_alias(instr)) stage_names.insert(*alias);
      continue;
    }
    if (stage) stage->visit(instr);
  }
  if (stage) stage->finish();

  std::stable_sort(findings.begin(), findings.end(), [](const SmellFinding& a, const SmellFinding& b) {
    if (a.line != b.line) return a.line < b.line;
    return a.rule_id < b.rule_id;
  });

  SmellReport report;
  report.findings = std::move(findings);
  for (const auto& f : report.findings) ++report.counts[f.severity];
  return report;
}

std::string render_machine(const SmellReport& report) {
  std::string out;
  for (const auto& f : report.findings) {
    out += f.rule_id + ":" + std::string(to_string(f.severity)) + ":" + std::to_string(f.line) + ":" + f.message + "\n";
  }
  return out;
}

std::string render_human(const SmellReport& report, std::string_view source_name) {
  std::ostringstream out;
  for (const auto& f : report.findings) {
    out << source_name << ":" << f.line << ": " << to_string(f.severity) << " [" << f.rule_id << "] " << f.message
        << "\n    fix: " << f.suggestion << "\n";
  }
  out << report.findings.size() << " finding(s): " << report.count(Severity::error) << " error, "
      << report.count(Severity::warning) << " warning, " << report.count(Severity::info) << " info\n";
  return out.str();
}

namespace shell {

std::vector<std::vector<std::string>> split_commands(std::string_view line) {
  std::vector<std::vector<std::string>> cmds;
  std::vector<std::string> current;
  std::string word;
  bool in_word = false;

  auto end_word = [&] {
    if (in_word) current.push_back(word);
    word.clear();
    in_word = false;
  };
  auto end_command = [&] {
    end_word();
    if (!current.empty()) cmds.push_back(std::move(current));
    current.clear();
  };

  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (c == '\'') {
      in_word = true;
      auto close = line.find('\'', i + 1);
      if (close == std::string_view::npos) close = line.size();
      word.append(line.substr(i + 1, close - i - 1));
      i = close + 1;
    } else if (c == '"') {
      in_word = true;
      ++i;
      while (i < line.size() && line[i] != '"') {
        if (line[i] == '\\' && i + 1 < line.size()) ++i;
        word += line[i++];
      }
      ++i;
    } else if (c == '\\' && i + 1 < line.size()) {
      in_word = true;
      word += line[i + 1];
      i += 2;
    } else if (c == '$' && i + 1 < line.size() && line[i + 1] == '(') {
      in_word = true;
      int depth = 0;
      while (i < line.size()) {
        if (line[i] == '(') ++depth;
        if (line[i] == ')' && --depth == 0) {
          word += line[i++];
          break;
        }
        word += line[i++];
      }
    } else if (c == '&' || c == '|' || c == ';' || c == '(' || c == ')' || c == '\n') {
      end_command();
      ++i;
    } else if (c == ' ' || c == '\t') {
      end_word();
      ++i;
    } else {
      in_word = true;
      word += c;
      ++i;
    }
  }
  end_command();
  return cmds;
}

}  // namespace shell

}  // namespace hpcflow::lint
