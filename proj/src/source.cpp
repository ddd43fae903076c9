// Copyright 2026 The Forge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "forge/source.hpp"

#include <cctype>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "forge/error.hpp"
#include "forge/hash.hpp"

namespace forge {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool is_identifier(const std::string& s) {
  if (s.empty() || !ident_start(s[0])) return false;
  for (char c : s)
    if (!ident_char(c)) return false;
  return true;
}

bool is_dotted(const std::string& s) {
  std::stringstream ss(s);
  std::string part;
  int parts = 0;
  while (std::getline(ss, part, '.')) {
    if (!is_identifier(part)) return false;
    ++parts;
  }
  return parts > 0 && s.back() != '.';
}

std::vector<std::string> split_names(const std::string& s, bool allow_trailing_comma) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(trim(part));
  if (allow_trailing_comma && !out.empty() && out.back().empty() && out.size() > 1) out.pop_back();
  if (!s.empty() && s.back() == ',' && allow_trailing_comma && out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

// Rewrites every variable reference in an argument list. References are
// identifiers that are not keywords, attribute names, callees, keyword
// argument names, or inside string literals.
std::string rewrite_refs(const std::string& args, const std::function<std::string(const std::string&)>& fn) {
  static const std::set<std::string> kKeywords = {"None", "True", "False"};
  std::string out;
  size_t i = 0;
  while (i < args.size()) {
    const char c = args[i];
    if (c == '\'' || c == '"') {
      const size_t end = args.find(c, i + 1);
      const size_t stop = end == std::string::npos ? args.size() : end + 1;
      out += args.substr(i, stop - i);
      i = stop;
      continue;
    }
    if (!ident_start(c) || (i > 0 && (ident_char(args[i - 1]) || args[i - 1] == '.'))) {
      out += c;
      ++i;
      continue;
    }
    size_t j = i;
    while (j < args.size() && ident_char(args[j])) ++j;
    const std::string name = args.substr(i, j - i);
    size_t k = j;
    while (k < args.size() && args[k] == ' ') ++k;
    const bool call = k < args.size() && (args[k] == '(' || args[k] == '.');
    const bool kwarg = k < args.size() && args[k] == '=' && (k + 1 >= args.size() || args[k + 1] != '=');
    out += (call || kwarg || kKeywords.count(name)) ? name : fn(name);
    i = j;
  }
  return out;
}

[[noreturn]] void malformed(int line, const std::string& why) {
  throw Error(ErrorCode::MalformedSource, "line " + std::to_string(line) + ": " + why);
}

size_t matching_paren(const std::string& s, size_t open) {
  int depth = 0;
  for (size_t i = open; i < s.size(); ++i) {
    if (s[i] == '\'' || s[i] == '"') {
      const size_t end = s.find(s[i], i + 1);
      if (end == std::string::npos) return std::string::npos;
      i = end;
    } else if (s[i] == '(' || s[i] == '[') {
      ++depth;
    } else if (s[i] == ')' || s[i] == ']') {
      if (--depth == 0) return i;
    }
  }
  return std::string::npos;
}

}  // namespace

const SourceFunction* ParsedSource::find(const std::string& name) const {
  for (const auto& f : functions)
    if (f.name == name) return &f;
  return nullptr;
}

ParsedSource parse_source(const std::string& text) {
  ParsedSource src;
  std::set<std::string> modules;
  std::set<std::string> bound;
  SourceFunction* fn = nullptr;
  bool returned = false;
  auto close = [&](int line) {
    if (fn && !returned) malformed(line, "function " + fn->name + " has no return");
    fn = nullptr;
  };

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string t = trim(raw);
    if (t.empty() || t[0] == '#') continue;
    const bool indented = raw[0] == ' ';
    if (!indented) {
      close(line);
      if (t.rfind("import ", 0) == 0) {
        const std::string rest = trim(t.substr(7));
        const size_t as = rest.find(" as ");
        const std::string module = as == std::string::npos ? rest : trim(rest.substr(0, as));
        const std::string alias = as == std::string::npos ? rest.substr(0, rest.find('.')) : trim(rest.substr(as + 4));
        if (!is_dotted(module) || !is_identifier(alias)) malformed(line, "bad import");
        modules.insert(alias);
        continue;
      }
      if (t.rfind("def ", 0) != 0 || t.back() != ':') malformed(line, "expected import or def");
      const size_t open = t.find('('), shut = t.rfind(')');
      if (open == std::string::npos || shut == std::string::npos || shut < open) malformed(line, "bad def");
      SourceFunction f;
      f.name = trim(t.substr(4, open - 4));
      if (!is_identifier(f.name)) malformed(line, "bad function name");
      if (src.find(f.name)) malformed(line, "function " + f.name + " defined twice");
      for (const auto& p : split_names(t.substr(open + 1, shut - open - 1), true)) {
        if (!is_identifier(p)) malformed(line, "bad parameter '" + p + "'");
        f.params.push_back(p);
      }
      src.functions.push_back(std::move(f));
      fn = &src.functions.back();
      bound = std::set<std::string>(fn->params.begin(), fn->params.end());
      returned = false;
      continue;
    }
    if (!fn) malformed(line, "statement outside a function");
    if (returned) malformed(line, "statement after return");
    auto check_ref = [&](const std::string& name) {
      if (!bound.count(name)) malformed(line, "'" + name + "' used before definition");
      return name;
    };
    if (t.rfind("return", 0) == 0) {
      std::string r = trim(t.substr(6));
      if (!r.empty() && r.front() == '[' && r.back() == ']') r = r.substr(1, r.size() - 2);
      for (const auto& n : split_names(r, true)) {
        if (!is_identifier(n)) malformed(line, "return list must name tensors");
        fn->returns.push_back(check_ref(n));
      }
      returned = true;
      continue;
    }
    const size_t open = t.find('(');
    const size_t eq = t.find('=');
    if (eq == std::string::npos || open == std::string::npos || eq > open) malformed(line, "expected an assignment");
    SourceStatement st;
    st.line = line;
    for (const auto& n : split_names(t.substr(0, eq), true)) {
      if (!is_identifier(n)) malformed(line, "bad assignment target '" + n + "'");
      st.targets.push_back(n);
    }
    if (st.targets.empty()) malformed(line, "no assignment target");
    st.callee = trim(t.substr(eq + 1, open - eq - 1));
    if (!is_dotted(st.callee)) malformed(line, "bad callee '" + st.callee + "'");
    const std::string head = st.callee.substr(0, st.callee.find('.'));
    if (!modules.count(head) && !src.find(st.callee)) malformed(line, "unknown callee '" + st.callee + "'");
    const size_t shut = matching_paren(t, open);
    if (shut == std::string::npos) malformed(line, "unbalanced parentheses");
    st.args = t.substr(open + 1, shut - open - 1);
    const std::string tail = trim(t.substr(shut + 1));
    if (tail == "[0]") st.select_first = true;
    else if (!tail.empty()) malformed(line, "unexpected '" + tail + "' after call");
    rewrite_refs(st.args, check_ref);
    for (const auto& n : st.targets) bound.insert(n);
    fn->body.push_back(std::move(st));
  }
  close(line + 1);
  return src;
}

namespace {

std::vector<std::string> evaluate(const ParsedSource& src, const SourceFunction& f, const std::vector<std::string>& args,
                                  int depth) {
  if (depth > 64) throw Error(ErrorCode::MalformedSource, "call depth exceeded in " + f.name);
  if (args.size() != f.params.size())
    throw Error(ErrorCode::MalformedSource, f.name + " called with " + std::to_string(args.size()) + " arguments");
  std::map<std::string, std::string> env;
  for (size_t i = 0; i < args.size(); ++i) env[f.params[i]] = args[i];
  for (const auto& st : f.body) {
    std::vector<std::string> values;
    if (const SourceFunction* callee = src.find(st.callee)) {
      std::vector<std::string> actual;
      for (const auto& a : split_names(st.args, true)) {
        if (!env.count(a)) throw Error(ErrorCode::MalformedSource, "line " + std::to_string(st.line) + ": argument '" + a + "' is not a tensor name");
        actual.push_back(env.at(a));
      }
      values = evaluate(src, *callee, actual, depth + 1);
      if (st.select_first) values = {values.at(0)};
    } else {
      Fnv1a h;
      h.str(st.callee);
      h.str(rewrite_refs(st.args, [&](const std::string& n) { return "<" + env.at(n) + ">"; }));
      h.u64(st.select_first ? 1 : 0);
      values = {hex64(h.digest())};
    }
    if (values.size() != st.targets.size())
      throw Error(ErrorCode::MalformedSource, "line " + std::to_string(st.line) + ": unpacks " +
                                                  std::to_string(values.size()) + " values into " +
                                                  std::to_string(st.targets.size()) + " names");
    for (size_t i = 0; i < values.size(); ++i) env[st.targets[i]] = values[i];
  }
  std::vector<std::string> out;
  for (const auto& r : f.returns) out.push_back(env.at(r));
  return out;
}

}  // namespace

std::vector<std::string> dataflow_digests(const ParsedSource& src, const std::string& entry) {
  const SourceFunction* f = src.find(entry);
  if (!f) throw Error(ErrorCode::MalformedSource, "no function named " + entry);
  std::vector<std::string> args;
  for (size_t i = 0; i < f->params.size(); ++i) args.push_back("arg" + std::to_string(i));
  return evaluate(src, *f, args, 0);
}

}  // namespace forge
