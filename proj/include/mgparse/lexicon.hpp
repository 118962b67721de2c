#pragma once

// Minimalist grammar lexicons: features, lexical items and the text format
// used to write them down.
//
//   # comment
//   !start c
//   which :: =n d -wh
//   :: =a +m c          (empty phonology, also spelled "eps :: =a +m c")

#include <compare>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mgparse {

enum class FeatureKind { Category, Selector, Licensee, Licensor };

struct Feature {
  FeatureKind kind = FeatureKind::Category;
  std::string name;

  static Feature category(std::string n) { return {FeatureKind::Category, std::move(n)}; }
  static Feature selector(std::string n) { return {FeatureKind::Selector, std::move(n)}; }
  static Feature licensee(std::string n) { return {FeatureKind::Licensee, std::move(n)}; }
  static Feature licensor(std::string n) { return {FeatureKind::Licensor, std::move(n)}; }

  bool is(FeatureKind k, std::string_view n) const { return kind == k && name == n; }

  auto operator<=>(const Feature&) const = default;
  bool operator==(const Feature&) const = default;
};

using FeatureString = std::vector<Feature>;

struct LexicalItem {
  std::string phon;  // empty for an ε item
  FeatureString features;

  auto operator<=>(const LexicalItem&) const = default;
  bool operator==(const LexicalItem&) const = default;
};

struct Lexicon {
  std::vector<LexicalItem> items;
  std::string distinguished = "c";

  bool operator==(const Lexicon&) const = default;
};

/// Raised for malformed grammar text. `line()` is 1-based, 0 when the error
/// is not tied to a line.
class GrammarError : public std::runtime_error {
 public:
  GrammarError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline std::string to_string(const Feature& f) {
  switch (f.kind) {
    case FeatureKind::Category: return f.name;
    case FeatureKind::Selector: return "=" + f.name;
    case FeatureKind::Licensee: return "-" + f.name;
    case FeatureKind::Licensor: return "+" + f.name;
  }
  return f.name;
}

inline std::string to_string(const FeatureString& fs) {
  std::string out;
  for (const auto& f : fs) {
    if (!out.empty()) out += ' ';
    out += to_string(f);
  }
  return out;
}

inline std::string to_string(const LexicalItem& item) {
  std::string out = item.phon.empty() ? "eps" : item.phon;
  out += " :: ";
  out += to_string(item.features);
  return out;
}

namespace detail {

inline bool valid_feature_name(std::string_view name) {
  if (name.empty()) return false;
  if (name.find("::") != std::string_view::npos) return false;
  if (name.find("\xC2\xB7") != std::string_view::npos) return false;  // U+00B7
  for (char ch : name) {
    switch (ch) {
      case '=': case '+': case '-': case '.': case ',': case '[': case ']':
      case ' ': case '\t': case '\r': case '\n': case '#':
        return false;
      default: break;
    }
  }
  return true;
}

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

}  // namespace detail

/// Parses one feature token (`=x`, `+f`, `-f` or bare `x`).
inline Feature parse_feature(std::string_view token, std::size_t line = 0) {
  FeatureKind kind = FeatureKind::Category;
  std::string_view name = token;
  if (!token.empty()) {
    switch (token.front()) {
      case '=': kind = FeatureKind::Selector; name.remove_prefix(1); break;
      case '+': kind = FeatureKind::Licensor; name.remove_prefix(1); break;
      case '-': kind = FeatureKind::Licensee; name.remove_prefix(1); break;
      default: break;
    }
  }
  if (!detail::valid_feature_name(name))
    throw GrammarError(line, "malformed feature token '" + std::string(token) + "'");
  return {kind, std::string(name)};
}

/// Checks Syn = (Selector (Selector|Licensor)*)? Category Licensee*.
/// Returns an empty string when the pattern holds, a description otherwise.
inline std::string syn_violation(const FeatureString& fs) {
  if (fs.empty()) return "empty feature string";
  std::size_t i = 0;
  if (fs[0].kind == FeatureKind::Licensor) return "a licensor cannot open a feature string";
  if (fs[0].kind == FeatureKind::Licensee) return "licensee " + to_string(fs[0]) + " precedes the category";
  while (i < fs.size() && (fs[i].kind == FeatureKind::Selector || fs[i].kind == FeatureKind::Licensor)) ++i;
  if (i == fs.size()) return "no category feature";
  if (fs[i].kind != FeatureKind::Category) return "licensee " + to_string(fs[i]) + " precedes the category";
  for (++i; i < fs.size(); ++i) {
    if (fs[i].kind != FeatureKind::Licensee)
      return "feature " + to_string(fs[i]) + " follows the category; only licensees may";
  }
  return {};
}

/// Index of the single category feature of a Syn-valid feature string.
inline std::size_t category_index(const FeatureString& fs) {
  for (std::size_t i = 0; i < fs.size(); ++i)
    if (fs[i].kind == FeatureKind::Category) return i;
  throw std::logic_error("feature string has no category");
}

inline std::vector<std::string> lexicon_warnings(const Lexicon& lex) {
  std::vector<std::string> out;
  bool has_start = false;
  for (const auto& item : lex.items) {
    const auto& fs = item.features;
    if (!fs.empty() && fs.back().is(FeatureKind::Category, lex.distinguished)) has_start = true;
  }
  if (!has_start)
    out.push_back("no item ends in the distinguished category '" + lex.distinguished +
                  "'; the language is empty");
  return out;
}

inline Lexicon parse_lexicon(std::string_view text) {
  Lexicon lex;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;

    auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;

    if (line.front() == '!') {
      auto toks = detail::split_ws(line);
      if (toks.size() != 2 || toks[0] != "!start")
        throw GrammarError(lineno, "unknown header '" + std::string(line) + "'");
      if (!detail::valid_feature_name(toks[1]))
        throw GrammarError(lineno, "malformed start category '" + toks[1] + "'");
      lex.distinguished = toks[1];
      continue;
    }

    auto sep = line.find("::");
    if (sep == std::string_view::npos) throw GrammarError(lineno, "missing '::'");
    auto phon_part = detail::split_ws(line.substr(0, sep));
    if (phon_part.size() > 1) throw GrammarError(lineno, "phonetic form must be a single word");

    LexicalItem item;
    if (!phon_part.empty() && phon_part[0] != "eps") item.phon = phon_part[0];
    if (item.phon.find("::") != std::string::npos) throw GrammarError(lineno, "stray '::'");

    for (const auto& tok : detail::split_ws(line.substr(sep + 2)))
      item.features.push_back(parse_feature(tok, lineno));

    if (auto why = syn_violation(item.features); !why.empty())
      throw GrammarError(lineno, "item '" + std::string(line) + "' violates the feature order: " + why);

    for (const auto& other : lex.items)
      if (other == item) throw GrammarError(lineno, "duplicate item '" + std::string(line) + "'");

    lex.items.push_back(std::move(item));
  }
  return lex;
}

inline std::string format_lexicon(const Lexicon& lex) {
  std::string out;
  if (lex.distinguished != "c") out += "!start " + lex.distinguished + "\n";
  for (const auto& item : lex.items) {
    if (!item.phon.empty()) out += item.phon + " ";
    out += ":: " + to_string(item.features) + "\n";
  }
  return out;
}

}  // namespace mgparse
