#pragma once

// Dotted categories: the nonterminals of the rewriting system compiled from a
// lexicon. Entry 0 is the head chain; entries 1..k are the movers.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mgparse/lexicon.hpp"

namespace mgparse {

/// A feature string with an integer dot. Features left of the dot have been
/// consumed by the derivation, features right of it are still pending.
struct DottedString {
  FeatureString base;
  std::size_t dot = 0;

  std::span<const Feature> consumed() const { return {base.data(), dot}; }
  std::span<const Feature> pending() const { return {base.data() + dot, base.size() - dot}; }

  /// Feature immediately left of the dot, nullptr when the dot is leftmost.
  const Feature* last_consumed() const { return dot ? &base[dot - 1] : nullptr; }
  const Feature* next_pending() const { return dot < base.size() ? &base[dot] : nullptr; }

  DottedString moved_left() const { return {base, dot - 1}; }

  bool operator==(const DottedString&) const = default;

  /// Canonical mover order: pending suffix first, consumed prefix second.
  std::strong_ordering operator<=>(const DottedString& o) const {
    auto p = std::lexicographical_compare_three_way(pending().begin(), pending().end(),
                                                     o.pending().begin(), o.pending().end());
    if (p != 0) return p;
    return std::lexicographical_compare_three_way(consumed().begin(), consumed().end(),
                                                  o.consumed().begin(), o.consumed().end());
  }
};

/// Either the axiom `start` (no entries) or a nonempty list of dotted strings.
struct Category {
  std::vector<DottedString> entries;

  static Category start() { return {}; }

  bool is_start() const { return entries.empty(); }
  bool is_simple() const { return entries.size() == 1 && entries[0].dot == 0; }
  bool is_complex() const { return !is_start() && !is_simple(); }

  const DottedString& head() const { return entries.front(); }
  std::span<const DottedString> movers() const {
    return entries.empty() ? std::span<const DottedString>{}
                           : std::span<const DottedString>{entries}.subspan(1);
  }

  std::size_t total_length() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.base.size();
    return n;
  }

  bool operator==(const Category&) const = default;
  std::strong_ordering operator<=>(const Category& o) const {
    return std::lexicographical_compare_three_way(entries.begin(), entries.end(), o.entries.begin(),
                                                  o.entries.end(), [](const auto& a, const auto& b) {
                                                    if (auto c = a.dot <=> b.dot; c != 0) return c;
                                                    return a.base <=> b.base;
                                                  });
  }
};

/// Shortest Movement Constraint: no two movers share a pending licensee.
/// Also requires every mover to have something pending.
inline bool check_smc(const Category& cat) {
  std::set<std::string> seen;
  for (const auto& m : cat.movers()) {
    const Feature* f = m.next_pending();
    if (!f) return false;
    if (f->kind != FeatureKind::Licensee) continue;
    if (!seen.insert(f->name).second) return false;
  }
  return true;
}

inline std::string to_string(const DottedString& d) {
  std::string out;
  for (std::size_t i = 0; i <= d.base.size(); ++i) {
    if (i == d.dot) out += i ? " ." : ".";
    if (i < d.base.size()) {
      if (!out.empty()) out += ' ';
      out += to_string(d.base[i]);
    }
  }
  return out;
}

inline std::string to_string(const Category& cat) {
  if (cat.is_start()) return "start";
  std::string out = "[";
  for (std::size_t i = 0; i < cat.entries.size(); ++i) {
    if (i) out += ", ";
    out += to_string(cat.entries[i]);
  }
  return out + "]";
}

/// Reads the printed form back, e.g. "[=a . +m c, =b a . -m]" or "start".
/// Used by tests and by tools that accept categories on the command line.
inline Category parse_category(std::string_view text) {
  auto t = detail::trim(text);
  if (t == "start") return Category::start();
  if (t.size() < 2 || t.front() != '[' || t.back() != ']')
    throw GrammarError(0, "malformed category '" + std::string(text) + "'");
  t = t.substr(1, t.size() - 2);
  Category cat;
  std::size_t pos = 0;
  while (pos <= t.size()) {
    auto comma = t.find(',', pos);
    auto part = t.substr(pos, comma == std::string_view::npos ? t.size() - pos : comma - pos);
    pos = comma == std::string_view::npos ? t.size() + 1 : comma + 1;
    DottedString d;
    bool dotted = false;
    for (const auto& tok : detail::split_ws(part)) {
      if (tok == ".") {
        if (dotted) throw GrammarError(0, "two dots in '" + std::string(part) + "'");
        d.dot = d.base.size();
        dotted = true;
      } else {
        d.base.push_back(parse_feature(tok));
      }
    }
    if (!dotted) throw GrammarError(0, "missing dot in '" + std::string(part) + "'");
    cat.entries.push_back(std::move(d));
  }
  return cat;
}

}  // namespace mgparse
