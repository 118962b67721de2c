#pragma once

// Compiles a lexicon into the top-down rule system: the closure of the axiom
// `start` under the un-merge / un-move / lexicalize schemes.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgparse/category.hpp"
#include "mgparse/lexicon.hpp"

namespace mgparse {

using CatId = std::uint32_t;
using RuleId = std::uint32_t;  // 1-based, R1 is the first rule

enum class RuleKind {
  Start,
  Unmerge1,
  Unmerge2,
  Unmerge3Simple,
  Unmerge3Complex,
  Unmove1,
  Unmove2,
  Lexicalize,
};

inline const char* to_string(RuleKind k) {
  switch (k) {
    case RuleKind::Start: return "Start";
    case RuleKind::Unmerge1: return "Unmerge1";
    case RuleKind::Unmerge2: return "Unmerge2";
    case RuleKind::Unmerge3Simple: return "Unmerge3Simple";
    case RuleKind::Unmerge3Complex: return "Unmerge3Complex";
    case RuleKind::Unmove1: return "Unmove1";
    case RuleKind::Unmove2: return "Unmove2";
    case RuleKind::Lexicalize: return "Lexicalize";
  }
  return "?";
}

/// Short family prefix used by symbolic rule names (S1, Mg3, Mv1, L4).
inline const char* alias_prefix(RuleKind k) {
  switch (k) {
    case RuleKind::Start: return "S";
    case RuleKind::Unmove1:
    case RuleKind::Unmove2: return "Mv";
    case RuleKind::Lexicalize: return "L";
    default: return "Mg";
  }
}

/// True for the rules that split the position of the lhs head chain.
inline bool splits_head_position(RuleKind k) {
  return k == RuleKind::Unmerge1 || k == RuleKind::Unmerge2 || k == RuleKind::Unmove1;
}

/// Where an rhs entry takes its surface position from: the position of lhs
/// entry `lhs_entry`, extended by `bit` (0 or 1) or kept as is (bit < 0).
struct EntrySource {
  std::uint32_t lhs_entry = 0;
  std::int8_t bit = -1;

  bool operator==(const EntrySource&) const = default;
};

/// A rule whose categories are still values; what the schemes produce.
struct RuleShape {
  RuleKind kind = RuleKind::Start;
  Category lhs;
  std::vector<Category> rhs;                       // selector side first
  std::vector<std::vector<EntrySource>> routing;   // parallel to rhs[i].entries
  std::optional<std::size_t> item;                 // Lexicalize: lexicon index

  bool operator==(const RuleShape&) const = default;
};

struct Rule {
  RuleId id = 0;
  RuleKind kind = RuleKind::Start;
  CatId lhs = 0;
  std::vector<CatId> rhs;
  std::vector<std::vector<EntrySource>> routing;
  std::optional<std::size_t> item;
};

class RuleSet;
RuleSet close(const Lexicon& lex);

/// The compiled grammar. Immutable once built by close().
class RuleSet {
 public:
  static constexpr CatId kStart = 0;

  const Lexicon& lexicon() const { return lexicon_; }
  const std::vector<Category>& categories() const { return categories_; }
  const Category& category(CatId id) const { return categories_.at(id); }
  std::optional<CatId> find(const Category& cat) const {
    auto it = index_.find(cat);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::vector<Rule>& rules() const { return rules_; }
  const Rule& rule(RuleId id) const {
    if (id == 0 || id > rules_.size()) throw std::out_of_range("unknown rule id R" + std::to_string(id));
    return rules_[id - 1];
  }
  std::span<const RuleId> rules_for(CatId lhs) const { return by_lhs_.at(lhs); }

  const LexicalItem& item(const Rule& r) const { return lexicon_.items.at(*r.item); }

  /// Symbolic name: family prefix plus ordinal within the family.
  const std::string& alias(RuleId id) const { return aliases_.at(id - 1); }

  /// Accepts "R12" or a symbolic name such as "Mg3".
  std::optional<RuleId> resolve(std::string_view token) const {
    if (token.size() > 1 && token[0] == 'R' &&
        std::all_of(token.begin() + 1, token.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      auto id = static_cast<RuleId>(std::stoul(std::string(token.substr(1))));
      if (id >= 1 && id <= rules_.size()) return id;
      return std::nullopt;
    }
    for (std::size_t i = 0; i < aliases_.size(); ++i)
      if (aliases_[i] == token) return static_cast<RuleId>(i + 1);
    return std::nullopt;
  }

 private:
  friend RuleSet close(const Lexicon& lex);

  Lexicon lexicon_;
  std::vector<Category> categories_;
  std::map<Category, CatId> index_;
  std::vector<Rule> rules_;
  std::vector<std::vector<RuleId>> by_lhs_;
  std::vector<std::string> aliases_;
};

namespace detail {

struct ChildBuilder {
  std::vector<DottedString> entries;
  std::vector<EntrySource> sources;

  ChildBuilder& add(DottedString d, EntrySource s) {
    entries.push_back(std::move(d));
    sources.push_back(s);
    return *this;
  }
};

/// Puts movers in canonical order and applies the well-formedness filters:
/// a chain with nothing consumed is lexical and cannot carry movers, and the
/// result must satisfy the SMC.
inline bool finish_child(ChildBuilder b, Category& out, std::vector<EntrySource>& src) {
  std::vector<std::size_t> order(b.entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin() + 1, order.end(),
                   [&](std::size_t x, std::size_t y) { return b.entries[x] < b.entries[y]; });
  out.entries.clear();
  src.clear();
  for (auto i : order) {
    out.entries.push_back(std::move(b.entries[i]));
    src.push_back(b.sources[i]);
  }
  if (out.entries[0].dot == 0 && out.entries.size() > 1) return false;
  return check_smc(out);
}

inline std::vector<const FeatureString*> distinct_feature_strings(
    const Lexicon& lex, const auto& pred) {
  std::vector<const FeatureString*> out;
  for (const auto& item : lex.items) {
    if (!pred(item.features)) continue;
    bool dup = std::any_of(out.begin(), out.end(), [&](auto* f) { return *f == item.features; });
    if (!dup) out.push_back(&item.features);
  }
  return out;
}

inline bool ends_with(const FeatureString& fs, FeatureKind kind, const std::string& name) {
  return !fs.empty() && fs.back().is(kind, name);
}

inline void push_rule(std::vector<RuleShape>& out, RuleKind kind, const Category& lhs,
                      std::vector<ChildBuilder> children) {
  RuleShape r;
  r.kind = kind;
  r.lhs = lhs;
  for (auto& c : children) {
    Category cat;
    std::vector<EntrySource> src;
    if (!finish_child(std::move(c), cat, src)) return;
    r.rhs.push_back(std::move(cat));
    r.routing.push_back(std::move(src));
  }
  if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(std::move(r));
}

}  // namespace detail

/// One Start rule per distinct feature string `δ c` in the lexicon, in
/// lexicon order. The rhs is [δ · c].
inline std::vector<RuleShape> start_rules(const Lexicon& lex) {
  std::vector<RuleShape> out;
  auto finals = detail::distinct_feature_strings(lex, [&](const FeatureString& fs) {
    return detail::ends_with(fs, FeatureKind::Category, lex.distinguished);
  });
  for (const auto* fs : finals) {
    detail::ChildBuilder c;
    c.add({*fs, fs->size() - 1}, {0, -1});
    detail::push_rule(out, RuleKind::Start, Category::start(), {std::move(c)});
  }
  return out;
}

/// All scheme instances whose lhs is `cat`. The scheme is selected by the
/// feature immediately left of the head's dot: a selector =x means the
/// category was built by merge, a licensor +f means it was built by move.
/// Simple categories rewrite to lexical items.
inline std::vector<RuleShape> expand_category(const Category& cat, const Lexicon& lex) {
  if (cat.is_start()) return start_rules(lex);

  std::vector<RuleShape> out;
  const auto& head = cat.head();

  if (cat.is_simple()) {
    for (std::size_t i = 0; i < lex.items.size(); ++i) {
      if (lex.items[i].features != head.base) continue;
      RuleShape r;
      r.kind = RuleKind::Lexicalize;
      r.lhs = cat;
      r.item = i;
      out.push_back(std::move(r));
    }
    return out;
  }

  const Feature* last = head.last_consumed();
  if (!last) return out;
  const auto k = static_cast<std::uint32_t>(cat.entries.size());  // movers are 1..k-1
  using detail::ChildBuilder;

  if (last->kind == FeatureKind::Selector) {
    const std::string& x = last->name;
    auto selected = detail::distinct_feature_strings(lex, [&](const FeatureString& fs) {
      return detail::ends_with(fs, FeatureKind::Category, x);
    });
    auto mover_selected = [&](std::uint32_t i) {
      const Feature* f = cat.entries[i].last_consumed();
      return f && f->is(FeatureKind::Category, x);
    };

    if (head.dot == 1) {
      for (const auto* fs : selected) {
        ChildBuilder sel, comp;
        sel.add({head.base, 0}, {0, 0});
        comp.add({*fs, fs->size() - 1}, {0, 1});
        for (std::uint32_t i = 1; i < k; ++i) comp.add(cat.entries[i], {i, -1});
        detail::push_rule(out, RuleKind::Unmerge1, cat, {std::move(sel), std::move(comp)});
      }
      for (std::uint32_t m = 1; m < k; ++m) {
        if (!mover_selected(m)) continue;
        ChildBuilder sel, comp;
        sel.add({head.base, 0}, {0, -1});
        comp.add(cat.entries[m].moved_left(), {m, -1});
        for (std::uint32_t i = 1; i < k; ++i)
          if (i != m) comp.add(cat.entries[i], {i, -1});
        detail::push_rule(out, RuleKind::Unmerge3Simple, cat, {std::move(sel), std::move(comp)});
      }
    } else {
      const std::uint32_t movers = k - 1;
      for (const auto* fs : selected) {
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << movers); ++mask) {
          ChildBuilder sel, comp;
          sel.add(head.moved_left(), {0, 1});
          comp.add({*fs, fs->size() - 1}, {0, 0});
          for (std::uint32_t i = 1; i < k; ++i)
            ((mask >> (i - 1)) & 1 ? comp : sel).add(cat.entries[i], {i, -1});
          detail::push_rule(out, RuleKind::Unmerge2, cat, {std::move(sel), std::move(comp)});
        }
      }
      for (std::uint32_t m = 1; m < k; ++m) {
        if (!mover_selected(m)) continue;
        std::vector<std::uint32_t> rest;
        for (std::uint32_t i = 1; i < k; ++i)
          if (i != m) rest.push_back(i);
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << rest.size()); ++mask) {
          ChildBuilder sel, comp;
          sel.add(head.moved_left(), {0, -1});
          comp.add(cat.entries[m].moved_left(), {m, -1});
          for (std::size_t j = 0; j < rest.size(); ++j)
            ((mask >> j) & 1 ? comp : sel).add(cat.entries[rest[j]], {rest[j], -1});
          detail::push_rule(out, RuleKind::Unmerge3Complex, cat, {std::move(sel), std::move(comp)});
        }
      }
    }
  } else if (last->kind == FeatureKind::Licensor) {
    const std::string& f = last->name;
    std::vector<std::uint32_t> landed;
    for (std::uint32_t i = 1; i < k; ++i) {
      const Feature* c = cat.entries[i].last_consumed();
      if (c && c->is(FeatureKind::Licensee, f)) landed.push_back(i);
    }
    if (!landed.empty()) {
      for (auto m : landed) {
        ChildBuilder body;
        body.add(head.moved_left(), {0, -1});
        for (std::uint32_t i = 1; i < k; ++i)
          body.add(i == m ? cat.entries[i].moved_left() : cat.entries[i], {i, -1});
        detail::push_rule(out, RuleKind::Unmove2, cat, {std::move(body)});
      }
    } else {
      auto movers = detail::distinct_feature_strings(lex, [&](const FeatureString& fs) {
        return detail::ends_with(fs, FeatureKind::Licensee, f);
      });
      for (const auto* fs : movers) {
        ChildBuilder body;
        body.add(head.moved_left(), {0, 1});
        body.add({*fs, fs->size() - 1}, {0, 0});
        for (std::uint32_t i = 1; i < k; ++i) body.add(cat.entries[i], {i, -1});
        detail::push_rule(out, RuleKind::Unmove1, cat, {std::move(body)});
      }
    }
  }
  return out;
}

inline std::size_t lexicon_feature_length(const Lexicon& lex) {
  std::size_t n = 0;
  for (const auto& item : lex.items) n += item.features.size();
  return n;
}

/// Closure of `start` under the rule schemes. Categories that cannot derive
/// any complete tree are dropped together with the rules that mention them;
/// rule ids are then assigned breadth-first from `start`.
inline RuleSet close(const Lexicon& lex) {
  const std::size_t bound = lexicon_feature_length(lex);

  // Exploration over category values.
  std::map<Category, std::vector<RuleShape>> explored;
  std::deque<Category> work{Category::start()};
  explored.emplace(Category::start(), std::vector<RuleShape>{});
  while (!work.empty()) {
    Category cat = std::move(work.front());
    work.pop_front();
    auto shapes = expand_category(cat, lex);
    for (const auto& r : shapes) {
      for (const auto& child : r.rhs) {
        if (child.total_length() > bound)
          throw std::logic_error("category " + to_string(child) + " exceeds the length bound " +
                                 std::to_string(bound));
        if (explored.emplace(child, std::vector<RuleShape>{}).second) work.push_back(child);
      }
    }
    explored[cat] = std::move(shapes);
  }

  // Productive categories: those with at least one rule whose children are
  // all productive. Lexicalize rules have no children.
  std::set<Category> productive;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& [cat, shapes] : explored) {
      if (productive.count(cat)) continue;
      for (const auto& r : shapes) {
        if (std::all_of(r.rhs.begin(), r.rhs.end(), [&](const Category& c) { return productive.count(c) > 0; })) {
          productive.insert(cat);
          changed = true;
          break;
        }
      }
    }
  }

  RuleSet rs;
  rs.lexicon_ = lex;
  auto intern = [&](const Category& c, std::deque<CatId>& q) {
    auto [it, fresh] = rs.index_.emplace(c, static_cast<CatId>(rs.categories_.size()));
    if (fresh) {
      rs.categories_.push_back(c);
      rs.by_lhs_.emplace_back();
      q.push_back(it->second);
    }
    return it->second;
  };

  std::deque<CatId> q;
  intern(Category::start(), q);
  std::map<std::string, std::size_t> prefix_counts;
  while (!q.empty()) {
    CatId lhs = q.front();
    q.pop_front();
    const Category lhs_cat = rs.categories_[lhs];
    for (const auto& shape : explored.at(lhs_cat)) {
      if (!std::all_of(shape.rhs.begin(), shape.rhs.end(), [&](const Category& c) { return productive.count(c) > 0; }))
        continue;
      Rule r;
      r.id = static_cast<RuleId>(rs.rules_.size() + 1);
      r.kind = shape.kind;
      r.lhs = lhs;
      for (const auto& c : shape.rhs) r.rhs.push_back(intern(c, q));
      r.routing = shape.routing;
      r.item = shape.item;
      rs.by_lhs_[lhs].push_back(r.id);
      std::string prefix = alias_prefix(r.kind);
      rs.aliases_.push_back(prefix + std::to_string(++prefix_counts[prefix]));
      rs.rules_.push_back(std::move(r));
    }
  }
  return rs;
}

/// The rhs side of a rule as printed in the rule table.
inline std::string format_rhs(const RuleSet& rs, const Rule& r) {
  if (r.kind == RuleKind::Lexicalize) return to_string(rs.item(r));
  std::string out;
  for (auto c : r.rhs) {
    if (!out.empty()) out += ' ';
    out += to_string(rs.category(c));
  }
  return out;
}

inline std::string format_rule(const RuleSet& rs, const Rule& r) {
  return "R" + std::to_string(r.id) + "\t" + to_string(rs.category(r.lhs)) + " -> " +
         format_rhs(rs, r) + "\t" + to_string(r.kind);
}

/// One line per rule: `R<id> TAB <lhs> -> <rhs...> TAB <kind>`.
inline std::string format_rule_table(const RuleSet& rs) {
  std::string out;
  for (const auto& r : rs.rules()) out += format_rule(rs, r) + "\n";
  return out;
}

/// Checks that a previously written rule table agrees with `rs` line for
/// line, so that rule ids stored elsewhere keep their meaning.
inline void verify_rule_table(const RuleSet& rs, std::string_view text) {
  std::size_t lineno = 0, next = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (detail::trim(raw).empty() || detail::trim(raw).front() == '#') continue;
    if (next >= rs.rules().size())
      throw GrammarError(lineno, "rule table lists more rules than the grammar compiles to");
    auto expected = format_rule(rs, rs.rules()[next]);
    if (raw != expected)
      throw GrammarError(lineno, "rule table disagrees with the grammar: expected '" + expected + "'");
    ++next;
  }
  if (next != rs.rules().size())
    throw GrammarError(0, "rule table lists " + std::to_string(next) + " rules, grammar has " +
                              std::to_string(rs.rules().size()));
}

}  // namespace mgparse
