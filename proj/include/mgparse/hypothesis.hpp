#pragma once

// Parser states and the position-indexed inference steps shared by the
// parser, the sampler and derivation replay.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgparse/position.hpp"
#include "mgparse/probability.hpp"
#include "mgparse/rules.hpp"

namespace mgparse {

/// Rules on the path from a node up to the root, as a shared persistent list
/// (innermost rule first).
struct RulePath {
  RuleId rule;
  std::shared_ptr<const RulePath> up;
};
using RulePathPtr = std::shared_ptr<const RulePath>;

inline std::vector<RuleId> to_context(const RulePath* p) {
  std::vector<RuleId> out;
  for (; p; p = p->up.get()) out.push_back(p->rule);
  return out;
}

/// A frontier node: a compiled category whose entries carry surface
/// positions (parallel to the category's entries).
struct SituatedCategory {
  CatId cat = RuleSet::kStart;
  std::vector<PositionIndex> positions;
  RulePathPtr path;
};

struct Hypothesis {
  std::vector<SituatedCategory> leaves;
  PositionIndex pointer;
  double log_prob = 0.0;
  std::size_t input_pos = 0;
  std::vector<RuleId> history;
  std::vector<PositionIndex> scanned;  // positions already lexicalized, in scan order

  double prob() const { return std::exp(log_prob); }
};

/// Position for display: the root prints as ε.
inline std::string display(const PositionIndex& p) {
  if (p.is_exhausted()) return "-1";
  return p.digits().empty() ? "ε" : p.digits();
}

/// `[1/=a . +m c, 0/=b a . -m]`; the axiom prints as `ε/start`.
inline std::string to_string(const SituatedCategory& s, const RuleSet& rs) {
  const auto& cat = rs.category(s.cat);
  if (cat.is_start()) return display(s.positions.at(0)) + "/start";
  std::string out = "[";
  for (std::size_t i = 0; i < cat.entries.size(); ++i) {
    if (i) out += ", ";
    out += display(s.positions.at(i)) + "/" + to_string(cat.entries[i]);
  }
  return out + "]";
}

class ParserInvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// (ε/start, ε, 1, ·ω, ⟨⟩)
inline Hypothesis axiom() {
  Hypothesis h;
  h.leaves.push_back({RuleSet::kStart, {PositionIndex::root()}, nullptr});
  h.pointer = PositionIndex::root();
  return h;
}

struct LeafMatch {
  std::size_t leaf = 0;
  std::size_t entry = 0;
  PositionIndex position;  // the matched entry's position; the pointer is reset to it
};

/// The leaf holding the entry whose position corresponds to the pointer.
inline LeafMatch find_leaf(const Hypothesis& h) {
  if (h.pointer.is_exhausted()) throw ParserInvariantError("find_leaf on an exhausted pointer");
  std::optional<LeafMatch> found;
  for (std::size_t l = 0; l < h.leaves.size(); ++l) {
    const auto& pos = h.leaves[l].positions;
    for (std::size_t e = 0; e < pos.size(); ++e) {
      if (!corresponds(h.pointer, pos[e])) continue;
      if (found) throw ParserInvariantError("pointer " + h.pointer.str() + " corresponds to two leaves");
      found = LeafMatch{l, e, pos[e]};
    }
  }
  if (!found) throw ParserInvariantError("no leaf corresponds to pointer " + h.pointer.str());
  return *found;
}

namespace detail {

inline std::vector<RuleId> context_of(const SituatedCategory& leaf, const ProbabilityProvider& provider) {
  return provider.uses_context() ? to_context(leaf.path.get()) : std::vector<RuleId>{};
}

}  // namespace detail

/// Replaces the matched leaf by the rule's children, situating them through
/// the rule's routing.
inline Hypothesis expand(const Hypothesis& h, const LeafMatch& m, const Rule& rule, const RuleSet& rs,
                         const ProbabilityProvider& provider) {
  const auto& leaf = h.leaves.at(m.leaf);
  if (rule.lhs != leaf.cat)
    throw ParserInvariantError("rule R" + std::to_string(rule.id) + " does not rewrite " +
                               to_string(rs.category(leaf.cat)));
  if (rule.kind == RuleKind::Lexicalize) throw ParserInvariantError("expand called with a lexicalize rule");

  Hypothesis out;
  out.log_prob = h.log_prob + provider.log_prob(rule, detail::context_of(leaf, provider));
  out.input_pos = h.input_pos;
  out.history = h.history;
  out.history.push_back(rule.id);
  out.scanned = h.scanned;

  auto path = std::make_shared<const RulePath>(RulePath{rule.id, leaf.path});
  std::vector<SituatedCategory> children;
  for (std::size_t c = 0; c < rule.rhs.size(); ++c) {
    SituatedCategory child{rule.rhs[c], {}, path};
    for (const auto& src : rule.routing[c]) {
      const auto& base = leaf.positions.at(src.lhs_entry);
      child.positions.push_back(src.bit < 0 ? base : base.child(static_cast<char>('0' + src.bit)));
    }
    children.push_back(std::move(child));
  }

  out.leaves.reserve(h.leaves.size() + children.size());
  out.leaves.insert(out.leaves.end(), h.leaves.begin(), h.leaves.begin() + static_cast<std::ptrdiff_t>(m.leaf));
  for (auto& c : children) out.leaves.push_back(std::move(c));
  out.leaves.insert(out.leaves.end(), h.leaves.begin() + static_cast<std::ptrdiff_t>(m.leaf) + 1, h.leaves.end());

  out.pointer = m.position;
  if (splits_head_position(rule.kind) && m.entry == 0) out.pointer = m.position.child('0');
  return out;
}

/// Replaces a simple leaf by a lexical item and advances the pointer. The
/// caller has already checked the word against the input.
inline Hypothesis lexicalize(const Hypothesis& h, const LeafMatch& m, const Rule& rule, const RuleSet& rs,
                             const ProbabilityProvider& provider) {
  const auto& leaf = h.leaves.at(m.leaf);
  if (rule.lhs != leaf.cat || rule.kind != RuleKind::Lexicalize)
    throw ParserInvariantError("rule R" + std::to_string(rule.id) + " does not lexicalize " +
                               to_string(rs.category(leaf.cat)));
  Hypothesis out;
  out.log_prob = h.log_prob + provider.log_prob(rule, detail::context_of(leaf, provider));
  out.input_pos = h.input_pos + (rs.item(rule).phon.empty() ? 0 : 1);
  out.history = h.history;
  out.history.push_back(rule.id);
  out.scanned = h.scanned;
  out.scanned.push_back(m.position);
  out.leaves = h.leaves;
  out.leaves.erase(out.leaves.begin() + static_cast<std::ptrdiff_t>(m.leaf));
  out.pointer = successor(m.position);
  return out;
}

/// Scan-ε then scan-word for the simple leaf under the pointer. Successors
/// with zero probability are dropped.
inline std::vector<Hypothesis> scan(const Hypothesis& h, const RuleSet& rs, const ProbabilityProvider& provider,
                                    std::span<const std::string> input) {
  auto m = find_leaf(h);
  const auto& leaf = h.leaves[m.leaf];
  if (!rs.category(leaf.cat).is_simple()) throw ParserInvariantError("scan on a non-simple leaf");

  std::vector<Hypothesis> out;
  auto try_rule = [&](bool want_empty) {
    for (auto id : rs.rules_for(leaf.cat)) {
      const auto& r = rs.rule(id);
      const auto& phon = rs.item(r).phon;
      if (phon.empty() != want_empty) continue;
      if (!want_empty && (h.input_pos >= input.size() || input[h.input_pos] != phon)) continue;
      auto next = lexicalize(h, m, r, rs, provider);
      if (next.log_prob != kLogZero) out.push_back(std::move(next));
    }
  };
  try_rule(true);
  try_rule(false);
  return out;
}

namespace detail {

/// Sorted, duplicate-free positions form a cut of the binary tree below
/// `prefix` iff they are {prefix} or split into cuts below prefix0 and prefix1.
inline bool is_cut(const std::vector<std::string>& v, std::size_t lo, std::size_t hi, const std::string& prefix) {
  if (lo >= hi) return false;
  if (v[lo] == prefix) return hi - lo == 1;
  std::size_t mid = lo;
  const std::string left = prefix + '0';
  while (mid < hi && v[mid].compare(0, left.size(), left) == 0) ++mid;
  return is_cut(v, lo, mid, left) && is_cut(v, mid, hi, prefix + '1');
}

}  // namespace detail

/// Soundness of the pointer discipline: the positions of the frontier and of
/// the scanned leaves form a cut, the scanned ones precede every unscanned
/// one, and the pointer corresponds to the smallest unscanned position (or is
/// exhausted when none is left). Returns a description of the first failure.
inline std::optional<std::string> check_pointer_invariants(const Hypothesis& h) {
  std::vector<PositionIndex> unscanned;
  for (const auto& leaf : h.leaves)
    for (const auto& p : leaf.positions) unscanned.push_back(p);

  std::vector<std::string> all;
  for (const auto& p : unscanned) {
    if (p.is_exhausted()) return "exhausted marker used as a leaf position";
    all.push_back(p.digits());
  }
  for (const auto& p : h.scanned) all.push_back(p.digits());
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end()) return "duplicate position";
  if (!detail::is_cut(all, 0, all.size(), "")) return "positions do not form a cut";

  if (!h.scanned.empty() && !unscanned.empty()) {
    auto max_scanned = *std::max_element(h.scanned.begin(), h.scanned.end());
    auto min_unscanned = *std::min_element(unscanned.begin(), unscanned.end());
    if (!(max_scanned < min_unscanned)) return "scanned positions are not a prefix";
  }
  if (unscanned.empty()) {
    if (!h.pointer.is_exhausted()) return "nothing left to scan but the pointer is " + h.pointer.str();
  } else {
    auto min_unscanned = *std::min_element(unscanned.begin(), unscanned.end());
    if (!corresponds(h.pointer, min_unscanned))
      return "pointer " + h.pointer.str() + " does not point to the smallest unscanned position " +
             min_unscanned.str();
  }
  return std::nullopt;
}

}  // namespace mgparse
