#pragma once

// Derivations as rule sequences in pointer order, and their replay into
// explicit trees.

#include <algorithm>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mgparse/hypothesis.hpp"

namespace mgparse {

using Derivation = std::vector<RuleId>;

class DerivationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Whitespace-separated rule names, numeric (`R2 R11`) or symbolic (`S2 Mv1`).
inline Derivation parse_derivation(const RuleSet& rs, std::string_view text) {
  Derivation d;
  for (const auto& tok : detail::split_ws(text)) {
    auto id = rs.resolve(tok);
    if (!id) throw DerivationError("unknown rule '" + tok + "'");
    d.push_back(*id);
  }
  return d;
}

inline std::string format_derivation(const RuleSet& rs, const Derivation& d, bool symbolic = true) {
  std::string out;
  for (auto id : d) {
    if (!out.empty()) out += ' ';
    out += symbolic ? rs.alias(id) : "R" + std::to_string(id);
  }
  return out;
}

struct DerivationNode {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  SituatedCategory cat;
  RuleId rule = 0;  // 0 while unexpanded
  std::size_t parent = kNone;
  std::vector<std::size_t> children;
};

struct ReplayStep {
  RuleId rule = 0;
  std::size_t node = 0;
  std::vector<RuleId> context;  // rules from the node's parent up to the root
};

/// The tree built by replaying a derivation under the pointer discipline.
struct Replay {
  std::vector<DerivationNode> nodes;  // node 0 is the root
  std::vector<ReplayStep> steps;
  Hypothesis state;
  std::vector<std::size_t> frontier;  // node ids parallel to state.leaves
  std::vector<std::pair<PositionIndex, std::string>> words;  // scanned, in scan order

  bool complete() const { return state.leaves.empty(); }

  std::vector<RuleId> context_of(std::size_t node) const {
    std::vector<RuleId> out;
    for (auto p = nodes.at(node).parent; p != DerivationNode::kNone; p = nodes[p].parent)
      out.push_back(nodes[p].rule);
    return out;
  }
};

namespace detail {

class UnitProvider final : public ProbabilityProvider {
 public:
  double log_prob(const Rule&, std::span<const RuleId>) const override { return 0.0; }
};

}  // namespace detail

/// Replays `d` from the axiom. With `require_complete` the derivation must
/// leave no unexpanded leaf.
inline Replay replay(const RuleSet& rs, std::span<const RuleId> d, bool require_complete = true) {
  static const detail::UnitProvider unit;
  Replay r;
  r.state = axiom();
  r.nodes.push_back({r.state.leaves[0], 0, DerivationNode::kNone, {}});
  r.frontier.push_back(0);

  for (std::size_t i = 0; i < d.size(); ++i) {
    auto where = "step " + std::to_string(i + 1) + ": ";
    if (d[i] == 0 || d[i] > rs.rules().size()) throw DerivationError(where + "unknown rule id " + std::to_string(d[i]));
    const auto& rule = rs.rule(d[i]);
    if (r.state.pointer.is_exhausted())
      throw DerivationError(where + "the derivation is already complete at " + rs.alias(rule.id));
    auto m = find_leaf(r.state);
    auto node = r.frontier[m.leaf];
    if (rule.lhs != r.state.leaves[m.leaf].cat)
      throw DerivationError(where + rs.alias(rule.id) + " rewrites " + to_string(rs.category(rule.lhs)) +
                            " but the node under the pointer is " +
                            to_string(rs.category(r.state.leaves[m.leaf].cat)));

    r.steps.push_back({rule.id, node, r.context_of(node)});
    r.nodes[node].rule = rule.id;
    r.nodes[node].cat.positions = r.state.leaves[m.leaf].positions;

    if (rule.kind == RuleKind::Lexicalize) {
      r.words.emplace_back(m.position, rs.item(rule).phon);
      r.state = lexicalize(r.state, m, rule, rs, unit);
      r.frontier.erase(r.frontier.begin() + static_cast<std::ptrdiff_t>(m.leaf));
    } else {
      r.state = expand(r.state, m, rule, rs, unit);
      std::vector<std::size_t> kids;
      for (std::size_t c = 0; c < rule.rhs.size(); ++c) {
        kids.push_back(r.nodes.size());
        r.nodes.push_back({r.state.leaves[m.leaf + c], 0, node, {}});
      }
      r.nodes[node].children = kids;
      r.frontier.erase(r.frontier.begin() + static_cast<std::ptrdiff_t>(m.leaf));
      r.frontier.insert(r.frontier.begin() + static_cast<std::ptrdiff_t>(m.leaf), kids.begin(), kids.end());
    }
  }
  if (require_complete && !r.complete())
    throw DerivationError("incomplete derivation: " + std::to_string(r.state.leaves.size()) +
                          " unexpanded leaves remain");
  return r;
}

/// Words of a complete derivation in surface order; empty words vanish.
inline std::vector<std::string> derivation_yield(const RuleSet& rs, std::span<const RuleId> d) {
  auto r = replay(rs, d);
  auto words = r.words;
  std::stable_sort(words.begin(), words.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> out;
  for (auto& [pos, w] : words)
    if (!w.empty()) out.push_back(std::move(w));
  return out;
}

inline double derivation_log_probability(const RuleSet& rs, std::span<const RuleId> d,
                                         const ProbabilityProvider& provider) {
  auto r = replay(rs, d);
  double lp = 0;
  for (const auto& s : r.steps) lp += provider.log_prob(rs.rule(s.rule), s.context);
  return lp;
}

inline double derivation_probability(const RuleSet& rs, std::span<const RuleId> d, const ProbTable& t) {
  replay(rs, d);
  double lp = 0;
  for (auto id : d) lp += t.log_prob(id);
  return std::exp(lp);
}

/// Rules on the path from the root to the node the next rule would expand,
/// innermost first.
inline std::vector<RuleId> rule_context(const RuleSet& rs, std::span<const RuleId> history) {
  auto r = replay(rs, history, false);
  if (r.state.pointer.is_exhausted()) throw DerivationError("nothing left to expand");
  auto m = find_leaf(r.state);
  return r.context_of(r.frontier[m.leaf]);
}

/// Indented tree, one node per line: rule name and situated category, with
/// the lexical item for lexicalized leaves.
inline std::string format_tree(const RuleSet& rs, const Replay& r) {
  std::string out;
  auto visit = [&](auto&& self, std::size_t n, std::size_t depth) -> void {
    const auto& node = r.nodes[n];
    out.append(2 * depth, ' ');
    out += node.rule ? rs.alias(node.rule) : std::string("?");
    out += ' ';
    out += to_string(node.cat, rs);
    if (node.rule && rs.rule(node.rule).kind == RuleKind::Lexicalize) out += "  " + to_string(rs.item(rs.rule(node.rule)));
    out += '\n';
    for (auto c : node.children) self(self, c, depth + 1);
  };
  visit(visit, 0, 0);
  return out;
}

}  // namespace mgparse
