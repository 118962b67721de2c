#pragma once

// Static check for the completeness precondition of the parser: no cycle of
// rules that all have probability 1.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "mgparse/probability.hpp"
#include "mgparse/rules.hpp"

namespace mgparse {

struct RuleCycle {
  std::vector<CatId> categories;  // categories[i] is rewritten by rules[i]
  std::vector<RuleId> rules;
  double product = 1.0;
};

struct UnitLoopReport {
  std::vector<RuleCycle> offending;  // cycles whose probability product is 1
  std::vector<RuleCycle> cycles;     // every elementary cycle, up to the cap
  bool truncated = false;

  bool ok() const { return offending.empty(); }
};

namespace detail {

/// Elementary cycles of the category graph (one edge per rule and rhs
/// child) restricted to edges accepted by `keep`. Each cycle is reported
/// once, starting from its smallest category.
inline bool enumerate_cycles(const RuleSet& rs, const ProbTable& t, const std::function<bool(RuleId)>& keep,
                             std::size_t cap, std::vector<RuleCycle>& out) {
  const auto n = static_cast<CatId>(rs.categories().size());
  std::vector<std::vector<std::pair<CatId, RuleId>>> adj(n);
  for (const auto& r : rs.rules()) {
    if (!keep(r.id)) continue;
    for (auto c : r.rhs) adj[r.lhs].emplace_back(c, r.id);
  }

  std::vector<char> on_path(n, 0);
  RuleCycle path;
  bool truncated = false;
  for (CatId s = 0; s < n && !truncated; ++s) {
    auto dfs = [&](auto&& self, CatId v) -> void {
      for (auto [w, rule] : adj[v]) {
        if (truncated) return;
        if (w < s || (w != s && on_path[w])) continue;
        path.categories.push_back(v);
        path.rules.push_back(rule);
        if (w == s) {
          RuleCycle c = path;
          c.product = 1.0;
          for (auto id : c.rules) c.product *= t.prob(id);
          out.push_back(std::move(c));
          if (out.size() >= cap) truncated = true;
        } else {
          on_path[w] = 1;
          self(self, w);
          on_path[w] = 0;
        }
        path.categories.pop_back();
        path.rules.pop_back();
      }
    };
    on_path[s] = 1;
    dfs(dfs, s);
    on_path[s] = 0;
  }
  return truncated;
}

}  // namespace detail

inline UnitLoopReport check_unit_loops(const RuleSet& rs, const ProbTable& t, std::size_t cap = 10000) {
  constexpr double kTol = 1e-12;
  UnitLoopReport rep;
  rep.truncated = detail::enumerate_cycles(rs, t, [](RuleId) { return true; }, cap, rep.cycles);
  // A cycle has product 1 iff every edge on it has probability 1, so the
  // offending ones are the cycles of the probability-1 subgraph.
  detail::enumerate_cycles(rs, t, [&](RuleId id) { return t.prob(id) >= 1.0 - kTol; }, cap, rep.offending);
  return rep;
}

inline std::string format_cycle(const RuleSet& rs, const RuleCycle& c) {
  std::string out;
  for (std::size_t i = 0; i < c.categories.size(); ++i) {
    out += to_string(rs.category(c.categories[i])) + " -" + rs.alias(c.rules[i]) + "-> ";
  }
  out += to_string(rs.category(c.categories.front()));
  out += "  (product " + std::to_string(c.product) + ")";
  return out;
}

}  // namespace mgparse
