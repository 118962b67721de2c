#pragma once

// Bottom-up closure over feature states. A state keeps, for every chain, the
// lexical feature string it came from and how much of it has been checked.
// States that can be part of a complete derivation are then marked by
// walking backwards from the complete ones. The result should be exactly the
// category and rule set of the top-down compiler.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "mgparse/lexicon.hpp"

namespace oracle {

using mgparse::Feature;
using mgparse::FeatureKind;
using mgparse::FeatureString;

struct FChain {
  FeatureString base;
  std::size_t checked = 0;

  const Feature* next() const { return checked < base.size() ? &base[checked] : nullptr; }
  auto operator<=>(const FChain&) const = default;
  bool operator==(const FChain&) const = default;
};

/// Head chain plus movers (sorted).
struct FState {
  FChain head;
  std::vector<FChain> movers;

  auto operator<=>(const FState&) const = default;
  bool operator==(const FState&) const = default;
};

enum class Step { Merge1, Merge2, Merge3Lexical, Merge3Derived, Move1, Move2, Lexical, Complete };

struct Inference {
  Step step;
  FState conclusion;
  std::vector<FState> premises;  // selector first for merges

  auto operator<=>(const Inference&) const = default;
};

namespace detail {

inline std::optional<FState> normalize(FState s) {
  std::sort(s.movers.begin(), s.movers.end());
  std::set<std::string> seen;
  for (const auto& m : s.movers) {
    const Feature* f = m.next();
    if (!f || f->kind != FeatureKind::Licensee) return std::nullopt;
    if (!seen.insert(f->name).second) return std::nullopt;
  }
  return s;
}

inline std::optional<Inference> merge(const FState& s, const FState& t) {
  const Feature* f = s.head.next();
  const Feature* g = t.head.next();
  if (!f || !g || f->kind != FeatureKind::Selector || g->kind != FeatureKind::Category || f->name != g->name)
    return std::nullopt;
  FState r;
  r.head = {s.head.base, s.head.checked + 1};
  r.movers = s.movers;
  r.movers.insert(r.movers.end(), t.movers.begin(), t.movers.end());
  const bool lexical = s.head.checked == 0;
  Step step;
  if (t.head.checked + 1 == t.head.base.size()) {
    step = lexical ? Step::Merge1 : Step::Merge2;
  } else {
    r.movers.push_back({t.head.base, t.head.checked + 1});
    step = lexical ? Step::Merge3Lexical : Step::Merge3Derived;
  }
  auto n = normalize(std::move(r));
  if (!n) return std::nullopt;
  return Inference{step, *n, {s, t}};
}

inline std::vector<Inference> move(const FState& s) {
  std::vector<Inference> out;
  const Feature* f = s.head.next();
  if (!f || f->kind != FeatureKind::Licensor) return out;
  for (std::size_t i = 0; i < s.movers.size(); ++i) {
    const auto& m = s.movers[i];
    if (!m.next()->is(FeatureKind::Licensee, f->name)) continue;
    FState r;
    r.head = {s.head.base, s.head.checked + 1};
    r.movers = s.movers;
    r.movers.erase(r.movers.begin() + static_cast<std::ptrdiff_t>(i));
    Step step = Step::Move1;
    if (m.checked + 1 < m.base.size()) {
      r.movers.push_back({m.base, m.checked + 1});
      step = Step::Move2;
    }
    if (auto n = normalize(std::move(r))) out.push_back({step, *n, {s}});
  }
  return out;
}

}  // namespace detail

struct CategoryClosure {
  std::set<FState> states;      // every derivable state
  std::set<FState> useful;      // states occurring in some complete derivation
  std::set<Inference> inferences;  // inferences whose conclusion is useful
};

inline bool complete(const FState& s, const std::string& distinguished) {
  return s.movers.empty() && s.head.checked + 1 == s.head.base.size() &&
         s.head.base.back().is(FeatureKind::Category, distinguished);
}

inline CategoryClosure close_bottom_up(const mgparse::Lexicon& lex, std::size_t cap = 200'000) {
  CategoryClosure out;
  std::vector<Inference> all;
  std::vector<FState> agenda, done;
  auto add = [&](const FState& s) {
    if (out.states.insert(s).second) agenda.push_back(s);
    if (out.states.size() > cap) throw std::runtime_error("category oracle cap exceeded");
  };
  for (const auto& item : lex.items) {
    FState s{{item.features, 0}, {}};
    all.push_back({Step::Lexical, s, {}});
    add(s);
  }
  while (!agenda.empty()) {
    FState s = agenda.back();
    agenda.pop_back();
    done.push_back(s);
    for (auto& inf : detail::move(s)) {
      add(inf.conclusion);
      all.push_back(std::move(inf));
    }
    for (std::size_t i = 0; i < done.size(); ++i) {
      const FState other = done[i];
      for (auto [a, b] : {std::pair<const FState*, const FState*>{&s, &other}, std::pair<const FState*, const FState*>{&other, &s}}) {
        if (auto inf = detail::merge(*a, *b)) {
          add(inf->conclusion);
          all.push_back(std::move(*inf));
        }
      }
    }
  }

  for (const auto& s : out.states)
    if (complete(s, lex.distinguished)) {
      out.useful.insert(s);
      out.inferences.insert({Step::Complete, s, {}});
    }
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& inf : all) {
      if (!out.useful.count(inf.conclusion)) continue;
      if (!out.inferences.insert(inf).second) continue;
      changed = true;
      for (const auto& p : inf.premises) out.useful.insert(p);
    }
  }
  return out;
}

}  // namespace oracle
