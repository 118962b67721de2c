#pragma once

// Best-first top-down parser with beam pruning, and a sampler that runs the
// same expansion steps generatively.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mgparse/derivation.hpp"
#include "mgparse/hypothesis.hpp"

namespace mgparse {

/// Pruning threshold: drop hypotheses below rel_factor times the best one
/// (0 disables), then keep at most max_queue of them.
struct BeamConfig {
  double rel_factor = 0.0;
  std::optional<std::size_t> max_queue;
};

struct TraceEvent {
  std::size_t step = 0;
  std::string action;  // "expand Mg1", "scan L4", "accept", "reject", "fail"
  PositionIndex pointer;
  double prob = 0.0;
  std::string frontier;
};

struct ParseOptions {
  BeamConfig beam;
  std::size_t k_best = 1;
  std::size_t step_budget = 1'000'000;  // hypotheses popped
  bool check_invariants = false;
  std::function<void(const TraceEvent&)> trace;
};

enum class ParseStatus { Success, Ungrammatical, BudgetExceeded };

inline const char* to_string(ParseStatus s) {
  switch (s) {
    case ParseStatus::Success: return "success";
    case ParseStatus::Ungrammatical: return "ungrammatical";
    case ParseStatus::BudgetExceeded: return "budget-exceeded";
  }
  return "?";
}

struct ParseResult {
  Derivation derivation;
  double log_prob = kLogZero;
  double prob() const { return std::exp(log_prob); }
};

struct ParseOutcome {
  ParseStatus status = ParseStatus::Ungrammatical;
  std::vector<ParseResult> results;  // best first
  std::size_t steps = 0;
  std::size_t pruned = 0;
  std::vector<std::string> invariant_violations;
};

inline std::string frontier_summary(const Hypothesis& h, const RuleSet& rs) {
  std::string out;
  for (const auto& leaf : h.leaves) {
    if (!out.empty()) out += ' ';
    out += to_string(leaf, rs);
  }
  return out.empty() ? "-" : out;
}

inline std::string format_trace_event(const TraceEvent& e) {
  std::ostringstream out;
  out.precision(6);
  out << e.step << ' ' << e.action << ' ' << display(e.pointer) << ' ' << e.prob << ' ' << e.frontier;
  return out.str();
}

/// Parses a word sequence. The sentence is grammatical iff status is Success;
/// results come out in non-increasing probability order.
inline ParseOutcome parse(std::span<const std::string> input, const RuleSet& rs, const ProbabilityProvider& provider,
                          const ParseOptions& opt = {}) {
  ParseOutcome out;
  const std::size_t n = input.size();

  // Ordered by (-log p, insertion number): best first, FIFO among equals.
  using Key = std::pair<double, std::uint64_t>;
  std::map<Key, Hypothesis> queue;
  std::uint64_t seq = 0;

  auto emit = [&](std::string action, const Hypothesis& h) {
    if (opt.trace) opt.trace({out.steps, std::move(action), h.pointer, h.prob(), frontier_summary(h, rs)});
  };
  auto push = [&](Hypothesis h) {
    if (h.log_prob == kLogZero) return;
    if (opt.check_invariants) {
      if (auto why = check_pointer_invariants(h))
        out.invariant_violations.push_back("after " + format_derivation(rs, h.history) + ": " + *why);
    }
    // Nothing left to expand but words left to read: dead end.
    if (h.pointer.is_exhausted() && h.input_pos < n) return;
    queue.emplace(Key{-h.log_prob, seq++}, std::move(h));
  };

  push(axiom());
  while (!queue.empty()) {
    if (out.steps >= opt.step_budget) {
      out.status = out.results.empty() ? ParseStatus::BudgetExceeded : ParseStatus::Success;
      return out;
    }
    auto node = queue.extract(queue.begin());
    Hypothesis h = std::move(node.mapped());
    ++out.steps;

    if (h.pointer.is_exhausted()) {
      emit("accept", h);
      out.results.push_back({h.history, h.log_prob});
      if (out.results.size() >= opt.k_best) break;
      continue;
    }

    auto m = find_leaf(h);
    const auto& leaf = h.leaves[m.leaf];
    if (rs.category(leaf.cat).is_simple()) {
      auto next = scan(h, rs, provider, input);
      if (opt.trace) {
        for (const auto& s : next) emit("scan " + rs.alias(s.history.back()), s);
        if (next.empty()) emit("fail", h);
      }
      for (auto& s : next) push(std::move(s));
    } else {
      for (auto id : rs.rules_for(leaf.cat)) {
        auto s = expand(h, m, rs.rule(id), rs, provider);
        if (opt.trace) emit("expand " + rs.alias(id), s);
        push(std::move(s));
      }
    }

    if (queue.empty()) continue;
    if (opt.beam.rel_factor > 0) {
      const double threshold = queue.begin()->first.first - std::log(opt.beam.rel_factor);
      while (!queue.empty() && std::prev(queue.end())->first.first > threshold) {
        queue.erase(std::prev(queue.end()));
        ++out.pruned;
      }
    }
    if (opt.beam.max_queue) {
      while (queue.size() > *opt.beam.max_queue) {
        queue.erase(std::prev(queue.end()));
        ++out.pruned;
      }
    }
  }
  out.status = out.results.empty() ? ParseStatus::Ungrammatical : ParseStatus::Success;
  return out;
}

struct Sample {
  Derivation derivation;
  std::vector<std::string> words;
  double log_prob = 0.0;
};

/// Draws one derivation top-down, choosing each rule by its provider
/// probability. Returns nullopt when more than `max_steps` rules are needed.
inline std::optional<Sample> sample(const RuleSet& rs, const ProbabilityProvider& provider, std::mt19937_64& rng,
                                    std::size_t max_steps = 10'000) {
  Hypothesis h = axiom();
  std::vector<std::pair<PositionIndex, std::string>> words;
  std::vector<double> weights;
  while (!h.pointer.is_exhausted()) {
    if (h.history.size() >= max_steps) return std::nullopt;
    auto m = find_leaf(h);
    const auto& leaf = h.leaves[m.leaf];
    auto group = rs.rules_for(leaf.cat);
    if (group.empty()) throw ParserInvariantError("no rule rewrites " + to_string(rs.category(leaf.cat)));
    auto context = provider.uses_context() ? to_context(leaf.path.get()) : std::vector<RuleId>{};
    weights.clear();
    for (auto id : group) weights.push_back(std::exp(provider.log_prob(rs.rule(id), context)));
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    const auto& rule = rs.rule(group[pick(rng)]);
    if (rule.kind == RuleKind::Lexicalize) {
      words.emplace_back(m.position, rs.item(rule).phon);
      h = lexicalize(h, m, rule, rs, provider);
    } else {
      h = expand(h, m, rule, rs, provider);
    }
  }
  Sample s;
  s.derivation = std::move(h.history);
  s.log_prob = h.log_prob;
  // Scan order is surface order, so the words are already sorted.
  for (auto& [pos, w] : words)
    if (!w.empty()) s.words.push_back(std::move(w));
  return s;
}

}  // namespace mgparse
