#pragma once

// Conditional rule probabilities. A provider answers "how likely is this rule
// given its lhs and the rule path above it"; the static table ignores the
// path.
//
// Prob-file format: one `R<id> <decimal>` (or `<alias> <decimal>`) per line,
// `#` comments. Rules that are not listed share the mass left over in their
// lhs group.

#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mgparse/rules.hpp"

namespace mgparse {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// Rule probabilities, held in log space and indexed by rule id.
class ProbTable {
 public:
  ProbTable() = default;
  explicit ProbTable(std::vector<double> linear) {
    log_.reserve(linear.size());
    for (double p : linear) log_.push_back(p > 0 ? std::log(p) : kLogZero);
  }

  std::size_t size() const { return log_.size(); }
  bool empty() const { return log_.empty(); }
  double log_prob(RuleId id) const { return log_.at(id - 1); }
  double prob(RuleId id) const { return std::exp(log_prob(id)); }

 private:
  std::vector<double> log_;
};

/// Source of rule probabilities for the parser and the sampler. `context`
/// lists the rules on the path from the expanded node up to the root,
/// innermost first. Implementations must be safe for concurrent const use.
class ProbabilityProvider {
 public:
  virtual ~ProbabilityProvider() = default;
  virtual double log_prob(const Rule& rule, std::span<const RuleId> context) const = 0;
  /// False when log_prob never looks at the context, so callers may skip
  /// building it.
  virtual bool uses_context() const { return false; }
};

class StaticProvider final : public ProbabilityProvider {
 public:
  explicit StaticProvider(ProbTable table) : table_(std::move(table)) {}
  double log_prob(const Rule& rule, std::span<const RuleId>) const override {
    return table_.log_prob(rule.id);
  }
  const ProbTable& table() const { return table_; }

 private:
  ProbTable table_;
};

inline ProbTable uniform_table(const RuleSet& rs) {
  std::vector<double> p(rs.rules().size(), 0.0);
  for (CatId c = 0; c < rs.categories().size(); ++c) {
    auto group = rs.rules_for(c);
    for (auto id : group) p[id - 1] = 1.0 / static_cast<double>(group.size());
  }
  return ProbTable{std::move(p)};
}

class ProbFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline ProbTable load_table(const RuleSet& rs, std::string_view text) {
  constexpr double kTol = 1e-9;
  std::vector<double> given(rs.rules().size(), std::numeric_limits<double>::quiet_NaN());

  std::istringstream in{std::string(text)};
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    auto where = "line " + std::to_string(lineno) + ": ";
    if (toks.size() != 2) throw ProbFileError(where + "expected '<rule> <probability>'");
    auto id = rs.resolve(toks[0]);
    if (!id) throw ProbFileError(where + "unknown rule id '" + toks[0] + "'");
    double p = 0;
    try {
      std::size_t used = 0;
      p = std::stod(toks[1], &used);
      if (used != toks[1].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ProbFileError(where + "malformed probability '" + toks[1] + "'");
    }
    if (!(p >= 0.0 && p <= 1.0)) throw ProbFileError(where + "probability out of range: " + toks[1]);
    if (!std::isnan(given[*id - 1])) throw ProbFileError(where + "rule " + toks[0] + " listed twice");
    given[*id - 1] = p;
  }

  std::vector<double> out(rs.rules().size(), 0.0);
  for (CatId c = 0; c < rs.categories().size(); ++c) {
    auto group = rs.rules_for(c);
    if (group.empty()) continue;
    double listed = 0;
    std::size_t unlisted = 0;
    for (auto id : group) {
      if (std::isnan(given[id - 1])) ++unlisted;
      else listed += given[id - 1];
    }
    auto name = to_string(rs.category(c));
    if (listed > 1.0 + kTol)
      throw ProbFileError("probabilities for " + name + " sum to " + std::to_string(listed) + " > 1");
    if (unlisted) {
      double share = std::max(0.0, 1.0 - listed) / static_cast<double>(unlisted);
      for (auto id : group) out[id - 1] = std::isnan(given[id - 1]) ? share : given[id - 1];
    } else {
      if (listed <= 0) throw ProbFileError("probabilities for " + name + " are all zero");
      for (auto id : group) out[id - 1] = given[id - 1] / listed;
    }
  }
  return ProbTable{std::move(out)};
}

/// Largest deviation from 1 of any lhs group's total probability.
inline double normalization_error(const RuleSet& rs, const ProbTable& t) {
  double worst = 0;
  for (CatId c = 0; c < rs.categories().size(); ++c) {
    auto group = rs.rules_for(c);
    if (group.empty()) continue;
    double s = 0;
    for (auto id : group) s += t.prob(id);
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

inline std::string format_table(const RuleSet& rs, const ProbTable& t) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& r : rs.rules()) out << "R" << r.id << " " << t.prob(r.id) << "\n";
  return out.str();
}

}  // namespace mgparse
