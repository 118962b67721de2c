#pragma once

// Context-tree weighting over rule choices. Each lhs category with more than
// one rule gets its own model whose alphabet is that lhs's rules; contexts
// are the rules on the path up to the root, innermost first.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgparse/derivation.hpp"
#include "mgparse/probability.hpp"

namespace mgparse {

enum class Estimator { KT, ZR };

inline const char* to_string(Estimator e) { return e == Estimator::KT ? "kt" : "zr"; }

namespace detail {

inline double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace detail

/// log P_e(counts): the KT sequence probability in closed form,
/// Γ(K/2) Π_y Γ(c_y + 1/2) / (Γ(1/2)^K Γ(C + K/2)).
inline double kt_log_sequence(std::span<const std::uint64_t> counts) {
  const double k = static_cast<double>(counts.size());
  double total = 0, lp = std::lgamma(k / 2) - k * std::lgamma(0.5);
  for (auto c : counts) {
    lp += std::lgamma(static_cast<double>(c) + 0.5);
    total += static_cast<double>(c);
  }
  return lp - std::lgamma(total + k / 2);
}

/// KT predictive probability (c_y + 1/2) / (C + K/2).
inline double kt_predict(std::span<const std::uint64_t> counts, std::size_t symbol) {
  double total = 0;
  for (auto c : counts) total += static_cast<double>(c);
  return (static_cast<double>(counts[symbol]) + 0.5) / (total + static_cast<double>(counts.size()) / 2);
}

/// Zero-redundancy sequence probability for a binary alphabet: P_e/2 when
/// both symbols occurred, P_e/2 + 1/4 when only one did, 1 for no data.
inline double zr_log_sequence(std::uint64_t a, std::uint64_t b) {
  if (a == 0 && b == 0) return 0.0;
  const std::uint64_t c[2] = {a, b};
  const double half_pe = kt_log_sequence(c) + std::log(0.5);
  if (a > 0 && b > 0) return half_pe;
  return detail::log_add(half_pe, std::log(0.25));
}

inline double zr_predict(std::uint64_t a, std::uint64_t b, std::size_t symbol) {
  const double before = zr_log_sequence(a, b);
  const double after = symbol == 0 ? zr_log_sequence(a + 1, b) : zr_log_sequence(a, b + 1);
  return std::exp(after - before);
}

/// Context symbols are 32-bit; kBoundary pads contexts that are shorter than
/// the model depth (the region above the root).
using ContextSymbol = std::uint32_t;
inline constexpr ContextSymbol kBoundary = std::numeric_limits<ContextSymbol>::max();

struct CtwNode {
  std::vector<std::uint64_t> counts;
  std::map<ContextSymbol, std::unique_ptr<CtwNode>> children;
  double log_pe = 0.0;        // base estimate of the symbols seen here
  double log_pw = 0.0;        // weighted estimate
  double log_children = 0.0;  // Σ log_pw over children; absent children count as 1

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
};

class CtwModel {
 public:
  CtwModel(std::size_t depth, std::size_t alphabet, Estimator est = Estimator::KT)
      : depth_(depth), k_(alphabet), est_(est) {
    if (alphabet < 2) throw std::invalid_argument("CTW alphabet needs at least two symbols");
    if (est == Estimator::ZR && alphabet != 2)
      throw std::invalid_argument("the zero-redundancy estimator is only defined for binary alphabets");
    root_ = fresh();
  }

  std::size_t depth() const { return depth_; }
  std::size_t alphabet() const { return k_; }
  Estimator estimator() const { return est_; }
  const CtwNode& root() const { return *root_; }

  /// Probability of the whole training sequence seen so far.
  double log_sequence_probability() const { return root_->log_pw; }

  /// log P(symbol | context). A proper distribution over symbols: the ratio
  /// of the weighted sequence probability with and without the symbol.
  double log_predict(std::span<const ContextSymbol> context, std::size_t symbol) const {
    auto path = walk(context);
    double child_old = 0, child_new = 0;
    double root_new = 0;
    for (std::size_t d = depth_ + 1; d-- > 0;) {
      const CtwNode* node = path[d];
      std::vector<std::uint64_t> counts = node ? node->counts : std::vector<std::uint64_t>(k_, 0);
      const double pe_old = node ? node->log_pe : 0.0;
      const double pe_new = pe_old + log_step(counts, symbol);
      double pw_new;
      if (d == depth_) {
        pw_new = pe_new;
      } else {
        const double kids = (node ? node->log_children : 0.0) - child_old + child_new;
        pw_new = mix(pe_new, kids);
      }
      child_old = node ? node->log_pw : 0.0;
      child_new = pw_new;
      root_new = pw_new;
    }
    return root_new - root_->log_pw;
  }

  double predict(std::span<const ContextSymbol> context, std::size_t symbol) const {
    return std::exp(log_predict(context, symbol));
  }

  void update(std::span<const ContextSymbol> context, std::size_t symbol) {
    if (symbol >= k_) throw std::out_of_range("symbol outside the model alphabet");
    std::vector<CtwNode*> path{root_.get()};
    for (std::size_t d = 0; d < depth_; ++d) {
      auto& slot = path.back()->children[context_at(context, d)];
      if (!slot) slot = fresh();
      path.push_back(slot.get());
    }
    for (std::size_t d = depth_ + 1; d-- > 0;) {
      CtwNode* node = path[d];
      node->log_pe += log_step(node->counts, symbol);
      node->counts[symbol] += 1;
      const double old_pw = node->log_pw;
      node->log_pw = d == depth_ ? node->log_pe : mix(node->log_pe, node->log_children);
      if (d > 0) path[d - 1]->log_children += node->log_pw - old_pw;
    }
  }

  /// Rebuilds all cached estimates from the counts (used after loading).
  void recompute() { recompute(*root_, 0); }

  /// Creates the node for a context path from the root, for loading.
  CtwNode& node_at(std::span<const ContextSymbol> path) {
    if (path.size() > depth_) throw std::out_of_range("context path deeper than the model");
    CtwNode* n = root_.get();
    for (auto s : path) {
      auto& slot = n->children[s];
      if (!slot) slot = fresh();
      n = slot.get();
    }
    return *n;
  }

 private:
  std::unique_ptr<CtwNode> fresh() const {
    auto n = std::make_unique<CtwNode>();
    n->counts.assign(k_, 0);
    return n;
  }

  static ContextSymbol context_at(std::span<const ContextSymbol> context, std::size_t d) {
    return d < context.size() ? context[d] : kBoundary;
  }

  /// Nodes on the context path, nullptr where the path leaves the tree.
  std::vector<const CtwNode*> walk(std::span<const ContextSymbol> context) const {
    std::vector<const CtwNode*> path{root_.get()};
    for (std::size_t d = 0; d < depth_; ++d) {
      const CtwNode* n = path.back();
      const CtwNode* next = nullptr;
      if (n) {
        auto it = n->children.find(context_at(context, d));
        if (it != n->children.end()) next = it->second.get();
      }
      path.push_back(next);
    }
    return path;
  }

  double log_step(const std::vector<std::uint64_t>& counts, std::size_t symbol) const {
    if (est_ == Estimator::ZR) return std::log(zr_predict(counts[0], counts[1], symbol));
    return std::log(kt_predict(counts, symbol));
  }

  double log_base(const std::vector<std::uint64_t>& counts) const {
    if (est_ == Estimator::ZR) return zr_log_sequence(counts[0], counts[1]);
    return kt_log_sequence(counts);
  }

  /// P_w = ((K-1) P_e + Π children) / K
  double mix(double log_pe, double log_children) const {
    const double k = static_cast<double>(k_);
    return detail::log_add(std::log((k - 1) / k) + log_pe, std::log(1 / k) + log_children);
  }

  void recompute(CtwNode& n, std::size_t d) {
    n.log_pe = log_base(n.counts);
    n.log_children = 0;
    for (auto& [s, c] : n.children) {
      recompute(*c, d + 1);
      n.log_children += c->log_pw;
    }
    n.log_pw = d == depth_ ? n.log_pe : mix(n.log_pe, n.log_children);
  }

  std::size_t depth_;
  std::size_t k_;
  Estimator est_;
  std::unique_ptr<CtwNode> root_;
};

struct CtwConfig {
  std::size_t depth = 2;
  Estimator estimator = Estimator::KT;  // ZR applies to binary lhs groups only
};

/// Rule probabilities from per-lhs CTW models. An lhs whose model has seen no
/// data falls back to the static table; single-rule lhs's get probability 1.
/// Training needs exclusive access; concurrent parsing with a frozen provider
/// is safe.
class CtwProvider final : public ProbabilityProvider {
 public:
  CtwProvider(const RuleSet& rs, ProbTable fallback, CtwConfig cfg = {})
      : rs_(&rs), fallback_(std::move(fallback)), cfg_(cfg) {
    for (CatId c = 0; c < rs.categories().size(); ++c) {
      auto k = rs.rules_for(c).size();
      if (k < 2) continue;
      auto est = cfg.estimator == Estimator::ZR && k == 2 ? Estimator::ZR : Estimator::KT;
      models_.emplace(c, CtwModel(cfg.depth, k, est));
    }
  }

  const RuleSet& rules() const { return *rs_; }
  const CtwConfig& config() const { return cfg_; }
  const ProbTable& fallback() const { return fallback_; }
  const std::map<CatId, CtwModel>& models() const { return models_; }
  std::map<CatId, CtwModel>& models() { return models_; }

  bool uses_context() const override { return true; }

  double log_prob(const Rule& rule, std::span<const RuleId> context) const override {
    auto it = models_.find(rule.lhs);
    if (it == models_.end()) return 0.0;
    if (it->second.root().total() == 0) return fallback_.log_prob(rule.id);
    return it->second.log_predict(context, symbol_of(rule));
  }

  void observe(const Rule& rule, std::span<const RuleId> context) {
    auto it = models_.find(rule.lhs);
    if (it != models_.end()) it->second.update(context, symbol_of(rule));
  }

  std::size_t symbol_of(const Rule& rule) const {
    auto group = rs_->rules_for(rule.lhs);
    return static_cast<std::size_t>(std::find(group.begin(), group.end(), rule.id) - group.begin());
  }

 private:
  const RuleSet* rs_;
  ProbTable fallback_;
  CtwConfig cfg_;
  std::map<CatId, CtwModel> models_;
};

struct TrainReport {
  std::size_t used = 0;
  std::vector<std::pair<std::size_t, std::string>> skipped;  // corpus index, reason
};

inline TrainReport train(CtwProvider& provider, std::span<const Derivation> corpus) {
  TrainReport rep;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    Replay r;
    try {
      r = replay(provider.rules(), corpus[i]);
    } catch (const std::exception& e) {
      rep.skipped.emplace_back(i, e.what());
      continue;
    }
    for (const auto& s : r.steps) provider.observe(provider.rules().rule(s.rule), s.context);
    ++rep.used;
  }
  return rep;
}

/// Total code length in bits of every rule choice in the corpus, split by
/// lhs category. Derivations that do not replay are ignored.
inline std::map<CatId, double> log_loss_by_lhs(const RuleSet& rs, const ProbabilityProvider& provider,
                                               std::span<const Derivation> corpus) {
  std::map<CatId, double> out;
  for (const auto& d : corpus) {
    Replay r;
    try {
      r = replay(rs, d);
    } catch (const std::exception&) {
      continue;
    }
    for (const auto& s : r.steps) {
      const auto& rule = rs.rule(s.rule);
      out[rule.lhs] += -provider.log_prob(rule, s.context) / std::log(2.0);
    }
  }
  return out;
}

inline double log_loss(const RuleSet& rs, const ProbabilityProvider& provider, std::span<const Derivation> corpus) {
  double total = 0;
  for (const auto& [lhs, bits] : log_loss_by_lhs(rs, provider, corpus)) total += bits;
  return total;
}

class SnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void dump_nodes(const CtwNode& n, std::vector<ContextSymbol>& path, nlohmann::json& out) {
  if (n.total() > 0) out.push_back({{"ctx", path}, {"counts", n.counts}});
  for (const auto& [s, c] : n.children) {
    path.push_back(s);
    dump_nodes(*c, path, out);
    path.pop_back();
  }
}

}  // namespace detail

/// JSON snapshot of every model's count tree. Estimates are recomputed on
/// load, so only counts are stored.
inline std::string save_snapshot(const CtwProvider& p) {
  nlohmann::json j;
  j["format"] = "mgparse-ctw";
  j["version"] = 1;
  j["depth"] = p.config().depth;
  j["estimator"] = to_string(p.config().estimator);
  j["models"] = nlohmann::json::array();
  for (const auto& [lhs, m] : p.models()) {
    auto group = p.rules().rules_for(lhs);
    nlohmann::json jm;
    jm["lhs"] = to_string(p.rules().category(lhs));
    jm["rules"] = std::vector<RuleId>(group.begin(), group.end());
    jm["estimator"] = to_string(m.estimator());
    jm["nodes"] = nlohmann::json::array();
    std::vector<ContextSymbol> path;
    detail::dump_nodes(m.root(), path, jm["nodes"]);
    j["models"].push_back(std::move(jm));
  }
  return j.dump(1) + "\n";
}

inline CtwProvider load_snapshot(const RuleSet& rs, ProbTable fallback, std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw SnapshotError(std::string("snapshot is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "mgparse-ctw" || j.at("version") != 1) throw SnapshotError("unsupported snapshot format");
    CtwConfig cfg;
    cfg.depth = j.at("depth").get<std::size_t>();
    auto est = j.at("estimator").get<std::string>();
    if (est != "kt" && est != "zr") throw SnapshotError("unknown estimator '" + est + "'");
    cfg.estimator = est == "kt" ? Estimator::KT : Estimator::ZR;
    CtwProvider p(rs, std::move(fallback), cfg);
    for (const auto& jm : j.at("models")) {
      auto lhs_text = jm.at("lhs").get<std::string>();
      auto lhs = rs.find(parse_category(lhs_text));
      if (!lhs || !p.models().count(*lhs)) throw SnapshotError("snapshot model for unknown lhs " + lhs_text);
      auto group = rs.rules_for(*lhs);
      if (jm.at("rules").get<std::vector<RuleId>>() != std::vector<RuleId>(group.begin(), group.end()))
        throw SnapshotError("rule ids for " + lhs_text + " do not match the grammar");
      auto& model = p.models().at(*lhs);
      for (const auto& jn : jm.at("nodes")) {
        auto ctx = jn.at("ctx").get<std::vector<ContextSymbol>>();
        auto counts = jn.at("counts").get<std::vector<std::uint64_t>>();
        if (counts.size() != model.alphabet()) throw SnapshotError("count vector size mismatch for " + lhs_text);
        model.node_at(ctx).counts = counts;
      }
      model.recompute();
    }
    return p;
  } catch (const SnapshotError&) {
    throw;
  } catch (const std::exception& e) {
    throw SnapshotError(std::string("malformed snapshot: ") + e.what());
  }
}

}  // namespace mgparse
