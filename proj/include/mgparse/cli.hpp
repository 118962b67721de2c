#pragma once

// The mgparse command line: compile, parse, sample, train.
//
// Exit codes: 0 success, 1 ungrammatical input, 2 bad input or grammar,
// 3 step budget exhausted.

#include <atomic>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mgparse/ctw.hpp"
#include "mgparse/derivation.hpp"
#include "mgparse/lexicon.hpp"
#include "mgparse/parser.hpp"
#include "mgparse/probability.hpp"
#include "mgparse/rules.hpp"
#include "mgparse/unit_loops.hpp"

namespace mgparse::cli {

enum Exit : int { kOk = 0, kUngrammatical = 1, kInputError = 2, kBudget = 3 };

struct RunConfig {
  std::string grammar;
  std::string prob_file;
  std::string ctw_file;
  std::string rule_table;
  double beam = 0.0;
  std::size_t max_queue = 0;  // 0: no cap
  std::size_t k_best = 1;
  std::size_t budget = 1'000'000;
  std::uint64_t seed = 1;
  std::string format = "table";
  std::size_t threads = 1;
  bool check = false;
};

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw InputError("cannot write " + path);
}

inline std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

inline std::string fmt_prob(double p) {
  std::ostringstream s;
  s << std::setprecision(6) << p;
  return s.str();
}

/// Grammar, rules and probability source for one invocation.
struct Session {
  RuleSet rs;
  ProbTable table;
  std::unique_ptr<StaticProvider> static_provider;
  std::unique_ptr<CtwProvider> ctw;

  const ProbabilityProvider& provider() const {
    if (ctw) return *ctw;
    return *static_provider;
  }
};

inline Session load_session(const RunConfig& cfg, std::ostream& err) {
  Session s;
  auto lex = parse_lexicon(read_file(cfg.grammar));
  for (const auto& w : lexicon_warnings(lex)) err << "warning: " << w << "\n";
  s.rs = close(lex);
  if (!cfg.rule_table.empty()) verify_rule_table(s.rs, read_file(cfg.rule_table));
  s.table = cfg.prob_file.empty() ? uniform_table(s.rs) : load_table(s.rs, read_file(cfg.prob_file));
  s.static_provider = std::make_unique<StaticProvider>(s.table);
  if (!cfg.ctw_file.empty())
    s.ctw = std::make_unique<CtwProvider>(load_snapshot(s.rs, s.table, read_file(cfg.ctw_file)));
  return s;
}

inline int cmd_compile(const RunConfig& cfg, const std::string& out_path, std::ostream& out, std::ostream& err) {
  auto lex = parse_lexicon(read_file(cfg.grammar));
  for (const auto& w : lexicon_warnings(lex)) err << "warning: " << w << "\n";
  auto rs = close(lex);
  auto table = format_rule_table(rs);
  if (out_path.empty()) out << table;
  else write_file(out_path, table);

  std::size_t smc_bad = 0;
  for (const auto& c : rs.categories())
    if (!c.is_start() && !check_smc(c)) ++smc_bad;
  out << rs.rules().size() << " rules, " << rs.categories().size() << " categories\n";
  if (smc_bad) {
    err << "error: " << smc_bad << " categories violate the SMC\n";
    return kInputError;
  }
  if (cfg.prob_file.empty()) return kOk;

  auto t = load_table(rs, read_file(cfg.prob_file));
  auto rep = check_unit_loops(rs, t);
  if (rep.ok()) {
    const bool one = rep.cycles.size() == 1 && !rep.truncated;
    out << "unit-loop check: pass (" << rep.cycles.size() << (rep.truncated ? "+" : "") << (one ? " cycle)\n" : " cycles)\n");
    return kOk;
  }
  out << "unit-loop check: FAIL, " << rep.offending.size() << " cycles of probability 1\n";
  for (const auto& c : rep.offending) out << "  " << format_cycle(rs, c) << "\n";
  return kInputError;
}

inline ParseOptions parse_options(const RunConfig& cfg) {
  ParseOptions opt;
  opt.beam.rel_factor = cfg.beam;
  if (cfg.max_queue) opt.beam.max_queue = cfg.max_queue;
  opt.k_best = cfg.k_best;
  opt.step_budget = cfg.budget;
  opt.check_invariants = cfg.check;
  return opt;
}

inline int exit_code(ParseStatus s) {
  switch (s) {
    case ParseStatus::Success: return kOk;
    case ParseStatus::Ungrammatical: return kUngrammatical;
    case ParseStatus::BudgetExceeded: return kBudget;
  }
  return kInputError;
}

/// Parses one sentence and renders it in the chosen format.
inline ParseStatus parse_one(const Session& s, const RunConfig& cfg, const std::string& sentence, std::string& text) {
  auto words = detail::split_ws(sentence);
  auto opt = parse_options(cfg);
  std::ostringstream o;
  const bool json = cfg.format == "json-lines";
  if (cfg.format == "trace") opt.trace = [&](const TraceEvent& e) { o << format_trace_event(e) << "\n"; };
  if (json) {
    opt.trace = [&](const TraceEvent& e) {
      nlohmann::json j{{"type", "step"}, {"step", e.step},   {"action", e.action},
                       {"pointer", e.pointer.str()},        {"prob", e.prob}, {"frontier", e.frontier}};
      o << j.dump() << "\n";
    };
  }
  auto res = parse(words, s.rs, s.provider(), opt);

  if (json) {
    for (std::size_t i = 0; i < res.results.size(); ++i) {
      const auto& r = res.results[i];
      nlohmann::json j{{"type", "result"},
                       {"sentence", sentence},
                       {"rank", i + 1},
                       {"prob", r.prob()},
                       {"log_prob", r.log_prob},
                       {"derivation", format_derivation(s.rs, r.derivation)},
                       {"rules", r.derivation},
                       {"yield", derivation_yield(s.rs, r.derivation)}};
      o << j.dump() << "\n";
    }
    nlohmann::json j{{"type", "status"},        {"sentence", sentence}, {"status", to_string(res.status)},
                     {"steps", res.steps},      {"pruned", res.pruned},
                     {"invariant_violations", res.invariant_violations}};
    o << j.dump() << "\n";
  } else {
    o << "sentence: " << sentence << "\n";
    o << "status: " << to_string(res.status) << " (" << res.steps << " steps)\n";
    for (std::size_t i = 0; i < res.results.size(); ++i) {
      const auto& r = res.results[i];
      o << "#" << i + 1 << " p=" << fmt_prob(r.prob()) << "  " << format_derivation(s.rs, r.derivation) << "\n";
      std::string y;
      for (const auto& w : derivation_yield(s.rs, r.derivation)) y += (y.empty() ? "" : " ") + w;
      o << "   yield: " << (y.empty() ? "(empty)" : y) << "\n";
      if (cfg.format == "tree") o << format_tree(s.rs, replay(s.rs, r.derivation));
    }
    for (const auto& v : res.invariant_violations) o << "invariant violation: " << v << "\n";
  }
  text = o.str();
  return res.status;
}

inline int cmd_parse(const RunConfig& cfg, const std::vector<std::string>& sentence, const std::string& input,
                     std::ostream& out, std::ostream& err) {
  auto s = load_session(cfg, err);
  std::vector<std::string> sentences;
  if (!input.empty()) {
    for (auto& line : lines_of(read_file(input)))
      if (!detail::trim(line).empty()) sentences.push_back(line);
  } else {
    std::string joined;
    for (const auto& w : sentence) joined += (joined.empty() ? "" : " ") + w;
    sentences.push_back(joined);
  }

  std::vector<std::string> texts(sentences.size());
  std::vector<ParseStatus> status(sentences.size(), ParseStatus::Success);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < sentences.size();) status[i] = parse_one(s, cfg, sentences[i], texts[i]);
  };
  const auto n = std::max<std::size_t>(1, std::min(cfg.threads, sentences.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int code = kOk;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    out << texts[i];
    code = std::max(code, status[i] == ParseStatus::BudgetExceeded ? int(kBudget) : exit_code(status[i]));
  }
  return code;
}

inline int cmd_sample(const RunConfig& cfg, std::size_t count, std::size_t max_steps, std::ostream& out,
                      std::ostream& err) {
  auto s = load_session(cfg, err);
  std::mt19937_64 rng(cfg.seed);
  for (std::size_t i = 0; i < count; ++i) {
    auto smp = sample(s.rs, s.provider(), rng, max_steps);
    std::string y;
    if (smp)
      for (const auto& w : smp->words) y += (y.empty() ? "" : " ") + w;
    if (cfg.format == "json-lines") {
      nlohmann::json j{{"type", "sample"}, {"index", i}};
      if (smp) {
        j["words"] = smp->words;
        j["derivation"] = format_derivation(s.rs, smp->derivation);
        j["prob"] = std::exp(smp->log_prob);
      } else {
        j["overflow"] = true;
      }
      out << j.dump() << "\n";
    } else if (smp) {
      out << (y.empty() ? "(empty)" : y) << "\t" << format_derivation(s.rs, smp->derivation) << "\t"
          << fmt_prob(std::exp(smp->log_prob)) << "\n";
    } else {
      out << "overflow\n";
    }
  }
  return kOk;
}

inline int cmd_train(const RunConfig& cfg, const std::string& corpus_path, const std::string& out_path,
                     std::size_t depth, const std::string& estimator, std::ostream& out, std::ostream& err) {
  auto s = load_session(cfg, err);
  if (!s.ctw) {
    CtwConfig c;
    c.depth = depth;
    if (estimator != "kt" && estimator != "zr") throw InputError("unknown estimator '" + estimator + "'");
    c.estimator = estimator == "zr" ? Estimator::ZR : Estimator::KT;
    s.ctw = std::make_unique<CtwProvider>(s.rs, s.table, c);
  }

  std::vector<Derivation> corpus;
  auto lines = lines_of(read_file(corpus_path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto t = detail::trim(lines[i]);
    if (t.empty() || t.front() == '#') continue;
    try {
      auto d = parse_derivation(s.rs, t);
      replay(s.rs, d);
      corpus.push_back(std::move(d));
    } catch (const std::exception& e) {
      err << "skipped line " << i + 1 << ": " << e.what() << "\n";
    }
  }

  auto before = log_loss_by_lhs(s.rs, *s.ctw, corpus);
  train(*s.ctw, corpus);
  auto after = log_loss_by_lhs(s.rs, *s.ctw, corpus);

  out << "trained on " << corpus.size() << " derivations\n";
  double tb = 0, ta = 0;
  for (const auto& [lhs, bits] : before) {
    if (!s.ctw->models().count(lhs)) continue;
    tb += bits;
    ta += after[lhs];
    out << std::fixed << std::setprecision(3) << std::setw(10) << bits << " -> " << std::setw(10) << after[lhs]
        << " bits  " << to_string(s.rs.category(lhs)) << "\n";
  }
  out << std::fixed << std::setprecision(3) << "total " << tb << " -> " << ta << " bits\n";
  out.unsetf(std::ios::fixed);
  write_file(out_path, save_snapshot(*s.ctw));
  return kOk;
}

/// Runs the tool. `args[0]` is the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Minimalist grammar compiler and probabilistic top-down parser", "mgparse"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_grammar = [&](CLI::App* sub) {
    sub->add_option("grammar", cfg.grammar, "Grammar file")->required();
  };
  auto add_provider = [&](CLI::App* sub) {
    sub->add_option("-p,--prob", cfg.prob_file, "Rule probability file (default: uniform)");
    sub->add_option("--ctw", cfg.ctw_file, "CTW model snapshot");
    sub->add_option("--rules", cfg.rule_table, "Rule table the grammar must compile to");
  };

  std::string compile_out;
  auto* compile = app.add_subcommand("compile", "Compile a grammar and print its rule table");
  add_grammar(compile);
  compile->add_option("-p,--prob", cfg.prob_file, "Rule probability file; enables the unit-loop check");
  compile->add_option("-o,--out", compile_out, "Write the rule table here instead of stdout");

  std::vector<std::string> sentence;
  std::string input;
  auto* parse_cmd = app.add_subcommand("parse", "Parse sentences");
  add_grammar(parse_cmd);
  parse_cmd->add_option("sentence", sentence, "Words of the sentence (may be empty)");
  add_provider(parse_cmd);
  parse_cmd->add_option("-i,--input", input, "File with one sentence per line");
  parse_cmd->add_option("-b,--beam", cfg.beam, "Relative beam factor in [0,1]; 0 disables")
      ->check(CLI::Range(0.0, 1.0));
  parse_cmd->add_option("--max-queue", cfg.max_queue, "Queue size cap; 0 disables");
  parse_cmd->add_option("-k,--k-best", cfg.k_best, "Number of derivations to report")->check(CLI::PositiveNumber);
  parse_cmd->add_option("--budget", cfg.budget, "Step budget");
  parse_cmd->add_option("-f,--format", cfg.format, "Output format")
      ->check(CLI::IsMember({"table", "trace", "tree", "json-lines"}));
  parse_cmd->add_option("-j,--threads", cfg.threads, "Worker threads for --input");
  parse_cmd->add_flag("--check", cfg.check, "Check the pointer invariants at every step");

  std::size_t count = 1, max_steps = 10'000;
  auto* sample_cmd = app.add_subcommand("sample", "Draw random derivations");
  add_grammar(sample_cmd);
  add_provider(sample_cmd);
  sample_cmd->add_option("-n,--count", count, "Number of samples");
  sample_cmd->add_option("-s,--seed", cfg.seed, "Random seed");
  sample_cmd->add_option("--max-steps", max_steps, "Rules per sample before reporting overflow");
  sample_cmd->add_option("-f,--format", cfg.format, "Output format")->check(CLI::IsMember({"table", "json-lines"}));

  std::string corpus, snapshot_out, estimator = "kt";
  std::size_t depth = 2;
  auto* train_cmd = app.add_subcommand("train", "Train CTW rule models on a derivation corpus");
  add_grammar(train_cmd);
  add_provider(train_cmd);
  train_cmd->add_option("-c,--corpus", corpus, "Derivations, one per line")->required();
  train_cmd->add_option("-o,--out", snapshot_out, "Snapshot to write")->required();
  train_cmd->add_option("-d,--depth", depth, "Context depth for new models");
  train_cmd->add_option("-e,--estimator", estimator, "kt or zr")->check(CLI::IsMember({"kt", "zr"}));

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kInputError;
  }

  try {
    if (compile->parsed()) return cmd_compile(cfg, compile_out, out, err);
    if (parse_cmd->parsed()) return cmd_parse(cfg, sentence, input, out, err);
    if (sample_cmd->parsed()) return cmd_sample(cfg, count, max_steps, out, err);
    if (train_cmd->parsed()) return cmd_train(cfg, corpus, snapshot_out, depth, estimator, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}

}  // namespace mgparse::cli
