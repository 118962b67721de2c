#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mgparse/mgparse.hpp"

namespace testing_support {

inline std::string grammar_path(const std::string& name) { return std::string(MGPARSE_GRAMMARS) + "/" + name; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline mgparse::Lexicon load_lexicon(const std::string& name) { return mgparse::parse_lexicon(slurp(grammar_path(name))); }

inline std::vector<std::string> words(const std::string& s) { return mgparse::detail::split_ws(s); }

inline std::vector<std::string> repeat(const std::string& a, std::size_t n, const std::string& b, std::size_t m) {
  std::vector<std::string> out(n, a);
  out.insert(out.end(), m, b);
  return out;
}

/// Random lexicon obeying the feature order: small alphabets so that items
/// actually combine. Categories x, y, c; licensees f, g.
inline mgparse::Lexicon random_lexicon(std::mt19937_64& rng, std::size_t max_items = 6, std::size_t max_len = 5) {
  using mgparse::Feature;
  const std::vector<std::string> cats{"x", "y", "c"};
  const std::vector<std::string> lics{"f", "g"};
  auto pick = [&](const auto& v) { return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)]; };
  auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };

  mgparse::Lexicon lex;
  const auto n = std::uniform_int_distribution<std::size_t>(1, max_items)(rng);
  const std::vector<std::string> phons{"", "p", "q", "r", "s"};
  while (lex.items.size() < n) {
    mgparse::LexicalItem item;
    item.phon = pick(phons);
    const auto len = std::uniform_int_distribution<std::size_t>(1, max_len)(rng);
    // selectors and licensors, category, licensees
    std::size_t pre = std::uniform_int_distribution<std::size_t>(0, len - 1)(rng);
    for (std::size_t i = 0; i < pre; ++i) {
      if (i > 0 && coin(0.3)) item.features.push_back(Feature::licensor(pick(lics)));
      else item.features.push_back(Feature::selector(pick(cats)));
    }
    item.features.push_back(Feature::category(pick(cats)));
    for (std::size_t i = pre + 1; i < len; ++i) item.features.push_back(Feature::licensee(pick(lics)));
    if (std::find(lex.items.begin(), lex.items.end(), item) == lex.items.end()) lex.items.push_back(item);
  }
  return lex;
}

}  // namespace testing_support
