#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "common.hpp"
#include "oracle/ctw_mixture.hpp"

using namespace mgparse;
using testing_support::grammar_path;
using testing_support::load_lexicon;
using testing_support::slurp;

namespace {

double kt_seq(std::uint64_t a, std::uint64_t b) {
  const std::uint64_t c[2] = {a, b};
  return std::exp(kt_log_sequence(c));
}

std::vector<ContextSymbol> ctx_of(const std::vector<int>& seq, std::size_t t, std::size_t depth) {
  std::vector<ContextSymbol> c;
  for (std::size_t d = 0; d < depth; ++d) c.push_back(static_cast<ContextSymbol>(seq[t - 1 - d]));
  return c;
}

}  // namespace

TEST(Kt, KnownValues) {
  EXPECT_DOUBLE_EQ(kt_seq(0, 0), 1.0);
  EXPECT_NEAR(kt_seq(2, 0), 3.0 / 8, 1e-15);
  EXPECT_NEAR(kt_seq(1, 1), 1.0 / 8, 1e-15);
  EXPECT_NEAR(kt_seq(2, 2), 3.0 / 128, 1e-15);
  const std::uint64_t zero[2] = {0, 0};
  EXPECT_DOUBLE_EQ(kt_predict(zero, 0), 0.5);
}

TEST(Kt, ClosedFormMatchesProducts) {
  for (std::uint64_t a = 0; a <= 50; ++a)
    for (std::uint64_t b = 0; a + b <= 50; ++b) {
      // zeros first, then ones; the value does not depend on the order
      double p = 1;
      std::uint64_t c[2] = {0, 0};
      for (std::uint64_t i = 0; i < a + b; ++i) {
        std::size_t s = i < a ? 0 : 1;
        p *= kt_predict(c, s);
        ++c[s];
      }
      EXPECT_NEAR(p, kt_seq(a, b), 1e-9 * std::max(1.0, p));
      EXPECT_NEAR(std::log(p), kt_log_sequence(c), 1e-9);
    }
}

TEST(Kt, ThreeSymbols) {
  const std::uint64_t c[3] = {2, 0, 1};
  double total = 0;
  for (std::size_t s = 0; s < 3; ++s) total += kt_predict(c, s);
  EXPECT_NEAR(total, 1.0, 1e-15);
  // (1/2)(1/4)(3/6)... built by the recursion: 0, 0, 2
  double p = (0.5 / 1.5) * (1.5 / 2.5) * (0.5 / 3.5);
  EXPECT_NEAR(std::exp(kt_log_sequence(c)), p, 1e-15);
}

TEST(Zr, KnownValues) {
  EXPECT_DOUBLE_EQ(std::exp(zr_log_sequence(0, 0)), 1.0);
  EXPECT_NEAR(std::exp(zr_log_sequence(3, 0)), 0.40625, 1e-15);
  EXPECT_NEAR(std::exp(zr_log_sequence(0, 3)), 0.40625, 1e-15);
  EXPECT_NEAR(std::exp(zr_log_sequence(1, 1)), 1.0 / 16, 1e-15);
  for (std::uint64_t a = 0; a < 10; ++a)
    for (std::uint64_t b = 0; b < 10; ++b) EXPECT_NEAR(zr_predict(a, b, 0) + zr_predict(a, b, 1), 1.0, 1e-12);
  EXPECT_THROW(CtwModel(1, 3, Estimator::ZR), std::invalid_argument);
}

TEST(Ctw, FreshModelIsSymmetric) {
  CtwModel m(2, 2);
  std::vector<ContextSymbol> ctx{1, 0};
  EXPECT_NEAR(m.predict(ctx, 0), 0.5, 1e-15);
  EXPECT_NEAR(m.predict({}, 1), 0.5, 1e-15);
}

TEST(Ctw, DepthZeroIsKt) {
  CtwModel m(0, 2);
  std::uint64_t c[2] = {0, 0};
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    std::size_t s = std::bernoulli_distribution(0.8)(rng);
    EXPECT_NEAR(m.predict({}, s), kt_predict(c, s), 1e-12);
    m.update({}, s);
    ++c[s];
    EXPECT_NEAR(m.log_sequence_probability(), kt_log_sequence(c), 1e-9);
  }
}

TEST(Ctw, MatchesBruteForceMixture) {
  std::mt19937_64 rng(31337);
  for (std::size_t depth = 0; depth <= 2; ++depth) {
    for (int trial = 0; trial < 60; ++trial) {
      const auto len = std::uniform_int_distribution<std::size_t>(1, 16)(rng);
      std::vector<int> seq;
      for (std::size_t i = 0; i < depth + len; ++i) seq.push_back(std::bernoulli_distribution(0.6)(rng));
      CtwModel m(depth, 2);
      for (std::size_t t = depth; t < seq.size(); ++t) {
        auto ctx = ctx_of(seq, t, depth);
        std::vector<int> prefix(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(t));
        for (int y : {0, 1}) {
          auto with = prefix;
          with.push_back(y);
          double want = oracle::mixture_probability(with, depth, depth) /
                        oracle::mixture_probability(prefix, depth, depth);
          EXPECT_NEAR(m.predict(ctx, y), want, 1e-12);
        }
        m.update(ctx, seq[t]);
      }
      EXPECT_NEAR(std::exp(m.log_sequence_probability()), oracle::mixture_probability(seq, depth, depth), 1e-12);
    }
  }
}

TEST(Ctw, ChainRule) {
  CtwModel m(1, 2);
  std::vector<int> seq{1, 0, 1, 1, 0};  // first symbol is context only
  double product = 1;
  for (std::size_t t = 1; t < seq.size(); ++t) {
    auto ctx = ctx_of(seq, t, 1);
    product *= m.predict(ctx, seq[t]);
    m.update(ctx, seq[t]);
  }
  EXPECT_NEAR(product, std::exp(m.log_sequence_probability()), 1e-12);
}

TEST(Ctw, ProperDistribution) {
  std::mt19937_64 rng(8);
  for (Estimator est : {Estimator::KT, Estimator::ZR}) {
    const std::size_t k = est == Estimator::ZR ? 2 : 4;
    CtwModel m(3, k, est);
    for (int i = 0; i < 400; ++i) {
      std::vector<ContextSymbol> ctx;
      auto len = std::uniform_int_distribution<std::size_t>(0, 4)(rng);
      for (std::size_t j = 0; j < len; ++j) ctx.push_back(std::uniform_int_distribution<ContextSymbol>(1, 5)(rng));
      double total = 0;
      for (std::size_t s = 0; s < k; ++s) total += m.predict(ctx, s);
      ASSERT_NEAR(total, 1.0, 1e-9);
      m.update(ctx, std::uniform_int_distribution<std::size_t>(0, k - 1)(rng) % (i % 3 == 0 ? k : 1));
    }
  }
}

TEST(Ctw, UpdateRaisesSeenSymbol) {
  CtwModel m(2, 3);
  std::vector<ContextSymbol> ctx{7, 9};
  for (int i = 0; i < 10; ++i) {
    double before = m.predict(ctx, 2);
    m.update(ctx, 2);
    EXPECT_GT(m.predict(ctx, 2), before);
  }
}

TEST(Ctw, EntropyOfMarkovSource) {
  // P(1 | 0) = 0.1, P(1 | 1) = 0.7
  const double p01 = 0.1, p11 = 0.7;
  auto h2 = [](double p) { return -(p * std::log2(p) + (1 - p) * std::log2(1 - p)); };
  const double pi1 = p01 / (p01 + 1 - p11);
  const double entropy = (1 - pi1) * h2(p01) + pi1 * h2(p11);
  std::mt19937_64 rng(2718);
  CtwModel m(2, 2);
  int prev2 = 0, prev = 0;
  double bits = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    int x = std::bernoulli_distribution(prev ? p11 : p01)(rng);
    std::vector<ContextSymbol> ctx{static_cast<ContextSymbol>(prev), static_cast<ContextSymbol>(prev2)};
    bits -= m.log_predict(ctx, x) / std::log(2.0);
    m.update(ctx, x);
    prev2 = prev;
    prev = x;
  }
  EXPECT_NEAR(bits / n, entropy, 0.02);
}

namespace {

struct Anbn {
  RuleSet rs = close(load_lexicon("anbn.mg"));
  ProbTable table = load_table(rs, slurp(grammar_path("anbn.prob")));
};

}  // namespace

TEST(Provider, UntrainedEqualsTable) {
  auto rs = close(load_lexicon("cats.mg"));
  CtwProvider p(rs, uniform_table(rs));
  StaticProvider u(uniform_table(rs));
  std::vector<RuleId> ctx{3, 1};
  for (const auto& r : rs.rules()) EXPECT_NEAR(p.log_prob(r, ctx), u.log_prob(r, ctx), 1e-9);
}

TEST(Provider, SingleRuleLhsHasProbabilityOne) {
  Anbn g;
  CtwProvider p(g.rs, g.table);
  EXPECT_EQ(p.models().size(), 2u);
  EXPECT_DOUBLE_EQ(p.log_prob(g.rs.rule(*g.rs.resolve("Mv1")), {}), 0.0);
}

TEST(Provider, LearnsDeterministicChoice) {
  Anbn g;
  CtwProvider p(g.rs, g.table, {0, Estimator::KT});
  const auto& mg2 = g.rs.rule(*g.rs.resolve("Mg2"));
  std::vector<RuleId> ctx{*g.rs.resolve("Mg1"), *g.rs.resolve("Mv1"), *g.rs.resolve("S2")};
  for (int i = 0; i < 50; ++i) p.observe(mg2, ctx);
  const double prob = std::exp(p.log_prob(mg2, ctx));
  EXPECT_GT(prob, 0.9);
  EXPECT_NEAR(prob, 50.5 / 51.0, 1e-12);
}

TEST(Provider, TrainingReducesLogLoss) {
  Anbn g;
  StaticProvider s(g.table);
  std::mt19937_64 rng(42);
  std::vector<Derivation> corpus;
  for (int i = 0; i < 300; ++i) corpus.push_back(sample(g.rs, s, rng)->derivation);

  CtwProvider p(g.rs, uniform_table(g.rs));
  StaticProvider uniform(uniform_table(g.rs));
  auto rep = train(p, corpus);
  EXPECT_EQ(rep.used, corpus.size());
  EXPECT_LE(log_loss(g.rs, p, corpus), log_loss(g.rs, uniform, corpus));
}

TEST(Provider, TrainingEdgeCases) {
  Anbn g;
  CtwProvider p(g.rs, g.table);
  auto before = save_snapshot(p);
  EXPECT_EQ(train(p, {}).used, 0u);
  EXPECT_EQ(save_snapshot(p), before);

  std::vector<Derivation> corpus{parse_derivation(g.rs, "S1 L1"), parse_derivation(g.rs, "S1")};
  auto rep = train(p, corpus);
  EXPECT_EQ(rep.used, 1u);
  ASSERT_EQ(rep.skipped.size(), 1u);
  EXPECT_EQ(rep.skipped[0].first, 1u);

  CtwProvider q(g.rs, g.table);
  train(q, std::vector<Derivation>{parse_derivation(g.rs, "S1 L1")});
  EXPECT_EQ(save_snapshot(p), save_snapshot(q));
}

TEST(Provider, ZeroRedundancyOnBinaryGroups) {
  auto rs = close(load_lexicon("cats.mg"));
  CtwProvider p(rs, uniform_table(rs), {1, Estimator::ZR});
  for (const auto& [lhs, m] : p.models())
    EXPECT_EQ(m.estimator(), m.alphabet() == 2 ? Estimator::ZR : Estimator::KT);
}

TEST(Snapshot, RoundTrip) {
  Anbn g;
  StaticProvider s(g.table);
  std::mt19937_64 rng(5);
  std::vector<Derivation> corpus;
  for (int i = 0; i < 100; ++i) corpus.push_back(sample(g.rs, s, rng)->derivation);
  for (auto est : {Estimator::KT, Estimator::ZR}) {
    CtwProvider p(g.rs, g.table, {2, est});
    train(p, corpus);
    auto text = save_snapshot(p);
    auto q = load_snapshot(g.rs, g.table, text);
    EXPECT_EQ(save_snapshot(q), text);
    for (const auto& d : corpus) {
      auto r = replay(g.rs, d);
      for (const auto& st : r.steps)
        EXPECT_NEAR(p.log_prob(g.rs.rule(st.rule), st.context), q.log_prob(g.rs.rule(st.rule), st.context), 1e-12);
    }
  }
}

TEST(Snapshot, Errors) {
  Anbn g;
  EXPECT_THROW(load_snapshot(g.rs, g.table, "not json"), SnapshotError);
  EXPECT_THROW(load_snapshot(g.rs, g.table, R"({"format":"other","version":1})"), SnapshotError);
  auto cats = close(load_lexicon("cats.mg"));
  CtwProvider p(cats, uniform_table(cats));
  StaticProvider u(uniform_table(cats));
  std::mt19937_64 rng(1);
  train(p, std::vector<Derivation>{sample(cats, u, rng)->derivation});
  EXPECT_THROW(load_snapshot(g.rs, g.table, save_snapshot(p)), SnapshotError);
}
