#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "figa/error.hpp"
#include "figa/model.hpp"
#include "oracles/finite_diff.hpp"

namespace figa {
namespace {

constexpr ModelDims kSmall{7, 3, 4, 2};

EncodedRecord random_record(std::mt19937_64& rng, std::size_t vocab, bool zero_weights = false) {
  std::uniform_int_distribution<int> tok(2, static_cast<int>(vocab) - 1);
  std::uniform_real_distribution<double> weight(0.0, 1.5);
  const auto draw = [&](std::size_t n) {
    std::vector<int> v(n);
    for (auto& x : v) x = tok(rng);
    return v;
  };
  EncodedRecord r;
  r.id = "r" + std::to_string(rng() % 1000);
  const auto query = draw(rng() % 3);
  const auto revised = draw(1 + rng() % 5);
  const auto initial = draw(1 + rng() % 5);
  r.response_start = query.size() + 1;
  r.revised = query;
  r.revised.push_back(Vocabulary::kSep);
  r.revised.insert(r.revised.end(), revised.begin(), revised.end());
  r.initial = query;
  r.initial.push_back(Vocabulary::kSep);
  r.initial.insert(r.initial.end(), initial.begin(), initial.end());
  for (std::size_t i = 0; i < revised.size(); ++i)
    r.revised_weights.push_back(zero_weights || rng() % 3 == 0 ? 0.0 : weight(rng));
  for (std::size_t i = 0; i < initial.size(); ++i)
    r.initial_weights.push_back(zero_weights || rng() % 2 == 0 ? 0.0 : weight(rng));
  return r;
}

TEST(Vocabulary, ReservedIdsAndLookup) {
  const TokenSeq toks{"b", "a", "b"};
  const auto v = Vocabulary::from_tokens(toks);
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(v.id(Vocabulary::kBosToken), Vocabulary::kBos);
  EXPECT_EQ(v.id(Vocabulary::kSepToken), Vocabulary::kSep);
  EXPECT_EQ(v.id("a"), 2);
  EXPECT_EQ(v.id("b"), 3);
  EXPECT_THROW(v.id("zebra"), VocabularyError);
  EXPECT_EQ(v.encode(TokenSeq{"a", "b"}), (std::vector<int>{2, 3}));
}

TEST(ModelParams, LayoutAndInit) {
  const ModelDims d{5, 3, 4, 2};
  EXPECT_EQ(d.param_count(), 5u * 3 + 4u * 6 + 4 + 5u * 4 + 5);
  const auto p = ModelParams::random(d, 9);
  EXPECT_EQ(p.flat().size(), d.param_count());
  for (double x : p.flat()) {
    EXPECT_GE(x, -0.1);
    EXPECT_LT(x, 0.1);
  }
  EXPECT_EQ(p, ModelParams::random(d, 9));
  EXPECT_NE(p, ModelParams::random(d, 10));
  EXPECT_THROW(ModelParams(ModelDims{5, 3, 4, 3}), ConfigError);
}

TEST(LogProbs, HandSetLogits) {
  ModelParams p(ModelDims{3, 2, 2, 2});
  p.b2()[0] = 1.0;
  const std::vector<int> seq{1, 2};
  const auto lp = log_probs(p, seq, 0, 3);
  ASSERT_EQ(lp.size(), 3u);
  for (const auto& row : lp) {
    EXPECT_NEAR(row[0], -0.5514, 5e-5);
    EXPECT_NEAR(row[1], -1.5514, 5e-5);
    EXPECT_NEAR(row[2], -1.5514, 5e-5);
  }
}

TEST(LogProbs, ZeroParamsAreUniform) {
  const ModelParams p(kSmall);
  const std::vector<int> seq{2, 3, 4};
  for (const auto& row : log_probs(p, seq, 0, seq.size()))
    for (double x : row) EXPECT_NEAR(x, -std::log(7.0), 1e-15);
}

TEST(LogProbs, NormalizedForRandomParams) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = ModelParams::random(kSmall, rng(), 2.0);
    const auto r = random_record(rng, kSmall.vocab);
    for (const auto& row : log_probs(p, r.revised, 0, r.revised.size())) {
      double s = 0;
      for (double x : row) s += std::exp(x);
      ASSERT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(LogProbs, OutOfVocabularyIds) {
  const ModelParams p(kSmall);
  const std::vector<int> seq{2, 99};
  EXPECT_THROW(log_probs(p, seq, 0, 2), VocabularyError);
}

TEST(FigaLoss, ArithmeticExample) {
  // Context-free logits so that log π(x) = -0.5 and log π(y) = -1.0.
  ModelParams p(ModelDims{4, 2, 2, 2});
  const double rest = std::log((1.0 - std::exp(-0.5) - std::exp(-1.0)) / 2.0);
  p.b2()[0] = rest;
  p.b2()[1] = rest;
  p.b2()[2] = -0.5;
  p.b2()[3] = -1.0;
  EncodedRecord r{"x", {1, 2}, {1, 3}, 1, {1.0}, {0.5}};
  const auto loss = figa_loss(p, r);
  EXPECT_NEAR(loss.encourage_term, 0.5, 1e-12);
  EXPECT_NEAR(loss.penalty_term, -0.5, 1e-12);
  EXPECT_NEAR(loss.total, 0.0, 1e-12);
  EXPECT_EQ(loss.encouraged_tokens, 1u);
  EXPECT_EQ(loss.penalized_tokens, 1u);
  EXPECT_EQ(loss.ignored_tokens, 0u);
}

TEST(FigaLoss, IdentityEditWithZeroGammaEncouragesNothing) {
  std::mt19937_64 rng(2);
  const auto p = ModelParams::random(kSmall, 5);
  auto r = random_record(rng, kSmall.vocab);
  r.initial = r.revised;
  std::fill(r.revised_weights.begin(), r.revised_weights.end(), 0.0);
  r.initial_weights.assign(r.initial.size() - r.response_start, 0.0);
  const auto loss = figa_loss(p, r);
  EXPECT_EQ(loss.encourage_term, 0.0);
  EXPECT_EQ(loss.total, 0.0);
}

TEST(SftLoss, Examples) {
  const ModelParams zero(kSmall);
  const std::vector<int> query{2, 3};
  EXPECT_EQ(sft_loss(zero, query, std::vector<int>{}), 0.0);
  EXPECT_NEAR(sft_loss(zero, query, std::vector<int>{4, 5, 6}), 3 * std::log(7.0), 1e-12);
}

TEST(FigaLoss, DegeneratesToSft) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = ModelParams::random(kSmall, rng(), 1.0);
    auto r = random_record(rng, kSmall.vocab);
    std::fill(r.revised_weights.begin(), r.revised_weights.end(), 1.0);
    std::fill(r.initial_weights.begin(), r.initial_weights.end(), 0.0);
    const std::vector<int> query(r.revised.begin(),
                                 r.revised.begin() + static_cast<long>(r.response_start) - 1);
    const std::vector<int> target(r.revised.begin() + static_cast<long>(r.response_start),
                                  r.revised.end());
    ASSERT_LE(std::abs(figa_loss(p, r).total - sft_loss(p, query, target)), 1e-12);
  }
}

TEST(FigaLoss, MatchesNaiveTranscription) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = ModelParams::random(kSmall, rng(), 1.0);
    const auto r = random_record(rng, kSmall.vocab);
    ASSERT_NEAR(figa_loss(p, r).total, oracle::naive_figa_total(p, r), 1e-12);
  }
}

TEST(Grad, AgreesWithCentralDifferences) {
  std::mt19937_64 rng(5);
  std::size_t checked = 0;
  for (int rec = 0; rec < 20; ++rec) {
    const auto p = ModelParams::random(kSmall, rng(), 0.5);
    const auto r = random_record(rng, kSmall.vocab);
    LossReport report;
    const auto g = grad(p, r, &report);
    EXPECT_NEAR(report.total, figa_loss(p, r).total, 1e-15);
    const auto f = [&](const ModelParams& q) { return oracle::naive_figa_total(q, r); };
    for (int k = 0; k < 12; ++k) {
      const std::size_t c = rng() % p.flat().size();
      const double numeric = oracle::central_difference(f, p, c);
      ASSERT_LE(oracle::relative_error(g.flat()[c], numeric), 1e-4)
          << "record " << rec << " coordinate " << c;
      ++checked;
    }
  }
  EXPECT_GE(checked, 200u);
}

TEST(Grad, ZeroWeightsGiveZeroGradient) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = ModelParams::random(kSmall, rng(), 1.0);
    const auto g = grad(p, random_record(rng, kSmall.vocab, true));
    for (double x : g.flat()) ASSERT_EQ(x, 0.0);
  }
}

TEST(Grad, ZeroWeightLastTokenIsIrrelevant) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = ModelParams::random(kSmall, rng(), 1.0);
    auto r = random_record(rng, kSmall.vocab);
    r.revised_weights.back() = 0.0;
    r.initial_weights.back() = 0.0;
    auto s = r;
    s.revised.back() = 2 + static_cast<int>((r.revised.back() - 1) % (kSmall.vocab - 2));
    s.initial.back() = 2 + static_cast<int>((r.initial.back() - 1) % (kSmall.vocab - 2));
    LossReport lr, ls;
    const auto gr = grad(p, r, &lr);
    const auto gs = grad(p, s, &ls);
    ASSERT_EQ(lr.total, ls.total);
    ASSERT_EQ(gr, gs);
  }
}

double penalized_logprob(const ModelParams& p, const EncodedRecord& r) {
  const auto lp = log_probs(p, r.initial, r.response_start, r.initial.size());
  double s = 0;
  for (std::size_t t = 0; t < lp.size(); ++t)
    s += r.initial_weights[t] * lp[t][static_cast<std::size_t>(r.initial[r.response_start + t])];
  return s;
}

TEST(Grad, DescentStepLowersPenalizedLikelihood) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = ModelParams::random(kSmall, rng(), 0.5);
    auto r = random_record(rng, kSmall.vocab);
    std::fill(r.revised_weights.begin(), r.revised_weights.end(), 0.0);
    std::fill(r.initial_weights.begin(), r.initial_weights.end(), 1.0);
    const double before = penalized_logprob(p, r);
    const auto g = grad(p, r);
    for (std::size_t i = 0; i < p.flat().size(); ++i) p.flat()[i] -= 1e-3 * g.flat()[i];
    ASSERT_LT(penalized_logprob(p, r), before);
  }
}

TEST(Encode, LaysOutQuerySeparatorResponse) {
  WeightedRecord w{"id", {"q"}, {"a", "b"}, {"c"}, {{1, 0}, {0.5}}};
  const auto vocab = Vocabulary::from_tokens(TokenSeq{"q", "a", "b", "c"});
  const auto e = encode(w, vocab);
  EXPECT_EQ(e.response_start, 2u);
  EXPECT_EQ(e.revised, (std::vector<int>{vocab.id("q"), Vocabulary::kSep, vocab.id("a"),
                                         vocab.id("b")}));
  EXPECT_EQ(e.initial, (std::vector<int>{vocab.id("q"), Vocabulary::kSep, vocab.id("c")}));
  w.weights.initial_weights.push_back(1);
  EXPECT_THROW(encode(w, vocab), StructuralError);
}

}  // namespace
}  // namespace figa
