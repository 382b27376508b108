#include <gtest/gtest.h>

#include "figa/annotate.hpp"
#include "figa/annotator.hpp"
#include "figa/error.hpp"

namespace figa {
namespace {

using Doubles = std::vector<double>;

SpaRecord record(std::string id, std::string initial, std::string revised) {
  SpaRecord r;
  r.instance = {std::move(id), "why is the sky blue", "because of scattering", "test", {}};
  r.initial_response = std::move(initial);
  r.revised_response = std::move(revised);
  r.rewards = {-1.0, 4.0, 2.0};
  return r;
}

TEST(WordScores, ParsesTupleAndJsonForms) {
  const auto a = parse_word_scores("[('dog', 5), (\"down\", 3)]");
  ASSERT_TRUE(a);
  EXPECT_EQ(*a, (WordScores{{"dog", 5}, {"down", 3}}));

  const auto b = parse_word_scores(R"([["dog", 5], {"word": "down", "score": 0}])");
  ASSERT_TRUE(b);
  EXPECT_EQ(*b, (WordScores{{"dog", 5}, {"down", 0}}));

  const auto c = parse_word_scores("Sure! Here you go: ('it\\'s', 2)");
  ASSERT_TRUE(c);
  EXPECT_EQ(*c, (WordScores{{"it's", 2}}));
}

TEST(WordScores, RejectsOutOfRangeAndProse) {
  EXPECT_FALSE(parse_word_scores("[('dog', 6)]"));
  EXPECT_FALSE(parse_word_scores(R"([["dog", -1]])"));
  EXPECT_FALSE(parse_word_scores("I cannot help with that."));
  EXPECT_FALSE(parse_word_scores("('dog', x)"));
}

TEST(WordScoreWeights, WeightedMode) {
  const auto revised = tokenize("the dog sat down");
  const auto w = weights_from_word_scores({{"dog", 5}, {"down", 0}}, revised, 3,
                                          AnnotatorMode::Weighted);
  ASSERT_EQ(w.revised_weights.size(), 4u);
  EXPECT_DOUBLE_EQ(w.revised_weights[1], 1.3);
  EXPECT_DOUBLE_EQ(w.revised_weights[3], 0.7);
  EXPECT_DOUBLE_EQ(w.revised_weights[0], 0.3);
  EXPECT_DOUBLE_EQ(w.revised_weights[2], 0.3);
  EXPECT_EQ(w.initial_weights, (Doubles{0, 0, 0}));
}

TEST(WordScoreWeights, BinaryMode) {
  const auto revised = tokenize("the dog sat down");
  const auto w = weights_from_word_scores({{"dog", 2}, {"down", 0}}, revised, 3,
                                          AnnotatorMode::Binary);
  EXPECT_EQ(w.revised_weights, (Doubles{0, 1, 0, 0}));
}

TEST(WordScoreWeights, RepeatedWordsClaimSuccessiveTokens) {
  const auto revised = tokenize("a b a b");
  const auto w = weights_from_word_scores({{"b", 5}, {"b", 0}, {"zzz", 5}}, revised, 0,
                                          AnnotatorMode::Binary);
  EXPECT_EQ(w.revised_weights, (Doubles{0, 1, 0, 0}));
}

TEST(ExternalAnnotator, RetriesThenCarriesPayload) {
  int calls = 0;
  FunctionCompletion svc([&](const ChatRequest&) {
    ++calls;
    return std::string("no idea");
  });
  try {
    external_annotator_weights(record("1", "the cat sat", "the dog sat"), svc,
                               AnnotatorMode::Weighted);
    FAIL() << "expected ServiceError";
  } catch (const ServiceError& e) {
    EXPECT_EQ(e.payload(), "no idea");
  }
  EXPECT_EQ(calls, 3);
}

TEST(ExternalAnnotator, SecondAttemptSucceeds) {
  int calls = 0;
  FunctionCompletion svc([&](const ChatRequest& req) {
    EXPECT_EQ(req.kind, PromptKind::WordAnnotation);
    return ++calls == 1 ? std::string("hmm") : std::string("[('dog', 5)]");
  });
  const auto w = external_annotator_weights(record("1", "the cat sat", "the dog sat"), svc,
                                            AnnotatorMode::Weighted);
  EXPECT_EQ(calls, 2);
  EXPECT_DOUBLE_EQ(w.revised_weights[1], 1.3);
}

TEST(ExternalAnnotator, StubScoresNewWords) {
  StubCompletion stub(3);
  const auto w = external_annotator_weights(record("1", "the cat sat", "the dog sat down"), stub,
                                            AnnotatorMode::Binary);
  EXPECT_EQ(w.revised_weights, (Doubles{0, 1, 0, 1}));
}

TEST(Annotate, LevenshteinWithRecordNlls) {
  auto r = record("1", "the cat sat", "the dog sat down");
  r.initial_nlls = Doubles{0.1, 0.4, 2.0};
  AnnotateOptions opt;
  auto out = annotate({r}, opt);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].id, "1");
  EXPECT_EQ(out[0].query_tokens, tokenize("why is the sky blue"));
  EXPECT_EQ(out[0].weights.revised_weights, (Doubles{0, 1, 0, 1}));
  EXPECT_EQ(out[0].weights.initial_weights, (Doubles{0, 0.5, 0}));

  r.initial_nlls = Doubles{0.1, 0.9, 2.0};
  out = annotate({r}, opt);
  EXPECT_EQ(out[0].weights.initial_weights, (Doubles{0, 0, 0}));
}

TEST(Annotate, NllSourceIsConsultedOnlyWhenNeeded) {
  int calls = 0;
  AnnotateOptions opt;
  opt.nll_source = [&](const TokenSeq&, const TokenSeq& initial) {
    ++calls;
    return Doubles(initial.size(), 0.1);
  };
  const auto out = annotate({record("1", "the cat sat", "the dog sat down"),
                             record("2", "same words", "same words")},
                            opt);
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(out[0].weights.initial_weights, (Doubles{0, 0.5, 0}));
}

TEST(Annotate, MissingNllsIsAConfigError) {
  EXPECT_THROW(annotate({record("1", "the cat sat", "the dog sat")}, AnnotateOptions{}),
               ConfigError);
  AnnotateOptions opt;
  opt.weight.nll_mode = NllMode::None;
  EXPECT_NO_THROW(annotate({record("1", "the cat sat", "the dog sat")}, opt));
}

TEST(Annotate, RewardScaledUsesDatasetRanges) {
  auto lo = record("lo", "the cat sat", "the dog sat");
  lo.rewards = {-3.0, 4.0, 0.0};
  auto hi = record("hi", "the cat sat", "the dog sat");
  hi.rewards = {1.0, 4.0, 2.0};
  AnnotateOptions opt;
  opt.weight.strategy = WeightStrategy::RewardScaled;
  opt.weight.nll_mode = NllMode::None;
  const auto out = annotate({lo, hi}, opt);
  EXPECT_EQ(out[0].weights.revised_weights, (Doubles{0, 0, 0}));
  EXPECT_EQ(out[0].weights.initial_weights, (Doubles{0, 0, 0}));
  EXPECT_EQ(out[1].weights.revised_weights, (Doubles{0, 1, 0}));
  EXPECT_EQ(out[1].weights.initial_weights, (Doubles{0, 1, 0}));
}

TEST(Annotate, ExternalStrategyNeedsService) {
  AnnotateOptions opt;
  opt.weight.strategy = WeightStrategy::ExternalAnnotator;
  EXPECT_THROW(annotate({record("1", "a", "b")}, opt), ConfigError);
}

TEST(TokenNlls, UniformModelGivesLogV) {
  Vocabulary vocab;
  for (const char* t : {"a", "b", "c"}) vocab.add(t);
  const ModelParams zero(ModelDims{vocab.size(), 4, 5, 2});
  const auto nll = token_nlls(zero, vocab, {"a"}, {"b", "c"});
  ASSERT_EQ(nll.size(), 2u);
  for (double x : nll) EXPECT_NEAR(x, std::log(5.0), 1e-12);
}

}  // namespace
}  // namespace figa
