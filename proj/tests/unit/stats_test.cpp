#include <gtest/gtest.h>

#include "figa/error.hpp"
#include "figa/stats.hpp"
#include "figa/train.hpp"

namespace figa {
namespace {

SpaRecord rec(std::string initial, std::string revised, std::string reference, RewardTriple r,
              RevisionReason reason) {
  SpaRecord s;
  s.instance = {"id", "q", std::move(reference), "", {}};
  s.initial_response = std::move(initial);
  s.revised_response = std::move(revised);
  s.rewards = r;
  s.reason = reason;
  return s;
}

// Hand arithmetic:
//   r_initial   (-1 - 3 + 0 - 2) / 4 = -1.5
//   r_reference (4 + 3.5 + 4 + 4.5) / 4 = 4
//   r_revised   (2 + 1 + 3 + 4) / 4 = 2.5
//   ops to Y    (1 + 2 + 4 + 3) / 4 = 2.5
//   ops to Ỹ    (0 + 1 + 1 + 2) / 4 = 1
std::vector<SpaRecord> fixture() {
  return {rec("a b c", "a b c", "a b d", {-1, 4, 2}, RevisionReason::Inaccuracy),
          rec("x", "y", "y z", {-3, 3.5, 1}, RevisionReason::LackOfDetail),
          rec("p q r s", "p r s", "t u v w", {0, 4, 3}, RevisionReason::LackOfDetail),
          rec("", "m n", "m n o", {-2, 4.5, 4}, RevisionReason::Other)};
}

TEST(DatasetStats, HandBuiltFixture) {
  const auto s = dataset_stats(fixture());
  EXPECT_EQ(s.n_records, 4u);
  EXPECT_EQ(s.mean_r_initial, -1.5);
  EXPECT_EQ(s.mean_r_reference, 4.0);
  EXPECT_EQ(s.mean_r_revised, 2.5);
  EXPECT_EQ(s.mean_ops_reference, 2.5);
  EXPECT_EQ(s.mean_ops_revised, 1.0);
  EXPECT_EQ(s.reason_histogram, (std::array<std::size_t, 4>{1, 2, 0, 1}));
  const auto j = to_json(s);
  EXPECT_EQ(j["n_records"], 4);
  EXPECT_EQ(j["mean_r_initial"], -1.5);
}

TEST(DatasetStats, TwoRecordMeanAndPermutation) {
  auto f = fixture();
  f.resize(2);
  f[1].rewards.r_initial = -3;
  f[0].rewards.r_initial = -1;
  EXPECT_EQ(dataset_stats(f).mean_r_initial, -2.0);

  auto all = fixture();
  std::reverse(all.begin(), all.end());
  const auto a = dataset_stats(all);
  const auto b = dataset_stats(fixture());
  EXPECT_EQ(a.mean_r_initial, b.mean_r_initial);
  EXPECT_EQ(a.mean_ops_reference, b.mean_ops_reference);
  EXPECT_EQ(a.reason_histogram, b.reason_histogram);
}

TEST(DatasetStats, EmptyIsAnError) { EXPECT_THROW(dataset_stats({}), StatsError); }

TEST(Histogram, Examples) {
  const auto h = reward_histogram({0, 1, 2, 3}, 2);
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{2, 2}));
  EXPECT_EQ(h.bin_edges, (std::vector<double>{0, 1.5, 3}));

  const auto one = reward_histogram({2.5}, 1);
  EXPECT_EQ(one.counts, std::vector<std::size_t>{1});
  EXPECT_LT(one.bin_edges[0], one.bin_edges[1]);

  const auto edge = reward_histogram({0, 4}, 4, std::make_pair(0.0, 4.0));
  EXPECT_EQ(edge.counts, (std::vector<std::size_t>{1, 0, 0, 1}));

  EXPECT_THROW(reward_histogram({}, 3), StatsError);
  EXPECT_THROW(reward_histogram({1}, 0), StatsError);
}

TEST(Histogram, ConservesCountsWithinRange) {
  std::vector<double> scores;
  for (int i = 0; i < 97; ++i) scores.push_back(-2.0 + 0.07 * i);
  const auto h = reward_histogram(scores, 13);
  std::size_t total = 0;
  for (auto c : h.counts) total += c;
  EXPECT_EQ(total, scores.size());
  for (std::size_t i = 1; i < h.bin_edges.size(); ++i) EXPECT_LT(h.bin_edges[i - 1], h.bin_edges[i]);

  const auto clipped = reward_histogram(scores, 5, std::make_pair(0.0, 2.0));
  std::size_t inside = 0, expected = 0;
  for (auto c : clipped.counts) inside += c;
  for (double s : scores) expected += (s >= 0.0 && s <= 2.0);
  EXPECT_EQ(inside, expected);
}

TEST(Histogram, Tsv) {
  const auto text = to_tsv(reward_histogram({0, 1, 2, 3}, 2));
  EXPECT_EQ(text, "bin_start\tbin_end\tcount\n0\t1.5\t2\n1.5\t3\t2\n");
}

TEST(SpaField, Extraction) {
  const auto f = fixture();
  EXPECT_EQ(spa_field(f, "r_initial"), (std::vector<double>{-1, -3, 0, -2}));
  EXPECT_EQ(spa_field(f, "r_revised"), (std::vector<double>{2, 1, 3, 4}));
  EXPECT_THROW(spa_field(f, "r_nothing"), ConfigError);
}

struct Memorized {
  ModelParams params;
  Vocabulary vocab;
  std::vector<Instance> pool;
};

// Trains the reference model until it reproduces each reference followed by the separator.
Memorized memorize() {
  Memorized m;
  m.pool = {{"1", "alpha", "red green blue", "", {}},
            {"2", "beta", "one two", "", {}},
            {"3", "gamma", "sun moon star sky", "", {}}};
  std::vector<WeightedRecord> records;
  for (const auto& inst : m.pool) {
    WeightedRecord w;
    w.id = inst.id;
    w.query_tokens = tokenize(inst.query);
    w.revised_tokens = tokenize(inst.reference);
    w.revised_tokens.push_back(Vocabulary::kSepToken);
    w.weights.revised_weights.assign(w.revised_tokens.size(), 1.0);
    records.push_back(std::move(w));
  }
  m.vocab = vocabulary_for(records);
  std::vector<EncodedRecord> enc;
  for (const auto& r : records) enc.push_back(encode(r, m.vocab));
  TrainOptions opt;
  opt.lr = 0.5;
  opt.epochs = 300;
  m.params = train(ModelParams::random({m.vocab.size(), 8, 16, 2}, 1), enc, opt).params;
  return m;
}

TEST(EvalReward, MemorizedReferencesScoreFour) {
  const auto m = memorize();
  for (const auto& inst : m.pool)
    EXPECT_EQ(detokenize(greedy_decode(m.params, m.vocab, tokenize(inst.query))), inst.reference);
  JaccardStubReward stub;
  const auto r = eval_reward(m.params, m.vocab, m.pool, stub, {}, 2);
  EXPECT_DOUBLE_EQ(r.mean_score, 4.0);
  EXPECT_EQ(r.excluded, 0u);

  const auto again = eval_reward(m.params, m.vocab, m.pool, stub, {}, 3);
  EXPECT_EQ(again.scores, r.scores);
  EXPECT_EQ(again.responses, r.responses);
}

TEST(EvalReward, ScorerFailuresAreExcluded) {
  const auto m = memorize();
  struct Flaky final : RewardService {
    double score(const ScoreRequest& req) override {
      if (req.response.find("one") != std::string::npos) throw ServiceError("down");
      return req.response.size() % 2 == 0 ? 1.0 : 2.0;
    }
    std::string identity() const override { return "flaky"; }
  } flaky;
  const auto r = eval_reward(m.params, m.vocab, m.pool, flaky);
  EXPECT_EQ(r.excluded, 1u);
  ASSERT_FALSE(r.scores[1]);
  EXPECT_FALSE(r.errors[1].empty());
  EXPECT_EQ(r.mean_score, (*r.scores[0] + *r.scores[2]) / 2.0);
}

TEST(EvalReward, Errors) {
  const auto m = memorize();
  JaccardStubReward stub;
  EXPECT_ANY_THROW(eval_reward(m.params, m.vocab, {}, stub));
}

TEST(GreedyDecode, RespectsTokenCap) {
  const ModelParams zero(ModelDims{5, 2, 2, 2});
  Vocabulary v;
  for (const char* t : {"a", "b", "c"}) v.add(t);
  // Uniform logits: argmax picks the first non-BOS id, the separator, so decoding stops at once.
  EXPECT_TRUE(greedy_decode(zero, v, {"a"}).empty());
  ModelParams p(ModelDims{5, 2, 2, 2});
  p.b2()[3] = 1.0;
  EXPECT_EQ(greedy_decode(p, v, {"a"}, {7}).size(), 7u);
}

}  // namespace
}  // namespace figa
