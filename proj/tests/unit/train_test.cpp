#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "figa/error.hpp"
#include "figa/synth.hpp"
#include "figa/train.hpp"

namespace figa {
namespace {

namespace fs = std::filesystem;

fs::path tmp(const std::string& name) {
  const fs::path dir = fs::path(FIGA_TEST_TMPDIR) / "train";
  fs::create_directories(dir);
  return dir / name;
}

struct Fixture {
  SynthCorpus corpus;
  std::vector<EncodedRecord> encoded;
  ModelDims dims;
};

Fixture small_corpus(std::uint64_t seed = 1) {
  SynthSpec spec;
  spec.vocab_size = 6;
  spec.n_instances = 12;
  spec.min_len = 3;
  spec.max_len = 5;
  spec.seed = seed;
  WeightConfig cfg;
  cfg.nll_mode = NllMode::None;
  Fixture f{synth_corpus(spec, cfg), {}, {}};
  for (const auto& r : f.corpus.records) f.encoded.push_back(encode(r, f.corpus.vocab));
  f.dims = {f.corpus.vocab.size(), 4, 6, 2};
  return f;
}

TEST(Train, SameSeedIsBitwiseIdentical) {
  const auto f = small_corpus();
  TrainOptions opt;
  opt.epochs = 3;
  opt.seed = 4;
  const auto a = train(ModelParams::random(f.dims, 4), f.encoded, opt);
  const auto b = train(ModelParams::random(f.dims, 4), f.encoded, opt);
  EXPECT_EQ(a.params, b.params);
  ASSERT_EQ(a.trace.size(), 3u);
  EXPECT_EQ(a.trace.back().loss.total, b.trace.back().loss.total);
  opt.seed = 5;
  EXPECT_NE(train(ModelParams::random(f.dims, 4), f.encoded, opt).params, a.params);
}

TEST(Train, ZeroLearningRateLeavesParamsUnchanged) {
  const auto f = small_corpus();
  TrainOptions opt;
  opt.lr = 0;
  opt.epochs = 2;
  const auto init = ModelParams::random(f.dims, 2);
  EXPECT_EQ(train(init, f.encoded, opt).params, init);
}

TEST(Train, SftLossFallsOverEpochs) {
  auto f = small_corpus();
  for (auto& r : f.encoded) {
    std::fill(r.revised_weights.begin(), r.revised_weights.end(), 1.0);
    std::fill(r.initial_weights.begin(), r.initial_weights.end(), 0.0);
  }
  TrainOptions opt;
  opt.epochs = 40;
  const auto res = train(ModelParams::random(f.dims, 3), f.encoded, opt);
  ASSERT_EQ(res.trace.size(), 40u);
  EXPECT_EQ(res.trace.front().epoch, 1u);
  EXPECT_LT(res.trace.back().loss.total, 0.8 * res.trace.front().loss.total);
}

// Encourage-only weighting at a small step: the encourage term should fall almost every epoch.
TEST(Train, EncourageTermMostlyNonIncreasing) {
  SynthSpec spec;
  spec.seed = 1;
  WeightConfig cfg;
  cfg.nll_mode = NllMode::None;
  cfg.beta = 0.0;
  const auto c = synth_corpus(spec, cfg);
  std::vector<EncodedRecord> data;
  for (const auto& r : c.records) data.push_back(encode(r, c.vocab));
  TrainOptions o;
  o.seed = 1;
  o.lr = 0.01;
  const auto r = train(ModelParams::random({c.vocab.size(), 16, 32, 2}, 1), data, o);
  std::size_t down = 0;
  for (std::size_t i = 1; i < r.trace.size(); ++i)
    down += r.trace[i].loss.encourage_term <= r.trace[i - 1].loss.encourage_term;
  EXPECT_GE(static_cast<double>(down), 0.9 * static_cast<double>(r.trace.size() - 1));
}

TEST(Train, BatchesAndClippingStayFinite) {
  const auto f = small_corpus();
  TrainOptions opt;
  opt.epochs = 2;
  opt.batch_size = 5;
  opt.clip = 0.01;
  const auto res = train(ModelParams::random(f.dims, 3), f.encoded, opt);
  EXPECT_TRUE(res.params.all_finite());
}

TEST(Train, DivergenceNamesEpochAndRecord) {
  auto f = small_corpus();
  f.encoded[0].revised_weights[0] = std::numeric_limits<double>::infinity();
  TrainOptions opt;
  opt.epochs = 1;
  try {
    train(ModelParams::random(f.dims, 3), f.encoded, opt);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("epoch 1"), std::string::npos) << what;
    EXPECT_NE(what.find(f.encoded[0].id), std::string::npos) << what;
  }
}

TEST(SeededShuffle, IsAPermutationAndSeedStable) {
  std::vector<std::size_t> a(50), b(50);
  std::iota(a.begin(), a.end(), 0);
  b = a;
  seeded_shuffle(a, 17);
  seeded_shuffle(b, 17);
  EXPECT_EQ(a, b);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) EXPECT_EQ(sorted[i], i);
}

TEST(Checkpoint, RoundTripIsExact) {
  const auto p = ModelParams::random(ModelDims{9, 3, 5, 2}, 12, 3.0);
  const auto path = tmp("ckpt.bin");
  save_checkpoint(path, p);
  EXPECT_EQ(fs::file_size(path), 4 * 8 + p.flat().size() * 8);
  EXPECT_EQ(load_checkpoint(path), p);

  std::ifstream in(path, std::ios::binary);
  unsigned char header[8];
  in.read(reinterpret_cast<char*>(header), 8);
  EXPECT_EQ(header[0], 9);
  for (int i = 1; i < 8; ++i) EXPECT_EQ(header[i], 0);
}

TEST(Checkpoint, RejectsTruncatedAndPaddedFiles) {
  const auto p = ModelParams::random(ModelDims{9, 3, 5, 2}, 12);
  const auto path = tmp("bad.bin");
  save_checkpoint(path, p);
  fs::resize_file(path, fs::file_size(path) - 3);
  EXPECT_ANY_THROW(load_checkpoint(path));
  save_checkpoint(path, p);
  { std::ofstream(path, std::ios::binary | std::ios::app) << "x"; }
  EXPECT_ANY_THROW(load_checkpoint(path));
  EXPECT_ANY_THROW(load_checkpoint(tmp("missing.bin")));
}

TEST(Manifest, RoundTrip) {
  const CheckpointManifest m{42, "00ff00ff00ff00ff", "figa", {"<bos>", "<sep>", "a b", "c=d"}};
  const auto path = tmp("m.manifest");
  save_manifest(path, m);
  const auto back = load_manifest(path);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.config_hash, m.config_hash);
  EXPECT_EQ(back.baseline, "figa");
  EXPECT_EQ(back.vocabulary, m.vocabulary);
  EXPECT_EQ(manifest_path("x/y.ckpt"), fs::path("x/y.ckpt.manifest"));
}

TEST(WeightedRecords, FileRoundTrip) {
  const auto f = small_corpus();
  const auto path = tmp("weighted.jsonl");
  write_weighted_records(path, f.corpus.records);
  const auto back = read_weighted_records(path);
  ASSERT_EQ(back.size(), f.corpus.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].id, f.corpus.records[i].id);
    EXPECT_EQ(back[i].revised_tokens, f.corpus.records[i].revised_tokens);
    EXPECT_EQ(back[i].initial_tokens, f.corpus.records[i].initial_tokens);
    EXPECT_EQ(back[i].weights.revised_weights, f.corpus.records[i].weights.revised_weights);
    EXPECT_EQ(back[i].weights.initial_weights, f.corpus.records[i].weights.initial_weights);
  }
  EXPECT_EQ(vocabulary_for(back).tokens(), vocabulary_for(f.corpus.records).tokens());
}

}  // namespace
}  // namespace figa
