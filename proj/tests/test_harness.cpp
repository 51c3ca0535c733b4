#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "graphtts/corpus.hpp"
#include "graphtts/gradcheck.hpp"
#include "graphtts/trainer.hpp"

using namespace graphtts;

namespace {

ModelConfig tiny(ModelMode mode = ModelMode::kGraphTts) {
  ModelConfig c = toy_config();
  c.mode = mode;
  c.learning_rate = 1e-2;
  return c;
}

SyntheticCorpus tiny_corpus(std::uint64_t seed = 1) {
  CorpusConfig cc;
  cc.alphabet = U"abcdefgh";
  cc.num_utterances = 3;
  cc.max_words = 2;
  cc.max_word_length = 3;
  cc.n_mels = 4;
  return gen_corpus(cc, seed);
}

Vocab corpus_vocab(const SyntheticCorpus& c) { return Vocab::from_symbols(c.config.alphabet); }

}  // namespace

TEST(StableHash, FrozenValues) {
  EXPECT_EQ(stable_hash(U'a'), 0xe40c292cu);
  EXPECT_EQ(stable_hash(U'b'), 0xe70c2de5u);
  EXPECT_EQ(stable_hash(U'a') % 8, 4u);
  EXPECT_EQ(stable_hash(U'b') % 8, 5u);
}

TEST(RenderTarget, TwoCharacterWord) {
  const MelSpectrogram m = render_target("ab", 8);
  ASSERT_EQ(m.frames.shape(), (Shape{4, 8}));
  for (std::size_t f = 0; f < 4; ++f)
    for (std::size_t k = 0; k < 8; ++k) {
      const std::size_t bin = f < 2 ? 4 : 5;
      EXPECT_EQ(m.frames.at(f, k), k == bin ? 1.0 : 0.0) << f << "," << k;
    }
  EXPECT_EQ(m.stop, (std::vector<std::uint8_t>{0, 0, 0, 1}));
}

TEST(RenderTarget, WordBoundaryIsSilent) {
  const MelSpectrogram m = render_target("a b", 8);
  ASSERT_EQ(m.num_frames(), 5u);
  for (double v : m.frames.row(2)) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(m.frames.at(3, 5), 1.0);
  EXPECT_THROW(render_target("  ", 8), EmptyGraph);
}

TEST(GenCorpus, FrameCountProperty) {
  CorpusConfig cc;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SyntheticCorpus corpus = gen_corpus(cc, seed);
    ASSERT_EQ(corpus.utterances.size(), cc.num_utterances);
    for (const auto& u : corpus.utterances) {
      const auto words = tokenize(u.text);
      ASSERT_GE(words.size(), cc.min_words);
      ASSERT_LE(words.size(), cc.max_words);
      std::size_t chars = 0;
      for (const auto& w : words) {
        const std::size_t len = w.second - w.first;
        EXPECT_GE(len, cc.min_word_length);
        EXPECT_LE(len, cc.max_word_length);
        chars += len;
      }
      EXPECT_EQ(u.mel.num_frames(), 2 * chars + words.size() - 1) << u.text;
      EXPECT_EQ(u.mel.n_mels(), cc.n_mels);
      for (char c : u.text) EXPECT_TRUE(c == ' ' || cc.alphabet.find(char32_t(c)) != std::u32string::npos);
    }
  }
}

TEST(GenCorpus, DeterministicPerSeed) {
  CorpusConfig cc;
  EXPECT_EQ(gen_corpus(cc, 42), gen_corpus(cc, 42));
  EXPECT_NE(gen_corpus(cc, 42).texts(), gen_corpus(cc, 43).texts());
  EXPECT_EQ(corpus_to_jsonl(gen_corpus(cc, 42)), corpus_to_jsonl(gen_corpus(cc, 42)));
}

TEST(GenCorpus, TemplateBinsFollowHash) {
  const SyntheticCorpus corpus = gen_corpus(CorpusConfig{}, 0);
  for (char32_t c : corpus.config.alphabet) EXPECT_EQ(corpus.template_bins.at(c), stable_hash(c) % 8);
}

TEST(GenCorpus, JsonlShape) {
  const SyntheticCorpus corpus = tiny_corpus();
  std::istringstream in(corpus_to_jsonl(corpus));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("text").get<std::string>(), corpus.utterances[n].text);
    EXPECT_EQ(j.at("frames").size(), corpus.utterances[n].mel.num_frames());
    ++n;
  }
  EXPECT_EQ(n, corpus.utterances.size());
}

TEST(CorpusConfig, JsonRoundTrip) {
  CorpusConfig cc;
  cc.alphabet = U"xyzé";
  cc.num_utterances = 7;
  const CorpusConfig back = CorpusConfig::from_json(cc.to_json());
  EXPECT_EQ(back.alphabet, cc.alphabet);
  EXPECT_EQ(back.num_utterances, 7u);
  EXPECT_THROW(CorpusConfig::from_json(R"({"bogus": 1})"), std::invalid_argument);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParamStore ps;
  ps.add("w", Tensor::vector({1.0, -2.0, 0.5}));
  Adam opt(ps, 0.1);
  ps.grad("w") = Tensor::vector({3.0, -0.5, 0.0});
  opt.step(ps);
  EXPECT_NEAR(ps.value("w")[0], 0.9, 1e-8);
  EXPECT_NEAR(ps.value("w")[1], -1.9, 1e-8);
  EXPECT_EQ(ps.value("w")[2], 0.5);
  EXPECT_EQ(opt.steps_taken(), 1u);
}

TEST(Train, ZeroStepsGivesEmptyReport) {
  const SyntheticCorpus corpus = tiny_corpus();
  TtsModel model(tiny(), corpus_vocab(corpus));
  TrainOptions opts;
  opts.steps = 0;
  const ParamStore before = model.params();
  const TrainReport r = train(model, corpus, opts);
  EXPECT_TRUE(r.trajectory.empty());
  EXPECT_FALSE(r.steps_to_threshold);
  EXPECT_TRUE(model.params().same_values(before));
}

TEST(Train, SameSeedBitIdenticalTrajectory) {
  const SyntheticCorpus corpus = tiny_corpus();
  const SyntheticCorpus copy = corpus;
  TrainOptions opts;
  opts.steps = 15;
  for (ModelMode mode : {ModelMode::kGraphTts, ModelMode::kGae}) {
    TtsModel a(tiny(mode), corpus_vocab(corpus));
    TtsModel b(tiny(mode), corpus_vocab(corpus));
    const TrainReport ra = train(a, corpus, opts);
    const TrainReport rb = train(b, corpus, opts);
    EXPECT_EQ(ra.losses(), rb.losses());
    EXPECT_TRUE(a.params().same_values(b.params()));
    EXPECT_EQ(ra.trajectory.size(), 15u);
  }
  EXPECT_EQ(corpus, copy);
}

TEST(Train, DifferentSeedsDiffer) {
  const SyntheticCorpus corpus = tiny_corpus();
  ModelConfig c1 = tiny(), c2 = tiny();
  c2.seed = c1.seed + 1;
  TtsModel a(c1, corpus_vocab(corpus)), b(c2, corpus_vocab(corpus));
  EXPECT_FALSE(a.params().same_values(b.params()));
}

TEST(Train, LossDecreasesOnTinyCorpus) {
  const SyntheticCorpus corpus = tiny_corpus();
  TtsModel model(tiny(), corpus_vocab(corpus));
  TrainOptions opts;
  opts.steps = 60;
  const TrainReport r = train(model, corpus, opts);
  ASSERT_EQ(r.trajectory.size(), 60u);
  EXPECT_LT(r.trajectory.back().loss, r.trajectory.front().loss);
  const auto [loss, l1] = evaluate_corpus(model, corpus);
  EXPECT_LT(loss, r.trajectory.front().loss);
  EXPECT_GE(l1, 0.0);
}

TEST(Train, EarlyStopOnLooseThreshold) {
  const SyntheticCorpus corpus = tiny_corpus();
  TtsModel model(tiny(), corpus_vocab(corpus));
  TrainOptions opts;
  opts.steps = 50;
  opts.early_stop_loss = 1e9;
  const TrainReport r = train(model, corpus, opts);
  EXPECT_TRUE(r.early_stopped);
  EXPECT_EQ(r.trajectory.size(), 1u);
}

TEST(Train, NonFiniteLossRaises) {
  const SyntheticCorpus corpus = tiny_corpus();
  TtsModel model(tiny(), corpus_vocab(corpus));
  model.params().value("proj.b").fill(std::numeric_limits<double>::quiet_NaN());
  TrainOptions opts;
  opts.steps = 3;
  EXPECT_THROW(train(model, corpus, opts), DivergenceDetected);
}

TEST(Train, WritesReportAndCheckpoint) {
  const auto dir = std::filesystem::temp_directory_path() / "graphtts_train_test";
  std::filesystem::create_directories(dir);
  const SyntheticCorpus corpus = tiny_corpus();
  TtsModel model(tiny(), corpus_vocab(corpus));
  TrainOptions opts;
  opts.steps = 4;
  opts.checkpoint = dir / "model.bin";
  opts.report = dir / "report.jsonl";
  const TrainReport r = train(model, corpus, opts);

  std::ifstream in(*opts.report);
  std::string line;
  std::vector<nlohmann::json> lines;
  while (std::getline(in, line)) lines.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(lines.size(), 5u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(lines[i].at("step").get<std::size_t>(), i);
    EXPECT_EQ(lines[i].at("loss").get<double>(), r.trajectory[i].loss);
    EXPECT_TRUE(lines[i].contains("l1"));
    EXPECT_TRUE(lines[i].contains("seconds"));
  }
  EXPECT_EQ(lines[4].at("seed").get<std::uint64_t>(), model.config().seed);

  TtsModel loaded = TtsModel::load(*opts.checkpoint);
  EXPECT_TRUE(loaded.params().same_values(model.params()));
  std::filesystem::remove_all(dir);
}

TEST(Gradcheck, CoversEveryProbeWithinTolerance) {
  const GradcheckReport rep = run_gradcheck(toy_config(), 11);
  std::set<std::string> probes;
  for (const auto& e : rep.entries) probes.insert(e.probe);
  for (const char* p : {"encoder/GGNN_GRU", "encoder/GGNN_LSTM", "encoder/GCN", "model/GRAPH_TTS/GGNN_GRU",
                        "model/GRAPH_TTS/GGNN_LSTM", "model/GRAPH_TTS/GCN", "model/GAE/GGNN_GRU", "constant"})
    EXPECT_TRUE(probes.contains(p)) << p;
  EXPECT_LE(rep.max_error, 1e-4);
  EXPECT_NE(rep.table().find("max"), std::string::npos);
}

TEST(Gradcheck, RejectsLargeDimensions) {
  ModelConfig c = toy_config();
  c.d_model = 16;
  EXPECT_THROW(run_gradcheck(c, 0), ConfigError);
}

TEST(Gradcheck, ToyTextFitsLimits) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const std::string t = toy_text(s);
    EXPECT_EQ(tokenize(t).size(), 2u);
    EXPECT_LE(build_graph(t, Vocab::from_symbols(U"abcdefgh")).num_nodes(), kToyMaxNodes);
  }
}

TEST(BenchIter, DeterministicLossesPerIter) {
  const SyntheticCorpus corpus = tiny_corpus();
  const std::vector<std::size_t> iters{1, 3};
  const auto a = bench_iter(tiny(), corpus, iters, 5, 0.01);
  const auto b = bench_iter(tiny(), corpus, iters, 5, 0.01);
  ASSERT_EQ(a.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(a[i].iter, iters[i]);
    EXPECT_EQ(a[i].losses, b[i].losses);
    EXPECT_EQ(a[i].losses.size(), 5u);
    EXPECT_GT(a[i].seconds_per_step, 0.0);
  }
  EXPECT_NE(a[0].losses, a[1].losses);
}
