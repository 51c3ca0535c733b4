#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "graphtts/fd_check.hpp"
#include "graphtts/gnn_encoder.hpp"
#include "oracles.hpp"

using namespace graphtts;

namespace {

const Vocab& vocab() {
  static const Vocab v = Vocab::from_symbols(U"abcdefghijklmnopqrstuvwxyz.,!é");
  return v;
}

GraphEncoderConfig toy(EncoderKind kind, std::size_t iter = 2, std::size_t dim = 4) {
  GraphEncoderConfig c;
  c.kind = kind;
  c.vocab_size = vocab().size();
  c.dim = dim;
  c.out_dim = dim + 1;
  c.iter = iter;
  c.prefix = "enc";
  return c;
}

ParamStore make_params(const GraphEncoderConfig& cfg, std::uint64_t seed, bool random_biases = true) {
  ParamStore ps;
  std::mt19937_64 rng(seed);
  init_graph_encoder(ps, cfg, rng);
  if (random_biases) {
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (auto& [name, p] : ps)
      if (name.ends_with(".b") || name.find(".b_") != std::string::npos)
        for (auto& v : p.value.data()) v = u(rng);
  }
  return ps;
}

Tensor random_states(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  Tensor t({n, d});
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

const std::array<EncoderKind, 3> kKinds = {EncoderKind::kGgnnGru, EncoderKind::kGgnnLstm, EncoderKind::kGcn};

/// Propagated states (no output model) from explicit initial states.
Tensor run_propagate(const CharGraph& g, const Tensor& init, ParamStore& ps, const GraphEncoderConfig& cfg,
                     std::size_t iter) {
  Tape tape(GradMode::kDisabled);
  auto vars = GraphEncoderVars::bind(tape, ps, cfg);
  return propagate(g, tape.constant(init), vars, iter).value();
}

}  // namespace

TEST(EmbedNodes, LooksUpRows) {
  const CharGraph g = build_graph("hih", vocab());
  std::mt19937_64 rng(1);
  const Tensor table = random_states(vocab().size(), 3, rng);
  Tape tape;
  const Tensor out = embed_nodes(g, tape.constant(table)).value();
  const auto h = *vocab().find(U'h');
  const auto i = *vocab().find(U'i');
  EXPECT_TRUE(std::equal(out.row(0).begin(), out.row(0).end(), table.row(h).begin()));
  EXPECT_TRUE(std::equal(out.row(1).begin(), out.row(1).end(), table.row(i).begin()));
  EXPECT_TRUE(std::equal(out.row(0).begin(), out.row(0).end(), out.row(2).begin()));

  const Tensor zeros = embed_nodes(g, tape.constant(Tensor({vocab().size(), 3}))).value();
  EXPECT_EQ(zeros, Tensor({3, 3}));
  EXPECT_THROW(embed_nodes(g, tape.constant(Tensor({2, 3}))), IndexOutOfVocabulary);
}

TEST(AggregateMessages, ZeroWeightsGiveZero) {
  const CharGraph g = build_graph("ab cd", vocab());
  Tape tape;
  MessageWeights mw;
  for (std::size_t k = 0; k < kNumEdgeTypes; ++k) {
    mw.w[k] = tape.constant(Tensor({3, 3}));
    mw.b[k] = tape.constant(Tensor({3}));
  }
  std::mt19937_64 rng(2);
  EXPECT_EQ(aggregate_messages(tape.constant(random_states(4, 3, rng)), g, mw).value(), Tensor({4, 3}));
}

TEST(AggregateMessages, IdentityAlongOneEdge) {
  const CharGraph g = build_graph("hi", vocab());
  Tape tape;
  MessageWeights mw;
  for (std::size_t k = 0; k < kNumEdgeTypes; ++k) {
    mw.w[k] = tape.constant(k == 0 ? Tensor::identity(2) : Tensor({2, 2}));
    mw.b[k] = tape.constant(Tensor({2}));
  }
  const Tensor x = Tensor::matrix({{0.25, -2.0}, {7.0, 9.0}});
  const Tensor out = aggregate_messages(tape.constant(x), g, mw).value();
  EXPECT_EQ(out, Tensor::matrix({{0, 0}, {0.25, -2.0}}));
}

TEST(AggregateMessages, HandMultipliedExample) {
  const CharGraph g = build_graph("hi", vocab());
  Tape tape;
  MessageWeights mw;
  mw.w[0] = tape.constant(Tensor::matrix({{1, 1}, {0, 1}}));
  mw.w[1] = tape.constant(Tensor({2, 2}));
  mw.w[2] = tape.constant(Tensor({2, 2}));
  for (auto& b : mw.b) b = tape.constant(Tensor({2}));
  const Tensor out = aggregate_messages(tape.constant(Tensor::identity(2)), g, mw).value();
  EXPECT_EQ(out, Tensor::matrix({{0, 0}, {1, 0}}));
}

TEST(GgnnStep, ZeroWeightsHalveState) {
  const auto cfg = toy(EncoderKind::kGgnnGru);
  ParamStore ps = make_params(cfg, 3, false);
  for (auto& [name, p] : ps)
    if (name.find(".gru.") != std::string::npos) p.value.fill(0.0);
  std::mt19937_64 rng(4);
  const Tensor h = random_states(3, 4, rng);
  Tape tape;
  auto vars = GraphEncoderVars::bind(tape, ps, cfg);
  const Tensor out = ggnn_step({tape.constant(h), {}}, tape.constant(random_states(3, 4, rng)), vars).h.value();
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_DOUBLE_EQ(out[i], 0.5 * h[i]);
}

TEST(GgnnStep, ClosedUpdateGateKeepsState) {
  const auto cfg = toy(EncoderKind::kGgnnGru);
  ParamStore ps = make_params(cfg, 5, false);
  ps.value("enc.gru.b_z").fill(-20.0);
  std::mt19937_64 rng(6);
  const Tensor h = random_states(3, 4, rng);
  Tape tape;
  auto vars = GraphEncoderVars::bind(tape, ps, cfg);
  const Tensor out = ggnn_step({tape.constant(h), {}}, tape.constant(Tensor({3, 4})), vars).h.value();
  EXPECT_LE(max_abs_diff(out, h), 1e-3);
}

TEST(GgnnStep, RejectsMismatchedMessages) {
  const auto cfg = toy(EncoderKind::kGgnnGru);
  ParamStore ps = make_params(cfg, 5);
  Tape tape;
  auto vars = GraphEncoderVars::bind(tape, ps, cfg);
  EXPECT_THROW(ggnn_step({tape.constant(Tensor({3, 4})), {}}, tape.constant(Tensor({2, 4})), vars), ShapeMismatch);
}

TEST(GgnnStep, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(7);
  for (EncoderKind kind : {EncoderKind::kGgnnGru, EncoderKind::kGgnnLstm}) {
    const auto cfg = toy(kind);
    ParamStore ps = make_params(cfg, 8);
    ps.add("h", random_states(3, 4, rng));
    ps.add("a", random_states(3, 4, rng));
    ps.add("c", random_states(3, 4, rng));
    const Tensor probe = random_states(3, 4, rng);
    LossFn f = [&](Tape& t, ParamStore& p) {
      auto vars = GraphEncoderVars::bind(t, p, cfg);
      GatedState s{t.param(p, "h"), kind == EncoderKind::kGgnnLstm ? t.param(p, "c") : Var{}};
      return ops::sum(ops::mul(ggnn_step(s, t.param(p, "a"), vars).h, t.constant(probe)));
    };
    // Parameters bound but unused by a single step (out.*, msg.*) have zero
    // gradient both ways.
    EXPECT_LE(fd_check(f, ps).max_error, 1e-4) << encoder_kind_name(kind);
  }
}

TEST(GcnLayer, EdgelessIdentityAndZero) {
  const CharGraph g = build_graph("a", vocab());
  Tape tape;
  GcnLayer layer;
  layer.w_self = tape.constant(Tensor::identity(3));
  for (auto& w : layer.messages.w) w = tape.constant(Tensor({3, 3}));
  layer.b = tape.constant(Tensor({3}));
  const Tensor x = Tensor::matrix({{0.5, 0.0, 2.0}});
  EXPECT_EQ(gcn_layer(tape.constant(x), g, layer).value(), x);

  const CharGraph g2 = build_graph("ab c", vocab());
  layer.w_self = tape.constant(Tensor({3, 3}));
  std::mt19937_64 rng(9);
  EXPECT_EQ(gcn_layer(tape.constant(random_states(3, 3, rng)), g2, layer).value(), Tensor({3, 3}));
}

TEST(GcnLayer, MeanNormalisesIncomingMessages) {
  // Node 1 of "abc" receives DIRECTED from 0 and REVERSE from 2.
  const CharGraph g = build_graph("abc", vocab());
  Tape tape;
  GcnLayer layer;
  layer.w_self = tape.constant(Tensor({1, 1}));
  for (auto& w : layer.messages.w) w = tape.constant(Tensor::identity(1));
  layer.b = tape.constant(Tensor({1}));
  const Tensor out = gcn_layer(tape.constant(Tensor::matrix({{2.0}, {5.0}, {6.0}})), g, layer).value();
  EXPECT_EQ(out, Tensor::matrix({{5.0}, {4.0}, {5.0}}));
}

TEST(Propagate, ZeroIterationsIsIdentity) {
  const CharGraph g = build_graph("ab cd", vocab());
  std::mt19937_64 rng(10);
  const Tensor init = random_states(4, 4, rng);
  for (EncoderKind kind : kKinds) {
    const auto cfg = toy(kind);
    ParamStore ps = make_params(cfg, 11);
    EXPECT_EQ(run_propagate(g, init, ps, cfg, 0), init);
  }
}

TEST(Propagate, ChainReceptiveField) {
  const CharGraph g = build_graph("abcd", vocab());
  std::mt19937_64 rng(12);
  const Tensor init = random_states(4, 4, rng);
  Tensor perturbed = init;
  for (std::size_t c = 0; c < 4; ++c) perturbed.at(0, c) += 0.5;
  for (EncoderKind kind : kKinds) {
    const auto cfg = toy(kind, 3);
    ParamStore ps = make_params(cfg, 13);
    const Tensor a1 = run_propagate(g, init, ps, cfg, 1);
    const Tensor b1 = run_propagate(g, perturbed, ps, cfg, 1);
    auto row_equal = [](const Tensor& x, const Tensor& y, std::size_t r) {
      return std::equal(x.row(r).begin(), x.row(r).end(), y.row(r).begin());
    };
    EXPECT_FALSE(row_equal(a1, b1, 0)) << encoder_kind_name(kind);
    EXPECT_FALSE(row_equal(a1, b1, 1)) << encoder_kind_name(kind);
    EXPECT_TRUE(row_equal(a1, b1, 2)) << encoder_kind_name(kind);
    EXPECT_TRUE(row_equal(a1, b1, 3)) << encoder_kind_name(kind);

    const Tensor a3 = run_propagate(g, init, ps, cfg, 3);
    const Tensor b3 = run_propagate(g, perturbed, ps, cfg, 3);
    EXPECT_FALSE(row_equal(a3, b3, 3)) << encoder_kind_name(kind);
  }
}

TEST(Propagate, GcnNeedsEnoughLayers) {
  const auto cfg = toy(EncoderKind::kGcn, 2);
  ParamStore ps = make_params(cfg, 14);
  const CharGraph g = build_graph("ab", vocab());
  EXPECT_THROW(run_propagate(g, Tensor({2, 4}), ps, cfg, 3), std::invalid_argument);
}

TEST(OutputModel, ZeroAndRange) {
  std::mt19937_64 rng(15);
  Tape tape;
  const Tensor h = random_states(5, 4, rng);
  EXPECT_EQ(output_model(tape.constant(h), tape.constant(Tensor({3, 4})), tape.constant(Tensor({3}))).value(),
            Tensor({5, 3}));
  Tensor w = random_states(3, 4, rng);
  for (auto& v : w.data()) v *= 10.0;
  const Tensor out = output_model(tape.constant(h), tape.constant(w), tape.constant(Tensor({3}))).value();
  for (double v : out.data()) {
    EXPECT_GT(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
  EXPECT_THROW(output_model(tape.constant(h), tape.constant(Tensor({3, 5})), tape.constant(Tensor({3}))),
               ShapeMismatch);
}

TEST(OutputModel, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(16);
  ParamStore ps;
  ps.add("h", random_states(4, 3, rng));
  ps.add("W", random_states(2, 3, rng));
  ps.add("b", random_states(1, 2, rng).reshaped({2}));
  const Tensor probe = random_states(4, 2, rng);
  LossFn f = [&](Tape& t, ParamStore& p) {
    return ops::sum(ops::mul(output_model(t.param(p, "h"), t.param(p, "W"), t.param(p, "b")), t.constant(probe)));
  };
  EXPECT_LE(fd_check(f, ps).max_error, 1e-4);
}

TEST(Encoder, SequentialWeightsUnusedOnSingleWord) {
  const CharGraph g = build_graph("abcde", vocab());
  for (EncoderKind kind : kKinds) {
    const auto cfg = toy(kind);
    ParamStore ps = make_params(cfg, 17);
    auto run = [&] {
      Tape tape(GradMode::kDisabled);
      return encode_graph(g, GraphEncoderVars::bind(tape, ps, cfg)).value();
    };
    const Tensor before = run();
    for (auto& [name, p] : ps)
      if (name.find("sequential") != std::string::npos) p.value.fill(0.0);
    EXPECT_EQ(run(), before) << encoder_kind_name(kind);
  }
}

TEST(Encoder, RelabelingIsEquivariant) {
  std::mt19937_64 rng(18);
  for (EncoderKind kind : kKinds) {
    const auto cfg = toy(kind, 2);
    ParamStore ps = make_params(cfg, 19);
    for (int trial = 0; trial < 10; ++trial) {
      const CharGraph g = build_graph(oracle::random_text(rng, 3, 3), vocab());
      std::vector<std::size_t> perm(g.num_nodes());
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      const CharGraph pg = oracle::permute_graph(g, perm);
      Tape tape(GradMode::kDisabled);
      auto vars = GraphEncoderVars::bind(tape, ps, cfg);
      const Tensor out = encode_graph(g, vars).value();
      const Tensor pout = encode_graph(pg, vars).value();
      for (std::size_t i = 0; i < g.num_nodes(); ++i)
        for (std::size_t c = 0; c < out.cols(); ++c) EXPECT_NEAR(pout.at(perm[i], c), out.at(i, c), 1e-10);
    }
  }
}

TEST(Encoder, FullEncoderGradients) {
  std::mt19937_64 rng(20);
  for (EncoderKind kind : kKinds) {
    for (std::size_t iter : {1u, 2u}) {
      const auto cfg = toy(kind, iter, 5);
      ParamStore ps = make_params(cfg, 21 + iter);
      const CharGraph g = build_graph("ab cde", vocab());
      const Tensor probe = random_states(g.num_nodes(), cfg.out_dim, rng);
      LossFn f = [&](Tape& t, ParamStore& p) {
        return ops::sum(ops::mul(encode_graph(g, GraphEncoderVars::bind(t, p, cfg)), t.constant(probe)));
      };
      EXPECT_LE(fd_check(f, ps).max_error, 1e-4) << encoder_kind_name(kind) << " iter " << iter;
    }
  }
}

TEST(EncoderKind, NamesRoundTrip) {
  for (EncoderKind k : kKinds) EXPECT_EQ(parse_encoder_kind(encoder_kind_name(k)), k);
  EXPECT_FALSE(parse_encoder_kind("GAT"));
}
