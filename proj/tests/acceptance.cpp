// Acceptance checks. Prints one PASS/FAIL line per check; exit status is the
// number of failures. With arguments, runs only the named checks.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "graphtts/corpus.hpp"
#include "graphtts/gradcheck.hpp"
#include "graphtts/trainer.hpp"
#include "oracles.hpp"

using namespace graphtts;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

const Vocab& latin() {
  static const Vocab v = Vocab::from_symbols(U"abcdefghijklmnopqrstuvwxyz.,!é");
  return v;
}

GraphEncoderConfig encoder_config(EncoderKind kind, std::size_t iter) {
  GraphEncoderConfig c;
  c.kind = kind;
  c.vocab_size = latin().size();
  c.dim = 8;
  c.out_dim = 8;
  c.iter = iter;
  return c;
}

ParamStore encoder_params(const GraphEncoderConfig& cfg, std::uint64_t seed) {
  ParamStore ps;
  std::mt19937_64 rng(seed);
  init_graph_encoder(ps, cfg, rng);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (auto& [name, p] : ps)
    for (auto& v : p.value.data()) v += u(rng);
  return ps;
}

// Settings shared by the training checks.
ModelConfig training_config(EncoderKind kind, ModelMode mode) {
  ModelConfig c;
  c.encoder_kind = kind;
  c.mode = mode;
  c.d_model = 32;
  c.d_gae = 16;
  c.iter = 1;
  c.n_mels = 8;
  c.prenet_dim = 32;
  c.decoder_dim = 64;
  c.attention_dim = 32;
  c.learning_rate = 1e-2;
  return c;
}

const SyntheticCorpus& training_corpus() {
  static const SyntheticCorpus c = gen_corpus(CorpusConfig{}, 1);
  return c;
}

Outcome graph_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::size_t mismatches = 0, count_errors = 0, total_edges = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::string text = oracle::random_text(rng);
    const CharGraph g = build_graph(text, latin());
    if (oracle::edge_set(g) != oracle::brute_force_edges(text)) ++mismatches;
    if (g.edges.size() != 2 * (g.num_nodes() - 1)) ++count_errors;
    total_edges += g.edges.size();
  }
  const double secs = since(t0);
  return {mismatches == 0 && count_errors == 0 && secs < 5.0,
          fmt("1000 texts, %zu edges, %zu edge-set mismatches, %zu E != 2(N-1), %.2f s (limit 5 s)", total_edges,
              mismatches, count_errors, secs)};
}

Outcome gradient_fidelity() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_where;
  std::size_t entries = 0;
  for (EncoderKind kind : {EncoderKind::kGgnnGru, EncoderKind::kGgnnLstm, EncoderKind::kGcn}) {
    ModelConfig c = toy_config();
    c.encoder_kind = kind;
    const GradcheckReport rep = run_gradcheck(c, 0);
    entries += rep.entries.size();
    for (const auto& e : rep.entries) {
      if (e.error >= worst) {
        worst = e.error;
        worst_where = e.probe + " " + e.param;
      }
    }
  }
  const double secs = since(t0);
  return {worst <= 1e-4 && secs < 120.0,
          fmt("%zu parameter tensors over encoders, GRAPH_TTS and GAE models, max rel error %.2e at %s, %.1f s "
              "(limits 1e-4, 120 s)",
              entries, worst, worst_where.c_str(), secs)};
}

Outcome receptive_field() {
  const CharGraph chain = build_graph("abcdefgh", latin());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::size_t cases = 0, violations = 0;
  for (EncoderKind kind : {EncoderKind::kGgnnGru, EncoderKind::kGgnnLstm, EncoderKind::kGcn}) {
    for (std::size_t iter : {1u, 2u, 3u}) {
      const auto cfg = encoder_config(kind, iter);
      ParamStore ps = encoder_params(cfg, 100 + iter);
      Tape tape(GradMode::kDisabled);
      auto vars = GraphEncoderVars::bind(tape, ps, cfg);
      const Tensor initial = embed_nodes(chain, vars.embedding).value();
      Tensor bumped = initial;
      for (double& v : bumped.row(0)) v += u(rng);
      auto run = [&](const Tensor& x) {
        return output_model(propagate(chain, tape.constant(x), vars, iter), vars.out_w, vars.out_b).value();
      };
      const Tensor a = run(initial), b = run(bumped);
      for (std::size_t v = 0; v < chain.num_nodes(); ++v) {
        bool same = true;
        for (std::size_t c = 0; c < a.cols(); ++c) same = same && a.at(v, c) == b.at(v, c);
        if (same != (v > iter)) ++violations;
      }
      ++cases;
    }
  }
  return {violations == 0, fmt("8-node chain, %zu (kind, iter) cases, %zu rows changed or unchanged wrongly", cases,
                               violations)};
}

Outcome relabel_equivariance() {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  for (EncoderKind kind : {EncoderKind::kGgnnGru, EncoderKind::kGgnnLstm, EncoderKind::kGcn}) {
    const auto cfg = encoder_config(kind, 2);
    ParamStore ps = encoder_params(cfg, 200 + static_cast<int>(kind));
    for (int trial = 0; trial < 100; ++trial) {
      const CharGraph g = build_graph(oracle::random_text(rng), latin());
      std::vector<std::size_t> perm(g.num_nodes());
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      const CharGraph pg = oracle::permute_graph(g, perm);
      Tape tape(GradMode::kDisabled);
      auto vars = GraphEncoderVars::bind(tape, ps, cfg);
      const Tensor out = encode_graph(g, vars).value();
      const Tensor pout = encode_graph(pg, vars).value();
      for (std::size_t i = 0; i < g.num_nodes(); ++i)
        for (std::size_t c = 0; c < out.cols(); ++c)
          worst = std::max(worst, std::abs(pout.at(perm[i], c) - out.at(i, c)));
    }
  }
  return {worst <= 1e-10, fmt("100 random graphs x 3 encoder kinds, max |diff| %.2e (limit 1e-10)", worst)};
}

Outcome overfit() {
  const std::pair<EncoderKind, ModelMode> runs[] = {{EncoderKind::kGgnnGru, ModelMode::kGraphTts},
                                                     {EncoderKind::kGgnnLstm, ModelMode::kGraphTts},
                                                     {EncoderKind::kGcn, ModelMode::kGraphTts},
                                                     {EncoderKind::kGgnnGru, ModelMode::kGae}};
  const SyntheticCorpus& corpus = training_corpus();
  bool pass = true;
  std::string detail = fmt("%zu utterances;", corpus.utterances.size());
  for (const auto& [kind, mode] : runs) {
    TtsModel model(training_config(kind, mode), Vocab::from_texts(corpus.texts()));
    TrainOptions opts;
    opts.steps = 5000;
    opts.early_stop_l1 = 0.01;
    const auto t0 = Clock::now();
    const TrainReport rep = train(model, corpus, opts);
    const double secs = since(t0);
    const bool ok = rep.steps_to_threshold.has_value() && secs < 600.0;
    pass = pass && ok;
    detail += fmt(" %s/%s %s L1 %.4f in %.0f s;", std::string(model_mode_name(mode)).c_str(),
                  std::string(encoder_kind_name(kind)).c_str(),
                  rep.steps_to_threshold ? ("step " + std::to_string(*rep.steps_to_threshold)).c_str()
                                         : "not reached, final",
                  rep.trajectory.back().l1, secs);
  }
  detail += " (limits L1 < 0.01 within 5000 steps, 600 s per run)";
  return {pass, detail};
}

Outcome iter_cost() {
  const std::vector<std::size_t> iters{1, 2, 3, 4, 5};
  const auto rows = bench_iter(training_config(EncoderKind::kGgnnGru, ModelMode::kGraphTts), training_corpus(), iters,
                               5000, 0.01);
  bool increasing = true;
  std::string detail = "GGNN_GRU sec/step (steps to L1 < 0.01):";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && !(rows[i].seconds_per_step > rows[i - 1].seconds_per_step)) increasing = false;
    detail += fmt(" iter %zu %.4f (%s);", rows[i].iter, rows[i].seconds_per_step,
                  rows[i].steps_to_threshold ? std::to_string(*rows[i].steps_to_threshold).c_str() : "none");
  }
  detail += increasing ? " strictly increasing" : " NOT strictly increasing";
  return {increasing, detail};
}

Outcome determinism() {
  std::vector<std::string> failures;
  const SyntheticCorpus& corpus = training_corpus();
  const Vocab vocab = Vocab::from_texts(corpus.texts());
  TrainOptions opts;
  opts.steps = 20;
  for (ModelMode mode : {ModelMode::kGraphTts, ModelMode::kGae}) {
    const ModelConfig c = training_config(EncoderKind::kGgnnLstm, mode);
    TtsModel a(c, vocab), b(c, vocab);
    const auto la = train(a, corpus, opts).losses();
    const auto lb = train(b, corpus, opts).losses();
    if (la != lb) failures.push_back(std::string(model_mode_name(mode)) + " trajectories differ");

    const auto path = std::filesystem::temp_directory_path() / "graphtts_acceptance.bin";
    a.save(path);
    const TtsModel loaded = TtsModel::load(path);
    for (const auto& u : corpus.utterances) {
      const SynthesisResult x = a.synthesize(u.text), y = loaded.synthesize(u.text);
      if (!(x.mel == y.mel) || x.attention.weights != y.attention.weights) {
        failures.push_back(std::string(model_mode_name(mode)) + " reloaded outputs differ");
        break;
      }
    }
    if (evaluate_corpus(a, corpus) != evaluate_corpus(loaded, corpus))
      failures.push_back(std::string(model_mode_name(mode)) + " reloaded loss differs");
    std::filesystem::remove(path);
    std::filesystem::remove(manifest_path(path));
  }
  auto read = [](const char* name) {
    std::ifstream in(std::string(GRAPHTTS_TEST_DATA) + "/golden/" + name, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  };
  const CharGraph g = build_graph("ab cd", latin());
  if (export_dot(g) != read("ab_cd.dot")) failures.push_back("DOT differs from golden");
  if (serialize_graph(g) != read("ab_cd.json")) failures.push_back("JSON differs from golden");
  std::string detail = "two-run trajectories, checkpoint reload, golden DOT/JSON:";
  if (failures.empty()) detail += " all bit-identical";
  for (const auto& f : failures) detail += " " + f + ";";
  return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
      {"graph_oracle", graph_oracle},       {"gradient_fidelity", gradient_fidelity},
      {"receptive_field", receptive_field}, {"relabel_equivariance", relabel_equivariance},
      {"overfit", overfit},                 {"iter_cost", iter_cost},
      {"determinism", determinism},
  };
  std::vector<std::string> wanted(argv + 1, argv + argc);
  for (const auto& w : wanted) {
    if (std::none_of(checks.begin(), checks.end(), [&](const auto& c) { return c.first == w; })) {
      std::fprintf(stderr, "unknown check '%s'\n", w.c_str());
      return 2;
    }
  }
  int failures = 0;
  for (const auto& [name, fn] : checks) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), name) == wanted.end()) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures;
}
