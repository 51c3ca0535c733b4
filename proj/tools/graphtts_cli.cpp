#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "graphtts/checkpoint.hpp"
#include "graphtts/corpus.hpp"
#include "graphtts/gradcheck.hpp"
#include "graphtts/trainer.hpp"

using namespace graphtts;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;

  ModelConfig model_config(ModelConfig base = {}) const {
    ModelConfig c = config_path.empty() ? base : ModelConfig::from_json(read_file(config_path));
    if (seed) c.seed = *seed;
    c.validate();
    return c;
  }
  std::uint64_t seed_or(std::uint64_t fallback) const { return seed.value_or(fallback); }
};

struct CorpusArgs {
  std::string config_path;
  std::optional<std::size_t> utterances;

  void add(CLI::App* app) {
    app->add_option("--corpus-config", config_path, "JSON corpus settings");
    app->add_option("--utterances", utterances, "number of utterances");
  }
  CorpusConfig get(std::size_t n_mels) const {
    CorpusConfig cc = config_path.empty() ? CorpusConfig{} : CorpusConfig::from_json(read_file(config_path));
    if (config_path.empty()) cc.n_mels = n_mels;
    if (utterances) cc.num_utterances = *utterances;
    return cc;
  }
};

void print_graph_summary(const CharGraph& g) {
  std::printf("nodes %zu edges %zu", g.num_nodes(), g.edges.size());
  for (EdgeType t : kEdgeTypes) std::printf(" %s %zu", std::string(edge_type_name(t)).c_str(), g.edges.count(t));
  std::printf("\n");
}

void write_csv(const std::string& path, const MelSpectrogram& mel) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(17);
  for (std::size_t f = 0; f < mel.num_frames(); ++f) {
    for (std::size_t k = 0; k < mel.n_mels(); ++k) out << (k ? "," : "") << mel.frames.at(f, k);
    out << "," << int(mel.stop[f]) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"character graph TTS toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "model config JSON")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "RNG seed");

  // build-graph
  auto* bg = app.add_subcommand("build-graph", "build the character graph of a text");
  std::string bg_text, bg_dot, bg_json;
  bg->add_option("text", bg_text)->required();
  bg->add_option("--dot", bg_dot, "write Graphviz DOT");
  bg->add_option("--json", bg_json, "write JSON");
  bg->fallthrough();

  // gen-corpus
  auto* gc = app.add_subcommand("gen-corpus", "generate the synthetic corpus");
  CorpusArgs gc_corpus;
  gc_corpus.add(gc);
  std::string gc_out;
  gc->add_option("--out", gc_out, "JSONL output (stdout if omitted)");
  gc->fallthrough();

  // train
  auto* tr = app.add_subcommand("train", "overfit a model on the synthetic corpus");
  CorpusArgs tr_corpus;
  tr_corpus.add(tr);
  std::string tr_out = "model.bin", tr_report;
  TrainOptions tr_opts;
  std::optional<double> tr_stop_l1;
  std::optional<std::uint64_t> tr_corpus_seed;
  tr->add_option("--out", tr_out, "checkpoint path");
  tr->add_option("--report", tr_report, "JSONL loss report");
  tr->add_option("--steps", tr_opts.steps, "maximum optimizer steps");
  tr->add_option("--early-stop-loss", tr_opts.early_stop_loss, "stop when the loss falls below this");
  tr->add_option("--early-stop-l1", tr_stop_l1, "stop when the mel L1 falls below this");
  tr->add_option("--corpus-seed", tr_corpus_seed, "corpus seed (defaults to the model seed)");
  tr->fallthrough();

  // synth
  auto* sy = app.add_subcommand("synth", "synthesize a spectrogram from a checkpoint");
  std::string sy_ckpt, sy_text, sy_out = "synth";
  std::optional<std::size_t> sy_max_steps;
  sy->add_option("--checkpoint", sy_ckpt)->required();
  sy->add_option("text", sy_text)->required();
  sy->add_option("--out", sy_out, "output prefix for .csv and .bin");
  sy->add_option("--max-steps", sy_max_steps, "decoder step limit");
  sy->fallthrough();

  // gradcheck
  auto* gk = app.add_subcommand("gradcheck", "finite-difference check on toy dimensions");
  double gk_eps = 1e-5, gk_tol = 1e-4;
  gk->add_option("--eps", gk_eps);
  gk->add_option("--tolerance", gk_tol);
  gk->fallthrough();

  // bench-iter
  auto* bi = app.add_subcommand("bench-iter", "time and convergence against propagation steps");
  CorpusArgs bi_corpus;
  bi_corpus.add(bi);
  std::vector<std::size_t> bi_iters{1, 2, 3, 5};
  std::size_t bi_steps = 200;
  double bi_threshold = 0.01;
  bi->add_option("--iters", bi_iters)->delimiter(',');
  bi->add_option("--steps", bi_steps);
  bi->add_option("--l1-threshold", bi_threshold);
  bi->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bg) {
      const Vocab vocab = Vocab::from_texts(std::vector<std::string>{bg_text});
      const CharGraph graph = build_graph(bg_text, vocab);
      if (!bg_dot.empty()) write_file(bg_dot, export_dot(graph));
      if (!bg_json.empty()) write_file(bg_json, serialize_graph(graph));
      if (bg_dot.empty() && bg_json.empty()) std::cout << serialize_graph(graph);
      else print_graph_summary(graph);
    } else if (*gc) {
      const ModelConfig mc = g.model_config();
      const CorpusConfig cc = gc_corpus.get(g.config_path.empty() ? CorpusConfig{}.n_mels : mc.n_mels);
      const SyntheticCorpus corpus = gen_corpus(cc, g.seed_or(0));
      if (gc_out.empty()) std::cout << corpus_to_jsonl(corpus);
      else {
        write_file(gc_out, corpus_to_jsonl(corpus));
        std::printf("wrote %zu utterances to %s\n", corpus.utterances.size(), gc_out.c_str());
      }
    } else if (*tr) {
      const ModelConfig mc = g.model_config();
      const SyntheticCorpus corpus = gen_corpus(tr_corpus.get(mc.n_mels), tr_corpus_seed.value_or(mc.seed));
      if (corpus.config.n_mels != mc.n_mels) throw ConfigError("corpus n_mels differs from model n_mels");
      TtsModel model(mc, Vocab::from_symbols(corpus.config.alphabet));
      tr_opts.early_stop_l1 = tr_stop_l1;
      tr_opts.checkpoint = tr_out;
      if (!tr_report.empty()) tr_opts.report = tr_report;
      const TrainReport rep = train(model, corpus, tr_opts);
      const StepRecord& last = rep.trajectory.empty() ? StepRecord{} : rep.trajectory.back();
      std::printf("steps %zu loss %.6g l1 %.6g bce %.6g early_stopped %d\n", rep.trajectory.size(), last.loss,
                  last.l1, last.bce, rep.early_stopped ? 1 : 0);
      if (rep.steps_to_threshold) std::printf("steps_to_l1_threshold %zu\n", *rep.steps_to_threshold);
      else std::printf("steps_to_l1_threshold none\n");
      std::printf("checkpoint %s\n", tr_out.c_str());
    } else if (*sy) {
      const TtsModel model = TtsModel::load(sy_ckpt);
      if (!g.config_path.empty()) require_compatible(model.config(), g.model_config());
      const SynthesisResult res = model.synthesize(build_graph(sy_text, model.vocab()), sy_max_steps);
      write_csv(sy_out + ".csv", res.mel);
      Tensor stop({res.mel.num_frames()});
      for (std::size_t f = 0; f < res.mel.num_frames(); ++f) stop[f] = res.mel.stop[f];
      write_tensors(sy_out + ".bin", {{"mel", res.mel.frames}, {"stop", stop}});
      std::printf("frames %zu steps %zu stop_step %s max_steps_reached %d\n", res.mel.num_frames(), res.steps,
                  res.stop_step ? std::to_string(*res.stop_step).c_str() : "none", res.max_steps_reached ? 1 : 0);
    } else if (*gk) {
      const ModelConfig mc = g.model_config(toy_config());
      const GradcheckReport rep = run_gradcheck(mc, g.seed_or(0), gk_eps);
      std::cout << rep.table();
      return rep.max_error <= gk_tol ? 0 : 1;
    } else if (*bi) {
      const ModelConfig mc = g.model_config();
      const SyntheticCorpus corpus = gen_corpus(bi_corpus.get(mc.n_mels), mc.seed);
      const auto rows = bench_iter(mc, corpus, bi_iters, bi_steps, bi_threshold);
      std::printf("%-6s %-14s %-20s %s\n", "iter", "sec_per_step", "steps_to_threshold", "final_l1");
      for (const auto& r : rows) {
        std::printf("%-6zu %-14.6f %-20s %.6f\n", r.iter, r.seconds_per_step,
                    r.steps_to_threshold ? std::to_string(*r.steps_to_threshold).c_str() : "none", r.final_l1);
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
