#include "graphtts/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "graphtts/corpus.hpp"

namespace graphtts {

ModelConfig toy_config() {
  ModelConfig c;
  c.d_model = 8;
  c.d_gae = 4;
  c.iter = 2;
  c.n_mels = 4;
  c.reduction = 2;
  c.prenet_dim = 6;
  c.decoder_dim = 8;
  c.attention_dim = 5;
  c.seed = 7;
  return c;
}

std::string toy_text(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::string alphabet = "abcdefgh";
  auto word = [&](std::size_t len) {
    std::string w;
    for (std::size_t i = 0; i < len; ++i) w.push_back(alphabet[rng() % alphabet.size()]);
    return w;
  };
  const std::size_t first = 1 + rng() % 3;
  const std::size_t second = 1 + rng() % 3;
  return word(first) + " " + word(second);
}

namespace {

// A random instance is used only when the central difference can resolve
// every derivative there: no relu / abs input within kMinKinkMargin of its
// kink, and every gradient entry either exactly zero (the parameter does not
// reach the loss) or at least kMinGradient * max(1, |f|). Smaller entries
// move f by a few ulps at eps = 1e-5, so their relative error measures
// roundoff only.
constexpr double kMinKinkMargin = 1e-3;
constexpr double kMinGradient = 2e-7;
constexpr std::size_t kMaxDraws = 200;

void add_entries(GradcheckReport& report, const std::string& probe, const FdReport& fd) {
  for (const auto& [name, err] : fd.per_param) report.entries.push_back({probe, name, err});
  report.max_error = std::max(report.max_error, fd.max_error);
}

bool well_conditioned(const LossFn& f, ParamStore& params) {
  double margin = 0.0;
  {
    Tape tape(GradMode::kDisabled);
    f(tape, params);
    margin = tape.kink_margin();
  }
  if (margin < kMinKinkMargin) return false;
  const double floor = kMinGradient * std::max(1.0, std::abs(compute_gradients(f, params)));
  for (const auto& [name, p] : params)
    for (double g : p.grad.data())
      if (g != 0.0 && std::abs(g) < floor) return false;
  return true;
}

Tensor uniform_tensor(Shape shape, double scale, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

// Calls draw(rng) with fresh generators until the instance it builds is well
// conditioned; returns the number of draws used.
template <class Draw>
std::size_t draw_instance(std::uint64_t seed, Draw draw) {
  for (std::size_t k = 0; k < kMaxDraws; ++k) {
    std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ull * k);
    if (draw(rng)) return k + 1;
  }
  return kMaxDraws;
}

}  // namespace

GradcheckReport run_gradcheck(const ModelConfig& config, std::uint64_t seed, double eps) {
  for (std::size_t d : {config.d_model, config.d_gae, config.prenet_dim, config.decoder_dim,
                        config.attention_dim, config.n_mels}) {
    if (d > kToyMaxDim) {
      throw ConfigError("gradcheck needs toy dimensions (<= " + std::to_string(kToyMaxDim) + ")");
    }
  }
  const std::string text = toy_text(seed);
  const Vocab vocab = Vocab::from_symbols(U"abcdefgh");
  const CharGraph graph = build_graph(text, vocab);
  GradcheckReport report;
  report.text = text;

  for (EncoderKind kind : {EncoderKind::kGgnnGru, EncoderKind::kGgnnLstm, EncoderKind::kGcn}) {
    GraphEncoderConfig gc;
    gc.kind = kind;
    gc.vocab_size = vocab.size();
    gc.dim = config.d_model;
    gc.out_dim = config.d_model;
    gc.iter = std::max<std::size_t>(config.iter, 1);
    gc.prefix = "enc";
    ParamStore store;
    Tensor probe;
    LossFn f = [&](Tape& tape, ParamStore& ps) {
      auto vars = GraphEncoderVars::bind(tape, ps, gc);
      return ops::sum(ops::mul(encode_graph(graph, vars), tape.constant(probe)));
    };
    const std::size_t draws = draw_instance(seed + static_cast<std::uint64_t>(kind), [&](std::mt19937_64& rng) {
      store = ParamStore{};
      init_graph_encoder(store, gc, rng);
      for (auto& [name, p] : store) {
        if (name.ends_with(".b") || name.find(".b_") != std::string::npos) p.value = uniform_tensor(p.value.shape(), 0.2, rng);
      }
      probe = uniform_tensor({graph.num_nodes(), gc.out_dim}, 1.0, rng);
      return well_conditioned(f, store);
    });
    const std::string name = "encoder/" + std::string(encoder_kind_name(kind));
    report.draws[name] = draws;
    add_entries(report, name, fd_check(f, store, eps));
  }

  auto model_probe = [&](ModelMode mode, EncoderKind kind) {
    ModelConfig c = config;
    c.mode = mode;
    c.encoder_kind = kind;
    c.prenet_dropout = 0.0;
    c.iter = std::max<std::size_t>(config.iter, 1);
    TtsModel model(c, vocab);
    const MelSpectrogram target = render_target(text, c.n_mels);
    const std::size_t steps = (target.num_frames() + c.reduction - 1) / c.reduction;
    Tensor frame_readout, stop_readout;
    // Training loss plus a random linear readout of the outputs. The L1
    // term alone has piecewise constant derivatives that often cancel to
    // exactly zero, where the relative error measures only roundoff.
    LossFn f = [&](Tape& tape, ParamStore& ps) {
      auto b = model.bind(tape, ps);
      DecodeResult dec = model.decode(b, model.memory(b, graph, nullptr), &target, 0, nullptr);
      Var loss = spectrogram_loss(dec.frames, dec.stop_logits, target, c.reduction).total;
      return ops::add(loss, ops::add(ops::sum(ops::mul(dec.frames, tape.constant(frame_readout))),
                                     ops::sum(ops::mul(dec.stop_logits, tape.constant(stop_readout)))));
    };
    // Default init leaves the memory rows nearly identical, so attention is
    // flat and its gradients sit at roundoff level. Check at a generic point.
    const std::size_t draws = draw_instance(seed ^ 0x5eedull, [&](std::mt19937_64& rng) {
      for (auto& [name, p] : model.params()) p.value = uniform_tensor(p.value.shape(), 0.5, rng);
      frame_readout = uniform_tensor({steps * c.reduction, c.n_mels}, 0.1, rng);
      stop_readout = uniform_tensor({steps, 1}, 0.1, rng);
      return well_conditioned(f, model.params());
    });
    const std::string name =
        "model/" + std::string(model_mode_name(mode)) + "/" + std::string(encoder_kind_name(kind));
    report.draws[name] = draws;
    add_entries(report, name, fd_check(f, model.params(), eps));
  };
  for (EncoderKind kind : {EncoderKind::kGgnnGru, EncoderKind::kGgnnLstm, EncoderKind::kGcn}) {
    model_probe(ModelMode::kGraphTts, kind);
  }
  model_probe(ModelMode::kGae, config.encoder_kind);

  ParamStore constant;
  constant.add("w", Tensor::vector({0.3, -0.7, 1.1}));
  LossFn f = [](Tape& tape, ParamStore&) { return tape.constant(Tensor({1}, {2.5})); };
  add_entries(report, "constant", fd_check(f, constant, eps));
  return report;
}

std::string GradcheckReport::table() const {
  std::ostringstream out;
  std::size_t probe_w = 5, param_w = 9;
  for (const auto& e : entries) {
    probe_w = std::max(probe_w, e.probe.size());
    param_w = std::max(param_w, e.param.size());
  }
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%-*s  %-*s  %s\n", static_cast<int>(probe_w), "probe",
                static_cast<int>(param_w), "parameter", "max_rel_error");
  out << buf;
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof(buf), "%-*s  %-*s  %.3e\n", static_cast<int>(probe_w), e.probe.c_str(),
                  static_cast<int>(param_w), e.param.c_str(), e.error);
    out << buf;
  }
  out << "instance text: \"" << text << "\"\n";
  std::snprintf(buf, sizeof(buf), "max relative error: %.3e\n", max_error);
  out << buf;
  return out.str();
}

}  // namespace graphtts
