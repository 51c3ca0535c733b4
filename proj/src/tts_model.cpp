#include "graphtts/tts_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "graphtts/checkpoint.hpp"
#include "graphtts/utf8.hpp"

namespace graphtts {

using namespace ops;
using Json = nlohmann::ordered_json;

std::string_view model_mode_name(ModelMode mode) {
  return mode == ModelMode::kGae ? "GAE" : "GRAPH_TTS";
}

std::optional<ModelMode> parse_model_mode(std::string_view name) {
  if (name == "GRAPH_TTS") return ModelMode::kGraphTts;
  if (name == "GAE") return ModelMode::kGae;
  return std::nullopt;
}

// ---------------------------------------------------------------- config

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("invalid model config: " + m); };
  if (d_model == 0 || n_mels == 0 || prenet_dim == 0 || decoder_dim == 0 || attention_dim == 0) {
    fail("dimensions must be positive");
  }
  if (reduction < 1) fail("reduction factor r must be >= 1");
  if (mode == ModelMode::kGae) {
    if (d_gae == 0 || d_gae >= d_model) fail("GAE mode needs 0 < d_gae < d_model");
    if (d_model % 2 != 0) fail("GAE mode needs an even d_model (bidirectional halves)");
  }
  if (!(prenet_dropout >= 0.0 && prenet_dropout < 1.0)) fail("prenet_dropout must be in [0, 1)");
  if (!(stop_threshold > 0.0 && stop_threshold < 1.0)) fail("stop_threshold must be in (0, 1)");
  if (max_steps_factor == 0) fail("max_steps_factor must be positive");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
}

std::string ModelConfig::to_json() const {
  Json j;
  j["encoder_kind"] = std::string(encoder_kind_name(encoder_kind));
  j["mode"] = std::string(model_mode_name(mode));
  j["d_model"] = d_model;
  j["d_gae"] = d_gae;
  j["iter"] = iter;
  j["n_mels"] = n_mels;
  j["reduction"] = reduction;
  j["prenet_dim"] = prenet_dim;
  j["decoder_dim"] = decoder_dim;
  j["attention_dim"] = attention_dim;
  j["prenet_dropout"] = prenet_dropout;
  j["stop_threshold"] = stop_threshold;
  j["max_steps_factor"] = max_steps_factor;
  j["learning_rate"] = learning_rate;
  j["seed"] = seed;
  return j.dump(2);
}

ModelConfig ModelConfig::from_json(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text.begin(), text.end());
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ModelConfig c;
  auto size_field = [&](const std::string& key, std::size_t& dst) {
    if (!j.at(key).is_number_unsigned()) throw ConfigError("config." + key + ": expected a non-negative integer");
    dst = j.at(key).get<std::size_t>();
  };
  auto real_field = [&](const std::string& key, double& dst) {
    if (!j.at(key).is_number()) throw ConfigError("config." + key + ": expected a number");
    dst = j.at(key).get<double>();
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "encoder_kind") {
      auto k = value.is_string() ? parse_encoder_kind(value.get<std::string>()) : std::nullopt;
      if (!k) throw ConfigError("config.encoder_kind: expected GGNN_GRU, GGNN_LSTM or GCN");
      c.encoder_kind = *k;
    } else if (key == "mode") {
      auto m = value.is_string() ? parse_model_mode(value.get<std::string>()) : std::nullopt;
      if (!m) throw ConfigError("config.mode: expected GRAPH_TTS or GAE");
      c.mode = *m;
    } else if (key == "d_model") {
      size_field(key, c.d_model);
    } else if (key == "d_gae") {
      size_field(key, c.d_gae);
    } else if (key == "iter") {
      size_field(key, c.iter);
    } else if (key == "n_mels") {
      size_field(key, c.n_mels);
    } else if (key == "reduction") {
      size_field(key, c.reduction);
    } else if (key == "prenet_dim") {
      size_field(key, c.prenet_dim);
    } else if (key == "decoder_dim") {
      size_field(key, c.decoder_dim);
    } else if (key == "attention_dim") {
      size_field(key, c.attention_dim);
    } else if (key == "max_steps_factor") {
      size_field(key, c.max_steps_factor);
    } else if (key == "prenet_dropout") {
      real_field(key, c.prenet_dropout);
    } else if (key == "stop_threshold") {
      real_field(key, c.stop_threshold);
    } else if (key == "learning_rate") {
      real_field(key, c.learning_rate);
    } else if (key == "seed") {
      if (!value.is_number_unsigned()) throw ConfigError("config.seed: expected a non-negative integer");
      c.seed = value.get<std::uint64_t>();
    } else {
      throw ConfigError("config: unknown field '" + key + "'");
    }
  }
  c.validate();
  return c;
}

std::vector<std::string> config_differences(const ModelConfig& a, const ModelConfig& b) {
  const Json ja = Json::parse(a.to_json());
  const Json jb = Json::parse(b.to_json());
  std::vector<std::string> out;
  for (const auto& [key, value] : ja.items()) {
    if (key == "learning_rate" || key == "seed" || key == "prenet_dropout") continue;
    if (value != jb.at(key)) out.push_back(key);
  }
  return out;
}

void require_compatible(const ModelConfig& checkpoint, const ModelConfig& runtime) {
  const auto diff = config_differences(checkpoint, runtime);
  if (diff.empty()) return;
  const Json ja = Json::parse(checkpoint.to_json());
  const Json jb = Json::parse(runtime.to_json());
  std::string msg = "checkpoint config does not match runtime config:";
  for (const auto& key : diff) msg += " " + key + " (" + ja.at(key).dump() + " vs " + jb.at(key).dump() + ")";
  throw ConfigMismatch(msg);
}

// ---------------------------------------------------------------- spectrogram

MelSpectrogram MelSpectrogram::from_frames(Tensor frames) {
  if (frames.rank() != 2) throw ShapeMismatch("mel frames must be rank 2, got " + shape_str(frames.shape()));
  MelSpectrogram m;
  m.stop.assign(frames.dim(0), 0);
  m.stop.back() = 1;
  m.frames = std::move(frames);
  return m;
}

MelSpectrogram MelSpectrogram::padded(std::size_t r) const {
  const std::size_t t = num_frames();
  const std::size_t padded_t = (t + r - 1) / r * r;
  MelSpectrogram out;
  out.frames = Tensor({padded_t, n_mels()});
  std::copy(frames.data().begin(), frames.data().end(), out.frames.data().begin());
  out.stop = stop;
  out.stop.resize(padded_t, 0);
  return out;
}

// ---------------------------------------------------------------- attention / memory

AttentionResult attend_with_keys(Var query, Var memory, Var keys, const AttentionVars& vars) {
  if (query.value().rows() != 1) {
    throw ShapeMismatch("attend: query must be a single row, got " + shape_str(query.shape()));
  }
  if (keys.value().dim(0) != memory.value().dim(0)) {
    throw ShapeMismatch("attend: keys " + shape_str(keys.shape()) + " vs memory " + shape_str(memory.shape()));
  }
  Var q = linear(query, vars.w_query);                       // [1 x A]
  Var scores = linear(tanh(add(keys, q)), vars.v);           // [N x 1]
  const std::size_t n = memory.value().dim(0);
  Var weights = softmax(reshape(scores, {1, n}), 1);         // [1 x N]
  Var context = matmul(weights, memory);                     // [1 x d_mem]
  return {context, weights};
}

AttentionResult attend(Var query, Var memory, const AttentionVars& vars) {
  return attend_with_keys(query, memory, linear(memory, vars.w_memory), vars);
}

Var build_memory(ModelMode mode, std::optional<Var> seq_states, Var graph_states) {
  if (mode == ModelMode::kGraphTts) return graph_states;
  if (!seq_states) throw std::invalid_argument("GAE memory needs sequence encoder states");
  const std::size_t n_seq = seq_states->value().dim(0);
  const std::size_t n_graph = graph_states.value().dim(0);
  if (n_seq != n_graph) {
    throw LengthMismatch("graph has " + std::to_string(n_graph) + " nodes but the sequence has " +
                         std::to_string(n_seq) + " characters");
  }
  return concat({*seq_states, graph_states}, 1);
}

// ---------------------------------------------------------------- loss

LossTerms spectrogram_loss(Var frames, Var stop_logits, const MelSpectrogram& target, std::size_t r) {
  const MelSpectrogram padded = target.padded(r);
  if (frames.shape() != padded.frames.shape()) {
    throw ShapeMismatch("spectrogram_loss: predicted " + shape_str(frames.shape()) + " vs padded target " +
                        shape_str(padded.frames.shape()));
  }
  const std::size_t steps = padded.num_frames() / r;
  if (stop_logits.value().size() != steps) {
    throw ShapeMismatch("spectrogram_loss: " + std::to_string(stop_logits.value().size()) +
                        " stop logits for " + std::to_string(steps) + " decoder steps");
  }
  Tape& tape = *frames.tape();
  Tensor stop_target(stop_logits.shape());
  for (std::size_t s = 0; s < steps; ++s) {
    for (std::size_t k = 0; k < r; ++k)
      if (padded.stop[s * r + k]) stop_target[s] = 1.0;
  }
  Var l1 = l1_loss(frames, tape.constant(padded.frames));
  Var bce = bce_loss(stop_logits, tape.constant(std::move(stop_target)));
  return {add(l1, bce), l1, bce};
}

// ---------------------------------------------------------------- model

namespace {

double fan_in_scale(std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

void add_linear(ParamStore& s, const std::string& name, std::size_t out, std::size_t in, std::mt19937_64& rng) {
  s.add_uniform(name + ".W", {out, in}, fan_in_scale(in), rng);
  s.add_zeros(name + ".b", {out});
}

Var dropout(Var x, double p, std::mt19937_64* rng) {
  if (!rng || p <= 0.0) return x;
  Tensor mask(x.shape());
  std::bernoulli_distribution keep(1.0 - p);
  for (auto& m : mask.data()) m = keep(*rng) ? 1.0 / (1.0 - p) : 0.0;
  return mul(x, x.tape()->constant(std::move(mask)));
}

}  // namespace

TtsModel::TtsModel(ModelConfig config, Vocab vocab) : config_(config), vocab_(std::move(vocab)) {
  config_.validate();
  init_params();
}

GraphEncoderConfig TtsModel::graph_encoder_config() const {
  GraphEncoderConfig g;
  g.kind = config_.encoder_kind;
  g.vocab_size = vocab_.size();
  g.iter = config_.iter;
  if (config_.mode == ModelMode::kGae) {
    g.dim = g.out_dim = config_.d_gae;
    g.prefix = "gae";
  } else {
    g.dim = g.out_dim = config_.d_model;
    g.prefix = "graph";
  }
  return g;
}

void TtsModel::init_params() {
  std::mt19937_64 rng(config_.seed);
  const ModelConfig& c = config_;
  init_graph_encoder(params_, graph_encoder_config(), rng);
  if (c.mode == ModelMode::kGae) {
    params_.add_uniform("seq.embedding", {vocab_.size(), c.d_model}, fan_in_scale(c.d_model), rng);
    add_linear(params_, "seq.prenet1", c.prenet_dim, c.d_model, rng);
    add_linear(params_, "seq.prenet2", c.prenet_dim, c.prenet_dim, rng);
    GruCell::init(params_, "seq.fwd", c.prenet_dim, c.d_model / 2, rng);
    GruCell::init(params_, "seq.bwd", c.prenet_dim, c.d_model / 2, rng);
  }
  const std::size_t d_mem = c.memory_dim();
  const std::size_t d_out = c.decoder_dim + d_mem;
  add_linear(params_, "dec.prenet1", c.prenet_dim, c.n_mels, rng);
  add_linear(params_, "dec.prenet2", c.prenet_dim, c.prenet_dim, rng);
  GruCell::init(params_, "dec.rnn", c.prenet_dim + d_mem, c.decoder_dim, rng);
  params_.add_uniform("att.W_q", {c.attention_dim, c.decoder_dim}, fan_in_scale(c.decoder_dim), rng);
  params_.add_uniform("att.W_m", {c.attention_dim, d_mem}, fan_in_scale(d_mem), rng);
  params_.add_uniform("att.v", {1, c.attention_dim}, fan_in_scale(c.attention_dim), rng);
  add_linear(params_, "proj", c.reduction * c.n_mels, d_out, rng);
  add_linear(params_, "stop", 1, d_out, rng);
}

TtsModel::Bound TtsModel::bind(Tape& tape) { return bind(tape, params_); }

TtsModel::Bound TtsModel::bind(Tape& tape, ParamStore& store) const {
  Bound b;
  b.tape = &tape;
  auto p = [&](const std::string& n) { return tape.param(store, n); };
  b.graph = GraphEncoderVars::bind(tape, store, graph_encoder_config());
  if (config_.mode == ModelMode::kGae) {
    b.seq_embedding = p("seq.embedding");
    b.seq_pre1_w = p("seq.prenet1.W");
    b.seq_pre1_b = p("seq.prenet1.b");
    b.seq_pre2_w = p("seq.prenet2.W");
    b.seq_pre2_b = p("seq.prenet2.b");
    b.seq_fwd = GruCell::bind(tape, store, "seq.fwd");
    b.seq_bwd = GruCell::bind(tape, store, "seq.bwd");
  }
  b.dec_pre1_w = p("dec.prenet1.W");
  b.dec_pre1_b = p("dec.prenet1.b");
  b.dec_pre2_w = p("dec.prenet2.W");
  b.dec_pre2_b = p("dec.prenet2.b");
  b.dec_rnn = GruCell::bind(tape, store, "dec.rnn");
  b.attention = {p("att.W_q"), p("att.W_m"), p("att.v")};
  b.proj_w = p("proj.W");
  b.proj_b = p("proj.b");
  b.stop_w = p("stop.W");
  b.stop_b = p("stop.b");
  return b;
}

Var TtsModel::seq_encode(const Bound& b, std::span<const std::size_t> symbols, std::mt19937_64* drop) const {
  if (symbols.empty()) throw EmptyInput("seq_encode: empty symbol sequence");
  if (!b.seq_fwd) throw std::logic_error("seq_encode requires GAE mode parameters");
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i] >= vocab_.size()) {
      throw IndexOutOfVocabulary("symbol " + std::to_string(symbols[i]) + " at position " + std::to_string(i));
    }
  }
  const double p = config_.prenet_dropout;
  Var x = gather_rows(b.seq_embedding, symbols);
  x = dropout(relu(linear(x, b.seq_pre1_w, b.seq_pre1_b)), p, drop);
  x = dropout(relu(linear(x, b.seq_pre2_w, b.seq_pre2_b)), p, drop);

  const std::size_t n = symbols.size();
  const std::size_t half = config_.d_model / 2;
  Tape& tape = *b.tape;
  std::vector<Var> rows(n);
  for (std::size_t t = 0; t < n; ++t) rows[t] = slice(x, 0, t, t + 1);

  std::vector<Var> fwd(n), bwd(n);
  Var h = tape.constant(Tensor({1, half}));
  for (std::size_t t = 0; t < n; ++t) fwd[t] = h = b.seq_fwd->step(rows[t], h);
  h = tape.constant(Tensor({1, half}));
  for (std::size_t t = n; t-- > 0;) bwd[t] = h = b.seq_bwd->step(rows[t], h);
  return concat({concat(fwd, 0), concat(bwd, 0)}, 1);
}

Var TtsModel::graph_encode(const Bound& b, const CharGraph& graph) const {
  return encode_graph(graph, b.graph);
}

Var TtsModel::memory(const Bound& b, const CharGraph& graph, std::mt19937_64* drop) const {
  Var graph_states = graph_encode(b, graph);
  if (config_.mode == ModelMode::kGraphTts) return build_memory(ModelMode::kGraphTts, std::nullopt, graph_states);
  const auto ids = graph.symbol_ids();
  return build_memory(ModelMode::kGae, seq_encode(b, ids, drop), graph_states);
}

DecodeResult TtsModel::decode(const Bound& b, Var memory, const MelSpectrogram* targets,
                              std::size_t max_steps, std::mt19937_64* drop) const {
  const ModelConfig& c = config_;
  const std::size_t r = c.reduction;
  const std::size_t d_mem = memory.value().dim(1);
  if (d_mem != c.memory_dim()) {
    throw ShapeMismatch("decode: memory width " + std::to_string(d_mem) + ", expected " +
                        std::to_string(c.memory_dim()));
  }
  std::optional<MelSpectrogram> padded;
  std::size_t steps = max_steps;
  if (targets) {
    if (targets->n_mels() != c.n_mels) {
      throw ShapeMismatch("decode: target has " + std::to_string(targets->n_mels()) + " mel bins, expected " +
                          std::to_string(c.n_mels));
    }
    padded = targets->padded(r);
    steps = padded->num_frames() / r;
  }
  if (steps == 0) throw std::invalid_argument("decode: zero decoder steps");

  Tape& tape = *b.tape;
  const double p = c.prenet_dropout;
  Var keys = linear(memory, b.attention.w_memory);
  Var h = tape.constant(Tensor({1, c.decoder_dim}));
  Var context = tape.constant(Tensor({1, d_mem}));
  Tensor prev_frame({1, c.n_mels});

  DecodeResult out;
  std::vector<Var> frame_rows, stop_rows;
  for (std::size_t s = 0; s < steps; ++s) {
    if (padded && s > 0) {
      auto src = padded->frames.row(s * r - 1);
      std::copy(src.begin(), src.end(), prev_frame.data().begin());
    }
    Var pre = dropout(relu(linear(tape.constant(prev_frame), b.dec_pre1_w, b.dec_pre1_b)), p, drop);
    pre = dropout(relu(linear(pre, b.dec_pre2_w, b.dec_pre2_b)), p, drop);
    h = b.dec_rnn.step(concat({pre, context}, 1), h);
    AttentionResult att = attend_with_keys(h, memory, keys, b.attention);
    context = att.context;
    const auto w = att.weights.value().data();
    out.attention.weights.emplace_back(w.begin(), w.end());

    Var features = concat({h, context}, 1);
    Var frames = linear(features, b.proj_w, b.proj_b);  // [1 x r*n_mels]
    Var stop = linear(features, b.stop_w, b.stop_b);     // [1 x 1]
    frame_rows.push_back(frames);
    stop_rows.push_back(stop);
    ++out.steps;

    if (!padded) {
      const auto fv = frames.value().data();
      std::copy(fv.end() - static_cast<std::ptrdiff_t>(c.n_mels), fv.end(), prev_frame.data().begin());
      const double prob = 1.0 / (1.0 + std::exp(-stop.value()[0]));
      if (prob > c.stop_threshold) {
        out.stop_step = s;
        break;
      }
    }
  }
  out.max_steps_reached = !padded && !out.stop_step;
  out.frames = reshape(concat(frame_rows, 0), {out.steps * r, c.n_mels});
  out.stop_logits = concat(stop_rows, 0);
  return out;
}

LossTerms TtsModel::utterance_loss(const Bound& b, const CharGraph& graph, const MelSpectrogram& target,
                                   std::mt19937_64* drop) const {
  Var mem = memory(b, graph, drop);
  DecodeResult dec = decode(b, mem, &target, 0, drop);
  return spectrogram_loss(dec.frames, dec.stop_logits, target, config_.reduction);
}

SynthesisResult TtsModel::synthesize(std::string_view text) const {
  return synthesize(build_graph(text, vocab_));
}

SynthesisResult TtsModel::synthesize(const CharGraph& graph, std::optional<std::size_t> max_steps) const {
  Tape tape(GradMode::kDisabled);
  // Binding copies values; a disabled tape never writes gradients back.
  ParamStore& store = const_cast<ParamStore&>(params_);
  Bound b = bind(tape, store);
  Var mem = memory(b, graph, nullptr);
  DecodeResult dec = decode(b, mem, nullptr, max_steps.value_or(max_steps_for(graph.num_nodes())), nullptr);

  SynthesisResult res;
  Tensor frames = dec.frames.value();
  for (auto& v : frames.data()) v = std::clamp(v, 0.0, 1.0);
  res.mel.stop.assign(frames.dim(0), 0);
  if (dec.stop_step) res.mel.stop.back() = 1;
  res.mel.frames = std::move(frames);
  res.attention = std::move(dec.attention);
  res.steps = dec.steps;
  res.stop_step = dec.stop_step;
  res.max_steps_reached = dec.max_steps_reached;
  return res;
}

// ---------------------------------------------------------------- checkpoint

std::filesystem::path manifest_path(const std::filesystem::path& checkpoint) {
  return std::filesystem::path(checkpoint.string() + ".manifest.json");
}

void TtsModel::save(const std::filesystem::path& path) const {
  save_params(path, params_);
  Json m;
  m["format"] = "graphtts-checkpoint";
  m["version"] = kContainerVersion;
  m["config"] = Json::parse(config_.to_json());
  m["vocab"]["unk_enabled"] = vocab_.unk_enabled();
  m["vocab"]["symbols"] = Json::array();
  for (char32_t s : vocab_.symbols()) m["vocab"]["symbols"].push_back(utf8::encode(s));
  m["tensors"] = Json::array();
  for (const auto& [name, p] : params_) m["tensors"].push_back({{"name", name}, {"shape", p.value.shape()}});
  std::ofstream out(manifest_path(path), std::ios::trunc);
  if (!out) throw CheckpointError("cannot write " + manifest_path(path).string());
  out << m.dump(2) << '\n';
}

TtsModel TtsModel::load(const std::filesystem::path& path) {
  std::ifstream in(manifest_path(path));
  if (!in) throw CheckpointError("cannot open " + manifest_path(path).string());
  Json m;
  try {
    m = Json::parse(in);
  } catch (const Json::exception& e) {
    throw CheckpointError(manifest_path(path).string() + ": " + e.what());
  }
  if (!m.contains("config") || !m.contains("vocab")) throw CheckpointError("manifest lacks config or vocab");
  ModelConfig config = ModelConfig::from_json(m["config"].dump());
  Vocab vocab(m["vocab"].value("unk_enabled", true));
  for (const auto& s : m["vocab"]["symbols"]) {
    const auto decoded = utf8::decode(s.get<std::string>());
    if (decoded.size() != 1) throw CheckpointError("manifest vocab entry is not a single character");
    vocab.add(decoded[0]);
  }
  TtsModel model(config, std::move(vocab));
  load_params(path, model.params_);
  return model;
}

}  // namespace graphtts
