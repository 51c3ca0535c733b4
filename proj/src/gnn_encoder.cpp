#include "graphtts/gnn_encoder.hpp"

#include <cmath>

namespace graphtts {

using namespace ops;

std::string_view encoder_kind_name(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::kGgnnGru: return "GGNN_GRU";
    case EncoderKind::kGgnnLstm: return "GGNN_LSTM";
    case EncoderKind::kGcn: return "GCN";
  }
  return "?";
}

std::optional<EncoderKind> parse_encoder_kind(std::string_view name) {
  for (auto k : {EncoderKind::kGgnnGru, EncoderKind::kGgnnLstm, EncoderKind::kGcn})
    if (encoder_kind_name(k) == name) return k;
  return std::nullopt;
}

namespace {

std::string type_key(EdgeType t) {
  switch (t) {
    case EdgeType::kDirected: return "directed";
    case EdgeType::kReverse: return "reverse";
    case EdgeType::kSequential: return "sequential";
  }
  return "?";
}

double init_scale(std::size_t d) { return 1.0 / std::sqrt(static_cast<double>(d)); }

void init_gate(ParamStore& s, const std::string& p, const std::string& g, std::size_t in,
               std::size_t hidden, std::mt19937_64& rng) {
  s.add_uniform(p + ".W_" + g, {hidden, in}, init_scale(hidden), rng);
  s.add_uniform(p + ".U_" + g, {hidden, hidden}, init_scale(hidden), rng);
  s.add_zeros(p + ".b_" + g, {hidden});
}

Var gate(Var a, Var h, Var w, Var u, Var b) { return add(linear(a, w, b), linear(h, u)); }

std::string gcn_prefix(const GraphEncoderConfig& cfg, std::size_t layer) {
  return cfg.prefix + ".gcn." + std::to_string(layer);
}

}  // namespace

// ---------------------------------------------------------------- cells

void GruCell::init(ParamStore& store, const std::string& prefix, std::size_t in,
                   std::size_t hidden, std::mt19937_64& rng) {
  for (const char* g : {"z", "r", "h"}) init_gate(store, prefix, g, in, hidden, rng);
}

GruCell GruCell::bind(Tape& tape, ParamStore& store, const std::string& p) {
  auto v = [&](const std::string& n) { return tape.param(store, p + "." + n); };
  return {v("W_z"), v("U_z"), v("b_z"), v("W_r"), v("U_r"), v("b_r"), v("W_h"), v("U_h"), v("b_h")};
}

Var GruCell::step(Var input, Var hidden) const {
  Var z = sigmoid(gate(input, hidden, w_z, u_z, b_z));
  Var r = sigmoid(gate(input, hidden, w_r, u_r, b_r));
  Var cand = tanh(gate(input, mul(r, hidden), w_h, u_h, b_h));
  // (1 - z) * h + z * cand == h + z * (cand - h)
  return add(hidden, mul(z, sub(cand, hidden)));
}

void LstmCell::init(ParamStore& store, const std::string& prefix, std::size_t in,
                    std::size_t hidden, std::mt19937_64& rng) {
  for (const char* g : {"i", "f", "o", "g"}) init_gate(store, prefix, g, in, hidden, rng);
}

LstmCell LstmCell::bind(Tape& tape, ParamStore& store, const std::string& p) {
  auto v = [&](const std::string& n) { return tape.param(store, p + "." + n); };
  return {v("W_i"), v("U_i"), v("b_i"), v("W_f"), v("U_f"), v("b_f"),
          v("W_o"), v("U_o"), v("b_o"), v("W_g"), v("U_g"), v("b_g")};
}

std::pair<Var, Var> LstmCell::step(Var input, Var hidden, Var cell) const {
  Var i = sigmoid(gate(input, hidden, w_i, u_i, b_i));
  Var f = sigmoid(gate(input, hidden, w_f, u_f, b_f));
  Var o = sigmoid(gate(input, hidden, w_o, u_o, b_o));
  Var g = tanh(gate(input, hidden, w_g, u_g, b_g));
  Var c = add(mul(f, cell), mul(i, g));
  return {mul(o, tanh(c)), c};
}

// ---------------------------------------------------------------- params

void init_graph_encoder(ParamStore& store, const GraphEncoderConfig& cfg, std::mt19937_64& rng) {
  if (cfg.vocab_size == 0 || cfg.dim == 0 || cfg.out_dim == 0) {
    throw std::invalid_argument("graph encoder dimensions must be positive");
  }
  const std::string& p = cfg.prefix;
  const double s = init_scale(cfg.dim);
  store.add_uniform(p + ".embedding", {cfg.vocab_size, cfg.dim}, s, rng);
  switch (cfg.kind) {
    case EncoderKind::kGgnnGru:
    case EncoderKind::kGgnnLstm:
      for (EdgeType t : kEdgeTypes) {
        store.add_uniform(p + ".msg." + type_key(t) + ".W", {cfg.dim, cfg.dim}, s, rng);
        store.add_zeros(p + ".msg." + type_key(t) + ".b", {cfg.dim});
      }
      if (cfg.kind == EncoderKind::kGgnnGru) {
        GruCell::init(store, p + ".gru", cfg.dim, cfg.dim, rng);
      } else {
        LstmCell::init(store, p + ".lstm", cfg.dim, cfg.dim, rng);
      }
      break;
    case EncoderKind::kGcn:
      for (std::size_t l = 0; l < cfg.iter; ++l) {
        const std::string lp = gcn_prefix(cfg, l);
        store.add_uniform(lp + ".W_self", {cfg.dim, cfg.dim}, s, rng);
        for (EdgeType t : kEdgeTypes) store.add_uniform(lp + ".W." + type_key(t), {cfg.dim, cfg.dim}, s, rng);
        store.add_zeros(lp + ".b", {cfg.dim});
      }
      break;
  }
  store.add_uniform(p + ".out.W", {cfg.out_dim, cfg.dim}, s, rng);
  store.add_zeros(p + ".out.b", {cfg.out_dim});
}

GraphEncoderVars GraphEncoderVars::bind(Tape& tape, ParamStore& store, const GraphEncoderConfig& cfg) {
  GraphEncoderVars v;
  v.cfg = cfg;
  const std::string& p = cfg.prefix;
  v.embedding = tape.param(store, p + ".embedding");
  switch (cfg.kind) {
    case EncoderKind::kGgnnGru:
    case EncoderKind::kGgnnLstm:
      for (EdgeType t : kEdgeTypes) {
        const auto k = static_cast<std::size_t>(t);
        v.messages.w[k] = tape.param(store, p + ".msg." + type_key(t) + ".W");
        v.messages.b[k] = tape.param(store, p + ".msg." + type_key(t) + ".b");
      }
      if (cfg.kind == EncoderKind::kGgnnGru) {
        v.gru = GruCell::bind(tape, store, p + ".gru");
      } else {
        v.lstm = LstmCell::bind(tape, store, p + ".lstm");
      }
      break;
    case EncoderKind::kGcn:
      for (std::size_t l = 0; l < cfg.iter; ++l) {
        const std::string lp = gcn_prefix(cfg, l);
        GcnLayer layer;
        layer.w_self = tape.param(store, lp + ".W_self");
        for (EdgeType t : kEdgeTypes)
          layer.messages.w[static_cast<std::size_t>(t)] = tape.param(store, lp + ".W." + type_key(t));
        layer.b = tape.param(store, lp + ".b");
        v.gcn.push_back(layer);
      }
      break;
  }
  v.out_w = tape.param(store, p + ".out.W");
  v.out_b = tape.param(store, p + ".out.b");
  return v;
}

// ---------------------------------------------------------------- ops

Var embed_nodes(const CharGraph& graph, Var table) {
  const std::size_t vocab = table.value().dim(0);
  const auto ids = graph.symbol_ids();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= vocab) {
      throw IndexOutOfVocabulary("node " + std::to_string(i) + " has symbol id " +
                                 std::to_string(ids[i]) + " >= vocabulary size " + std::to_string(vocab));
    }
  }
  return gather_rows(table, ids);
}

namespace {

struct TypedEdges {
  std::array<std::vector<std::size_t>, kNumEdgeTypes> sources, targets;
};

TypedEdges split_edges(const CharGraph& graph) {
  TypedEdges out;
  for (const Edge& e : graph.edges.rows()) {
    const auto k = static_cast<std::size_t>(e.type);
    out.sources[k].push_back(e.source);
    out.targets[k].push_back(e.target);
  }
  return out;
}

void check_states(Var states, const CharGraph& graph, const char* op) {
  const Tensor& s = states.value();
  if (s.rank() != 2 || s.dim(0) != graph.num_nodes()) {
    throw ShapeMismatch(std::string(op) + ": states " + shape_str(s.shape()) + " for " +
                        std::to_string(graph.num_nodes()) + " nodes");
  }
}

/// Sum over edge types of scatter(W_t h (+ b_t)); nullopt when the graph has no edges.
std::optional<Var> typed_messages(Var states, const CharGraph& graph, const MessageWeights& mw) {
  const TypedEdges edges = split_edges(graph);
  std::optional<Var> total;
  for (std::size_t k = 0; k < kNumEdgeTypes; ++k) {
    if (edges.sources[k].empty()) continue;
    Var projected = mw.b[k].valid() ? linear(states, mw.w[k], mw.b[k]) : linear(states, mw.w[k]);
    Var msg = edge_scatter(projected, edges.sources[k], edges.targets[k], graph.num_nodes());
    total = total ? add(*total, msg) : msg;
  }
  return total;
}

}  // namespace

Var aggregate_messages(Var states, const CharGraph& graph, const MessageWeights& weights) {
  check_states(states, graph, "aggregate_messages");
  if (auto m = typed_messages(states, graph, weights)) return *m;
  const std::size_t d = weights.w[0].value().dim(0);
  return states.tape()->constant(Tensor({graph.num_nodes(), d}));
}

GatedState ggnn_step(const GatedState& state, Var messages, const GraphEncoderVars& vars) {
  if (messages.shape() != state.h.shape()) {
    throw ShapeMismatch("ggnn_step: messages " + shape_str(messages.shape()) + " vs states " +
                        shape_str(state.h.shape()));
  }
  if (vars.gru) return {vars.gru->step(messages, state.h), {}};
  if (vars.lstm) {
    auto [h, c] = vars.lstm->step(messages, state.h, state.c);
    return {h, c};
  }
  throw std::invalid_argument("ggnn_step requires a GGNN encoder kind");
}

Var gcn_layer(Var states, const CharGraph& graph, const GcnLayer& layer) {
  check_states(states, graph, "gcn_layer");
  Var self_term = linear(states, layer.w_self, layer.b);
  auto neighbours = typed_messages(states, graph, layer.messages);
  if (!neighbours) return relu(self_term);
  std::vector<double> inv_deg(graph.num_nodes(), 0.0);
  for (const Edge& e : graph.edges.rows()) inv_deg[e.target] += 1.0;
  for (double& d : inv_deg) d = 1.0 / std::max(1.0, d);
  return relu(add(self_term, row_scale(*neighbours, std::move(inv_deg))));
}

Var propagate(const CharGraph& graph, Var initial, const GraphEncoderVars& vars, std::size_t iter) {
  check_states(initial, graph, "propagate");
  if (iter == 0) return initial;
  if (vars.cfg.kind == EncoderKind::kGcn) {
    if (iter > vars.gcn.size()) {
      throw std::invalid_argument("propagate: GCN has " + std::to_string(vars.gcn.size()) +
                                  " layers, iter = " + std::to_string(iter));
    }
    Var h = initial;
    for (std::size_t l = 0; l < iter; ++l) h = gcn_layer(h, graph, vars.gcn[l]);
    return h;
  }
  GatedState state{initial, {}};
  if (vars.lstm) state.c = initial.tape()->constant(Tensor(initial.shape()));
  for (std::size_t i = 0; i < iter; ++i) {
    Var messages = aggregate_messages(state.h, graph, vars.messages);
    state = ggnn_step(state, messages, vars);
  }
  return state.h;
}

Var output_model(Var states, Var w_o, Var b_o) { return tanh(linear(states, w_o, b_o)); }

Var encode_graph(const CharGraph& graph, const GraphEncoderVars& vars) {
  Var h0 = embed_nodes(graph, vars.embedding);
  Var h = propagate(graph, h0, vars, vars.cfg.iter);
  return output_model(h, vars.out_w, vars.out_b);
}

}  // namespace graphtts
