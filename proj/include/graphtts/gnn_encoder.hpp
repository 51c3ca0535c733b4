#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "graphtts/ops.hpp"
#include "graphtts/param_store.hpp"
#include "graphtts/text2graph.hpp"

namespace graphtts {

class IndexOutOfVocabulary : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

enum class EncoderKind { kGgnnGru, kGgnnLstm, kGcn };

std::string_view encoder_kind_name(EncoderKind kind);
std::optional<EncoderKind> parse_encoder_kind(std::string_view name);

struct GraphEncoderConfig {
  EncoderKind kind = EncoderKind::kGgnnGru;
  std::size_t vocab_size = 0;
  /// Node embedding / propagation width.
  std::size_t dim = 512;
  std::size_t out_dim = 512;
  std::size_t iter = 1;
  /// Parameter-name prefix, e.g. "graph" or "gae".
  std::string prefix = "graph";
};

/// Registers every encoder parameter in `store`: uniform(-1/sqrt(d), 1/sqrt(d))
/// weights and zero biases. GGNN kinds share one update cell across
/// iterations; GCN owns `iter` separate layers.
void init_graph_encoder(ParamStore& store, const GraphEncoderConfig& cfg, std::mt19937_64& rng);

/// Gate-block parameters of a GRU cell applied row-wise:
///   z = sigmoid(W_z a + U_z h + b_z), r = sigmoid(W_r a + U_r h + b_r)
///   c = tanh(W_h a + U_h (r * h) + b_h), h' = (1 - z) * h + z * c
struct GruCell {
  Var w_z, u_z, b_z, w_r, u_r, b_r, w_h, u_h, b_h;

  static void init(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t hidden,
                   std::mt19937_64& rng);
  static GruCell bind(Tape& tape, ParamStore& store, const std::string& prefix);
  Var step(Var input, Var hidden) const;
};

/// LSTM cell with input, forget, output and candidate blocks.
struct LstmCell {
  Var w_i, u_i, b_i, w_f, u_f, b_f, w_o, u_o, b_o, w_g, u_g, b_g;

  static void init(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t hidden,
                   std::mt19937_64& rng);
  static LstmCell bind(Tape& tape, ParamStore& store, const std::string& prefix);
  /// Returns (h', c').
  std::pair<Var, Var> step(Var input, Var hidden, Var cell) const;
};

/// Per-edge-type message weights, indexed by EdgeType.
struct MessageWeights {
  std::array<Var, kNumEdgeTypes> w;
  std::array<Var, kNumEdgeTypes> b;  // unbound for GCN layers
};

struct GcnLayer {
  Var w_self;
  MessageWeights messages;
  Var b;
};

/// Parameters of one graph encoder bound onto a tape.
struct GraphEncoderVars {
  GraphEncoderConfig cfg;
  Var embedding;
  MessageWeights messages;  // GGNN kinds
  std::optional<GruCell> gru;
  std::optional<LstmCell> lstm;
  std::vector<GcnLayer> gcn;
  Var out_w, out_b;

  static GraphEncoderVars bind(Tape& tape, ParamStore& store, const GraphEncoderConfig& cfg);
};

/// Row v = table[symbol_id(v)].
Var embed_nodes(const CharGraph& graph, Var table);

/// Row v = sum over edges (u -> v, t) of W_t h_u + b_t; rows without
/// incoming edges are zero.
Var aggregate_messages(Var states, const CharGraph& graph, const MessageWeights& weights);

struct GatedState {
  Var h;
  Var c;  // LSTM cell state; unbound for GRU
};

GatedState ggnn_step(const GatedState& state, Var messages, const GraphEncoderVars& vars);

/// relu(W_self h_v + mean over incoming edges of W_t h_u + b)
Var gcn_layer(Var states, const CharGraph& graph, const GcnLayer& layer);

/// Applies `iter` rounds of message passing; iter = 0 returns `initial`.
Var propagate(const CharGraph& graph, Var initial, const GraphEncoderVars& vars, std::size_t iter);

/// Row-wise tanh(W_o h_v + b_o).
Var output_model(Var states, Var w_o, Var b_o);

/// embed -> propagate(cfg.iter) -> output model.
Var encode_graph(const CharGraph& graph, const GraphEncoderVars& vars);

}  // namespace graphtts
