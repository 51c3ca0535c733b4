#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "graphtts/gnn_encoder.hpp"
#include "graphtts/ops.hpp"
#include "graphtts/param_store.hpp"
#include "graphtts/text2graph.hpp"

namespace graphtts {

class EmptyInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class LengthMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelMode { kGraphTts, kGae };

std::string_view model_mode_name(ModelMode mode);
std::optional<ModelMode> parse_model_mode(std::string_view name);

struct ModelConfig {
  EncoderKind encoder_kind = EncoderKind::kGgnnGru;
  ModelMode mode = ModelMode::kGraphTts;
  std::size_t d_model = 512;
  std::size_t d_gae = 128;
  std::size_t iter = 1;
  std::size_t n_mels = 80;
  std::size_t reduction = 2;
  std::size_t prenet_dim = 256;
  std::size_t decoder_dim = 512;
  std::size_t attention_dim = 128;
  /// Applied to both prenets while training; inference never drops.
  double prenet_dropout = 0.0;
  double stop_threshold = 0.5;
  /// Inference stops after max_steps_factor * input length decoder steps.
  std::size_t max_steps_factor = 10;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  /// Throws ConfigError on an inconsistent configuration.
  void validate() const;
  std::string to_json() const;
  /// Every field is optional; unknown keys are rejected.
  static ModelConfig from_json(std::string_view json);
  bool operator==(const ModelConfig&) const = default;

  std::size_t memory_dim() const { return mode == ModelMode::kGae ? d_model + d_gae : d_model; }
};

/// Fields that shape the network or its inference, compared by name.
/// Training-only fields (learning_rate, seed, prenet_dropout) are ignored.
std::vector<std::string> config_differences(const ModelConfig& a, const ModelConfig& b);
/// Throws ConfigMismatch listing every differing field.
void require_compatible(const ModelConfig& checkpoint, const ModelConfig& runtime);

/// frames: [T x n_mels]; stop[t] set only at the final real frame.
struct MelSpectrogram {
  Tensor frames;
  std::vector<std::uint8_t> stop;

  std::size_t num_frames() const { return frames.dim(0); }
  std::size_t n_mels() const { return frames.dim(1); }
  /// Target constructor: stop flag only at T-1.
  static MelSpectrogram from_frames(Tensor frames);
  /// Zero frames appended up to a multiple of r; stop flags unchanged.
  MelSpectrogram padded(std::size_t r) const;
  bool operator==(const MelSpectrogram&) const = default;
};

/// Decoder attention rows, one per decoder step.
struct AttentionState {
  std::vector<std::vector<double>> weights;
};

struct AttentionVars {
  Var w_query, w_memory, v;
};

/// Additive attention: e_j = v . tanh(W_q q + W_m m_j), softmax, weighted sum.
struct AttentionResult {
  Var context;  // [1 x d_mem]
  Var weights;  // [1 x N]
};
AttentionResult attend(Var query, Var memory, const AttentionVars& vars);
/// Same with keys = memory W_m^T precomputed once per utterance.
AttentionResult attend_with_keys(Var query, Var memory, Var keys, const AttentionVars& vars);

/// GRAPH_TTS: graph states pass through. GAE: per-position feature concat of
/// sequence and graph states; row counts must agree.
Var build_memory(ModelMode mode, std::optional<Var> seq_states, Var graph_states);

struct DecodeResult {
  Var frames;       // [steps * r x n_mels]
  Var stop_logits;  // [steps x 1]
  AttentionState attention;
  std::size_t steps = 0;
  bool max_steps_reached = false;
  /// Inference: first step whose stop probability exceeded the threshold.
  std::optional<std::size_t> stop_step;
};

struct LossTerms {
  Var total;
  Var l1;
  Var bce;
};

/// L1 over padded mel frames plus BCE over per-step stop logits, whose
/// target is 1 at the step holding the final real frame.
LossTerms spectrogram_loss(Var frames, Var stop_logits, const MelSpectrogram& target, std::size_t r);

struct SynthesisResult {
  MelSpectrogram mel;
  AttentionState attention;
  std::size_t steps = 0;
  std::optional<std::size_t> stop_step;
  bool max_steps_reached = false;
};

/// Full model: parameters, vocabulary and configuration.
class TtsModel {
 public:
  TtsModel(ModelConfig config, Vocab vocab);

  const ModelConfig& config() const { return config_; }
  const Vocab& vocab() const { return vocab_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  GraphEncoderConfig graph_encoder_config() const;

  /// Binds all parameters onto `tape`; valid until the tape is consumed.
  struct Bound;
  Bound bind(Tape& tape);
  Bound bind(Tape& tape, ParamStore& store) const;

  /// Embedding -> 2-layer relu prenet -> bidirectional GRU, halves concatenated.
  Var seq_encode(const Bound& b, std::span<const std::size_t> symbols, std::mt19937_64* dropout) const;
  Var graph_encode(const Bound& b, const CharGraph& graph) const;
  Var memory(const Bound& b, const CharGraph& graph, std::mt19937_64* dropout) const;

  /// Teacher forcing when `targets` is set (step count = ceil(T / r));
  /// otherwise free-running until the stop gate fires or `max_steps`.
  DecodeResult decode(const Bound& b, Var memory, const MelSpectrogram* targets, std::size_t max_steps,
                      std::mt19937_64* dropout) const;

  /// Teacher-forced training loss for one utterance.
  LossTerms utterance_loss(const Bound& b, const CharGraph& graph, const MelSpectrogram& target,
                           std::mt19937_64* dropout) const;

  std::size_t max_steps_for(std::size_t input_length) const {
    return config_.max_steps_factor * input_length;
  }

  /// Inference on frozen parameters; frames are clipped to [0, 1].
  SynthesisResult synthesize(std::string_view text) const;
  SynthesisResult synthesize(const CharGraph& graph, std::optional<std::size_t> max_steps = {}) const;

  /// Binary container at `path`, JSON manifest (config, vocab, tensor list)
  /// at `path` + ".manifest.json".
  void save(const std::filesystem::path& path) const;
  static TtsModel load(const std::filesystem::path& path);

 private:
  void init_params();

  ModelConfig config_;
  Vocab vocab_;
  ParamStore params_;
};

struct TtsModel::Bound {
  GraphEncoderVars graph;
  // Sequence encoder (GAE mode).
  Var seq_embedding, seq_pre1_w, seq_pre1_b, seq_pre2_w, seq_pre2_b;
  std::optional<GruCell> seq_fwd, seq_bwd;
  // Decoder.
  Var dec_pre1_w, dec_pre1_b, dec_pre2_w, dec_pre2_b;
  GruCell dec_rnn;
  AttentionVars attention;
  Var proj_w, proj_b, stop_w, stop_b;
  Tape* tape = nullptr;
};

std::filesystem::path manifest_path(const std::filesystem::path& checkpoint);

}  // namespace graphtts
