#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "graphtts/fd_check.hpp"
#include "graphtts/tts_model.hpp"

namespace graphtts {

inline constexpr std::size_t kToyMaxDim = 8;
inline constexpr std::size_t kToyMaxNodes = 6;

/// Small dimensions accepted by run_gradcheck.
ModelConfig toy_config();

struct GradcheckEntry {
  std::string probe;  // e.g. "encoder/GCN", "model/GAE/GGNN_GRU", "constant"
  std::string param;
  double error = 0.0;
};

struct GradcheckReport {
  std::string text;
  std::vector<GradcheckEntry> entries;
  /// Random instances drawn per probe before a well-conditioned one came up.
  std::map<std::string, std::size_t> draws;
  double max_error = 0.0;
  std::string table() const;
};

/// Random text of two words with at most kToyMaxNodes characters.
std::string toy_text(std::uint64_t seed);

/// Finite-difference check of every encoder kind in isolation, every kind
/// end to end in GRAPH_TTS mode, `config.encoder_kind` in GAE mode, and a
/// constant-loss probe. Throws ConfigError when a dimension exceeds kToyMaxDim.
GradcheckReport run_gradcheck(const ModelConfig& config, std::uint64_t seed, double eps = 1e-5);

}  // namespace graphtts
