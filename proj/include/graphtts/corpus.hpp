#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "graphtts/tts_model.hpp"

namespace graphtts {

/// 32-bit FNV-1a over the UTF-8 bytes of `symbol`.
std::uint32_t stable_hash(char32_t symbol);

struct CorpusConfig {
  std::u32string alphabet = U"abcdefghijkl";
  std::size_t num_utterances = 20;
  std::size_t min_words = 1;
  std::size_t max_words = 3;
  std::size_t min_word_length = 1;
  std::size_t max_word_length = 4;
  std::size_t n_mels = 8;

  std::string to_json() const;
  static CorpusConfig from_json(std::string_view json);
};

struct Utterance {
  std::string text;
  MelSpectrogram mel;
  bool operator==(const Utterance&) const = default;
};

struct SyntheticCorpus {
  std::uint64_t seed = 0;
  CorpusConfig config;
  std::vector<Utterance> utterances;
  /// Mel bin of each character's two-frame template.
  std::map<char32_t, std::size_t> template_bins;

  std::vector<std::string> texts() const;
  bool operator==(const SyntheticCorpus& o) const {
    return seed == o.seed && utterances == o.utterances && template_bins == o.template_bins;
  }
};

/// Target spectrogram for `text`: two identical frames per character with a
/// 1.0 at bin stable_hash(c) mod n_mels, one all-zero frame between words.
/// Throws EmptyGraph on text without a non-whitespace character.
MelSpectrogram render_target(std::string_view text, std::size_t n_mels);

SyntheticCorpus gen_corpus(const CorpusConfig& config, std::uint64_t seed);

/// One JSON object per line: {"text": ..., "frames": [[...], ...]}.
std::string corpus_to_jsonl(const SyntheticCorpus& corpus);

}  // namespace graphtts
