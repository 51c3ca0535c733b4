#include "graphtts/corpus.hpp"

#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "graphtts/utf8.hpp"

namespace graphtts {

std::uint32_t stable_hash(char32_t symbol) {
  std::uint32_t h = 2166136261u;
  for (char byte : utf8::encode(symbol)) {
    h ^= static_cast<unsigned char>(byte);
    h *= 16777619u;
  }
  return h;
}

std::string CorpusConfig::to_json() const {
  nlohmann::ordered_json j;
  j["alphabet"] = utf8::encode(alphabet);
  j["num_utterances"] = num_utterances;
  j["min_words"] = min_words;
  j["max_words"] = max_words;
  j["min_word_length"] = min_word_length;
  j["max_word_length"] = max_word_length;
  j["n_mels"] = n_mels;
  return j.dump(2);
}

CorpusConfig CorpusConfig::from_json(std::string_view text) {
  auto j = nlohmann::json::parse(text.begin(), text.end());
  CorpusConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "alphabet") c.alphabet = utf8::decode(value.get<std::string>());
    else if (key == "num_utterances") c.num_utterances = value.get<std::size_t>();
    else if (key == "min_words") c.min_words = value.get<std::size_t>();
    else if (key == "max_words") c.max_words = value.get<std::size_t>();
    else if (key == "min_word_length") c.min_word_length = value.get<std::size_t>();
    else if (key == "max_word_length") c.max_word_length = value.get<std::size_t>();
    else if (key == "n_mels") c.n_mels = value.get<std::size_t>();
    else throw std::invalid_argument("corpus config: unknown field '" + key + "'");
  }
  return c;
}

std::vector<std::string> SyntheticCorpus::texts() const {
  std::vector<std::string> out;
  for (const auto& u : utterances) out.push_back(u.text);
  return out;
}

MelSpectrogram render_target(std::string_view text, std::size_t n_mels) {
  const std::u32string scalars = utf8::decode(text);
  const auto words = tokenize(text);
  if (words.empty()) throw EmptyGraph("text has no non-whitespace character");
  std::size_t frames = 0;
  for (auto [b, e] : words) frames += 2 * (e - b);
  frames += words.size() - 1;

  Tensor mel({frames, n_mels});
  std::size_t f = 0;
  for (std::size_t w = 0; w < words.size(); ++w) {
    if (w > 0) ++f;  // silence
    for (std::size_t i = words[w].first; i < words[w].second; ++i) {
      const std::size_t bin = stable_hash(scalars[i]) % n_mels;
      mel.at(f++, bin) = 1.0;
      mel.at(f++, bin) = 1.0;
    }
  }
  return MelSpectrogram::from_frames(std::move(mel));
}

SyntheticCorpus gen_corpus(const CorpusConfig& config, std::uint64_t seed) {
  if (config.alphabet.empty()) throw std::invalid_argument("gen_corpus: alphabet is empty");
  for (char32_t c : config.alphabet)
    if (utf8::is_space(c)) throw std::invalid_argument("gen_corpus: alphabet contains whitespace");
  if (config.min_words == 0 || config.min_words > config.max_words || config.min_word_length == 0 ||
      config.min_word_length > config.max_word_length || config.n_mels == 0) {
    throw std::invalid_argument("gen_corpus: inconsistent word/length bounds");
  }
  SyntheticCorpus corpus;
  corpus.seed = seed;
  corpus.config = config;
  for (char32_t c : config.alphabet) corpus.template_bins[c] = stable_hash(c) % config.n_mels;

  // Explicit modular draws keep the corpus identical across standard libraries.
  std::mt19937_64 rng(seed);
  auto draw = [&](std::size_t lo, std::size_t hi) { return lo + rng() % (hi - lo + 1); };
  for (std::size_t u = 0; u < config.num_utterances; ++u) {
    std::u32string text;
    const std::size_t words = draw(config.min_words, config.max_words);
    for (std::size_t w = 0; w < words; ++w) {
      if (w > 0) text.push_back(U' ');
      const std::size_t len = draw(config.min_word_length, config.max_word_length);
      for (std::size_t i = 0; i < len; ++i) text.push_back(config.alphabet[draw(0, config.alphabet.size() - 1)]);
    }
    std::string utf = utf8::encode(text);
    corpus.utterances.push_back({utf, render_target(utf, config.n_mels)});
  }
  return corpus;
}

std::string corpus_to_jsonl(const SyntheticCorpus& corpus) {
  std::ostringstream out;
  for (const auto& u : corpus.utterances) {
    nlohmann::ordered_json j;
    j["text"] = u.text;
    j["frames"] = nlohmann::json::array();
    for (std::size_t t = 0; t < u.mel.num_frames(); ++t) {
      auto row = u.mel.frames.row(t);
      j["frames"].push_back(std::vector<double>(row.begin(), row.end()));
    }
    out << j.dump() << '\n';
  }
  return out.str();
}

}  // namespace graphtts
