#pragma once

// Test-only reference implementations, written independently of the library
// code paths they check.

#include <random>
#include <set>
#include <string>
#include <tuple>

#include "graphtts/text2graph.hpp"
#include "graphtts/utf8.hpp"

namespace graphtts::oracle {

using EdgeTriple = std::tuple<std::size_t, std::size_t, EdgeType>;

/// Walks every pair of consecutive non-whitespace characters: adjacent in the
/// raw text means same word (DIRECTED), separated by whitespace means a word
/// boundary (SEQUENTIAL). Each forward edge gets a REVERSE twin.
inline std::set<EdgeTriple> brute_force_edges(const std::string& text) {
  const std::u32string s = utf8::decode(text);
  std::set<EdgeTriple> edges;
  std::size_t node = 0;
  std::size_t last_pos = 0;
  bool have_last = false;
  for (std::size_t pos = 0; pos < s.size(); ++pos) {
    if (utf8::is_space(s[pos])) continue;
    if (have_last) {
      const EdgeType t = (pos == last_pos + 1) ? EdgeType::kDirected : EdgeType::kSequential;
      edges.emplace(node - 1, node, t);
      edges.emplace(node, node - 1, EdgeType::kReverse);
    }
    have_last = true;
    last_pos = pos;
    ++node;
  }
  return edges;
}

inline std::set<EdgeTriple> edge_set(const CharGraph& g) {
  std::set<EdgeTriple> out;
  for (const Edge& e : g.edges.rows()) out.emplace(e.source, e.target, e.type);
  return out;
}

/// Random text of 1..max_words words, word length 1..max_len, drawn from the
/// first `alphabet_size` symbols of a fixed 30-symbol alphabet, with random
/// runs of spaces, tabs and newlines as separators.
inline std::string random_text(std::mt19937_64& rng, std::size_t max_words = 8, std::size_t max_len = 6,
                               std::size_t alphabet_size = 30) {
  static const std::u32string alphabet = U"abcdefghijklmnopqrstuvwxyz.,!é";
  static const std::u32string spaces = U" \t\n";
  std::u32string text;
  if (rng() % 4 == 0) text.push_back(spaces[rng() % spaces.size()]);
  const std::size_t words = 1 + rng() % max_words;
  for (std::size_t w = 0; w < words; ++w) {
    if (w > 0) {
      const std::size_t gap = 1 + rng() % 2;
      for (std::size_t g = 0; g < gap; ++g) text.push_back(spaces[rng() % spaces.size()]);
    }
    const std::size_t len = 1 + rng() % max_len;
    for (std::size_t i = 0; i < len; ++i) text.push_back(alphabet[rng() % alphabet_size]);
  }
  return utf8::encode(text);
}

}  // namespace graphtts::oracle

namespace graphtts::oracle {

/// Relabels node i as perm[i] in nodes and edge endpoints.
inline CharGraph permute_graph(const CharGraph& g, const std::vector<std::size_t>& perm) {
  CharGraph out;
  out.text = g.text;
  out.nodes.resize(g.num_nodes());
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    CharNode n = g.nodes[i];
    n.index = perm[i];
    out.nodes[perm[i]] = n;
  }
  std::vector<Edge> rows;
  for (const Edge& e : g.edges.rows()) rows.push_back({perm[e.source], perm[e.target], e.type});
  out.edges = EdgeTable(std::move(rows), g.num_nodes());
  return out;
}

}  // namespace graphtts::oracle
