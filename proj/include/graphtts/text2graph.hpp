#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace graphtts {

class UnknownSymbol : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EmptyGraph : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class MalformedDocument : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Character inventory. Id 0 is reserved for the unknown symbol whether or
/// not UNK mapping is enabled; real symbols start at 1.
class Vocab {
 public:
  static constexpr std::size_t kUnkId = 0;
  static constexpr char32_t kUnkSymbol = U'�';

  explicit Vocab(bool unk_enabled = true) : unk_enabled_(unk_enabled) {}

  /// Every non-whitespace scalar of `texts`, sorted by code point.
  static Vocab from_texts(std::span<const std::string> texts, bool unk_enabled = true);
  static Vocab from_symbols(std::u32string_view symbols, bool unk_enabled = true);

  std::size_t add(char32_t symbol);
  std::optional<std::size_t> find(char32_t symbol) const;
  /// Throws UnknownSymbol for unseen symbols when UNK mapping is disabled.
  std::size_t id_of(char32_t symbol) const;
  char32_t symbol(std::size_t id) const;

  std::size_t size() const { return symbols_.size() + 1; }
  bool unk_enabled() const { return unk_enabled_; }
  void set_unk_enabled(bool enabled) { unk_enabled_ = enabled; }
  /// Real symbols in id order (id = position + 1).
  const std::u32string& symbols() const { return symbols_; }

  bool operator==(const Vocab&) const = default;

 private:
  bool unk_enabled_;
  std::u32string symbols_;
};

enum class EdgeType : std::uint8_t { kDirected = 0, kReverse = 1, kSequential = 2 };
inline constexpr std::size_t kNumEdgeTypes = 3;
inline constexpr std::array<EdgeType, kNumEdgeTypes> kEdgeTypes = {
    EdgeType::kDirected, EdgeType::kReverse, EdgeType::kSequential};

std::string_view edge_type_name(EdgeType type);
std::optional<EdgeType> parse_edge_type(std::string_view name);

struct CharNode {
  std::size_t index = 0;
  char32_t symbol = 0;
  std::size_t symbol_id = 0;
  std::size_t word_index = 0;
  std::size_t position_in_word = 0;

  bool operator==(const CharNode&) const = default;
};

struct Edge {
  std::size_t source = 0;
  std::size_t target = 0;
  EdgeType type = EdgeType::kDirected;

  bool operator==(const Edge&) const = default;
  auto operator<=>(const Edge&) const = default;
};

/// Edge rows kept in canonical (source, target, type) order.
class EdgeTable {
 public:
  EdgeTable() = default;
  /// Sorts the rows and validates them against `num_nodes`; throws
  /// std::invalid_argument on a self-edge, duplicate, missing mirror or
  /// out-of-range index.
  EdgeTable(std::vector<Edge> rows, std::size_t num_nodes);

  const std::vector<Edge>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  std::size_t count(EdgeType type) const;
  bool contains(const Edge& e) const;

  /// (E, 2, 3) layout: entry [e][k][t] holds endpoint k (0 = source,
  /// 1 = target) of row e when t is the row's type, and -1 otherwise.
  std::vector<std::int64_t> embedding() const;
  static EdgeTable from_embedding(std::span<const std::int64_t> values, std::size_t num_nodes);

  bool operator==(const EdgeTable&) const = default;

 private:
  std::vector<Edge> rows_;
};

struct CharGraph {
  std::string text;
  std::vector<CharNode> nodes;
  EdgeTable edges;

  std::size_t num_nodes() const { return nodes.size(); }
  std::vector<std::size_t> symbol_ids() const;
  bool operator==(const CharGraph&) const = default;
};

/// Half-open [begin, end) span in Unicode scalar offsets.
using WordSpan = std::pair<std::size_t, std::size_t>;

/// Maximal runs of non-whitespace scalars, in order.
std::vector<WordSpan> tokenize(std::string_view text);

CharGraph build_graph(std::string_view text, const Vocab& vocab);

struct SparseAdjacency {
  std::size_t n = 0;
  /// Set entries, sorted (row, col).
  std::vector<std::pair<std::size_t, std::size_t>> entries;

  bool contains(std::size_t row, std::size_t col) const;
  std::vector<std::vector<bool>> dense() const;
};

SparseAdjacency adjacency(const CharGraph& graph, EdgeType type);

/// Breadth-first hop counts from `source` ignoring edge direction;
/// unreachable nodes get SIZE_MAX.
std::vector<std::size_t> hop_distances(const CharGraph& graph, std::size_t source);
bool weakly_connected(const CharGraph& graph);

std::string export_dot(const CharGraph& graph);

/// JSON document {text, nodes[], edges[]} with edges as [source, target, type_name].
std::string serialize_graph(const CharGraph& graph);
/// Throws MalformedDocument naming the line (syntax errors) or field path.
CharGraph parse_graph(std::string_view document);

}  // namespace graphtts
