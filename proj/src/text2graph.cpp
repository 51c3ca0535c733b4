#include "graphtts/text2graph.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "graphtts/utf8.hpp"

namespace graphtts {

// ---------------------------------------------------------------- Vocab

Vocab Vocab::from_texts(std::span<const std::string> texts, bool unk_enabled) {
  std::set<char32_t> seen;
  for (const auto& t : texts)
    for (char32_t c : utf8::decode(t))
      if (!utf8::is_space(c)) seen.insert(c);
  Vocab v(unk_enabled);
  for (char32_t c : seen) v.add(c);
  return v;
}

Vocab Vocab::from_symbols(std::u32string_view symbols, bool unk_enabled) {
  Vocab v(unk_enabled);
  for (char32_t c : symbols) v.add(c);
  return v;
}

std::size_t Vocab::add(char32_t symbol) {
  if (auto id = find(symbol)) return *id;
  if (utf8::is_space(symbol)) throw std::invalid_argument("whitespace cannot be a vocabulary symbol");
  symbols_.push_back(symbol);
  return symbols_.size();
}

std::optional<std::size_t> Vocab::find(char32_t symbol) const {
  auto pos = symbols_.find(symbol);
  if (pos == std::u32string::npos) return std::nullopt;
  return pos + 1;
}

std::size_t Vocab::id_of(char32_t symbol) const {
  if (auto id = find(symbol)) return *id;
  if (unk_enabled_) return kUnkId;
  throw UnknownSymbol("symbol '" + utf8::encode(symbol) + "' (U+" +
                      [&] {
                        std::ostringstream s;
                        s << std::hex << std::uppercase << static_cast<std::uint32_t>(symbol);
                        return s.str();
                      }() +
                      ") is not in the vocabulary");
}

char32_t Vocab::symbol(std::size_t id) const {
  if (id == kUnkId) return kUnkSymbol;
  if (id > symbols_.size()) throw std::out_of_range("symbol id " + std::to_string(id) + " out of range");
  return symbols_[id - 1];
}

// ---------------------------------------------------------------- edges

std::string_view edge_type_name(EdgeType type) {
  switch (type) {
    case EdgeType::kDirected: return "DIRECTED";
    case EdgeType::kReverse: return "REVERSE";
    case EdgeType::kSequential: return "SEQUENTIAL";
  }
  return "?";
}

std::optional<EdgeType> parse_edge_type(std::string_view name) {
  for (EdgeType t : kEdgeTypes)
    if (edge_type_name(t) == name) return t;
  return std::nullopt;
}

EdgeTable::EdgeTable(std::vector<Edge> rows, std::size_t num_nodes) : rows_(std::move(rows)) {
  std::sort(rows_.begin(), rows_.end());
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const Edge& e = rows_[i];
    const std::string where = "edge " + std::to_string(e.source) + "->" + std::to_string(e.target) +
                              " " + std::string(edge_type_name(e.type));
    if (e.source >= num_nodes || e.target >= num_nodes) {
      throw std::invalid_argument(where + ": index out of range for " + std::to_string(num_nodes) + " nodes");
    }
    if (e.source == e.target) throw std::invalid_argument(where + ": self-edge");
    if (i > 0 && rows_[i - 1] == e) throw std::invalid_argument(where + ": duplicate");
  }
  for (const Edge& e : rows_) {
    if (e.type != EdgeType::kReverse && !contains({e.target, e.source, EdgeType::kReverse})) {
      throw std::invalid_argument("edge " + std::to_string(e.source) + "->" + std::to_string(e.target) +
                                  " has no REVERSE mirror");
    }
  }
}

std::size_t EdgeTable::count(EdgeType type) const {
  return static_cast<std::size_t>(
      std::count_if(rows_.begin(), rows_.end(), [type](const Edge& e) { return e.type == type; }));
}

bool EdgeTable::contains(const Edge& e) const {
  return std::binary_search(rows_.begin(), rows_.end(), e);
}

std::vector<std::int64_t> EdgeTable::embedding() const {
  std::vector<std::int64_t> out(rows_.size() * 2 * kNumEdgeTypes, -1);
  for (std::size_t e = 0; e < rows_.size(); ++e) {
    const auto t = static_cast<std::size_t>(rows_[e].type);
    out[(e * 2 + 0) * kNumEdgeTypes + t] = static_cast<std::int64_t>(rows_[e].source);
    out[(e * 2 + 1) * kNumEdgeTypes + t] = static_cast<std::int64_t>(rows_[e].target);
  }
  return out;
}

EdgeTable EdgeTable::from_embedding(std::span<const std::int64_t> values, std::size_t num_nodes) {
  constexpr std::size_t kRow = 2 * kNumEdgeTypes;
  if (values.size() % kRow != 0) throw std::invalid_argument("edge embedding size is not a multiple of 6");
  std::vector<Edge> rows;
  for (std::size_t e = 0; e < values.size() / kRow; ++e) {
    std::optional<Edge> edge;
    for (std::size_t t = 0; t < kNumEdgeTypes; ++t) {
      const auto src = values[e * kRow + t];
      const auto dst = values[e * kRow + kNumEdgeTypes + t];
      if ((src < 0) != (dst < 0)) throw std::invalid_argument("edge embedding row " + std::to_string(e) + " is inconsistent");
      if (src < 0) continue;
      if (edge) throw std::invalid_argument("edge embedding row " + std::to_string(e) + " is not one-hot");
      edge = Edge{static_cast<std::size_t>(src), static_cast<std::size_t>(dst), kEdgeTypes[t]};
    }
    if (!edge) throw std::invalid_argument("edge embedding row " + std::to_string(e) + " has no type");
    rows.push_back(*edge);
  }
  return EdgeTable(std::move(rows), num_nodes);
}

// ---------------------------------------------------------------- graph

std::vector<std::size_t> CharGraph::symbol_ids() const {
  std::vector<std::size_t> ids;
  ids.reserve(nodes.size());
  for (const auto& n : nodes) ids.push_back(n.symbol_id);
  return ids;
}

namespace {

std::vector<WordSpan> tokenize_scalars(std::u32string_view scalars) {
  std::vector<WordSpan> spans;
  std::size_t i = 0;
  while (i < scalars.size()) {
    while (i < scalars.size() && utf8::is_space(scalars[i])) ++i;
    if (i == scalars.size()) break;
    const std::size_t begin = i;
    while (i < scalars.size() && !utf8::is_space(scalars[i])) ++i;
    spans.emplace_back(begin, i);
  }
  return spans;
}

}  // namespace

std::vector<WordSpan> tokenize(std::string_view text) { return tokenize_scalars(utf8::decode(text)); }

CharGraph build_graph(std::string_view text, const Vocab& vocab) {
  const std::u32string scalars = utf8::decode(text);
  const auto words = tokenize_scalars(scalars);
  if (words.empty()) throw EmptyGraph("text has no non-whitespace character");

  CharGraph g;
  g.text = std::string(text);
  std::vector<Edge> edges;
  for (std::size_t w = 0; w < words.size(); ++w) {
    const auto [begin, end] = words[w];
    const std::size_t first = g.nodes.size();
    if (w > 0) {
      edges.push_back({first - 1, first, EdgeType::kSequential});
      edges.push_back({first, first - 1, EdgeType::kReverse});
    }
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t idx = g.nodes.size();
      g.nodes.push_back({idx, scalars[i], vocab.id_of(scalars[i]), w, i - begin});
      if (i > begin) {
        edges.push_back({idx - 1, idx, EdgeType::kDirected});
        edges.push_back({idx, idx - 1, EdgeType::kReverse});
      }
    }
  }
  g.edges = EdgeTable(std::move(edges), g.nodes.size());
  return g;
}

bool SparseAdjacency::contains(std::size_t row, std::size_t col) const {
  return std::binary_search(entries.begin(), entries.end(), std::make_pair(row, col));
}

std::vector<std::vector<bool>> SparseAdjacency::dense() const {
  std::vector<std::vector<bool>> m(n, std::vector<bool>(n, false));
  for (auto [r, c] : entries) m[r][c] = true;
  return m;
}

SparseAdjacency adjacency(const CharGraph& graph, EdgeType type) {
  SparseAdjacency a;
  a.n = graph.num_nodes();
  for (const Edge& e : graph.edges.rows())
    if (e.type == type) a.entries.emplace_back(e.source, e.target);
  std::sort(a.entries.begin(), a.entries.end());
  return a;
}

std::vector<std::size_t> hop_distances(const CharGraph& graph, std::size_t source) {
  const std::size_t n = graph.num_nodes();
  std::vector<std::vector<std::size_t>> nbrs(n);
  for (const Edge& e : graph.edges.rows()) {
    nbrs[e.source].push_back(e.target);
    nbrs[e.target].push_back(e.source);
  }
  std::vector<std::size_t> dist(n, std::numeric_limits<std::size_t>::max());
  std::deque<std::size_t> queue{source};
  dist.at(source) = 0;
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    for (std::size_t v : nbrs[u]) {
      if (dist[v] == std::numeric_limits<std::size_t>::max()) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

bool weakly_connected(const CharGraph& graph) {
  if (graph.num_nodes() == 0) return true;
  const auto dist = hop_distances(graph, 0);
  return std::none_of(dist.begin(), dist.end(),
                      [](std::size_t d) { return d == std::numeric_limits<std::size_t>::max(); });
}

// ---------------------------------------------------------------- export

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string export_dot(const CharGraph& graph) {
  std::ostringstream out;
  out << "digraph CharGraph {\n";
  for (const CharNode& n : graph.nodes) {
    out << "  n" << n.index << " [label=\"" << dot_escape(utf8::encode(n.symbol)) << "\", word="
        << n.word_index << ", pos=" << n.position_in_word << "];\n";
  }
  for (const Edge& e : graph.edges.rows()) {
    out << "  n" << e.source << " -> n" << e.target << " [type=\"" << edge_type_name(e.type) << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

std::string serialize_graph(const CharGraph& graph) {
  nlohmann::ordered_json doc;
  doc["text"] = graph.text;
  doc["nodes"] = nlohmann::ordered_json::array();
  for (const CharNode& n : graph.nodes) {
    doc["nodes"].push_back({{"index", n.index},
                            {"symbol", utf8::encode(n.symbol)},
                            {"symbol_id", n.symbol_id},
                            {"word_index", n.word_index},
                            {"position_in_word", n.position_in_word}});
  }
  doc["edges"] = nlohmann::ordered_json::array();
  for (const Edge& e : graph.edges.rows()) {
    doc["edges"].push_back({e.source, e.target, std::string(edge_type_name(e.type))});
  }
  return doc.dump(2) + "\n";
}

namespace {

using Json = nlohmann::json;

[[noreturn]] void malformed(const std::string& field, const std::string& what) {
  throw MalformedDocument("field " + field + ": " + what);
}

const Json& member(const Json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) malformed(path + "." + key, "missing");
  return *it;
}

std::size_t as_index(const Json& v, const std::string& path) {
  if (!v.is_number_unsigned()) malformed(path, "expected a non-negative integer");
  return v.get<std::size_t>();
}

std::pair<std::size_t, std::size_t> line_col(std::string_view doc, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < doc.size(); ++i) {
    if (doc[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

CharGraph parse_graph(std::string_view document) {
  Json doc;
  try {
    doc = Json::parse(document.begin(), document.end());
  } catch (const Json::parse_error& e) {
    const auto [line, col] = line_col(document, e.byte == 0 ? 0 : e.byte - 1);
    throw MalformedDocument("line " + std::to_string(line) + ", column " + std::to_string(col) +
                            ": " + e.what());
  }
  if (!doc.is_object()) malformed("$", "expected an object");

  CharGraph g;
  const Json& text = member(doc, "text", "$");
  if (!text.is_string()) malformed("$.text", "expected a string");
  g.text = text.get<std::string>();

  const Json& nodes = member(doc, "nodes", "$");
  if (!nodes.is_array()) malformed("$.nodes", "expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string path = "$.nodes[" + std::to_string(i) + "]";
    const Json& jn = nodes[i];
    if (!jn.is_object()) malformed(path, "expected an object");
    CharNode n;
    n.index = as_index(member(jn, "index", path), path + ".index");
    if (n.index != i) malformed(path + ".index", "expected " + std::to_string(i));
    const Json& sym = member(jn, "symbol", path);
    if (!sym.is_string()) malformed(path + ".symbol", "expected a string");
    std::u32string decoded;
    try {
      decoded = utf8::decode(sym.get<std::string>());
    } catch (const utf8::DecodeError& e) {
      malformed(path + ".symbol", e.what());
    }
    if (decoded.size() != 1) malformed(path + ".symbol", "expected exactly one character");
    n.symbol = decoded[0];
    n.symbol_id = as_index(member(jn, "symbol_id", path), path + ".symbol_id");
    n.word_index = as_index(member(jn, "word_index", path), path + ".word_index");
    n.position_in_word = as_index(member(jn, "position_in_word", path), path + ".position_in_word");
    if (i > 0 && n.word_index < g.nodes.back().word_index) {
      malformed(path + ".word_index", "must be non-decreasing");
    }
    g.nodes.push_back(n);
  }

  const Json& edges = member(doc, "edges", "$");
  if (!edges.is_array()) malformed("$.edges", "expected an array");
  std::vector<Edge> rows;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string path = "$.edges[" + std::to_string(i) + "]";
    const Json& je = edges[i];
    if (!je.is_array() || je.size() != 3) malformed(path, "expected [source, target, type]");
    Edge e;
    e.source = as_index(je[0], path + "[0]");
    e.target = as_index(je[1], path + "[1]");
    if (!je[2].is_string()) malformed(path + "[2]", "expected an edge type name");
    auto type = parse_edge_type(je[2].get<std::string>());
    if (!type) malformed(path + "[2]", "unknown edge type '" + je[2].get<std::string>() + "'");
    e.type = *type;
    rows.push_back(e);
  }
  try {
    g.edges = EdgeTable(std::move(rows), g.nodes.size());
  } catch (const std::invalid_argument& e) {
    malformed("$.edges", e.what());
  }
  return g;
}

}  // namespace graphtts
