#include "revfraud/textrank/textrank.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <utility>

#include "revfraud/errors.hpp"

namespace revfraud::textrank {

namespace {

std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

PosTag parse_pos_tag(const std::string& label) {
  const std::string l = lowercase(label);
  if (l == "noun") return PosTag::noun;
  if (l == "verb") return PosTag::verb;
  if (l == "adverb") return PosTag::adverb;
  if (l == "adjective") return PosTag::adjective;
  if (l == "other") return PosTag::other;
  throw DataError("unknown POS label '" + label + "'");
}

const char* to_string(PosTag tag) noexcept {
  switch (tag) {
    case PosTag::noun:
      return "noun";
    case PosTag::verb:
      return "verb";
    case PosTag::adverb:
      return "adverb";
    case PosTag::adjective:
      return "adjective";
    case PosTag::other:
      return "other";
  }
  return "other";
}

bool is_content_word(PosTag tag) noexcept { return tag != PosTag::other; }

std::size_t TokenGraph::index_of(const std::string& token) const {
  const auto it = std::lower_bound(nodes.begin(), nodes.end(), token);
  if (it == nodes.end() || *it != token) return static_cast<std::size_t>(-1);
  return static_cast<std::size_t>(it - nodes.begin());
}

bool TokenGraph::has_edge(const std::string& a, const std::string& b) const {
  const std::size_t ia = index_of(a);
  const std::size_t ib = index_of(b);
  if (ia == static_cast<std::size_t>(-1) || ib == static_cast<std::size_t>(-1)) return false;
  return std::binary_search(adjacency[ia].begin(), adjacency[ia].end(), ib);
}

std::size_t TokenGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& adj : adjacency) n += adj.size();
  return n / 2;
}

TokenGraph build_graph(const TokenizedReview& review, const RankConfig& config) {
  if (config.window < 2) throw ConfigError("textrank window must be at least 2");

  std::vector<std::vector<std::string>> eligible;
  std::set<std::string> vocabulary;
  for (const auto& sentence : review.sentences) {
    std::vector<std::string> words;
    for (const Token& t : sentence) {
      if (t.surface.empty() || !is_content_word(t.pos)) continue;
      words.push_back(lowercase(t.surface));
      vocabulary.insert(words.back());
    }
    eligible.push_back(std::move(words));
  }

  TokenGraph graph;
  graph.nodes.assign(vocabulary.begin(), vocabulary.end());
  std::vector<std::set<std::size_t>> neighbours(graph.nodes.size());
  for (const auto& words : eligible) {
    std::vector<std::size_t> ids;
    ids.reserve(words.size());
    for (const auto& w : words) ids.push_back(graph.index_of(w));
    // Every pair inside a window of `window` consecutive eligible tokens.
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const std::size_t end = std::min(ids.size(), i + config.window);
      for (std::size_t j = i + 1; j < end; ++j) {
        if (ids[i] == ids[j]) continue;
        neighbours[ids[i]].insert(ids[j]);
        neighbours[ids[j]].insert(ids[i]);
      }
    }
  }
  graph.adjacency.reserve(neighbours.size());
  for (const auto& n : neighbours) graph.adjacency.emplace_back(n.begin(), n.end());
  return graph;
}

std::vector<double> pagerank(const TokenGraph& graph, const RankConfig& config) {
  if (!(config.damping > 0.0 && config.damping < 1.0)) throw ConfigError("damping must lie in (0, 1)");
  const std::size_t n = graph.nodes.size();
  std::vector<double> scores(n, 1.0);
  std::vector<double> next(n, 0.0);
  const double base = 1.0 - config.damping;
  for (std::size_t iter = 0; iter < config.max_iterations; ++iter) {
    double max_change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double incoming = 0.0;
      for (std::size_t j : graph.adjacency[i]) {
        incoming += scores[j] / static_cast<double>(graph.adjacency[j].size());
      }
      next[i] = base + config.damping * incoming;
      max_change = std::max(max_change, std::abs(next[i] - scores[i]));
    }
    scores.swap(next);
    if (max_change < config.tolerance) break;
  }
  return scores;
}

ScoreMap to_score_map(const TokenGraph& graph, std::span<const double> scores) {
  if (scores.size() != graph.nodes.size()) throw ShapeError("score count does not match node count");
  ScoreMap out;
  for (std::size_t i = 0; i < scores.size(); ++i) out.emplace(graph.nodes[i], scores[i]);
  return out;
}

std::vector<std::string> top_keywords(const ScoreMap& scores, std::size_t top_n) {
  std::vector<std::pair<std::string, double>> ranked(scores.begin(), scores.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ranked.size() && i < top_n; ++i) out.push_back(ranked[i].first);
  return out;
}

std::vector<std::string> extract_keywords(const TokenizedReview& review, const RankConfig& config) {
  const TokenGraph graph = build_graph(review, config);
  if (graph.nodes.empty()) return {};
  const std::vector<double> scores = pagerank(graph, config);
  return top_keywords(to_score_map(graph, scores), config.top_n);
}

DictionaryTagger::DictionaryTagger(std::unordered_map<std::string, PosTag> entries, PosTag fallback)
    : entries_(std::move(entries)), fallback_(fallback) {}

DictionaryTagger DictionaryTagger::parse(std::istream& in, PosTag fallback) {
  std::unordered_map<std::string, PosTag> entries;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("POS lexicon line without TAB separator", line_start);
    try {
      entries[lowercase(line.substr(0, tab))] = parse_pos_tag(line.substr(tab + 1));
    } catch (const DataError& e) {
      throw FormatError(e.what(), line_start + tab + 1);
    }
  }
  return DictionaryTagger(std::move(entries), fallback);
}

DictionaryTagger DictionaryTagger::load(const std::string& path, PosTag fallback) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open POS lexicon '" + path + "'");
  return parse(in, fallback);
}

std::vector<PosTag> DictionaryTagger::tag(std::span<const std::string> tokens) const {
  std::vector<PosTag> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    const auto it = entries_.find(lowercase(t));
    out.push_back(it == entries_.end() ? fallback_ : it->second);
  }
  return out;
}

TokenizedReview tag_sentences(const std::vector<std::vector<std::string>>& sentences, const PosTagger& tagger) {
  TokenizedReview review;
  for (const auto& sentence : sentences) {
    const std::vector<PosTag> tags = tagger.tag(sentence);
    if (tags.size() != sentence.size()) throw ContractError("tagger returned wrong number of labels");
    std::vector<Token> tokens;
    tokens.reserve(sentence.size());
    for (std::size_t i = 0; i < sentence.size(); ++i) tokens.push_back({sentence[i], tags[i]});
    review.sentences.push_back(std::move(tokens));
  }
  return review;
}

}  // namespace revfraud::textrank
