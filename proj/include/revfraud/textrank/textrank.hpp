#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace revfraud::textrank {

enum class PosTag : std::uint8_t { noun, verb, adverb, adjective, other };

PosTag parse_pos_tag(const std::string& label);
const char* to_string(PosTag tag) noexcept;
bool is_content_word(PosTag tag) noexcept;

struct Token {
  std::string surface;
  PosTag pos = PosTag::other;
};

struct TokenizedReview {
  std::vector<std::vector<Token>> sentences;
};

struct RankConfig {
  double damping = 0.85;
  std::size_t window = 4;
  std::size_t top_n = 10;
  double tolerance = 1e-6;
  std::size_t max_iterations = 100;
};

/// Undirected, unweighted co-occurrence graph. `nodes` is sorted; adjacency
/// lists hold sorted node indices, are symmetric and contain no self-loops.
struct TokenGraph {
  std::vector<std::string> nodes;
  std::vector<std::vector<std::size_t>> adjacency;

  std::size_t index_of(const std::string& token) const;  // npos when absent
  bool has_edge(const std::string& a, const std::string& b) const;
  std::size_t edge_count() const;
};

using ScoreMap = std::map<std::string, double>;

TokenGraph build_graph(const TokenizedReview& review, const RankConfig& config);

/// Scores indexed like graph.nodes.
std::vector<double> pagerank(const TokenGraph& graph, const RankConfig& config);

ScoreMap to_score_map(const TokenGraph& graph, std::span<const double> scores);

/// Highest scores first, ties broken by lexicographic token order.
std::vector<std::string> top_keywords(const ScoreMap& scores, std::size_t top_n);

std::vector<std::string> extract_keywords(const TokenizedReview& review, const RankConfig& config);

/// Assigns one POS label per token.
class PosTagger {
 public:
  virtual ~PosTagger() = default;
  virtual std::vector<PosTag> tag(std::span<const std::string> tokens) const = 0;
};

/// Looks tokens up in a word -> tag dictionary; unknown words get `fallback`.
class DictionaryTagger : public PosTagger {
 public:
  explicit DictionaryTagger(std::unordered_map<std::string, PosTag> entries, PosTag fallback = PosTag::other);

  /// Lines of `word<TAB>tag`, tags named noun|verb|adverb|adjective|other.
  static DictionaryTagger parse(std::istream& in, PosTag fallback = PosTag::other);
  static DictionaryTagger load(const std::string& path, PosTag fallback = PosTag::other);

  std::vector<PosTag> tag(std::span<const std::string> tokens) const override;

 private:
  std::unordered_map<std::string, PosTag> entries_;
  PosTag fallback_;
};

/// Attaches tags from `tagger` to already-split sentences.
TokenizedReview tag_sentences(const std::vector<std::vector<std::string>>& sentences, const PosTagger& tagger);

}  // namespace revfraud::textrank
