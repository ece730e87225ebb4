#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "revfraud/features/dataset.hpp"
#include "revfraud/ndmath/rng.hpp"
#include "revfraud/textrank/textrank.hpp"

namespace revfraud::attacksim {

using StopwordSet = std::set<std::string>;

/// Lowercases, strips symbols and drops stopwords. Sentences end at . ! ? ;
/// or a newline; apostrophes are deleted inside words, any other non
/// alphanumeric ASCII byte separates tokens. Bytes >= 0x80 are kept so UTF-8
/// words survive. Empty sentences are dropped.
std::vector<std::vector<std::string>> preprocess_sentences(const std::string& text, const StopwordSet& stopwords);

/// Flattened preprocess_sentences.
std::vector<std::string> preprocess(const std::string& text, const StopwordSet& stopwords);

/// One word per line; blank lines and '#' comments ignored.
StopwordSet parse_stopwords(std::istream& in);
StopwordSet load_stopwords(const std::string& path);

struct Lexicon {
  std::map<std::string, std::vector<std::string>> synonyms;
  std::map<std::string, std::vector<std::string>> antonyms;

  /// Lines of `word<TAB>syn|syn|...<TAB>ant|ant|...`; segments may be empty.
  /// A word listed as its own synonym is a format error.
  static Lexicon parse(std::istream& in);
  static Lexicon load(const std::string& path);
};

/// Union of the unique keywords (first-occurrence order) of four reviews,
/// sampled without replacement down to ceil(U / 4) words. Throws
/// EmptySelectionError when the union is empty.
std::vector<std::string> select_prompt_keywords(const std::array<std::vector<std::string>, 4>& keyword_sets,
                                                ndmath::Rng& rng);

/// Each keyword becomes a uniformly chosen synonym when it has any; then,
/// with probability 0.5, a uniformly chosen antonym of the original keyword
/// when it has any. Length and order are preserved.
std::vector<std::string> perturb_keywords(std::span<const std::string> keywords, const Lexicon& lexicon,
                                          ndmath::Rng& rng);

struct PromptExample {
  std::vector<std::string> keywords;
  std::string review;
};

struct Prompt {
  std::vector<PromptExample> examples;
  std::vector<std::string> query;

  /// "Q: w1, w2\nA: review" blocks joined by '\n'; the query block ends in
  /// "A:" with nothing after it.
  std::string render() const;
};

Prompt build_prompt(std::vector<PromptExample> examples, std::vector<std::string> query);

/// Keywords of the final "Q:" line of a rendered prompt.
std::vector<std::string> query_keywords_of(const std::string& rendered_prompt);

/// Text generator behind the fake-review pipeline. `generate` receives a
/// rendered prompt and returns one review; failures throw GenerationError.
class GeneratorClient {
 public:
  virtual ~GeneratorClient() = default;
  virtual std::string generate(const std::string& rendered_prompt) = 0;
};

/// Returns the query keywords joined by spaces. Deterministic.
class EchoGenerator : public GeneratorClient {
 public:
  std::string generate(const std::string& rendered_prompt) override;
};

/// Runs `/bin/sh -c command`, writes the prompt to its standard input and
/// reads one review from standard output. A nonzero exit status, a signal
/// or empty output is a failure.
class ExternalCommandGenerator : public GeneratorClient {
 public:
  explicit ExternalCommandGenerator(std::string command);
  std::string generate(const std::string& rendered_prompt) override;

 private:
  std::string command_;
};

struct GenerationConfig {
  StopwordSet stopwords;
  textrank::RankConfig rank;
  std::size_t retry_budget = 3;
};

struct GenerationReport {
  std::size_t groups_used = 0;
  std::size_t groups_skipped = 0;  // keyword union was empty
  std::size_t retries = 0;
};

/// Rows belong to `category` when their business-category feature equals it.
/// Shuffles the rows of `category` once, walks them in groups of four and
/// produces one generated review per group (reshuffling when a pass is
/// exhausted). Throws ConfigError when the category has fewer than four
/// reviews or yields no usable group in a full pass, GenerationError when a
/// group keeps failing beyond the retry budget.
std::vector<std::string> generate_fake_reviews(std::span<const features::ReviewRow> dataset,
                                               const features::FeatureSchema& schema, std::size_t category,
                                               std::size_t count, const Lexicon& lexicon,
                                               const textrank::PosTagger& tagger, GeneratorClient& generator,
                                               const GenerationConfig& config, ndmath::Rng& rng,
                                               GenerationReport* report = nullptr);

/// Pairs every text with an attribute record drawn uniformly with
/// replacement from `pool`. Rows get ids first_row_id, first_row_id + 1, ...,
/// user ids "fake-<row_id>" and label 1.
std::vector<features::ReviewRow> assign_random_attributes(std::span<const std::string> fake_texts,
                                                          std::span<const features::ProfileRecord> pool,
                                                          std::uint64_t first_row_id, ndmath::Rng& rng);

/// |fake| real rows drawn without replacement and labelled 0, appended to the
/// fakes, then shuffled. Throws ConfigError when there are too few real rows
/// and DataError when a fake row id collides with a real one.
std::vector<features::ReviewRow> merge_balanced(std::span<const features::ReviewRow> fake_rows,
                                                std::span<const features::ReviewRow> real_rows, ndmath::Rng& rng);

}  // namespace revfraud::attacksim
