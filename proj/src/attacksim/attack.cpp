#include <algorithm>
#include <numeric>
#include <set>

#include "revfraud/attacksim/attacksim.hpp"
#include "revfraud/errors.hpp"

namespace revfraud::attacksim {

std::vector<std::string> select_prompt_keywords(const std::array<std::vector<std::string>, 4>& keyword_sets,
                                                ndmath::Rng& rng) {
  std::vector<std::string> pool;
  std::set<std::string> seen;
  for (const auto& set : keyword_sets) {
    for (const auto& w : set) {
      if (seen.insert(w).second) pool.push_back(w);
    }
  }
  if (pool.empty()) throw EmptySelectionError("no keywords in any of the four reviews");
  const std::size_t take = (pool.size() + 3) / 4;
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + rng.index(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return pool;
}

std::vector<std::string> perturb_keywords(std::span<const std::string> keywords, const Lexicon& lexicon,
                                          ndmath::Rng& rng) {
  std::vector<std::string> out;
  out.reserve(keywords.size());
  for (const auto& kw : keywords) {
    std::string word = kw;
    if (const auto it = lexicon.synonyms.find(kw); it != lexicon.synonyms.end() && !it->second.empty()) {
      word = it->second[rng.index(it->second.size())];
    }
    const bool flip = rng.bernoulli(0.5);
    if (const auto it = lexicon.antonyms.find(kw); flip && it != lexicon.antonyms.end() && !it->second.empty()) {
      word = it->second[rng.index(it->second.size())];
    }
    out.push_back(std::move(word));
  }
  return out;
}

std::vector<std::string> generate_fake_reviews(std::span<const features::ReviewRow> dataset,
                                               const features::FeatureSchema& schema, std::size_t category,
                                               std::size_t count, const Lexicon& lexicon,
                                               const textrank::PosTagger& tagger, GeneratorClient& generator,
                                               const GenerationConfig& config, ndmath::Rng& rng,
                                               GenerationReport* report) {
  GenerationReport local;
  GenerationReport& rep = report ? *report : local;
  if (count == 0) return {};

  const std::size_t cat_feature = schema.index_of(features::feature_names::kBusinessCategory);
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].attributes.values.at(cat_feature) == static_cast<double>(category)) members.push_back(i);
  }
  if (members.size() < 4) {
    throw ConfigError("category " + std::to_string(category) + " has " + std::to_string(members.size()) +
                      " reviews; at least 4 are needed");
  }

  // Keywords depend only on the review, so extract them once per row.
  std::vector<std::optional<std::vector<std::string>>> keyword_cache(dataset.size());
  auto keywords_for = [&](std::size_t row) -> const std::vector<std::string>& {
    auto& slot = keyword_cache[row];
    if (!slot) {
      const auto sentences = preprocess_sentences(dataset[row].text, config.stopwords);
      slot = textrank::extract_keywords(textrank::tag_sentences(sentences, tagger), config.rank);
    }
    return *slot;
  };

  std::vector<std::string> out;
  rng.shuffle(std::span<std::size_t>(members));
  std::size_t pos = 0;
  std::size_t usable_this_pass = 0;
  while (out.size() < count) {
    if (pos + 4 > members.size()) {
      if (usable_this_pass == 0) {
        throw ConfigError("category " + std::to_string(category) + " produced no usable keyword group");
      }
      rng.shuffle(std::span<std::size_t>(members));
      pos = 0;
      usable_this_pass = 0;
    }
    std::array<std::vector<std::string>, 4> keyword_sets;
    std::vector<PromptExample> examples;
    for (std::size_t g = 0; g < 4; ++g) {
      const std::size_t row = members[pos + g];
      keyword_sets[g] = keywords_for(row);
      examples.push_back({keyword_sets[g], dataset[row].text});
    }
    pos += 4;

    std::vector<std::string> selected;
    try {
      selected = select_prompt_keywords(keyword_sets, rng);
    } catch (const EmptySelectionError&) {
      ++rep.groups_skipped;
      continue;
    }
    ++usable_this_pass;
    ++rep.groups_used;

    for (std::size_t attempt = 0;; ++attempt) {
      if (attempt > 0) selected = select_prompt_keywords(keyword_sets, rng);
      const Prompt prompt = build_prompt(examples, perturb_keywords(selected, lexicon, rng));
      try {
        out.push_back(generator.generate(prompt.render()));
        break;
      } catch (const GenerationError& e) {
        if (attempt >= config.retry_budget) {
          throw GenerationError(std::string("generation failed after ") + std::to_string(attempt + 1) +
                                " attempts: " + e.what());
        }
        ++rep.retries;
      }
    }
  }
  return out;
}

std::vector<features::ReviewRow> assign_random_attributes(std::span<const std::string> fake_texts,
                                                          std::span<const features::ProfileRecord> pool,
                                                          std::uint64_t first_row_id, ndmath::Rng& rng) {
  if (pool.empty()) throw ConfigError("attribute pool is empty");
  std::vector<features::ReviewRow> rows;
  rows.reserve(fake_texts.size());
  for (std::size_t i = 0; i < fake_texts.size(); ++i) {
    features::ReviewRow row;
    row.row_id = first_row_id + i;
    row.user_id = "fake-" + std::to_string(row.row_id);
    row.attributes = pool[rng.index(pool.size())];
    row.label = features::kFraudulent;
    row.text = fake_texts[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<features::ReviewRow> merge_balanced(std::span<const features::ReviewRow> fake_rows,
                                                std::span<const features::ReviewRow> real_rows, ndmath::Rng& rng) {
  if (real_rows.size() < fake_rows.size()) {
    throw ConfigError("merge_balanced: " + std::to_string(real_rows.size()) + " real rows cannot balance " +
                      std::to_string(fake_rows.size()) + " fakes");
  }
  std::set<std::uint64_t> fake_ids;
  for (const auto& f : fake_rows) fake_ids.insert(f.row_id);

  std::vector<std::size_t> idx(real_rows.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < fake_rows.size(); ++i) {
    const std::size_t j = i + rng.index(idx.size() - i);
    std::swap(idx[i], idx[j]);
  }

  std::vector<features::ReviewRow> out;
  out.reserve(2 * fake_rows.size());
  for (const auto& f : fake_rows) {
    out.push_back(f);
    out.back().label = features::kFraudulent;
  }
  for (std::size_t i = 0; i < fake_rows.size(); ++i) {
    const auto& real = real_rows[idx[i]];
    if (fake_ids.count(real.row_id)) {
      throw DataError("row id " + std::to_string(real.row_id) + " used by both a fake and a real row");
    }
    out.push_back(real);
    out.back().label = features::kGenuine;
  }
  rng.shuffle(std::span<features::ReviewRow>(out));
  return out;
}

}  // namespace revfraud::attacksim
