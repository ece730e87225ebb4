#include "revfraud/sampler/sampler.hpp"

#include <numeric>
#include <string>
#include <unordered_map>

#include "revfraud/errors.hpp"
#include "revfraud/ndmath/rng.hpp"

namespace revfraud::sampler {

namespace {

double dot(const features::EmbeddingVector& a, const features::EmbeddingVector& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

/// Set of row positions supporting O(1) insert-free removal and iteration.
class IndexSet {
 public:
  void add(std::size_t v) {
    where_[v] = items_.size();
    items_.push_back(v);
  }

  void remove(std::size_t v) {
    const auto it = where_.find(v);
    if (it == where_.end()) return;
    const std::size_t pos = it->second;
    const std::size_t last = items_.back();
    items_[pos] = last;
    where_[last] = pos;
    items_.pop_back();
    where_.erase(v);
  }

  bool contains(std::size_t v) const { return where_.count(v) != 0; }
  bool empty() const { return items_.empty(); }
  std::size_t size() const { return items_.size(); }
  std::size_t at(std::size_t i) const { return items_[i]; }
  const std::vector<std::size_t>& items() const { return items_; }

 private:
  std::vector<std::size_t> items_;
  std::unordered_map<std::size_t, std::size_t> where_;
};

}  // namespace

std::uint64_t most_dissimilar_review(const features::EmbeddingVector& target, std::span<const Candidate> candidates,
                                     DissimilarityMode mode) {
  if (candidates.empty()) throw NoCandidateError("most_dissimilar_review: no candidates");
  bool have = false;
  double best_score = 0.0;
  std::uint64_t best_id = 0;
  for (const Candidate& c : candidates) {
    if (c.embedding == nullptr || c.embedding->size() != target.size()) {
      throw ShapeError("candidate " + std::to_string(c.row_id) + " has mismatched embedding dimension");
    }
    const double raw = dot(target, *c.embedding);
    const double score = mode == DissimilarityMode::argmax_dot ? raw : -raw;
    if (!have || score > best_score || (score == best_score && c.row_id < best_id)) {
      have = true;
      best_score = score;
      best_id = c.row_id;
    }
  }
  return best_id;
}

SampleResult sample_pairs(std::span<const features::ReviewRow> rows, const features::EmbeddingStore& embeddings,
                          const SamplerConfig& config) {
  if (!(config.keep_probability > 0.0 && config.keep_probability <= 1.0)) {
    throw ConfigError("keep probability must lie in (0, 1]");
  }

  // Users in first-appearance order so that user indices are deterministic.
  std::unordered_map<std::string, std::size_t> user_index;
  std::vector<std::size_t> row_user(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto [it, inserted] = user_index.emplace(rows[i].user_id, user_index.size());
    row_user[i] = it->second;
    (void)embeddings.at(rows[i].row_id);
  }
  const std::size_t n_users = user_index.size();
  if (n_users < 2) throw ConfigError("sample_pairs needs at least two distinct users");

  std::vector<IndexSet> unprocessed_by_user(n_users);
  for (std::size_t i = 0; i < rows.size(); ++i) unprocessed_by_user[row_user[i]].add(i);
  IndexSet active_users;
  for (std::size_t u = 0; u < n_users; ++u) active_users.add(u);

  std::vector<bool> processed(rows.size(), false);
  auto consume = [&](std::size_t i) {
    processed[i] = true;
    auto& set = unprocessed_by_user[row_user[i]];
    set.remove(i);
    if (set.empty()) active_users.remove(row_user[i]);
  };

  SampleResult result;
  result.rows.assign(rows.begin(), rows.end());

  ndmath::Rng rng(config.rng_seed);
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<Candidate> candidates;
  for (std::size_t k : order) {
    if (processed[k]) continue;
    const bool keep = rng.bernoulli(config.keep_probability);
    const std::size_t user_i = row_user[k];
    consume(k);
    if (keep) {
      result.rows[k].label = features::kGenuine;
      ++result.report.kept;
      continue;
    }

    // Users other than user_i that still own unprocessed rows.
    const std::size_t pool = active_users.size() - (active_users.contains(user_i) ? 1 : 0);
    if (pool == 0) {
      result.rows[k].label = features::kGenuine;
      ++result.report.kept;
      ++result.report.fallbacks;
      continue;
    }
    std::size_t pick = rng.index(pool);
    std::size_t user_j = active_users.at(pick);
    if (active_users.contains(user_i)) {
      // Skip over user_i's slot to draw uniformly from the others.
      std::size_t seen = 0;
      for (std::size_t u : active_users.items()) {
        if (u == user_i) continue;
        if (seen++ == pick) {
          user_j = u;
          break;
        }
      }
    }

    candidates.clear();
    for (std::size_t m : unprocessed_by_user[user_j].items()) {
      candidates.push_back({rows[m].row_id, &embeddings.at(rows[m].row_id)});
    }
    const std::uint64_t partner_id =
        most_dissimilar_review(embeddings.at(rows[k].row_id), candidates, config.mode);
    std::size_t m = 0;
    for (std::size_t idx : unprocessed_by_user[user_j].items()) {
      if (rows[idx].row_id == partner_id) {
        m = idx;
        break;
      }
    }
    consume(m);
    std::swap(result.rows[k].attributes, result.rows[m].attributes);
    result.rows[k].label = features::kFraudulent;
    result.rows[m].label = features::kFraudulent;
    ++result.report.swap_events;
  }
  return result;
}

}  // namespace revfraud::sampler
