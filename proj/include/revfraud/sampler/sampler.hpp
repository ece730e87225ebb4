#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "revfraud/features/dataset.hpp"
#include "revfraud/features/embedding_store.hpp"

namespace revfraud::sampler {

enum class DissimilarityMode { argmax_dot, argmin_dot };

struct SamplerConfig {
  double keep_probability = 2.0 / 3.0;
  std::uint64_t rng_seed = 0;
  DissimilarityMode mode = DissimilarityMode::argmax_dot;
};

struct Candidate {
  std::uint64_t row_id = 0;
  const features::EmbeddingVector* embedding = nullptr;
};

/// Row whose embedding has the extreme (max or min, per `mode`) dot product
/// with `target`; ties go to the smallest row_id. Throws NoCandidateError when
/// `candidates` is empty and ShapeError on a dimension mismatch.
std::uint64_t most_dissimilar_review(const features::EmbeddingVector& target, std::span<const Candidate> candidates,
                                     DissimilarityMode mode);

struct SampleReport {
  std::size_t kept = 0;          // rows labelled genuine by the coin
  std::size_t swap_events = 0;   // each labels two rows fraudulent
  std::size_t fallbacks = 0;     // swap drawn but no other user had rows left
};

struct SampleResult {
  std::vector<features::ReviewRow> rows;  // input order, every row labelled
  SampleReport report;
};

/// Turns a genuine dataset into a labelled pair dataset. Rows are visited in
/// a seeded shuffled order; each unprocessed row is kept (label 0) with
/// probability `keep_probability`, otherwise it exchanges attribute records
/// with the most dissimilar unprocessed review of a uniformly drawn other
/// user and both rows get label 1.
///
/// Throws ConfigError with fewer than two distinct users or a keep
/// probability outside (0, 1], DataError when an embedding is missing.
SampleResult sample_pairs(std::span<const features::ReviewRow> rows, const features::EmbeddingStore& embeddings,
                          const SamplerConfig& config);

}  // namespace revfraud::sampler
