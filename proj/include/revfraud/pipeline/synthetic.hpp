#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "revfraud/features/dataset.hpp"
#include "revfraud/features/embedding_store.hpp"
#include "revfraud/features/schema.hpp"

namespace revfraud::pipeline {

struct SyntheticConfig {
  std::size_t rows = 5000;
  std::size_t users = 250;
  std::size_t text_dim = 768;
  double noise_stddev = 0.1;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  std::vector<features::ReviewRow> rows;  // unlabelled, row_id = position
  features::EmbeddingStore store;
};

/// Genuine reviews whose text embedding is a fixed linear map of the
/// attribute encoding plus Gaussian noise. Each user has one profile; the
/// business category and the review length statistics vary per review.
/// The encoding uses seeded standard-normal tables and a normalizer fitted
/// on the generated rows.
SyntheticData make_synthetic_dataset(const features::FeatureSchema& schema, const SyntheticConfig& config);

}  // namespace revfraud::pipeline
