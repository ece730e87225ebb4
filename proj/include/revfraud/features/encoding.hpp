#pragma once

#include <span>
#include <vector>

#include "revfraud/features/schema.hpp"
#include "revfraud/ndmath/matrix.hpp"
#include "revfraud/ndmath/rng.hpp"

namespace revfraud::features {

/// Per numerical feature (schema order): mean and population std dev.
struct NormalizerStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  friend bool operator==(const NormalizerStats&, const NormalizerStats&) = default;
};

NormalizerStats fit_normalizer(std::span<const ProfileRecord> rows, const FeatureSchema& schema);

/// One table per categorical feature in schema order, cardinality x embedding_dim.
using EmbeddingTables = std::vector<ndmath::DenseMatrix>;

/// Standard-normal initialised tables.
EmbeddingTables init_embedding_tables(const FeatureSchema& schema, ndmath::Rng& rng);

/// Writes the encoding of `record` into `out` (length schema.encoded_dim()):
/// categorical features contribute their table row, numerical features
/// (v - mean) / std, or 0 when std is 0. Concatenated in schema order.
void encode_record_into(const ProfileRecord& record, const FeatureSchema& schema, const EmbeddingTables& tables,
                        const NormalizerStats& stats, std::span<double> out);

std::vector<double> encode_record(const ProfileRecord& record, const FeatureSchema& schema,
                                  const EmbeddingTables& tables, const NormalizerStats& stats);

}  // namespace revfraud::features
