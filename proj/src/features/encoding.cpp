#include "revfraud/features/encoding.hpp"

#include <cmath>
#include <string>

#include "revfraud/errors.hpp"

namespace revfraud::features {

NormalizerStats fit_normalizer(std::span<const ProfileRecord> rows, const FeatureSchema& schema) {
  if (rows.empty()) throw DataError("fit_normalizer: no rows");
  const auto numeric = schema.numerical_indices();
  NormalizerStats stats;
  stats.mean.assign(numeric.size(), 0.0);
  stats.stddev.assign(numeric.size(), 0.0);
  const double n = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    validate_record(r, schema);
    for (std::size_t k = 0; k < numeric.size(); ++k) stats.mean[k] += r.values[numeric[k]];
  }
  for (double& m : stats.mean) m /= n;
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < numeric.size(); ++k) {
      const double d = r.values[numeric[k]] - stats.mean[k];
      stats.stddev[k] += d * d;
    }
  }
  for (double& s : stats.stddev) s = std::sqrt(s / n);
  return stats;
}

EmbeddingTables init_embedding_tables(const FeatureSchema& schema, ndmath::Rng& rng) {
  EmbeddingTables tables;
  for (std::size_t i : schema.categorical_indices()) {
    const std::size_t card = schema[i].cardinality;
    ndmath::DenseMatrix t(card, embedding_dim(card));
    for (double& v : t.data()) v = rng.normal();
    tables.push_back(std::move(t));
  }
  return tables;
}

void encode_record_into(const ProfileRecord& record, const FeatureSchema& schema, const EmbeddingTables& tables,
                        const NormalizerStats& stats, std::span<double> out) {
  validate_record(record, schema);
  if (out.size() != schema.encoded_dim()) throw ShapeError("encode_record: output buffer has wrong length");
  const std::size_t n_cat = schema.categorical_indices().size();
  const std::size_t n_num = schema.size() - n_cat;
  if (tables.size() != n_cat) throw ShapeError("encode_record: table count does not match schema");
  if (stats.mean.size() != n_num || stats.stddev.size() != n_num) {
    throw ShapeError("encode_record: normalizer stats do not match schema");
  }

  std::size_t pos = 0;
  std::size_t cat = 0;
  std::size_t num = 0;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema[i];
    if (f.kind == FeatureKind::categorical) {
      const auto& table = tables[cat++];
      if (table.rows() != f.cardinality || table.cols() != embedding_dim(f.cardinality)) {
        throw ShapeError("embedding table for '" + f.name + "' has wrong shape");
      }
      const auto row = table.row(static_cast<std::size_t>(record.values[i]));
      for (double v : row) out[pos++] = v;
    } else {
      const double sd = stats.stddev[num];
      out[pos++] = sd > 0.0 ? (record.values[i] - stats.mean[num]) / sd : 0.0;
      ++num;
    }
  }
}

std::vector<double> encode_record(const ProfileRecord& record, const FeatureSchema& schema,
                                  const EmbeddingTables& tables, const NormalizerStats& stats) {
  std::vector<double> out(schema.encoded_dim());
  encode_record_into(record, schema, tables, stats, out);
  return out;
}

}  // namespace revfraud::features
