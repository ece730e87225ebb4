#include "revfraud/pipeline/synthetic.hpp"

#include <cmath>
#include <string>

#include "revfraud/errors.hpp"
#include "revfraud/features/encoding.hpp"
#include "revfraud/ndmath/rng.hpp"

namespace revfraud::pipeline {

namespace {

using features::FeatureKind;
namespace fn = features::feature_names;

bool is_per_review(const std::string& name) {
  return name == fn::kBusinessCategory || name == fn::kReviewLength || name == fn::kUniqueWordCount;
}

double draw_value(const features::FeatureDescriptor& f, ndmath::Rng& rng) {
  if (f.kind == FeatureKind::categorical) return static_cast<double>(rng.index(f.cardinality));
  if (f.name == fn::kReviewLength) return static_cast<double>(10 + rng.index(291));
  return static_cast<double>(rng.index(11));
}

}  // namespace

SyntheticData make_synthetic_dataset(const features::FeatureSchema& schema, const SyntheticConfig& config) {
  if (config.users < 2) throw ConfigError("synthetic data needs at least two users");
  if (config.rows < config.users) throw ConfigError("synthetic data needs at least one row per user");
  if (config.text_dim == 0) throw ConfigError("synthetic text_dim must be positive");
  if (!(config.noise_stddev >= 0.0) || !std::isfinite(config.noise_stddev)) {
    throw ConfigError("synthetic noise_stddev must be finite and non-negative");
  }

  ndmath::Rng rng(config.seed);
  std::vector<features::ProfileRecord> profiles(config.users);
  for (auto& p : profiles) {
    p.values.resize(schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i) p.values[i] = draw_value(schema[i], rng);
  }

  SyntheticData data{{}, features::EmbeddingStore(config.text_dim)};
  data.rows.reserve(config.rows);
  const bool has_unique = [&] {
    for (const auto& f : schema.features()) {
      if (f.name == fn::kUniqueWordCount) return true;
    }
    return false;
  }();
  for (std::size_t r = 0; r < config.rows; ++r) {
    // Every user gets at least one review; the remainder is uniform.
    const std::size_t user = r < config.users ? r : rng.index(config.users);
    features::ReviewRow row;
    row.row_id = r;
    row.user_id = "u" + std::to_string(user);
    row.attributes = profiles[user];
    for (std::size_t i = 0; i < schema.size(); ++i) {
      if (is_per_review(schema[i].name)) row.attributes.values[i] = draw_value(schema[i], rng);
    }
    if (has_unique) {
      const std::size_t li = schema.index_of(fn::kReviewLength);
      const std::size_t ui = schema.index_of(fn::kUniqueWordCount);
      const auto length = static_cast<std::size_t>(row.attributes.values[li]);
      row.attributes.values[ui] = static_cast<double>(length / 2 + rng.index(length / 2 + 1));
    }
    row.text = "synthetic review " + std::to_string(r);
    data.rows.push_back(std::move(row));
  }

  const auto tables = features::init_embedding_tables(schema, rng);
  const auto stats = features::fit_normalizer(features::attributes_of(data.rows), schema);
  const std::size_t in_dim = schema.encoded_dim();
  ndmath::DenseMatrix map(config.text_dim, in_dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (std::size_t i = 0; i < map.size(); ++i) map.data()[i] = scale * rng.normal();

  std::vector<double> encoded(in_dim);
  for (const auto& row : data.rows) {
    features::encode_record_into(row.attributes, schema, tables, stats, encoded);
    features::EmbeddingVector text(config.text_dim);
    for (std::size_t o = 0; o < config.text_dim; ++o) {
      const double v = ndmath::dot(map.row(o), encoded) + config.noise_stddev * rng.normal();
      text[o] = static_cast<float>(v);
    }
    data.store.insert(row.row_id, std::move(text));
  }
  return data;
}

}  // namespace revfraud::pipeline
