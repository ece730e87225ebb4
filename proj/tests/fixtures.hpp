#pragma once

#include <string>
#include <utility>
#include <vector>

#include "revfraud/features/checkpoint.hpp"
#include "revfraud/features/dataset.hpp"
#include "revfraud/features/embedding_store.hpp"
#include "revfraud/features/encoding.hpp"
#include "revfraud/features/schema.hpp"
#include "revfraud/ndmath/adam.hpp"
#include "revfraud/ndmath/rng.hpp"
#include "revfraud/pipeline/config.hpp"
#include "revfraud/pipeline/model.hpp"

namespace revfraud::testing {

inline features::ProfileRecord random_record(const features::FeatureSchema& schema, ndmath::Rng& rng) {
  features::ProfileRecord r;
  for (const auto& f : schema.features()) {
    if (f.kind == features::FeatureKind::categorical) {
      r.values.push_back(static_cast<double>(rng.index(f.cardinality)));
    } else {
      r.values.push_back(rng.bernoulli(0.5) ? static_cast<double>(rng.index(40)) : rng.uniform(0.0, 1e3));
    }
  }
  return r;
}

inline std::string random_text(ndmath::Rng& rng) {
  static const std::vector<std::string> pieces{"good", "bad", "Café", "\"quoted\"", "line\nbreak", "tab\there",
                                               "🙂", "\\", "", "ok."};
  std::string s;
  const std::size_t n = rng.index(6);
  for (std::size_t i = 0; i < n; ++i) s += pieces[rng.index(pieces.size())] + " ";
  return s;
}

inline std::vector<features::ReviewRow> random_rows(const features::FeatureSchema& schema, std::size_t n,
                                                    std::size_t users, ndmath::Rng& rng) {
  std::vector<features::ReviewRow> rows;
  for (std::size_t i = 0; i < n; ++i) {
    features::ReviewRow row;
    row.row_id = i * 3 + rng.index(3);
    row.user_id = "user-" + std::to_string(rng.index(users));
    row.attributes = random_record(schema, rng);
    const std::size_t l = rng.index(3);
    if (l < 2) row.label = static_cast<int>(l);
    row.text = random_text(rng);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline features::EmbeddingStore random_store(std::span<const features::ReviewRow> rows, std::size_t dim,
                                             ndmath::Rng& rng) {
  features::EmbeddingStore store(dim);
  for (const auto& r : rows) {
    features::EmbeddingVector v(dim);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    store.insert(r.row_id, std::move(v));
  }
  return store;
}

// Small two-branch configuration that keeps tests fast.
inline pipeline::TrainConfig small_config(std::size_t text_dim = 12) {
  pipeline::TrainConfig c;
  c.text_dim = text_dim;
  c.text_hidden = {10};
  c.attribute_hidden = {9};
  c.output_dim = 4;
  c.batch_size = 16;
  c.epochs = 2;
  return c;
}

// Small model with perturbed running statistics, so that a round trip has
// something beyond the initial values to preserve.
inline pipeline::TwoBranchModel random_model(const features::FeatureSchema& schema, ndmath::Rng& rng) {
  const auto cfg = small_config();
  std::vector<features::ProfileRecord> recs;
  for (int i = 0; i < 10; ++i) recs.push_back(random_record(schema, rng));
  pipeline::TwoBranchModel m =
      pipeline::init_model(cfg, schema, features::fit_normalizer(recs, schema), rng.next_u64());
  for (auto& l : m.text_branch.layers) {
    for (auto& v : l.running_mean.data()) v = rng.normal();
  }
  return m;
}

inline features::ModelCheckpoint random_checkpoint(const features::FeatureSchema& schema, ndmath::Rng& rng) {
  features::ModelCheckpoint ck;
  ck.schema_hash = schema.hash();
  ck.model = random_model(schema, rng);
  ck.margin = rng.uniform(0.5, 2.0);
  ck.threshold = rng.uniform(0.1, 1.0);
  ck.config_text = small_config().to_text();
  if (rng.bernoulli(0.5)) {
    auto st = ndmath::make_adam_state(features::trainable_tensors(std::as_const(ck.model)));
    st.step = rng.index(100);
    for (auto& m : st.first_moment) {
      for (auto& v : m.data()) v = rng.normal();
    }
    ck.adam = st;
  }
  return ck;
}

}  // namespace revfraud::testing
