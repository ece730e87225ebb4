#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "revfraud/features/encoding.hpp"
#include "revfraud/features/schema.hpp"
#include "revfraud/ndmath/adam.hpp"
#include "revfraud/ndmath/mlp.hpp"

namespace revfraud::features {

/// Parameters of the two-branch network: the text branch maps a review
/// embedding, the attribute branch maps the encoded profile (categorical
/// embedding tables + standardised numerics) into the same output space.
struct TwoBranchModel {
  ndmath::MlpParams text_branch;
  ndmath::MlpParams attribute_branch;
  EmbeddingTables tables;
  NormalizerStats normalizer;

  friend bool operator==(const TwoBranchModel&, const TwoBranchModel&) = default;
};

/// Text-branch tensors, attribute-branch tensors, then embedding tables.
std::vector<ndmath::DenseMatrix*> trainable_tensors(TwoBranchModel& model);
std::vector<const ndmath::DenseMatrix*> trainable_tensors(const TwoBranchModel& model);

struct ModelCheckpoint {
  std::uint64_t schema_hash = 0;
  TwoBranchModel model;
  double margin = 1.0;
  double threshold = 0.5;
  std::string config_text;
  std::optional<ndmath::AdamState> adam;

  friend bool operator==(const ModelCheckpoint&, const ModelCheckpoint&) = default;
};

/// Binary layout (little-endian): "CKPT" | u32 version | u64 schema hash |
/// f64 margin | f64 threshold | string config | 2 branches (layer specs then
/// f64 tensors) | embedding tables | normalizer | optional Adam state.
/// Strings are u64 length + bytes; matrices are u64 rows, u64 cols, f64 data.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const ModelCheckpoint& checkpoint);

/// Throws FormatError on bad magic, version, truncation, inconsistent shapes,
/// or a schema hash different from `schema`.
ModelCheckpoint deserialize_checkpoint(std::string_view bytes, const FeatureSchema& schema);

void save_checkpoint(const std::string& path, const ModelCheckpoint& checkpoint);
ModelCheckpoint load_checkpoint(const std::string& path, const FeatureSchema& schema);

}  // namespace revfraud::features
