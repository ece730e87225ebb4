#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "revfraud/contrastive/loss.hpp"
#include "revfraud/features/checkpoint.hpp"
#include "revfraud/features/dataset.hpp"
#include "revfraud/features/embedding_store.hpp"
#include "revfraud/features/schema.hpp"
#include "revfraud/ndmath/mlp.hpp"
#include "revfraud/ndmath/rng.hpp"
#include "revfraud/pipeline/config.hpp"

namespace revfraud::pipeline {

using features::TwoBranchModel;
using ndmath::DenseMatrix;

/// Fresh model: Glorot-initialised branches, standard-normal embedding
/// tables, and the given normalizer.
TwoBranchModel init_model(const TrainConfig& config, const features::FeatureSchema& schema,
                          features::NormalizerStats normalizer, std::uint64_t seed);

/// Raw inputs of a batch of pairs. Attributes are encoded inside the forward
/// pass so the embedding tables can be differentiated.
struct PairInputs {
  DenseMatrix text;                                // B x text_dim
  std::vector<features::ProfileRecord> attributes;  // B records
  std::vector<int> labels;                         // B labels; may be empty for scoring
};

/// Gathers rows into a batch; embeddings come from `store`. Labels are copied
/// when every row has one.
PairInputs make_inputs(std::span<const features::ReviewRow* const> rows, const features::EmbeddingStore& store);
PairInputs make_inputs(std::span<const features::ReviewRow> rows, const features::EmbeddingStore& store);

/// Encodes every record of the batch with the model's tables and normalizer.
DenseMatrix encode_attributes(const TwoBranchModel& model, const features::FeatureSchema& schema,
                              std::span<const features::ProfileRecord> records);

struct BranchOutputs {
  ndmath::ForwardResult text;
  ndmath::ForwardResult attributes;
};

BranchOutputs forward(const TwoBranchModel& model, const features::FeatureSchema& schema, const PairInputs& inputs,
                      ndmath::Mode mode, ndmath::Rng& rng);

struct LossEvaluation {
  double loss = 0.0;
  std::vector<double> distances;
  std::vector<DenseMatrix> gradients;  // aligned with features::trainable_tensors(model)
  BranchOutputs outputs;
};

/// Contrastive loss of the batch and its gradient with respect to every
/// trainable tensor, the embedding tables included. The distance gradient
/// flows back through both branches; table rows receive the slices of the
/// attribute-branch input gradient that they produced.
LossEvaluation loss_and_gradients(const TwoBranchModel& model, const features::FeatureSchema& schema,
                                  const PairInputs& inputs, contrastive::Margin margin,
                                  contrastive::Reduction reduction, ndmath::Mode mode, ndmath::Rng& rng);

/// Eval-mode distances ||G1(x1) - G2(x2)|| for every pair of the batch.
std::vector<double> pair_distances(const TwoBranchModel& model, const features::FeatureSchema& schema,
                                   const PairInputs& inputs);

struct Classification {
  int label = 0;
  double distance = 0.0;
};

/// Fraudulent (1) iff distance >= threshold.
int classify_distance(double distance, double threshold);

Classification classify_pair(const TwoBranchModel& model, const features::FeatureSchema& schema,
                             const features::EmbeddingVector& text_embedding,
                             const features::ProfileRecord& attributes, double threshold);

}  // namespace revfraud::pipeline
