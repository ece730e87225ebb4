#include "revfraud/pipeline/model.hpp"

#include <string>

#include "revfraud/errors.hpp"

namespace revfraud::pipeline {

TwoBranchModel init_model(const TrainConfig& config, const features::FeatureSchema& schema,
                          features::NormalizerStats normalizer, std::uint64_t seed) {
  config.validate();
  ndmath::Rng rng(seed);
  TwoBranchModel model;
  model.text_branch = ndmath::init_params(
      branch_specs(config.text_dim, config.text_hidden, config.output_dim, config.dropout, config.batch_norm), rng);
  model.attribute_branch = ndmath::init_params(branch_specs(schema.encoded_dim(), config.attribute_hidden,
                                                            config.output_dim, config.dropout, config.batch_norm),
                                               rng);
  model.tables = features::init_embedding_tables(schema, rng);
  model.normalizer = std::move(normalizer);
  return model;
}

PairInputs make_inputs(std::span<const features::ReviewRow* const> rows, const features::EmbeddingStore& store) {
  PairInputs in;
  in.text = DenseMatrix(rows.size(), store.dimension());
  bool all_labelled = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& emb = store.at(rows[i]->row_id);
    auto dst = in.text.row(i);
    for (std::size_t k = 0; k < emb.size(); ++k) dst[k] = static_cast<double>(emb[k]);
    in.attributes.push_back(rows[i]->attributes);
    all_labelled = all_labelled && rows[i]->label.has_value();
  }
  if (all_labelled) {
    for (const auto* r : rows) in.labels.push_back(*r->label);
  }
  return in;
}

PairInputs make_inputs(std::span<const features::ReviewRow> rows, const features::EmbeddingStore& store) {
  std::vector<const features::ReviewRow*> ptrs;
  ptrs.reserve(rows.size());
  for (const auto& r : rows) ptrs.push_back(&r);
  return make_inputs(std::span<const features::ReviewRow* const>(ptrs), store);
}

DenseMatrix encode_attributes(const TwoBranchModel& model, const features::FeatureSchema& schema,
                              std::span<const features::ProfileRecord> records) {
  DenseMatrix out(records.size(), schema.encoded_dim());
  for (std::size_t i = 0; i < records.size(); ++i) {
    features::encode_record_into(records[i], schema, model.tables, model.normalizer, out.row(i));
  }
  return out;
}

BranchOutputs forward(const TwoBranchModel& model, const features::FeatureSchema& schema, const PairInputs& inputs,
                      ndmath::Mode mode, ndmath::Rng& rng) {
  if (inputs.text.rows() != inputs.attributes.size()) {
    throw ShapeError("pair inputs: " + std::to_string(inputs.text.rows()) + " texts vs " +
                     std::to_string(inputs.attributes.size()) + " attribute records");
  }
  if (model.text_branch.output_dim() != model.attribute_branch.output_dim()) {
    throw ShapeError("branch output dimensions differ");
  }
  BranchOutputs out;
  out.text = ndmath::mlp_forward(model.text_branch, inputs.text, mode, rng);
  out.attributes = ndmath::mlp_forward(model.attribute_branch, encode_attributes(model, schema, inputs.attributes),
                                       mode, rng);
  return out;
}

LossEvaluation loss_and_gradients(const TwoBranchModel& model, const features::FeatureSchema& schema,
                                  const PairInputs& inputs, contrastive::Margin margin,
                                  contrastive::Reduction reduction, ndmath::Mode mode, ndmath::Rng& rng) {
  if (inputs.labels.size() != inputs.attributes.size()) throw DataError("every pair needs a label for training");

  LossEvaluation ev;
  ev.outputs = forward(model, schema, inputs, mode, rng);
  contrastive::PairBatch batch{ev.outputs.text.output, ev.outputs.attributes.output, inputs.labels};
  contrastive::LossAndGrad lg = contrastive::contrastive_loss_and_grad(batch, margin, reduction);
  ev.loss = lg.loss;
  ev.distances = std::move(lg.distances);

  auto text_back = ndmath::mlp_backward(ev.outputs.text.tape, model.text_branch, lg.grad_g1, false);
  auto attr_back = ndmath::mlp_backward(ev.outputs.attributes.tape, model.attribute_branch, lg.grad_g2, true);

  ev.gradients = std::move(text_back.param_grads);
  for (auto& g : attr_back.param_grads) ev.gradients.push_back(std::move(g));

  // Scatter the attribute-input gradient into the embedding table rows.
  const std::size_t first_table = ev.gradients.size();
  for (const auto& t : model.tables) ev.gradients.emplace_back(t.rows(), t.cols());
  std::size_t offset = 0;
  std::size_t table = 0;
  for (std::size_t f = 0; f < schema.size(); ++f) {
    const auto& desc = schema[f];
    if (desc.kind != features::FeatureKind::categorical) {
      ++offset;
      continue;
    }
    DenseMatrix& g = ev.gradients[first_table + table];
    const std::size_t width = g.cols();
    for (std::size_t n = 0; n < inputs.attributes.size(); ++n) {
      const auto row = static_cast<std::size_t>(inputs.attributes[n].values[f]);
      const auto src = attr_back.input_grad.row(n);
      auto dst = g.row(row);
      for (std::size_t k = 0; k < width; ++k) dst[k] += src[offset + k];
    }
    offset += width;
    ++table;
  }
  return ev;
}

std::vector<double> pair_distances(const TwoBranchModel& model, const features::FeatureSchema& schema,
                                   const PairInputs& inputs) {
  ndmath::Rng unused(0);
  const BranchOutputs out = forward(model, schema, inputs, ndmath::Mode::eval, unused);
  std::vector<double> d(inputs.attributes.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = contrastive::distance(out.text.output.row(i), out.attributes.output.row(i));
  }
  return d;
}

int classify_distance(double distance, double threshold) {
  return distance >= threshold ? features::kFraudulent : features::kGenuine;
}

Classification classify_pair(const TwoBranchModel& model, const features::FeatureSchema& schema,
                             const features::EmbeddingVector& text_embedding,
                             const features::ProfileRecord& attributes, double threshold) {
  if (text_embedding.size() != model.text_branch.input_dim()) {
    throw ShapeError("text embedding has dimension " + std::to_string(text_embedding.size()) + ", model expects " +
                     std::to_string(model.text_branch.input_dim()));
  }
  PairInputs in;
  in.text = DenseMatrix(1, text_embedding.size());
  for (std::size_t k = 0; k < text_embedding.size(); ++k) in.text(0, k) = static_cast<double>(text_embedding[k]);
  in.attributes.push_back(attributes);
  const double d = pair_distances(model, schema, in).front();
  return {classify_distance(d, threshold), d};
}

}  // namespace revfraud::pipeline
