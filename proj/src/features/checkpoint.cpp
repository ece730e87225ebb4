#include "revfraud/features/checkpoint.hpp"

#include <utility>

#include "revfraud/errors.hpp"
#include "revfraud/features/binary_io.hpp"

namespace revfraud::features {

namespace {

using ndmath::DenseMatrix;
using ndmath::LayerKind;
using ndmath::LayerSpec;
using ndmath::MlpParams;

constexpr std::string_view kMagic = "CKPT";

void write_matrix(ByteWriter& w, const DenseMatrix& m) {
  w.u64(m.rows());
  w.u64(m.cols());
  for (double v : m.data()) w.f64(v);
}

DenseMatrix read_matrix(ByteReader& r, std::size_t rows, std::size_t cols, const char* what) {
  const std::size_t at = r.offset();
  const std::uint64_t nr = r.u64(what);
  const std::uint64_t nc = r.u64(what);
  if (nr != rows || nc != cols) {
    throw FormatError(std::string(what) + " has shape " + std::to_string(nr) + "x" + std::to_string(nc) +
                          ", expected " + std::to_string(rows) + "x" + std::to_string(cols),
                      at);
  }
  if (nr != 0 && nc > r.remaining() / 8 / nr) throw FormatError(std::string("truncated ") + what, r.offset());
  std::vector<double> data(rows * cols);
  for (double& v : data) v = r.f64(what);
  return DenseMatrix(rows, cols, std::move(data));
}

void write_branch(ByteWriter& w, const MlpParams& p) {
  w.u32(static_cast<std::uint32_t>(p.specs.size()));
  for (const LayerSpec& s : p.specs) {
    w.u8(static_cast<std::uint8_t>(s.kind));
    w.u64(s.in_dim);
    w.u64(s.out_dim);
    w.f64(s.dropout_rate);
  }
  for (std::size_t i = 0; i < p.specs.size(); ++i) {
    const auto& lp = p.layers[i];
    switch (p.specs[i].kind) {
      case LayerKind::linear:
        write_matrix(w, lp.weight);
        write_matrix(w, lp.bias);
        break;
      case LayerKind::batchnorm:
        write_matrix(w, lp.weight);
        write_matrix(w, lp.bias);
        write_matrix(w, lp.running_mean);
        write_matrix(w, lp.running_var);
        break;
      default:
        break;
    }
  }
}

MlpParams read_branch(ByteReader& r) {
  const std::size_t at = r.offset();
  const std::uint32_t n = r.u32("layer count");
  if (n == 0 || n > r.remaining() / 25) throw FormatError("implausible layer count " + std::to_string(n), at);
  MlpParams p;
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::size_t kind_at = r.offset();
    const std::uint8_t kind = r.u8("layer kind");
    if (kind > static_cast<std::uint8_t>(LayerKind::dropout)) {
      throw FormatError("unknown layer kind " + std::to_string(kind), kind_at);
    }
    LayerSpec s;
    s.kind = static_cast<LayerKind>(kind);
    s.in_dim = r.u64("layer in_dim");
    s.out_dim = r.u64("layer out_dim");
    s.dropout_rate = r.f64("dropout rate");
    p.specs.push_back(s);
  }
  try {
    ndmath::validate_specs(p.specs);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid layer specs: ") + e.what(), at);
  }
  p.layers.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const LayerSpec& s = p.specs[i];
    auto& lp = p.layers[i];
    if (s.kind == LayerKind::linear) {
      lp.weight = read_matrix(r, s.out_dim, s.in_dim, "linear weight");
      lp.bias = read_matrix(r, 1, s.out_dim, "linear bias");
    } else if (s.kind == LayerKind::batchnorm) {
      lp.weight = read_matrix(r, 1, s.out_dim, "batchnorm scale");
      lp.bias = read_matrix(r, 1, s.out_dim, "batchnorm shift");
      lp.running_mean = read_matrix(r, 1, s.out_dim, "batchnorm running mean");
      lp.running_var = read_matrix(r, 1, s.out_dim, "batchnorm running variance");
    }
  }
  return p;
}

}  // namespace

std::vector<DenseMatrix*> trainable_tensors(TwoBranchModel& model) {
  std::vector<DenseMatrix*> out = ndmath::trainable_tensors(model.text_branch);
  for (DenseMatrix* t : ndmath::trainable_tensors(model.attribute_branch)) out.push_back(t);
  for (DenseMatrix& t : model.tables) out.push_back(&t);
  return out;
}

std::vector<const DenseMatrix*> trainable_tensors(const TwoBranchModel& model) {
  std::vector<const DenseMatrix*> out = ndmath::trainable_tensors(model.text_branch);
  for (const DenseMatrix* t : ndmath::trainable_tensors(model.attribute_branch)) out.push_back(t);
  for (const DenseMatrix& t : model.tables) out.push_back(&t);
  return out;
}

std::string serialize_checkpoint(const ModelCheckpoint& ck) {
  ByteWriter w;
  w.bytes(kMagic);
  w.u32(kCheckpointVersion);
  w.u64(ck.schema_hash);
  w.f64(ck.margin);
  w.f64(ck.threshold);
  w.string(ck.config_text);
  w.u32(2);
  write_branch(w, ck.model.text_branch);
  write_branch(w, ck.model.attribute_branch);
  w.u32(static_cast<std::uint32_t>(ck.model.tables.size()));
  for (const auto& t : ck.model.tables) write_matrix(w, t);
  w.u64(ck.model.normalizer.mean.size());
  for (double v : ck.model.normalizer.mean) w.f64(v);
  for (double v : ck.model.normalizer.stddev) w.f64(v);
  w.u8(ck.adam ? 1 : 0);
  if (ck.adam) {
    const auto& a = *ck.adam;
    w.f64(a.config.learning_rate);
    w.f64(a.config.beta1);
    w.f64(a.config.beta2);
    w.f64(a.config.epsilon);
    w.u64(a.step);
    w.u64(a.first_moment.size());
    for (const auto& m : a.first_moment) write_matrix(w, m);
    for (const auto& v : a.second_moment) write_matrix(w, v);
  }
  return w.buffer();
}

ModelCheckpoint deserialize_checkpoint(std::string_view bytes, const FeatureSchema& schema) {
  ByteReader r(bytes);
  if (r.bytes(kMagic.size(), "magic") != kMagic) throw FormatError("bad checkpoint magic", 0);
  const std::size_t version_at = r.offset();
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), version_at);
  }
  ModelCheckpoint ck;
  const std::size_t hash_at = r.offset();
  ck.schema_hash = r.u64("schema hash");
  if (ck.schema_hash != schema.hash()) throw FormatError("checkpoint schema hash does not match", hash_at);
  ck.margin = r.f64("margin");
  ck.threshold = r.f64("threshold");
  ck.config_text = r.string("config text");
  const std::size_t branches_at = r.offset();
  if (r.u32("branch count") != 2) throw FormatError("checkpoint must hold exactly two branches", branches_at);
  ck.model.text_branch = read_branch(r);
  const std::size_t attr_at = r.offset();
  ck.model.attribute_branch = read_branch(r);
  if (ck.model.text_branch.output_dim() != ck.model.attribute_branch.output_dim()) {
    throw FormatError("branch output dimensions differ", attr_at);
  }
  if (ck.model.attribute_branch.input_dim() != schema.encoded_dim()) {
    throw FormatError("attribute branch input width does not match schema encoding", attr_at);
  }

  const auto cats = schema.categorical_indices();
  const std::size_t tables_at = r.offset();
  if (r.u32("table count") != cats.size()) throw FormatError("embedding table count mismatch", tables_at);
  for (std::size_t i : cats) {
    const std::size_t card = schema[i].cardinality;
    ck.model.tables.push_back(read_matrix(r, card, embedding_dim(card), "embedding table"));
  }
  const std::size_t norm_at = r.offset();
  const std::uint64_t n_num = r.u64("normalizer size");
  if (n_num != schema.numerical_indices().size()) throw FormatError("normalizer size mismatch", norm_at);
  ck.model.normalizer.mean.resize(n_num);
  ck.model.normalizer.stddev.resize(n_num);
  for (double& v : ck.model.normalizer.mean) v = r.f64("normalizer mean");
  for (double& v : ck.model.normalizer.stddev) v = r.f64("normalizer stddev");

  const std::size_t adam_at = r.offset();
  const std::uint8_t has_adam = r.u8("adam flag");
  if (has_adam > 1) throw FormatError("bad Adam flag", adam_at);
  if (has_adam == 1) {
    ndmath::AdamState a;
    a.config.learning_rate = r.f64("adam learning rate");
    a.config.beta1 = r.f64("adam beta1");
    a.config.beta2 = r.f64("adam beta2");
    a.config.epsilon = r.f64("adam epsilon");
    a.step = r.u64("adam step");
    const std::size_t count_at = r.offset();
    const std::uint64_t count = r.u64("adam tensor count");
    const auto params = trainable_tensors(std::as_const(ck.model));
    if (count != params.size()) throw FormatError("Adam state tensor count mismatch", count_at);
    for (const auto* p : params) a.first_moment.push_back(read_matrix(r, p->rows(), p->cols(), "adam moment"));
    for (const auto* p : params) a.second_moment.push_back(read_matrix(r, p->rows(), p->cols(), "adam moment"));
    ck.adam = std::move(a);
  }
  if (!r.at_end()) throw FormatError("trailing bytes after checkpoint", r.offset());
  return ck;
}

void save_checkpoint(const std::string& path, const ModelCheckpoint& checkpoint) {
  write_file_atomic(path, serialize_checkpoint(checkpoint));
}

ModelCheckpoint load_checkpoint(const std::string& path, const FeatureSchema& schema) {
  return deserialize_checkpoint(read_file_bytes(path), schema);
}

}  // namespace revfraud::features
