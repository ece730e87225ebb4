#include "revfraud/features/embedding_store.hpp"

#include "revfraud/errors.hpp"
#include "revfraud/features/binary_io.hpp"

namespace revfraud::features {

namespace {
constexpr std::string_view kMagic = "EMBS";
}

EmbeddingStore::EmbeddingStore(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw ConfigError("embedding dimension must be positive");
}

void EmbeddingStore::insert(std::uint64_t row_id, EmbeddingVector vector) {
  if (vector.size() != dimension_) {
    throw ShapeError("embedding for row " + std::to_string(row_id) + " has dimension " +
                     std::to_string(vector.size()) + ", store expects " + std::to_string(dimension_));
  }
  entries_[row_id] = std::move(vector);
}

const EmbeddingVector& EmbeddingStore::at(std::uint64_t row_id) const {
  const auto it = entries_.find(row_id);
  if (it == entries_.end()) throw DataError("no embedding for row " + std::to_string(row_id));
  return it->second;
}

std::string EmbeddingStore::serialize() const {
  ByteWriter w;
  w.bytes(kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(dimension_));
  w.u64(entries_.size());
  for (const auto& [row_id, vec] : entries_) {
    w.u64(row_id);
    for (float v : vec) w.f32(v);
  }
  return w.buffer();
}

EmbeddingStore EmbeddingStore::deserialize(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.bytes(kMagic.size(), "magic") != kMagic) throw FormatError("bad embedding store magic", 0);
  const std::size_t version_at = r.offset();
  const std::uint32_t version = r.u32("version");
  if (version != kVersion) {
    throw FormatError("unsupported embedding store version " + std::to_string(version), version_at);
  }
  const std::size_t dim_at = r.offset();
  const std::uint32_t dim = r.u32("dimension");
  if (dim == 0) throw FormatError("embedding dimension is zero", dim_at);
  const std::size_t count_at = r.offset();
  const std::uint64_t count = r.u64("count");
  const std::uint64_t entry_bytes = 8 + 4ULL * dim;
  if (count > r.remaining() / entry_bytes) {
    throw FormatError("entry count " + std::to_string(count) + " exceeds file size for dimension " +
                          std::to_string(dim),
                      count_at);
  }
  EmbeddingStore store(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::size_t entry_at = r.offset();
    const std::uint64_t row_id = r.u64("row id");
    if (store.contains(row_id)) throw FormatError("duplicate row id " + std::to_string(row_id), entry_at);
    EmbeddingVector v(dim);
    for (float& x : v) x = r.f32("embedding value");
    store.entries_.emplace(row_id, std::move(v));
  }
  if (!r.at_end()) throw FormatError("trailing bytes after last entry", r.offset());
  return store;
}

void EmbeddingStore::save(const std::string& path) const { write_file_atomic(path, serialize()); }

EmbeddingStore EmbeddingStore::load(const std::string& path) { return deserialize(read_file_bytes(path)); }

}  // namespace revfraud::features
