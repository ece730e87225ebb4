#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace revfraud::features {

/// Mean text embedding of one review, stored in single precision.
using EmbeddingVector = std::vector<float>;

inline constexpr std::size_t kDefaultEmbeddingDim = 768;

/// row_id -> embedding, all of one dimension.
///
/// Binary layout (little-endian):
///   "EMBS" | u32 version (1) | u32 dimension | u64 count |
///   count x ( u64 row_id | dimension x f32 )
/// Entries are written in ascending row_id order.
class EmbeddingStore {
 public:
  static constexpr std::uint32_t kVersion = 1;

  explicit EmbeddingStore(std::size_t dimension = kDefaultEmbeddingDim);

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool contains(std::uint64_t row_id) const { return entries_.count(row_id) != 0; }

  /// Inserts or replaces; throws ShapeError on dimension mismatch.
  void insert(std::uint64_t row_id, EmbeddingVector vector);

  /// Throws DataError when the row is missing.
  const EmbeddingVector& at(std::uint64_t row_id) const;

  const std::map<std::uint64_t, EmbeddingVector>& entries() const noexcept { return entries_; }

  std::string serialize() const;
  static EmbeddingStore deserialize(std::string_view bytes);

  void save(const std::string& path) const;
  static EmbeddingStore load(const std::string& path);

  friend bool operator==(const EmbeddingStore&, const EmbeddingStore&) = default;

 private:
  std::size_t dimension_;
  std::map<std::uint64_t, EmbeddingVector> entries_;
};

}  // namespace revfraud::features
