#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "revfraud/features/schema.hpp"

namespace revfraud::features {

/// Label convention: 0 = genuine pair, 1 = fraudulent pair.
inline constexpr int kGenuine = 0;
inline constexpr int kFraudulent = 1;

struct ReviewRow {
  std::uint64_t row_id = 0;
  std::string user_id;
  ProfileRecord attributes;
  std::optional<int> label;
  std::string text;

  friend bool operator==(const ReviewRow&, const ReviewRow&) = default;
};

/// Line-delimited JSON. The first line is a header
///   {"format":"revfraud-dataset","version":1,"schema_hash":"<16 hex digits>","features":[...]}
/// followed by one object per row:
///   {"row_id":7,"user_id":"u3","features":{"current_country":12,...},"label":0,"text":"..."}
/// `label` is null when unset; `text` may be empty.
void write_dataset(std::ostream& out, std::span<const ReviewRow> rows, const FeatureSchema& schema);
std::vector<ReviewRow> read_dataset(std::istream& in, const FeatureSchema& schema);

void save_dataset(const std::string& path, std::span<const ReviewRow> rows, const FeatureSchema& schema);
std::vector<ReviewRow> load_dataset(const std::string& path, const FeatureSchema& schema);

std::vector<ProfileRecord> attributes_of(std::span<const ReviewRow> rows);

}  // namespace revfraud::features
