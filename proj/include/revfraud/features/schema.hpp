#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace revfraud::features {

enum class FeatureKind : std::uint8_t { categorical, numerical };

struct FeatureDescriptor {
  std::string name;
  FeatureKind kind = FeatureKind::numerical;
  std::size_t cardinality = 0;  // categorical only

  friend bool operator==(const FeatureDescriptor&, const FeatureDescriptor&) = default;
};

/// Embedding width for a categorical feature: min(50, ceil((cardinality + 1) / 2)).
std::size_t embedding_dim(std::size_t cardinality);

/// Ordered list of profile features.
class FeatureSchema {
 public:
  explicit FeatureSchema(std::vector<FeatureDescriptor> features);

  /// The 12-feature review/profile schema.
  static FeatureSchema standard();

  std::span<const FeatureDescriptor> features() const noexcept { return features_; }
  std::size_t size() const noexcept { return features_.size(); }
  const FeatureDescriptor& operator[](std::size_t i) const { return features_[i]; }

  /// Position of a feature by name; throws ConfigError when unknown.
  std::size_t index_of(const std::string& name) const;

  std::vector<std::size_t> categorical_indices() const;
  std::vector<std::size_t> numerical_indices() const;

  /// Sum of categorical embedding widths plus the numerical feature count.
  std::size_t encoded_dim() const;

  /// FNV-1a 64-bit digest over "name:kind:cardinality;" for every feature.
  std::uint64_t hash() const;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

 private:
  std::vector<FeatureDescriptor> features_;
};

namespace feature_names {
inline constexpr const char* kCurrentCountry = "current_country";
inline constexpr const char* kPlacesLivedCount = "places_lived_count";
inline constexpr const char* kEducationDegree = "education_degree";
inline constexpr const char* kPlacesStudiedCount = "places_studied_count";
inline constexpr const char* kEducationMajor = "education_major";
inline constexpr const char* kCurrentProfession = "current_profession";
inline constexpr const char* kPreviousJobsCount = "previous_jobs_count";
inline constexpr const char* kUnemployment = "unemployment";
inline constexpr const char* kRetired = "retired";
inline constexpr const char* kBusinessCategory = "business_category";
inline constexpr const char* kReviewLength = "review_length";
inline constexpr const char* kUniqueWordCount = "unique_word_count";
}  // namespace feature_names

/// One value per schema feature: a 0-based category index stored as an
/// integral double, or a finite non-negative real.
struct ProfileRecord {
  std::vector<double> values;

  friend bool operator==(const ProfileRecord&, const ProfileRecord&) = default;
};

/// Throws DataError naming the first offending feature.
void validate_record(const ProfileRecord& record, const FeatureSchema& schema);
bool is_valid_record(const ProfileRecord& record, const FeatureSchema& schema) noexcept;

struct TextFeatures {
  double review_length = 0.0;
  double unique_word_count = 0.0;
};

/// Token count and number of distinct lowercased tokens.
TextFeatures derive_text_features(std::span<const std::string> tokens);

}  // namespace revfraud::features
