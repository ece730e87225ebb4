#include "revfraud/features/schema.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "revfraud/errors.hpp"

namespace revfraud::features {

std::size_t embedding_dim(std::size_t cardinality) {
  return std::min<std::size_t>(50, (cardinality + 2) / 2);
}

FeatureSchema::FeatureSchema(std::vector<FeatureDescriptor> features) : features_(std::move(features)) {
  std::set<std::string> names;
  for (const auto& f : features_) {
    if (f.name.empty()) throw ConfigError("feature with empty name");
    if (!names.insert(f.name).second) throw ConfigError("duplicate feature '" + f.name + "'");
    if (f.kind == FeatureKind::categorical && f.cardinality == 0) {
      throw ConfigError("categorical feature '" + f.name + "' needs a positive cardinality");
    }
  }
}

FeatureSchema FeatureSchema::standard() {
  using namespace feature_names;
  constexpr auto cat = FeatureKind::categorical;
  constexpr auto num = FeatureKind::numerical;
  return FeatureSchema({
      {kCurrentCountry, cat, 200},
      {kPlacesLivedCount, num, 0},
      {kEducationDegree, cat, 5},
      {kPlacesStudiedCount, num, 0},
      {kEducationMajor, cat, 101},
      {kCurrentProfession, cat, 101},
      {kPreviousJobsCount, num, 0},
      {kUnemployment, cat, 2},
      {kRetired, cat, 2},
      {kBusinessCategory, cat, 51},
      {kReviewLength, num, 0},
      {kUniqueWordCount, num, 0},
  });
}

std::size_t FeatureSchema::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name == name) return i;
  }
  throw ConfigError("schema has no feature named '" + name + "'");
}

std::vector<std::size_t> FeatureSchema::categorical_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].kind == FeatureKind::categorical) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FeatureSchema::numerical_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].kind == FeatureKind::numerical) out.push_back(i);
  }
  return out;
}

std::size_t FeatureSchema::encoded_dim() const {
  std::size_t dim = 0;
  for (const auto& f : features_) dim += f.kind == FeatureKind::categorical ? embedding_dim(f.cardinality) : 1;
  return dim;
}

std::uint64_t FeatureSchema::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& f : features_) {
    mix(f.name);
    mix(":");
    mix(f.kind == FeatureKind::categorical ? "categorical" : "numerical");
    mix(":");
    mix(std::to_string(f.cardinality));
    mix(";");
  }
  return h;
}

void validate_record(const ProfileRecord& record, const FeatureSchema& schema) {
  if (record.values.size() != schema.size()) {
    throw DataError("record has " + std::to_string(record.values.size()) + " values, schema expects " +
                    std::to_string(schema.size()));
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema[i];
    const double v = record.values[i];
    if (!std::isfinite(v) || v < 0.0) throw DataError("feature '" + f.name + "' must be finite and >= 0");
    if (f.kind == FeatureKind::categorical) {
      if (v != std::floor(v) || v >= static_cast<double>(f.cardinality)) {
        throw DataError("feature '" + f.name + "' index " + std::to_string(v) + " outside [0, " +
                        std::to_string(f.cardinality) + ")");
      }
    }
  }
}

bool is_valid_record(const ProfileRecord& record, const FeatureSchema& schema) noexcept {
  try {
    validate_record(record, schema);
    return true;
  } catch (const DataError&) {
    return false;
  }
}

TextFeatures derive_text_features(std::span<const std::string> tokens) {
  std::set<std::string> distinct;
  for (const auto& t : tokens) {
    std::string lower = t;
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    distinct.insert(std::move(lower));
  }
  return {static_cast<double>(tokens.size()), static_cast<double>(distinct.size())};
}

}  // namespace revfraud::features
