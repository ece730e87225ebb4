#include "revfraud/features/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "revfraud/errors.hpp"
#include "revfraud/features/binary_io.hpp"

namespace revfraud::features {

namespace {

using nlohmann::json;

constexpr const char* kFormatName = "revfraud-dataset";
constexpr int kFormatVersion = 1;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json header_json(const FeatureSchema& schema) {
  json names = json::array();
  for (const auto& f : schema.features()) names.push_back(f.name);
  return json{{"format", kFormatName},
              {"version", kFormatVersion},
              {"schema_hash", hex64(schema.hash())},
              {"features", names}};
}

json row_json(const ReviewRow& row, const FeatureSchema& schema) {
  validate_record(row.attributes, schema);
  json features = json::object();
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema[i];
    if (f.kind == FeatureKind::categorical) {
      features[f.name] = static_cast<std::int64_t>(row.attributes.values[i]);
    } else {
      features[f.name] = row.attributes.values[i];
    }
  }
  json j{{"row_id", row.row_id}, {"user_id", row.user_id}, {"features", features}};
  j["label"] = row.label ? json(*row.label) : json(nullptr);
  j["text"] = row.text;
  return j;
}

ReviewRow parse_row(const json& j, const FeatureSchema& schema) {
  ReviewRow row;
  row.row_id = j.at("row_id").get<std::uint64_t>();
  row.user_id = j.at("user_id").get<std::string>();
  const json& features = j.at("features");
  if (!features.is_object() || features.size() != schema.size()) {
    throw DataError("features object must hold exactly " + std::to_string(schema.size()) + " entries");
  }
  row.attributes.values.resize(schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const json& v = features.at(schema[i].name);
    if (!v.is_number()) throw DataError("feature '" + schema[i].name + "' is not a number");
    row.attributes.values[i] = v.get<double>();
  }
  validate_record(row.attributes, schema);
  const json& label = j.at("label");
  if (!label.is_null()) {
    if (!label.is_number_integer()) throw DataError("label must be 0, 1 or null");
    const auto y = label.get<std::int64_t>();
    if (y != kGenuine && y != kFraudulent) throw DataError("label must be 0, 1 or null");
    row.label = static_cast<int>(y);
  }
  if (j.contains("text")) row.text = j.at("text").get<std::string>();
  return row;
}

}  // namespace

void write_dataset(std::ostream& out, std::span<const ReviewRow> rows, const FeatureSchema& schema) {
  out << header_json(schema).dump() << '\n';
  for (const auto& row : rows) out << row_json(row, schema).dump() << '\n';
}

std::vector<ReviewRow> read_dataset(std::istream& in, const FeatureSchema& schema) {
  std::string line;
  std::size_t offset = 0;
  if (!std::getline(in, line)) throw FormatError("dataset is empty, header missing", 0);
  try {
    const json header = json::parse(line);
    if (header.at("format") != kFormatName) throw FormatError("not a revfraud dataset", 0);
    if (header.at("version") != kFormatVersion) throw FormatError("unsupported dataset version", 0);
    if (header.at("schema_hash") != hex64(schema.hash())) {
      throw FormatError("dataset schema hash does not match the active schema", 0);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed dataset header: ") + e.what(), 0);
  }
  offset += line.size() + 1;

  std::vector<ReviewRow> rows;
  std::set<std::uint64_t> ids;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    try {
      rows.push_back(parse_row(json::parse(line), schema));
    } catch (const json::exception& e) {
      throw FormatError("dataset line " + std::to_string(line_no) + ": " + e.what(), line_start);
    } catch (const DataError& e) {
      throw FormatError("dataset line " + std::to_string(line_no) + ": " + e.what(), line_start);
    }
    if (!ids.insert(rows.back().row_id).second) {
      throw FormatError("duplicate row_id " + std::to_string(rows.back().row_id), line_start);
    }
  }
  return rows;
}

void save_dataset(const std::string& path, std::span<const ReviewRow> rows, const FeatureSchema& schema) {
  std::ostringstream out;
  write_dataset(out, rows, schema);
  write_file_atomic(path, out.str());
}

std::vector<ReviewRow> load_dataset(const std::string& path, const FeatureSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset '" + path + "'");
  return read_dataset(in, schema);
}

std::vector<ProfileRecord> attributes_of(std::span<const ReviewRow> rows) {
  std::vector<ProfileRecord> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.attributes);
  return out;
}

}  // namespace revfraud::features
