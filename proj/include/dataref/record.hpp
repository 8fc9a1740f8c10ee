#pragma once

// Dataset registry records and the line-delimited record store.
//
// Store format: UTF-8, one JSON object per line with keys in the fixed
// order id, title, year, language, resource_type. Absent optional fields are
// omitted.

#include <algorithm>
#include <array>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "dataref/error.hpp"
#include "dataref/unicode.hpp"
#include "dataref/years.hpp"

namespace dataref {

enum class ResourceType { dataset, text, collection, video, interactive, other };

inline constexpr std::array<std::string_view, 6> kResourceTypeNames = {
    "dataset", "text", "collection", "video", "interactive", "other"};

inline std::string_view to_string(ResourceType type) {
  return kResourceTypeNames[static_cast<std::size_t>(type)];
}

inline std::optional<ResourceType> parse_resource_type(std::string_view name) {
  for (std::size_t i = 0; i < kResourceTypeNames.size(); ++i) {
    if (kResourceTypeNames[i] == name) return static_cast<ResourceType>(i);
  }
  return std::nullopt;
}

struct DatasetRecord {
  std::string id;  // DOI
  std::string title;
  std::optional<int> year;
  std::optional<std::string> language;  // ISO 639-1
  ResourceType resource_type = ResourceType::dataset;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

/// Years a record is associated with: its metadata year plus every year
/// written in its title, ascending and unique.
inline std::vector<int> record_years(const DatasetRecord& record) {
  std::vector<int> years = year_values(record.title);
  if (record.year) years.push_back(*record.year);
  std::sort(years.begin(), years.end());
  years.erase(std::unique(years.begin(), years.end()), years.end());
  return years;
}

inline nlohmann::ordered_json to_json(const DatasetRecord& record) {
  nlohmann::ordered_json j;
  j["id"] = record.id;
  j["title"] = record.title;
  if (record.year) j["year"] = *record.year;
  if (record.language) j["language"] = *record.language;
  j["resource_type"] = std::string(to_string(record.resource_type));
  return j;
}

/// Parses one store line. Throws FormatError on any schema violation.
inline DatasetRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("record is not an object");
  DatasetRecord record;
  if (!j.contains("id") || !j["id"].is_string()) throw FormatError("missing string field 'id'");
  if (!j.contains("title") || !j["title"].is_string()) {
    throw FormatError("missing string field 'title'");
  }
  record.id = j["id"].get<std::string>();
  record.title = j["title"].get<std::string>();
  if (record.id.empty()) throw FormatError("empty id");
  if (unicode::trim(record.title).empty()) throw FormatError("blank title");
  if (j.contains("year")) {
    if (!j["year"].is_number_integer()) throw FormatError("'year' is not an integer");
    record.year = j["year"].get<int>();
  }
  if (j.contains("language")) {
    if (!j["language"].is_string()) throw FormatError("'language' is not a string");
    record.language = j["language"].get<std::string>();
  }
  if (j.contains("resource_type")) {
    if (!j["resource_type"].is_string()) throw FormatError("'resource_type' is not a string");
    const auto type = parse_resource_type(j["resource_type"].get<std::string>());
    if (!type) throw FormatError("unknown resource_type");
    record.resource_type = *type;
  }
  return record;
}

inline void write_record(std::ostream& out, const DatasetRecord& record) {
  out << to_json(record).dump() << '\n';
}

inline void write_records(std::ostream& out, std::span<const DatasetRecord> records) {
  for (const auto& record : records) write_record(out, record);
}

inline void write_records(const std::string& path, std::span<const DatasetRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write record store: " + path);
  write_records(out, records);
  if (!out) throw IoError("error while writing record store: " + path);
}

struct LoadedRecords {
  std::vector<DatasetRecord> records;
  std::vector<std::string> warnings;
};

/// Reads a record store. Invalid lines are skipped with a warning naming the
/// line number; a repeated id replaces the earlier record (last wins) and is
/// reported as a warning. The record keeps the position of its first line.
inline LoadedRecords load_records(std::istream& in) {
  LoadedRecords loaded;
  std::unordered_map<std::string, std::size_t> position;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (unicode::trim(line).empty()) continue;
    DatasetRecord record;
    try {
      record = record_from_json(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      loaded.warnings.push_back("line " + std::to_string(line_no) + ": " + e.what());
      continue;
    } catch (const FormatError& e) {
      loaded.warnings.push_back("line " + std::to_string(line_no) + ": " + e.what());
      continue;
    }
    if (auto it = position.find(record.id); it != position.end()) {
      loaded.warnings.push_back("line " + std::to_string(line_no) + ": duplicate id '" +
                                record.id + "', keeping the later record");
      loaded.records[it->second] = std::move(record);
    } else {
      position.emplace(record.id, loaded.records.size());
      loaded.records.push_back(std::move(record));
    }
  }
  return loaded;
}

inline LoadedRecords load_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read record store: " + path);
  return load_records(in);
}

/// Records that take part in matching. Non-dataset types are kept in the
/// store but only matched on request.
inline std::vector<DatasetRecord> matchable_records(std::span<const DatasetRecord> records,
                                                    bool include_all_types) {
  std::vector<DatasetRecord> out;
  for (const auto& record : records) {
    if (include_all_types || record.resource_type == ResourceType::dataset) out.push_back(record);
  }
  return out;
}

}  // namespace dataref
