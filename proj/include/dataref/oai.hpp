#pragma once

// OAI-PMH 2.0 harvesting of Dublin Core records (verb=ListRecords,
// metadataPrefix=oai_dc) with resumption-token paging.

#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "dataref/error.hpp"
#include "dataref/record.hpp"
#include "dataref/unicode.hpp"
#include "dataref/years.hpp"

namespace dataref::oai {

using Params = std::vector<std::pair<std::string, std::string>>;

/// Returns the response body for one ListRecords request or throws.
using Fetch = std::function<std::string(const Params&)>;

struct HarvestOptions {
  std::optional<std::string> set_spec;
  std::optional<std::string> from_date;
  /// Continue an interrupted harvest from this token instead of starting over.
  std::optional<std::string> resumption_token;
  int max_attempts = 3;
  std::chrono::milliseconds retry_delay{500};
};

/// Network or protocol failure. `resumption_token` is the token to pass back
/// in HarvestOptions to continue where the harvest stopped (empty when the
/// first page failed).
class HarvestError : public Error {
 public:
  HarvestError(const std::string& what, std::optional<std::string> token)
      : Error(what), resumption_token(std::move(token)) {}
  std::optional<std::string> resumption_token;
};

struct SkippedRecord {
  std::string oai_identifier;
  std::string reason;
};

struct Page {
  std::vector<DatasetRecord> records;
  std::vector<SkippedRecord> skipped;
  std::size_t deleted = 0;
  std::optional<std::string> resumption_token;  // absent or empty => last page
};

struct HarvestSummary {
  std::size_t records = 0;
  std::size_t skipped = 0;
  std::size_t deleted = 0;
  std::size_t pages = 0;
  std::optional<std::string> last_token;
};

namespace detail {

using boost::property_tree::ptree;

inline std::string_view local_name(std::string_view tag) {
  const auto colon = tag.find(':');
  return colon == std::string_view::npos ? tag : tag.substr(colon + 1);
}

inline const ptree* child(const ptree& node, std::string_view name) {
  for (const auto& [tag, sub] : node) {
    if (local_name(tag) == name) return &sub;
  }
  return nullptr;
}

inline std::vector<std::string> texts(const ptree& node, std::string_view name) {
  std::vector<std::string> out;
  for (const auto& [tag, sub] : node) {
    if (local_name(tag) != name) continue;
    std::string value(unicode::trim(sub.data()));
    if (!value.empty()) out.push_back(std::move(value));
  }
  return out;
}

inline std::optional<std::string> attribute(const ptree& node, const std::string& name) {
  if (auto attrs = node.get_child_optional("<xmlattr>")) {
    if (auto value = attrs->get_optional<std::string>(name)) return *value;
  }
  return std::nullopt;
}

inline std::string lower_ascii(std::string s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

}  // namespace detail

/// Maps a dc:type value onto the record classification. Both DCMI type
/// vocabulary terms and registry-specific labels are recognised.
inline ResourceType map_resource_type(const std::vector<std::string>& dc_types) {
  for (const auto& raw : dc_types) {
    const std::string t = detail::lower_ascii(raw);
    if (t.find("dataset") != std::string::npos || t == "numeric" || t == "data") {
      return ResourceType::dataset;
    }
    if (t == "text" || t.find("text") == 0) return ResourceType::text;
    if (t.find("collection") != std::string::npos) return ResourceType::collection;
    if (t.find("video") != std::string::npos || t.find("movingimage") != std::string::npos ||
        t.find("audiovisual") != std::string::npos) {
      return ResourceType::video;
    }
    if (t.find("interactive") != std::string::npos) return ResourceType::interactive;
  }
  return ResourceType::other;
}

/// Normalises dc:language values ("de", "ger", "deu", "German") to ISO 639-1.
inline std::optional<std::string> normalize_language(std::string_view raw) {
  std::string t = detail::lower_ascii(std::string(unicode::trim(raw)));
  if (const auto dash = t.find_first_of("-_"); dash != std::string::npos) t.resize(dash);
  if (t == "ger" || t == "deu" || t == "german" || t == "deutsch") return "de";
  if (t == "eng" || t == "english" || t == "englisch") return "en";
  if (t == "fre" || t == "fra" || t == "french") return "fr";
  if (t.size() == 2 && t[0] >= 'a' && t[0] <= 'z' && t[1] >= 'a' && t[1] <= 'z') return t;
  return std::nullopt;
}

/// Picks the DOI among dc:identifier values ("10.x/y", "doi:10.x/y",
/// "https://doi.org/10.x/y"); falls back to the first identifier.
inline std::optional<std::string> pick_identifier(const std::vector<std::string>& ids) {
  for (const auto& id : ids) {
    std::string_view v = id;
    for (std::string_view prefix : {"doi:", "https://doi.org/", "http://doi.org/",
                                    "https://dx.doi.org/", "http://dx.doi.org/"}) {
      if (v.substr(0, prefix.size()) == prefix) {
        v.remove_prefix(prefix.size());
        break;
      }
    }
    if (v.substr(0, 3) == "10.") return std::string(v);
  }
  if (!ids.empty()) return ids.front();
  return std::nullopt;
}

/// Parses a ListRecords response. Malformed records land in `skipped`; an
/// OAI error other than noRecordsMatch or unparsable XML throws FormatError.
inline Page parse_list_records(std::string_view xml) {
  using detail::ptree;
  ptree doc;
  try {
    std::istringstream in{std::string(xml)};
    boost::property_tree::read_xml(in, doc);
  } catch (const boost::property_tree::xml_parser_error& e) {
    throw FormatError(std::string("OAI-PMH response is not well-formed XML: ") + e.what());
  }
  const ptree* root = detail::child(doc, "OAI-PMH");
  if (!root) throw FormatError("OAI-PMH response lacks the OAI-PMH root element");

  Page page;
  if (const ptree* error = detail::child(*root, "error")) {
    const std::string code = detail::attribute(*error, "code").value_or("");
    if (code == "noRecordsMatch") return page;
    throw FormatError("OAI-PMH error " + code + ": " + std::string(unicode::trim(error->data())));
  }
  const ptree* list = detail::child(*root, "ListRecords");
  if (!list) throw FormatError("OAI-PMH response lacks ListRecords");

  for (const auto& [tag, record] : *list) {
    if (detail::local_name(tag) == "resumptionToken") {
      std::string token(unicode::trim(record.data()));
      if (!token.empty()) page.resumption_token = std::move(token);
      continue;
    }
    if (detail::local_name(tag) != "record") continue;

    const ptree* header = detail::child(record, "header");
    std::string oai_id;
    if (header) {
      if (const ptree* ident = detail::child(*header, "identifier")) {
        oai_id = std::string(unicode::trim(ident->data()));
      }
      if (detail::attribute(*header, "status").value_or("") == "deleted") {
        ++page.deleted;
        continue;
      }
    }
    const ptree* metadata = detail::child(record, "metadata");
    const ptree* dc = metadata ? detail::child(*metadata, "dc") : nullptr;
    if (!dc) {
      page.skipped.push_back({oai_id, "no oai_dc metadata"});
      continue;
    }
    const auto titles = detail::texts(*dc, "title");
    const auto identifier = pick_identifier(detail::texts(*dc, "identifier"));
    if (titles.empty()) {
      page.skipped.push_back({oai_id, "missing dc:title"});
      continue;
    }
    if (!identifier && oai_id.empty()) {
      page.skipped.push_back({oai_id, "missing identifier"});
      continue;
    }

    DatasetRecord out;
    out.id = identifier.value_or(oai_id);
    out.title = titles.front();
    for (const auto& date : detail::texts(*dc, "date")) {
      if (auto year = last_year_in(date.substr(0, 4))) {
        out.year = year;
        break;
      }
    }
    if (!out.year) out.year = last_year_in(out.title);
    for (const auto& lang : detail::texts(*dc, "language")) {
      if ((out.language = normalize_language(lang))) break;
    }
    out.resource_type = map_resource_type(detail::texts(*dc, "type"));
    page.records.push_back(std::move(out));
  }
  return page;
}

inline Params list_records_params(const HarvestOptions& options,
                                  const std::optional<std::string>& token) {
  if (token) return {{"verb", "ListRecords"}, {"resumptionToken", *token}};
  Params params{{"verb", "ListRecords"}, {"metadataPrefix", "oai_dc"}};
  if (options.set_spec) params.emplace_back("set", *options.set_spec);
  if (options.from_date) params.emplace_back("from", *options.from_date);
  return params;
}

/// Streams every record to `sink`, following resumption tokens until the
/// repository reports the last page. Each page is retried up to
/// `max_attempts` times before a HarvestError carrying the token to resume
/// from is thrown.
inline HarvestSummary harvest(const Fetch& fetch, const HarvestOptions& options,
                              const std::function<void(const DatasetRecord&)>& sink) {
  HarvestSummary summary;
  std::optional<std::string> token = options.resumption_token;
  summary.last_token = token;
  while (true) {
    const Params params = list_records_params(options, token);
    Page page;
    std::string last_error;
    bool ok = false;
    for (int attempt = 1; attempt <= std::max(1, options.max_attempts); ++attempt) {
      try {
        page = parse_list_records(fetch(params));
        ok = true;
        break;
      } catch (const std::exception& e) {
        last_error = e.what();
        spdlog::warn("OAI-PMH request failed (attempt {}/{}): {}", attempt, options.max_attempts,
                     last_error);
        if (attempt < options.max_attempts) std::this_thread::sleep_for(options.retry_delay);
      }
    }
    if (!ok) throw HarvestError("harvest interrupted: " + last_error, token);

    ++summary.pages;
    for (const auto& skipped : page.skipped) {
      spdlog::warn("skipping OAI record '{}': {}", skipped.oai_identifier, skipped.reason);
    }
    summary.skipped += page.skipped.size();
    summary.deleted += page.deleted;
    for (const auto& record : page.records) {
      sink(record);
      ++summary.records;
    }
    if (!page.resumption_token) break;
    token = page.resumption_token;
    summary.last_token = token;
  }
  return summary;
}

/// HTTP transport for `harvest`: GET `endpoint` with the request parameters.
inline Fetch http_fetch(const std::string& endpoint,
                        std::chrono::seconds timeout = std::chrono::seconds(60)) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint must be an absolute URL");
  const auto path_begin = endpoint.find('/', scheme_end + 3);
  const std::string base = endpoint.substr(0, path_begin);
  const std::string path = path_begin == std::string::npos ? "/" : endpoint.substr(path_begin);
  return [base, path, timeout](const Params& params) {
    httplib::Client client(base);
    client.set_follow_location(true);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    httplib::Params query(params.begin(), params.end());
    auto response = client.Get(path, query, httplib::Headers{});
    if (!response) {
      throw Error("request to " + base + path + " failed: " + httplib::to_string(response.error()));
    }
    if (response->status != 200) {
      throw Error("request to " + base + path + " returned HTTP " +
                  std::to_string(response->status));
    }
    return response->body;
  };
}

}  // namespace dataref::oai
