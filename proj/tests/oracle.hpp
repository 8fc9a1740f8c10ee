#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dataref/record.hpp"
#include "dataref/tfidf.hpp"
#include "dataref/tokenize.hpp"

namespace oracle {

// Exhaustive scorer written against the definitions only.
inline std::vector<std::string> ranked_ids(const std::string& query,
                                           std::span<const dataref::DatasetRecord> pool,
                                           const std::vector<dataref::Document>& corpus,
                                           const std::vector<int>& query_years,
                                           double threshold) {
  const double n_docs = static_cast<double>(corpus.size());
  std::map<std::string, double> df;
  for (const auto& doc : corpus) {
    const auto terms = dataref::normalize_terms(doc.text);
    for (const auto& t : std::set<std::string>(terms.begin(), terms.end())) df[t] += 1.0;
  }
  const auto weights = [&](const std::string& text) {
    std::map<std::string, double> tf;
    for (const auto& t : dataref::normalize_terms(text)) tf[t] += 1.0;
    std::map<std::string, double> w;
    for (const auto& [t, c] : tf) {
      const double idf = std::log(n_docs / (df.count(t) ? df[t] : 1.0));
      if (c * idf > 0.0) w[t] = c * idf;
    }
    return w;
  };
  const auto cosine = [](const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [t, w] : a) na += w * w;
    for (const auto& [t, w] : b) nb += w * w;
    for (const auto& [t, w] : a) {
      if (const auto it = b.find(t); it != b.end()) dot += w * it->second;
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::min(1.0, std::max(0.0, dot / (std::sqrt(na) * std::sqrt(nb))));
  };

  struct Row {
    std::string id;
    double score;
    bool boosted;
  };
  std::vector<Row> rows;
  const auto q = weights(query);
  const std::set<int> wanted(query_years.begin(), query_years.end());
  for (const auto& r : pool) {
    const double s = cosine(q, weights(r.title));
    if (s < threshold) continue;
    bool boosted = false;
    for (int y : dataref::record_years(r)) boosted = boosted || wanted.contains(y);
    rows.push_back({r.id, s, boosted});
  }
  // selection sort on (boosted desc, score desc, id asc)
  std::vector<std::string> out;
  while (!rows.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& a = rows[i];
      const auto& b = rows[best];
      if (a.boosted != b.boosted ? a.boosted : a.score != b.score ? a.score > b.score : a.id < b.id) best = i;
    }
    out.push_back(rows[best].id);
    rows.erase(rows.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return out;
}

}  // namespace oracle
