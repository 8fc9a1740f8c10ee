#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include "dataref/error.hpp"
#include "dataref/tokenize.hpp"

namespace dataref {

/// Sparse non-negative term weights. Absent terms weigh 0.
class TermVector {
 public:
  TermVector() = default;
  explicit TermVector(std::map<std::string, double> weights) : weights_(std::move(weights)) {}

  const std::map<std::string, double>& weights() const { return weights_; }
  bool empty() const { return weights_.empty(); }

  double weight(const std::string& term) const {
    const auto it = weights_.find(term);
    return it == weights_.end() ? 0.0 : it->second;
  }

  double norm() const {
    double sum = 0.0;
    for (const auto& [term, w] : weights_) sum += w * w;
    return std::sqrt(sum);
  }

  /// Summed in term order on both sides, so dot(a, b) == dot(b, a) exactly.
  double dot(const TermVector& other) const {
    double sum = 0.0;
    auto a = weights_.begin();
    auto b = other.weights_.begin();
    while (a != weights_.end() && b != other.weights_.end()) {
      if (a->first < b->first) {
        ++a;
      } else if (b->first < a->first) {
        ++b;
      } else {
        sum += a->second * b->second;
        ++a;
        ++b;
      }
    }
    return sum;
  }

  TermVector scaled(double factor) const {
    TermVector out(weights_);
    for (auto& [term, w] : out.weights_) w *= factor;
    return out;
  }

 private:
  std::map<std::string, double> weights_;
};

struct Document {
  std::string id;
  std::string text;
};

/// Document frequencies over a corpus; idf(t) = ln(N / n_t).
struct TfidfModel {
  std::size_t doc_count = 0;
  std::map<std::string, std::size_t, std::less<>> doc_freq;

  /// Terms the corpus has never seen count as appearing in one document.
  double idf(std::string_view term) const {
    const auto it = doc_freq.find(term);
    const std::size_t n = it == doc_freq.end() ? 1 : it->second;
    return std::log(static_cast<double>(doc_count) / static_cast<double>(n));
  }
};

inline TfidfModel build_tfidf(std::span<const Document> documents) {
  if (documents.empty()) throw Error("cannot build a tf-idf model from an empty corpus");
  TfidfModel model;
  model.doc_count = documents.size();
  for (const auto& doc : documents) {
    const auto terms = normalize_terms(doc.text);
    const std::set<std::string> distinct(terms.begin(), terms.end());
    for (const auto& term : distinct) ++model.doc_freq[term];
  }
  return model;
}

/// Raw term frequency times idf. Zero weights are not stored.
inline TermVector vectorize(std::string_view text, const TfidfModel& model) {
  std::map<std::string, double> tf;
  for (auto& term : normalize_terms(text)) tf[std::move(term)] += 1.0;
  std::map<std::string, double> weights;
  for (const auto& [term, count] : tf) {
    const double w = count * model.idf(term);
    if (w > 0.0) weights.emplace(term, w);
  }
  return TermVector(std::move(weights));
}

/// q.d / (|q| |d|), 0 when either vector is zero. Clamped to [0, 1].
inline double cosine_similarity(const TermVector& q, const TermVector& d) {
  const double nq = q.norm();
  const double nd = d.norm();
  if (nq == 0.0 || nd == 0.0) return 0.0;
  return std::clamp(q.dot(d) / (nq * nd), 0.0, 1.0);
}

}  // namespace dataref
