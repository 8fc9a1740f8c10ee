#pragma once

// Two-phase evaluation against a gold standard.
//
// Detection: per paper, system mentions and gold references are aligned as
// multisets of (folded) feature surfaces; aligned pairs are true positives,
// unaligned gold references false negatives and unaligned mentions false
// positives. An offset-strict mode aligns only identical spans.
//
// Matching: only detection true positives take part. An item is correct when
// the system's suggestions share a record with the gold's acceptable set
// (or both are empty). Every miss counts once as a false negative and once
// as a false positive.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dataref/detect.hpp"
#include "dataref/error.hpp"
#include "dataref/unicode.hpp"

namespace dataref {

struct GoldReference {
  std::string feature;
  std::optional<std::pair<std::size_t, std::size_t>> span;
  std::set<std::string> acceptable_ids;  // empty: dataset not in the registry

  friend bool operator==(const GoldReference&, const GoldReference&) = default;
};

/// paper id -> gold references of that paper
using GoldStandard = std::map<std::string, std::vector<GoldReference>>;

enum class Phase { detection, matching };

inline std::string_view to_string(Phase p) { return p == Phase::detection ? "detection" : "matching"; }

struct EvalReport {
  Phase phase = Phase::detection;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
};

/// Harmonic mean 2pr/(p+r); 0 when p + r = 0.
inline double f_measure(double p, double r) {
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

inline double safe_ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

inline EvalReport make_report(Phase phase, std::size_t tp, std::size_t fp, std::size_t fn) {
  EvalReport r{phase, tp, fp, fn, safe_ratio(tp, tp + fp), safe_ratio(tp, tp + fn), 0.0};
  r.f_measure = f_measure(r.precision, r.recall);
  return r;
}

struct AlignedPair {
  std::string paper_id;
  std::string mention_id;
  std::size_t gold_index = 0;  // into gold.at(paper_id)
};

struct DetectionAlignment {
  std::vector<AlignedPair> true_positives;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
};

struct DetectionOptions {
  bool offset_strict = false;
};

/// Pairs mentions with gold references per paper. Throws NotFoundError for
/// a paper that has mentions but no gold block.
inline DetectionAlignment align_detection(std::span<const ReferenceMention> mentions,
                                          const GoldStandard& gold,
                                          DetectionOptions options = {}) {
  std::map<std::string, std::vector<const ReferenceMention*>> by_paper;
  for (const auto& m : mentions) by_paper[m.paper_id].push_back(&m);
  for (const auto& [paper, list] : by_paper) {
    if (!gold.contains(paper)) {
      throw NotFoundError("paper '" + paper + "' has system mentions but no gold standard entry");
    }
  }

  DetectionAlignment out;
  for (const auto& [paper, references] : gold) {
    const auto it = by_paper.find(paper);
    const std::vector<const ReferenceMention*> none;
    const auto& system = it == by_paper.end() ? none : it->second;
    std::vector<bool> gold_used(references.size(), false);
    std::size_t matched = 0;
    for (const ReferenceMention* m : system) {
      const std::string feature = unicode::fold(m->feature);
      for (std::size_t g = 0; g < references.size(); ++g) {
        if (gold_used[g] || unicode::fold(references[g].feature) != feature) continue;
        if (options.offset_strict &&
            (!references[g].span || references[g].span->first != m->start ||
             references[g].span->second != m->end)) {
          continue;
        }
        gold_used[g] = true;
        out.true_positives.push_back(AlignedPair{paper, m->mention_id, g});
        ++matched;
        break;
      }
    }
    out.false_positives += system.size() - matched;
    out.false_negatives += references.size() - matched;
  }
  return out;
}

inline EvalReport evaluate_detection(std::span<const ReferenceMention> mentions,
                                     const GoldStandard& gold, DetectionOptions options = {}) {
  const auto a = align_detection(mentions, gold, options);
  return make_report(Phase::detection, a.true_positives.size(), a.false_positives,
                     a.false_negatives);
}

/// Record ids the system proposes for one detected mention.
struct SystemMatch {
  std::string paper_id;
  std::string mention_id;
  std::set<std::string> suggestions;
};

/// Scores the matching phase over the detection true positives. A system
/// match for a mention that is not a detection true positive is an error;
/// a true positive without a system match counts as an empty suggestion set.
inline EvalReport evaluate_matching(std::span<const SystemMatch> matches, const GoldStandard& gold,
                                    const DetectionAlignment& alignment) {
  std::map<std::pair<std::string, std::string>, const AlignedPair*> tp_items;
  for (const auto& pair : alignment.true_positives) {
    tp_items[{pair.paper_id, pair.mention_id}] = &pair;
  }
  std::map<std::pair<std::string, std::string>, const SystemMatch*> by_item;
  for (const auto& m : matches) {
    const std::pair key{m.paper_id, m.mention_id};
    if (!tp_items.contains(key)) {
      throw Error("mention '" + m.mention_id + "' of paper '" + m.paper_id +
                  "' is not a detection true positive");
    }
    by_item[key] = &m;
  }

  std::size_t tp = 0;
  std::size_t misses = 0;
  for (const auto& [key, pair] : tp_items) {
    const auto& acceptable = gold.at(pair->paper_id).at(pair->gold_index).acceptable_ids;
    const auto it = by_item.find(key);
    static const std::set<std::string> empty;
    const auto& suggested = it == by_item.end() ? empty : it->second->suggestions;
    const bool correct =
        acceptable.empty()
            ? suggested.empty()
            : std::any_of(suggested.begin(), suggested.end(),
                          [&](const std::string& id) { return acceptable.contains(id); });
    if (correct) {
      ++tp;
    } else {
      ++misses;
    }
  }
  return make_report(Phase::matching, tp, misses, misses);
}

// ---------------------------------------------------------------------------
// Gold standard file:
//
//   # comment
//   [paper-id]
//   feature<TAB>id1,id2<TAB>start-end
//
// The id list may be empty; the span column is optional.

inline GoldStandard read_gold(std::istream& in) {
  GoldStandard gold;
  std::string* paper = nullptr;
  std::string current;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string_view trimmed = unicode::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto fail = [&](const std::string& why) {
      throw FormatError("gold line " + std::to_string(line_no) + ": " + why);
    };
    if (trimmed.front() == '[') {
      if (trimmed.back() != ']' || trimmed.size() < 3) fail("malformed paper header");
      current = std::string(trimmed.substr(1, trimmed.size() - 2));
      gold[current];
      paper = &current;
      continue;
    }
    if (!paper) fail("reference before the first [paper] header");
    std::vector<std::string> fields;
    std::size_t begin = 0;
    while (true) {
      const auto tab = line.find('\t', begin);
      fields.push_back(line.substr(begin, tab == std::string::npos ? std::string::npos : tab - begin));
      if (tab == std::string::npos) break;
      begin = tab + 1;
    }
    GoldReference ref;
    ref.feature = std::string(unicode::trim(fields[0]));
    if (ref.feature.empty()) fail("empty feature");
    if (fields.size() > 1) {
      std::stringstream ids(fields[1]);
      std::string id;
      while (std::getline(ids, id, ',')) {
        const std::string_view t = unicode::trim(id);
        if (!t.empty()) ref.acceptable_ids.emplace(t);
      }
    }
    if (fields.size() > 2 && !unicode::trim(fields[2]).empty()) {
      const std::string span(unicode::trim(fields[2]));
      const auto dash = span.find('-');
      try {
        if (dash == std::string::npos) throw std::invalid_argument("no dash");
        ref.span = std::pair{static_cast<std::size_t>(std::stoull(span.substr(0, dash))),
                             static_cast<std::size_t>(std::stoull(span.substr(dash + 1)))};
      } catch (const std::exception&) {
        fail("span must be start-end");
      }
    }
    gold[*paper].push_back(std::move(ref));
  }
  return gold;
}

inline GoldStandard read_gold(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read gold standard: " + path.string());
  return read_gold(in);
}

inline void write_gold(std::ostream& out, const GoldStandard& gold) {
  for (const auto& [paper, refs] : gold) {
    out << '[' << paper << "]\n";
    for (const auto& ref : refs) {
      out << ref.feature << '\t';
      bool first = true;
      for (const auto& id : ref.acceptable_ids) {
        if (!first) out << ',';
        out << id;
        first = false;
      }
      if (ref.span) out << '\t' << ref.span->first << '-' << ref.span->second;
      out << '\n';
    }
  }
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["phase"] = std::string(to_string(r.phase));
  j["tp"] = r.tp;
  j["fp"] = r.fp;
  j["fn"] = r.fn;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f_measure"] = r.f_measure;
  return j;
}

/// Fixed-width table, values rounded to four decimals for display only.
inline std::string render_reports(std::span<const EvalReport> reports) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %9s %9s %9s %6s %6s %6s\n", "Phase", "Precision", "Recall",
                "F-measure", "TP", "FP", "FN");
  out << buf;
  for (const auto& r : reports) {
    std::string name(to_string(r.phase));
    name[0] = static_cast<char>(name[0] - 'a' + 'A');
    std::snprintf(buf, sizeof buf, "%-10s %9.4f %9.4f %9.4f %6zu %6zu %6zu\n", name.c_str(),
                  r.precision, r.recall, r.f_measure, r.tp, r.fp, r.fn);
    out << buf;
  }
  return out.str();
}

}  // namespace dataref
