#pragma once

// Seeded synthetic corpus: registry records, a dictionary, papers with
// planted references, and the gold standard describing them.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "dataref/dictionary.hpp"
#include "dataref/eval.hpp"
#include "dataref/record.hpp"

namespace synthetic {

struct Feature {
  std::string surface;
  dataref::EntryKind kind;
};

inline const std::vector<Feature>& features() {
  static const std::vector<Feature> f{{"ALLBUS", dataref::EntryKind::abbreviation},
                                      {"PIAAC", dataref::EntryKind::abbreviation},
                                      {"EVS", dataref::EntryKind::abbreviation},
                                      {"GLES", dataref::EntryKind::abbreviation},
                                      {"SOEP", dataref::EntryKind::abbreviation},
                                      {"Exit Poll", dataref::EntryKind::phrase}};
  return f;
}

inline const std::vector<int>& waves() {
  static const std::vector<int> w{1990, 1996, 2000, 2004, 2008, 2010, 2012, 2014};
  return w;
}

// lowercase filler that never contains a feature
inline const std::vector<std::string>& filler() {
  static const std::vector<std::string> w{"the", "results", "show", "that", "respondents", "in",
                                          "our", "sample", "report", "higher", "trust", "and",
                                          "lower", "turnout", "across", "regions", "we", "control",
                                          "for", "age", "education", "income", "models", "estimate"};
  return w;
}

inline std::string record_id(std::size_t feature, int wave, int variant) {
  return "10.9999/" + std::to_string(feature) + "." + std::to_string(wave) + "." + std::to_string(variant);
}

struct Paper {
  std::string id;
  std::string text;
  std::vector<dataref::GoldReference> gold;
};

struct Corpus {
  std::vector<dataref::DatasetRecord> records;
  std::vector<dataref::DictionaryEntry> dictionary;
  std::vector<Paper> papers;

  dataref::GoldStandard gold() const {
    dataref::GoldStandard g;
    for (const auto& p : papers) g[p.id] = p.gold;
    return g;
  }
};

/// Two records per (feature, wave): "<feature> <wave>" and a variant with
/// extra words, plus one study-level record per feature without a year.
inline std::vector<dataref::DatasetRecord> registry() {
  std::vector<dataref::DatasetRecord> out;
  for (std::size_t f = 0; f < features().size(); ++f) {
    const std::string& s = features()[f].surface;
    for (int w : waves()) {
      out.push_back({record_id(f, w, 0), s + " " + std::to_string(w), w, "en", dataref::ResourceType::dataset});
      out.push_back({record_id(f, w, 1), s + " " + std::to_string(w) + " Cumulation Study", w, "en",
                     dataref::ResourceType::dataset});
    }
    out.push_back({record_id(f, 0, 2), s + " Documentation", std::nullopt, "en", dataref::ResourceType::text});
  }
  return out;
}

inline std::vector<dataref::DictionaryEntry> dictionary() {
  std::vector<dataref::DictionaryEntry> out;
  for (std::size_t f = 0; f < features().size(); ++f) {
    out.push_back({features()[f].surface, features()[f].kind, {record_id(f, waves()[0], 0)}, false});
  }
  return out;
}

inline std::string filler_sentence(std::mt19937& rng) {
  std::uniform_int_distribution<std::size_t> len(4, 10);
  std::uniform_int_distribution<std::size_t> word(0, filler().size() - 1);
  std::string s = "Overall";
  for (std::size_t i = len(rng); i > 0; --i) s += " " + filler()[word(rng)];
  return s + ".";
}

/// Paper with one planted reference per entry of `planted` (feature index),
/// separated by filler sentences. Each reference names a wave; the gold
/// accepts both records of that wave.
inline Paper make_paper(std::mt19937& rng, const std::string& id, const std::vector<std::size_t>& planted) {
  Paper p{id, {}, {}};
  std::uniform_int_distribution<std::size_t> wave_pick(0, waves().size() - 1);
  std::uniform_int_distribution<int> coin(0, 1);
  for (std::size_t f : planted) {
    if (coin(rng)) p.text += filler_sentence(rng) + " ";
    const int wave = waves()[wave_pick(rng)];
    const std::string& surface = features()[f].surface;
    const std::string lead = coin(rng) ? "We use data from the " : "Our analysis draws on the ";
    p.text += lead;
    const std::size_t start = p.text.size();
    p.text += surface;
    dataref::GoldReference g;
    g.feature = surface;
    g.span = std::pair(start, p.text.size());
    g.acceptable_ids = {record_id(f, wave, 0), record_id(f, wave, 1)};
    p.gold.push_back(g);
    p.text += " " + std::to_string(wave) + " wave. ";
  }
  p.text += filler_sentence(rng) + "\n";
  return p;
}

/// `refs_per_paper[i]` planted references in paper i.
inline Corpus make_corpus(std::uint32_t seed, const std::vector<std::size_t>& refs_per_paper) {
  std::mt19937 rng(seed);
  Corpus c{registry(), dictionary(), {}};
  std::uniform_int_distribution<std::size_t> feature_pick(0, features().size() - 1);
  for (std::size_t i = 0; i < refs_per_paper.size(); ++i) {
    std::vector<std::size_t> planted;
    for (std::size_t k = 0; k < refs_per_paper[i]; ++k) planted.push_back(feature_pick(rng));
    char name[32];
    std::snprintf(name, sizeof name, "paper%02zu", i + 1);
    c.papers.push_back(make_paper(rng, name, planted));
  }
  return c;
}

/// Writes records.jsonl, dictionary.tsv and papers/<id>.txt under `dir`.
inline void write_corpus(const Corpus& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "papers");
  dataref::write_records((dir / "records.jsonl").string(), c.records);
  dataref::write_dictionary(dir / "dictionary.tsv", c.dictionary);
  for (const auto& p : c.papers) {
    std::ofstream(dir / "papers" / (p.id + ".txt"), std::ios::binary) << p.text;
  }
}

}  // namespace synthetic
