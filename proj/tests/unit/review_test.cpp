#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dataref/rank.hpp"
#include "dataref/review.hpp"
#include "dataref/session_store.hpp"
#include "support.hpp"
#include "synthetic.hpp"

using namespace dataref;
using testing_support::TempDir;
using testing_support::uniform;

namespace {

ReferenceMention mention(std::string id, std::string feature, std::size_t start) {
  ReferenceMention m;
  m.paper_id = "p1";
  m.mention_id = std::move(id);
  m.feature = std::move(feature);
  m.start = start;
  m.end = start + m.feature.size();
  m.query = m.feature + " data";
  return m;
}

RankedList ranked(const ReferenceMention& m, const std::vector<std::pair<std::string, double>>& candidates) {
  RankedList list{m.paper_id, m.mention_id, m.feature, m.kind, {}};
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    list.candidates.push_back({candidates[i].first, candidates[i].second, false, i + 1});
  }
  return list;
}

const TitleLookup no_titles = [](const std::string& id) { return "title of " + id; };

struct Fixture {
  std::vector<ReferenceMention> mentions;
  std::vector<RankedList> lists;
};

// 3 EVS mentions and 1 PIAAC mention
Fixture small() {
  Fixture f;
  f.mentions = {mention("m1", "EVS", 0), mention("m2", "PIAAC", 20), mention("m3", "EVS", 40),
                mention("m4", "EVS", 60)};
  f.lists = {ranked(f.mentions[0], {{"a", 0.9}, {"b", 0.8}, {"c", 0.7}, {"d", 0.6}, {"e", 0.5}, {"f", 0.4}}),
             ranked(f.mentions[1], {{"p", 0.5}}),
             ranked(f.mentions[2], {{"b", 0.95}, {"g", 0.3}}),
             ranked(f.mentions[3], {{"b", 0.2}, {"h", 0.99}})};
  return f;
}

}  // namespace

TEST(Review, PerReferenceCapsCandidates) {
  const auto f = small();
  const auto s = make_session("p1", Workflow::per_reference, f.mentions, f.lists, no_titles);
  EXPECT_EQ(s.session_id, "p1.per_reference");
  ASSERT_EQ(s.items.size(), 4u);
  EXPECT_EQ(s.items[0].candidates.size(), 5u);
  EXPECT_EQ(s.items[0].candidates[0].title, "title of a");
  EXPECT_EQ(s.status(), SessionStatus::open);
}

TEST(Review, PerFeatureOrdersByOccurrenceThenScore) {
  const auto f = small();
  const auto s = make_session("p1", Workflow::per_feature, f.mentions, f.lists, no_titles);
  ASSERT_EQ(s.items.size(), 2u);
  const auto& evs = *s.find("EVS");
  EXPECT_EQ(evs.mentions.size(), 3u);
  ASSERT_EQ(evs.candidates.size(), 6u);
  EXPECT_EQ(evs.candidates[0].record_id, "b");
  EXPECT_EQ(evs.candidates[0].occurrences, 3u);
  EXPECT_DOUBLE_EQ(evs.candidates[0].score, 0.95);
  EXPECT_EQ(evs.candidates[1].record_id, "h");
  // "f" is 6th in m1's list, outside its top 5, so it never competes
  for (const auto& c : evs.candidates) EXPECT_NE(c.record_id, "f");
}

TEST(Review, DecisionsSupersedeAndTrackOverrides) {
  const auto f = small();
  auto s = make_session("p1", Workflow::per_feature, f.mentions, f.lists, no_titles);
  record_decision(s, "EVS", Choice::record("b"), "expert", "t1");
  const auto second = record_decision(s, "EVS", Choice::record("zz"), "expert", "t2");
  EXPECT_TRUE(second.override_id);
  EXPECT_EQ(s.find("EVS")->history.size(), 2u);
  EXPECT_EQ(s.find("EVS")->decision()->choice.record_id, "zz");
  EXPECT_THROW(record_decision(s, "nope", Choice::no_match(), "expert", "t3"), NotFoundError);
  EXPECT_THROW(export_links(s), StateError);
}

TEST(Review, ExportFansOutAndListsGaps) {
  const auto f = small();
  auto s = make_session("p1", Workflow::per_feature, f.mentions, f.lists, no_titles);
  record_decision(s, "EVS", Choice::record("10.4232/1.1"), "expert", "t");
  record_decision(s, "PIAAC", Choice::no_match(), "expert", "t");
  const auto doc = export_links(s);
  ASSERT_EQ(doc.rows.size(), 3u);
  EXPECT_EQ(doc.rows[0].doi, "https://doi.org/10.4232/1.1");
  ASSERT_EQ(doc.gaps.size(), 1u);
  EXPECT_EQ(doc.gaps[0].key, "PIAAC");
  EXPECT_EQ(render_links(doc),
            "paper_id\tstart\tend\tfeature\trecord_id\tdoi\n"
            "p1\t0\t3\tEVS\t10.4232/1.1\thttps://doi.org/10.4232/1.1\n"
            "p1\t40\t43\tEVS\t10.4232/1.1\thttps://doi.org/10.4232/1.1\n"
            "p1\t60\t63\tEVS\t10.4232/1.1\thttps://doi.org/10.4232/1.1\n"
            "\n# gaps\npaper_id\tkey\tfeature\tmentions\np1\tPIAAC\tPIAAC\t1\n");
  EXPECT_EQ(export_links(s), doc);

  auto r = make_session("p1", Workflow::per_reference, f.mentions, f.lists, no_titles);
  for (const auto& item : r.items) record_decision(r, item.key, Choice::no_match(), "expert", "t");
  const auto all_gaps = export_links(r);
  EXPECT_TRUE(all_gaps.rows.empty());
  EXPECT_EQ(all_gaps.gaps.size(), 4u);

  auto skipped = make_session("p1", Workflow::per_reference, f.mentions, f.lists, no_titles);
  for (const auto& item : skipped.items) record_decision(skipped, item.key, Choice::skipped(), "expert", "t");
  EXPECT_EQ(export_links(skipped), LinksDocument{});
}

TEST(Review, EmptySessionIsCompleteAndExportsNothing) {
  const auto s = make_session("p9", Workflow::per_reference, {}, {}, no_titles);
  EXPECT_TRUE(s.empty());
  EXPECT_EQ(s.status(), SessionStatus::completed);
  EXPECT_EQ(export_links(s), LinksDocument{});
}

TEST(Review, PropertyItemCountsAndFanOut) {
  std::mt19937 rng(47);
  for (int round = 0; round < 300; ++round) {
    std::vector<ReferenceMention> mentions;
    std::vector<RankedList> lists;
    const std::vector<std::string> feats{"A", "B", "C", "D"};
    for (std::size_t i = uniform(rng, 0, 30); i > 0; --i) {
      auto m = mention("m" + std::to_string(mentions.size() + 1), feats[uniform(rng, 0, 3)], mentions.size() * 10);
      std::vector<std::pair<std::string, double>> cands;
      for (std::size_t c = uniform(rng, 0, 9); c > 0; --c) {
        cands.emplace_back("r" + std::to_string(uniform(rng, 0, 12)), 1.0 / static_cast<double>(cands.size() + 1));
      }
      std::sort(cands.begin(), cands.end(), [](auto& a, auto& b) { return a.first < b.first; });
      cands.erase(std::unique(cands.begin(), cands.end(), [](auto& a, auto& b) { return a.first == b.first; }),
                  cands.end());
      lists.push_back(ranked(m, cands));
      mentions.push_back(m);
    }
    const auto per_ref = make_session("p1", Workflow::per_reference, mentions, lists, no_titles);
    auto per_feat = make_session("p1", Workflow::per_feature, mentions, lists, no_titles);
    const auto groups = group_by_feature(mentions);
    ASSERT_EQ(per_ref.items.size(), mentions.size());
    ASSERT_EQ(per_feat.items.size(), groups.size());
    ASSERT_LE(per_feat.items.size(), per_ref.items.size());
    for (const auto& item : per_ref.items) ASSERT_LE(item.candidates.size(), kReferenceCap);

    std::size_t expected_rows = 0;
    for (auto& item : per_feat.items) {
      ASSERT_LE(item.candidates.size(), kFeatureCap);
      std::set<std::string> pool;
      for (const auto& ref : item.mentions) {
        const auto& l = lists[std::stoul(ref.mention_id.substr(1)) - 1];
        for (std::size_t i = 0; i < l.candidates.size() && i < kReferenceCap; ++i) pool.insert(l.candidates[i].record_id);
      }
      for (const auto& c : item.candidates) ASSERT_TRUE(pool.contains(c.record_id));
      if (uniform(rng, 0, 2) == 0) {
        record_decision(per_feat, item.key, Choice::no_match(), "x", "t");
      } else {
        record_decision(per_feat, item.key, Choice::record("r1"), "x", "t");
        expected_rows += groups.at(item.key).size();
      }
    }
    ASSERT_EQ(export_links(per_feat).rows.size(), expected_rows);
  }
}

TEST(SessionStore, ReplayRebuildsDecisions) {
  TempDir dir;
  SessionStore store(dir.path());
  const auto f = small();
  const auto s = make_session("p1", Workflow::per_feature, f.mentions, f.lists, no_titles);
  EXPECT_TRUE(store.create(s));
  EXPECT_FALSE(store.create(s));  // identical creation keeps the log
  store.decide("p1.per_feature", "EVS", Choice::record("b"), "ann", "2024-01-01T00:00:00Z");
  store.decide("p1.per_feature", "EVS", Choice::no_match(), "ann", "2024-01-01T00:00:01Z");

  SessionStore reopened(dir.path());
  const auto loaded = reopened.load("p1.per_feature");
  ASSERT_EQ(loaded.find("EVS")->history.size(), 2u);
  EXPECT_EQ(loaded.find("EVS")->decision()->choice, Choice::no_match());
  EXPECT_EQ(loaded.find("EVS")->history[0].decided_by, "ann");
  EXPECT_EQ(loaded.status(), SessionStatus::open);
  EXPECT_EQ(reopened.ids(), std::vector<std::string>{"p1.per_feature"});
  EXPECT_THROW(reopened.load("missing"), NotFoundError);
  EXPECT_THROW(store.decide("p1.per_feature", "GHOST", Choice::no_match(), "ann"), NotFoundError);

  // re-creating with identical items keeps decisions
  EXPECT_FALSE(store.create(s));
  EXPECT_EQ(store.load("p1.per_feature").find("EVS")->history.size(), 2u);
}

TEST(SessionStore, TruncatedTailIsIgnored) {
  TempDir dir;
  SessionStore store(dir.path());
  const auto f = small();
  store.create(make_session("p1", Workflow::per_reference, f.mentions, f.lists, no_titles));
  store.decide("p1.per_reference", "m1", Choice::record("a"), "x", "t");
  {
    std::ofstream out(store.path_of("p1.per_reference"), std::ios::app | std::ios::binary);
    out << R"({"event":"decision","paper_id":"p1","key":"m2","cho)";
  }
  const auto s = store.load("p1.per_reference");
  EXPECT_TRUE(s.find("m1")->resolved());
  EXPECT_FALSE(s.find("m2")->resolved());

  std::istringstream garbage("{\"event\":\"decision\"}\n");
  EXPECT_THROW(replay_session(garbage), FormatError);
}

TEST(SessionStore, ConcurrentDecisionsAreSerialised) {
  TempDir dir;
  SessionStore store(dir.path());
  const auto f = small();
  store.create(make_session("p1", Workflow::per_reference, f.mentions, f.lists, no_titles));
  std::vector<std::thread> writers;
  for (int t = 0; t < 4; ++t) {
    writers.emplace_back([&store, t] {
      for (int i = 0; i < 10; ++i) {
        store.decide("p1.per_reference", "m" + std::to_string(t + 1), Choice::record("a"), "w", "t");
      }
    });
  }
  for (auto& w : writers) w.join();
  const auto s = store.load("p1.per_reference");
  for (const auto& item : s.items) EXPECT_EQ(item.history.size(), 10u);
  EXPECT_EQ(s.status(), SessionStatus::completed);
}

TEST(Review, SyntheticWorkflowShape) {
  std::mt19937 rng(53);
  std::vector<std::size_t> planted;
  for (std::size_t i = 0; i < 45; ++i) planted.push_back(i % 3);
  std::shuffle(planted.begin(), planted.end(), rng);
  const auto paper = synthetic::make_paper(rng, "shape", planted);
  const auto mentions = detect_references(PaperText{paper.id, paper.text, std::nullopt}, synthetic::dictionary());
  ASSERT_EQ(mentions.size(), 45u);
  const RecordIndex index(matchable_records(synthetic::registry(), false));
  const auto lists = rank_paper(mentions, index, kDefaultThreshold);
  const auto titles = title_lookup(index);

  const auto per_ref = make_session(paper.id, Workflow::per_reference, mentions, lists, titles);
  const auto per_feat = make_session(paper.id, Workflow::per_feature, mentions, lists, titles);
  ASSERT_EQ(per_ref.items.size(), 45u);
  ASSERT_EQ(per_feat.items.size(), 3u);
  for (const auto& item : per_ref.items) {
    EXPECT_LE(item.candidates.size(), 5u);
    EXPECT_FALSE(item.candidates.empty());
  }
  for (const auto& item : per_feat.items) EXPECT_LE(item.candidates.size(), 6u);
}
