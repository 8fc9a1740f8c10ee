#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "dataref/pipeline.hpp"
#include "dataref/service.hpp"
#include "support.hpp"
#include "synthetic.hpp"

using namespace dataref;
using testing_support::read_file;
using testing_support::TempDir;
using testing_support::write_file;
namespace fs = std::filesystem;

namespace {

PipelineConfig config_for(const fs::path& corpus_dir, const fs::path& out) {
  PipelineConfig c;
  c.records = corpus_dir / "records.jsonl";
  c.dictionary = corpus_dir / "dictionary.tsv";
  c.output_dir = out;
  c.workflows = {Workflow::per_reference, Workflow::per_feature};
  return c;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_file(e.path());
  }
  return files;
}

}  // namespace

TEST(Pipeline, ZeroPapersWritesEmptyArtifacts) {
  TempDir dir;
  synthetic::write_corpus(synthetic::make_corpus(1, {}), dir.path());
  const auto result = run_pipeline(config_for(dir.path(), dir / "out"), {});
  EXPECT_TRUE(result.ok());
  EXPECT_EQ(result.papers, 0u);
  EXPECT_EQ(read_file(dir / "out/mentions.jsonl"), "");
  EXPECT_EQ(read_file(dir / "out/ranked.jsonl"), "");
}

TEST(Pipeline, PaperWithoutFeaturesGetsEmptySessions) {
  TempDir dir;
  synthetic::write_corpus(synthetic::make_corpus(2, {0}), dir.path());
  const auto result = run_pipeline(config_for(dir.path(), dir / "out"), paper_files(dir / "papers"));
  EXPECT_TRUE(result.ok());
  EXPECT_EQ(result.sessions, 2u);
  EXPECT_EQ(result.empty_sessions, 2u);
  SessionStore store(dir / "out/sessions");
  EXPECT_EQ(store.load("paper01.per_reference").status(), SessionStatus::completed);
}

TEST(Pipeline, FailingPaperDoesNotStopTheRest) {
  TempDir dir;
  synthetic::write_corpus(synthetic::make_corpus(3, {2, 3}), dir.path());
  auto papers = paper_files(dir / "papers");
  papers.push_back(dir / "papers/missing.txt");
  const auto result = run_pipeline(config_for(dir.path(), dir / "out"), papers);
  EXPECT_FALSE(result.ok());
  ASSERT_EQ(result.failures.size(), 1u);
  EXPECT_NE(result.failures[0].paper.find("missing.txt"), std::string::npos);
  EXPECT_EQ(result.papers, 2u);
  EXPECT_EQ(result.mentions, 5u);
  EXPECT_EQ(read_mentions(dir / "out/mentions.jsonl").size(), 5u);
}

TEST(Pipeline, DeterministicAcrossRunsAndThreadCounts) {
  TempDir dir;
  synthetic::write_corpus(synthetic::make_corpus(4, {3, 1, 4, 1, 5, 0, 2, 6, 5, 3}), dir.path());
  const auto papers = paper_files(dir / "papers");
  auto first = config_for(dir.path(), dir / "a");
  auto second = config_for(dir.path(), dir / "b");
  second.jobs = 4;
  const auto ra = run_pipeline(first, papers);
  const auto rb = run_pipeline(second, papers);
  EXPECT_TRUE(ra.ok());
  EXPECT_EQ(ra.mentions, 30u);
  EXPECT_EQ(snapshot(dir / "a"), snapshot(dir / "b"));
}

TEST(Pipeline, DetectedMentionsMatchPlantedGold) {
  TempDir dir;
  const auto corpus = synthetic::make_corpus(5, {2, 2, 3});
  synthetic::write_corpus(corpus, dir.path());
  run_pipeline(config_for(dir.path(), dir / "out"), paper_files(dir / "papers"));
  const auto mentions = read_mentions(dir / "out/mentions.jsonl");
  const auto report = evaluate_detection(mentions, corpus.gold(), {true});
  EXPECT_EQ(report.precision, 1.0);
  EXPECT_EQ(report.recall, 1.0);
}

TEST(Config, LoadResolvesRelativePaths) {
  TempDir dir;
  write_file(dir / "cfg.json", R"({"records": "r.jsonl", "output_dir": "/abs/out", "threshold": 0.25,
                                   "workflows": ["per_feature"], "jobs": 2})");
  const auto c = load_config(dir / "cfg.json");
  EXPECT_EQ(c.records, dir / "r.jsonl");
  EXPECT_EQ(c.output_dir, "/abs/out");
  EXPECT_DOUBLE_EQ(c.threshold, 0.25);
  EXPECT_EQ(c.workflows, std::vector<Workflow>{Workflow::per_feature});
  EXPECT_EQ(c.jobs, 2u);
}

TEST(Config, InvalidValuesAreRejected) {
  TempDir dir;
  for (const char* body : {R"({"threshold": 1.5})", R"({"reference_cap": 0})", R"({"workflows": []})",
                           R"({"workflows": ["by_color"]})", R"({"port": 70000})", R"({"records": 5})",
                           R"([1, 2])", "{not json"}) {
    write_file(dir / "cfg.json", body);
    EXPECT_THROW(load_config(dir / "cfg.json"), ConfigError) << body;
  }
  EXPECT_THROW(load_config(dir / "absent.json"), ConfigError);
}

TEST(Config, EnvironmentVariableIsTheFallback) {
  TempDir dir;
  write_file(dir / "env.json", R"({"threshold": 0.4})");
  write_file(dir / "explicit.json", R"({"threshold": 0.6})");
  ::setenv("DATAREF_CONFIG", (dir / "env.json").c_str(), 1);
  EXPECT_DOUBLE_EQ(resolve_config(std::nullopt).threshold, 0.4);
  EXPECT_DOUBLE_EQ(resolve_config(dir / "explicit.json").threshold, 0.6);
  ::unsetenv("DATAREF_CONFIG");
  EXPECT_DOUBLE_EQ(resolve_config(std::nullopt).threshold, kDefaultThreshold);
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    synthetic::write_corpus(synthetic::make_corpus(6, {3}), dir_.path());
    config_ = config_for(dir_.path(), dir_ / "out");
    ASSERT_TRUE(run_pipeline(config_, paper_files(dir_ / "papers")).ok());
    service_ = std::make_unique<ReviewService>(ServiceOptions::from(config_));
    service_->install(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  nlohmann::json get(const std::string& path, int expected = 200) {
    const auto res = client_->Get(path);
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, expected) << path << " " << res->body;
    return nlohmann::json::parse(res->body);
  }
  nlohmann::json post(const std::string& path, const std::string& body, int expected) {
    const auto res = client_->Post(path, body, "application/json");
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, expected) << path << " " << res->body;
    return nlohmann::json::parse(res->body);
  }

  TempDir dir_;
  PipelineConfig config_;
  std::unique_ptr<ReviewService> service_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::unique_ptr<httplib::Client> client_;
};

TEST_F(ServiceTest, ReviewRoundTrip) {
  const auto sessions = get("/sessions");
  ASSERT_EQ(sessions.size(), 2u);
  const auto items = get("/sessions/paper01.per_reference/items");
  ASSERT_EQ(items.size(), 3u);

  post("/sessions/paper01.per_reference/export", "{}", 409);
  for (const auto& item : items) {
    const std::string key = item["key"];
    const std::string pick = item["candidates"].empty() ? "NO_MATCH" : item["candidates"][0]["record_id"].get<std::string>();
    const auto d = post("/sessions/paper01.per_reference/items/" + key + "/decision",
                        R"({"choice": ")" + pick + R"("})", 200);
    EXPECT_EQ(d["decided_by"], "expert");
  }
  const auto doc = post("/sessions/paper01.per_reference/export", "{}", 200);
  EXPECT_EQ(doc["rows"].size() + doc["gaps"].size(), 3u);
  EXPECT_TRUE(fs::exists(dir_ / "out/links/paper01.per_reference.tsv"));

  // decisions are on disk: a fresh service sees them
  ReviewService fresh(ServiceOptions::from(config_));
  EXPECT_EQ(fresh.store().load("paper01.per_reference").status(), SessionStatus::completed);
}

TEST_F(ServiceTest, ErrorsMapToStatusCodes) {
  get("/sessions/nope", 404);
  post("/sessions/nope/items/m1/decision", R"({"choice": "NO_MATCH"})", 404);
  post("/sessions/paper01.per_reference/items/m99/decision", R"({"choice": "NO_MATCH"})", 404);
  post("/sessions/paper01.per_reference/items/m1/decision", R"({"pick": 1})", 400);
  post("/sessions/paper01.per_reference/items/m1/decision", "not json", 400);
  post("/blacklist", R"({"surface": "  "})", 400);
}

TEST_F(ServiceTest, BlacklistAndDictionary) {
  EXPECT_TRUE(get("/blacklist").empty());
  EXPECT_EQ(post("/blacklist", R"({"surface": "GLES"})", 201)["added"], true);
  EXPECT_EQ(post("/blacklist", R"({"surface": "GLES"})", 200)["added"], false);
  EXPECT_EQ(get("/blacklist"), nlohmann::json::array({"GLES"}));
  EXPECT_EQ(read_file(dir_ / "out/blacklist.txt"), "GLES\n");

  const auto dictionary = get("/dictionary");
  ASSERT_EQ(dictionary.size(), synthetic::features().size());
  for (const auto& e : dictionary) EXPECT_EQ(e["blacklisted"], e["surface"] == "GLES");

  // the flagged surface no longer produces mentions
  const auto entries = load_active_dictionary(config_.dictionary, dir_ / "out/blacklist.txt");
  const auto mentions = detect_references(PaperText{"p", "We use GLES 2014 and EVS.", std::nullopt}, entries);
  ASSERT_EQ(mentions.size(), 1u);
  EXPECT_EQ(mentions[0].feature, "EVS");
}

TEST(Service, SecondServerOnSamePortFails) {
  TempDir dir;
  ServiceOptions options{dir / "sessions", dir / "links", dir / "blacklist.txt", std::nullopt, std::nullopt};
  ReviewService service(options);
  httplib::Server first;
  const int port = first.bind_to_any_port("127.0.0.1");
  std::thread t([&] { first.listen_after_bind(); });
  first.wait_until_ready();
  httplib::Server second;
  EXPECT_THROW(serve(service, second, "127.0.0.1", port), ConfigError);
  first.stop();
  t.join();
}
