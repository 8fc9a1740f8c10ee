#pragma once

// File-backed review sessions. Each session is an append-only event log
// `<dir>/<session_id>.jsonl`: a "created" event holding the items, followed
// by one "decision" event per expert decision. Replaying the log rebuilds the
// session.

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dataref/error.hpp"
#include "dataref/review.hpp"

namespace dataref {

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace detail {

inline void append_durably(const std::filesystem::path& path, const std::string& line) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
  if (fd < 0) throw IoError("cannot open " + path.string() + " for appending");
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(fd, line.data() + written, line.size() - written);
    if (n < 0) {
      ::close(fd);
      throw IoError("write to " + path.string() + " failed");
    }
    written += static_cast<std::size_t>(n);
  }
  const int rc = ::fsync(fd);
  ::close(fd);
  if (rc != 0) throw IoError("fsync of " + path.string() + " failed");
}

inline void write_file_durably(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  std::filesystem::remove(tmp);
  append_durably(tmp, content);
  std::filesystem::rename(tmp, path);
}

}  // namespace detail

inline std::string created_event_line(const ReviewSession& session) {
  nlohmann::ordered_json j;
  j["event"] = "created";
  j["session_id"] = session.session_id;
  j["paper_id"] = session.paper_id;
  j["workflow"] = std::string(to_string(session.workflow));
  auto items = nlohmann::ordered_json::array();
  for (const auto& item : session.items) items.push_back(to_json(item, false));
  j["items"] = std::move(items);
  return j.dump() + "\n";
}

inline std::string decision_event_line(const MatchDecision& decision) {
  nlohmann::ordered_json j;
  j["event"] = "decision";
  const auto body = to_json(decision);
  for (const auto& [k, v] : body.items()) j[k] = v;
  return j.dump() + "\n";
}

/// Rebuilds a session from its log. A trailing line without a newline is an
/// interrupted append and is ignored.
inline ReviewSession replay_session(std::istream& in) {
  ReviewSession session;
  bool created = false;
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t begin = 0;
  std::size_t line_no = 0;
  while (begin < content.size()) {
    const auto nl = content.find('\n', begin);
    if (nl == std::string::npos) break;
    const std::string line = content.substr(begin, nl - begin);
    begin = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const std::string event = j.at("event").get<std::string>();
      if (event == "created") {
        session = ReviewSession{};
        session.session_id = j.at("session_id").get<std::string>();
        session.paper_id = j.at("paper_id").get<std::string>();
        const auto workflow = parse_workflow(j.at("workflow").get<std::string>());
        if (!workflow) throw FormatError("unknown workflow");
        session.workflow = *workflow;
        for (const auto& item : j.at("items")) session.items.push_back(item_from_json(item));
        created = true;
      } else if (event == "decision") {
        if (!created) throw FormatError("decision before session creation");
        MatchDecision d = decision_from_json(j);
        ReviewItem* item = session.find(d.key);
        if (!item) throw FormatError("decision for unknown key '" + d.key + "'");
        item->history.push_back(std::move(d));
      } else {
        throw FormatError("unknown event '" + event + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("session log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!created) throw FormatError("session log has no creation event");
  return session;
}

class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  const std::filesystem::path& dir() const { return dir_; }

  std::filesystem::path path_of(const std::string& session_id) const {
    return dir_ / (session_id + ".jsonl");
  }

  /// Writes the session's log. An existing log with the same creation event
  /// is kept as is (its decisions survive a re-run); a different one is
  /// replaced. Returns true when a log was written.
  bool create(const ReviewSession& session) {
    const auto lock = lock_for(session.session_id);
    const std::string line = created_event_line(session);
    const auto path = path_of(session.session_id);
    if (std::filesystem::exists(path)) {
      std::ifstream in(path, std::ios::binary);
      std::string first;
      std::getline(in, first);
      if (first + "\n" == line) return false;
    }
    detail::write_file_durably(path, line);
    return true;
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir_, ec)) {
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
        out.push_back(entry.path().stem().string());
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  bool contains(const std::string& session_id) const {
    return std::filesystem::exists(path_of(session_id));
  }

  ReviewSession load(const std::string& session_id) const {
    std::ifstream in(path_of(session_id), std::ios::binary);
    if (!in) throw NotFoundError("unknown session '" + session_id + "'");
    return replay_session(in);
  }

  std::vector<ReviewSession> load_all() const {
    std::vector<ReviewSession> out;
    for (const auto& id : ids()) out.push_back(load(id));
    return out;
  }

  /// Records a decision and makes it durable before returning.
  MatchDecision decide(const std::string& session_id, const std::string& key, Choice choice,
                       std::string decided_by, std::string timestamp = utc_timestamp()) {
    const auto lock = lock_for(session_id);
    ReviewSession session = load(session_id);
    MatchDecision decision =
        record_decision(session, key, std::move(choice), std::move(decided_by), std::move(timestamp));
    detail::append_durably(path_of(session_id), decision_event_line(decision));
    return decision;
  }

 private:
  std::unique_lock<std::mutex> lock_for(const std::string& session_id) {
    std::mutex* m = nullptr;
    {
      std::lock_guard guard(registry_mutex_);
      auto& slot = locks_[session_id];
      if (!slot) slot = std::make_unique<std::mutex>();
      m = slot.get();
    }
    return std::unique_lock<std::mutex>(*m);
  }

  std::filesystem::path dir_;
  std::mutex registry_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

}  // namespace dataref
