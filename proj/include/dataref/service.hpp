#pragma once

// HTTP API for the review client. All state lives in the session store and
// the blacklist file; every mutation is on disk before the response leaves.
//
//   GET  /sessions
//   GET  /sessions/{id}
//   GET  /sessions/{id}/items
//   POST /sessions/{id}/items/{key}/decision   {"choice": "...", "decided_by": "..."}
//   POST /sessions/{id}/export
//   GET  /blacklist
//   POST /blacklist                            {"surface": "..."}
//   GET  /dictionary

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "dataref/dictionary.hpp"
#include "dataref/error.hpp"
#include "dataref/pipeline.hpp"
#include "dataref/review.hpp"
#include "dataref/session_store.hpp"

namespace dataref {

struct ServiceOptions {
  std::filesystem::path sessions_dir;
  std::filesystem::path links_dir;
  std::filesystem::path blacklist;
  std::optional<std::filesystem::path> dictionary;
  std::optional<std::filesystem::path> static_dir;

  static ServiceOptions from(const PipelineConfig& config) {
    ServiceOptions o;
    o.sessions_dir = config.sessions_dir();
    o.links_dir = config.links_dir();
    o.blacklist = config.blacklist.value_or(config.output_dir / "blacklist.txt");
    if (!config.dictionary.empty()) o.dictionary = config.dictionary;
    o.static_dir = config.static_dir;
    return o;
  }
};

class ReviewService {
 public:
  explicit ReviewService(ServiceOptions options)
      : options_(std::move(options)), store_(options_.sessions_dir) {}

  SessionStore& store() { return store_; }

  std::vector<std::string> blacklist() const {
    std::lock_guard guard(blacklist_mutex_);
    if (!std::filesystem::exists(options_.blacklist)) return {};
    return read_list_file(options_.blacklist);
  }

  /// Adds a surface; false if it was already listed.
  bool add_to_blacklist(const std::string& surface) {
    std::lock_guard guard(blacklist_mutex_);
    if (std::filesystem::exists(options_.blacklist)) {
      for (const auto& s : read_list_file(options_.blacklist)) {
        if (s == surface) return false;
      }
    } else if (options_.blacklist.has_parent_path()) {
      std::filesystem::create_directories(options_.blacklist.parent_path());
    }
    std::string line = surface + "\n";
    // keep the file line-oriented if it lacks a final newline
    if (std::filesystem::exists(options_.blacklist) && std::filesystem::file_size(options_.blacklist) > 0) {
      std::ifstream in(options_.blacklist, std::ios::binary);
      in.seekg(-1, std::ios::end);
      if (in.get() != '\n') line.insert(line.begin(), '\n');
    }
    detail::append_durably(options_.blacklist, line);
    return true;
  }

  LinksDocument export_session(const std::string& session_id) {
    const ReviewSession session = store_.load(session_id);
    LinksDocument doc = export_links(session);
    std::filesystem::create_directories(options_.links_dir);
    detail::write_file_durably(options_.links_dir / (session_id + ".tsv"), render_links(doc));
    return doc;
  }

  void install(httplib::Server& server) {
    using httplib::Request;
    using httplib::Response;

    server.Get("/sessions", [this](const Request&, Response& res) {
      guarded(res, [&] {
        auto list = nlohmann::ordered_json::array();
        for (const auto& s : store_.load_all()) list.push_back(summary_json(s));
        send(res, 200, list);
      });
    });

    server.Get(R"(/sessions/([^/]+))", [this](const Request& req, Response& res) {
      guarded(res, [&] { send(res, 200, to_json(load(req.matches[1]))); });
    });

    server.Get(R"(/sessions/([^/]+)/items)", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        auto items = nlohmann::ordered_json::array();
        for (const auto& item : load(req.matches[1]).items) items.push_back(to_json(item));
        send(res, 200, items);
      });
    });

    // Keys are feature surfaces in the per-feature workflow and may hold '/'.
    server.Post(R"(/sessions/([^/]+)/items/(.+)/decision)", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        const std::string session_id = req.matches[1];
        const std::string key = req.matches[2];
        const auto body = parse_body(req);
        if (!body.contains("choice") || !body["choice"].is_string() ||
            body["choice"].get<std::string>().empty()) {
          throw BadRequest("body needs a non-empty string field 'choice'");
        }
        const std::string decided_by =
            body.contains("decided_by") && body["decided_by"].is_string()
                ? body["decided_by"].get<std::string>()
                : std::string("expert");
        if (!store_.contains(session_id)) throw NotFoundError("unknown session '" + session_id + "'");
        const MatchDecision d = store_.decide(session_id, key, Choice::parse(body["choice"].get<std::string>()),
                                              decided_by);
        send(res, 200, to_json(d));
      });
    });

    server.Post(R"(/sessions/([^/]+)/export)", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        const std::string session_id = req.matches[1];
        if (!store_.contains(session_id)) throw NotFoundError("unknown session '" + session_id + "'");
        send(res, 200, to_json(export_session(session_id)));
      });
    });

    server.Get("/blacklist", [this](const Request&, Response& res) {
      guarded(res, [&] { send(res, 200, blacklist()); });
    });

    server.Post("/blacklist", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        const auto body = parse_body(req);
        if (!body.contains("surface") || !body["surface"].is_string()) {
          throw BadRequest("body needs a string field 'surface'");
        }
        const std::string surface(unicode::trim(body["surface"].get<std::string>()));
        if (surface.empty() || surface.find('\n') != std::string::npos || surface.front() == '#') {
          throw BadRequest("invalid surface");
        }
        const bool added = add_to_blacklist(surface);
        send(res, added ? 201 : 200, nlohmann::ordered_json{{"surface", surface}, {"added", added}});
      });
    });

    server.Get("/dictionary", [this](const Request&, Response& res) {
      guarded(res, [&] {
        auto list = nlohmann::ordered_json::array();
        if (options_.dictionary && std::filesystem::exists(*options_.dictionary)) {
          const auto listed = blacklist();
          const std::set<std::string> flagged(listed.begin(), listed.end());
          for (const auto& e : read_dictionary(*options_.dictionary)) {
            list.push_back({{"surface", e.surface},
                            {"kind", std::string(to_string(e.kind))},
                            {"titles", e.source_title_ids.size()},
                            {"blacklisted", e.blacklisted || flagged.contains(e.surface)}});
          }
        }
        send(res, 200, list);
      });
    });

    if (options_.static_dir && !server.set_mount_point("/", options_.static_dir->string())) {
      throw ConfigError("static directory not found: " + options_.static_dir->string());
    }
  }

 private:
  struct BadRequest : Error {
    using Error::Error;
  };

  ReviewSession load(const std::string& session_id) const {
    if (!store_.contains(session_id)) throw NotFoundError("unknown session '" + session_id + "'");
    return store_.load(session_id);
  }

  static nlohmann::json parse_body(const httplib::Request& req) {
    try {
      auto j = nlohmann::json::parse(req.body);
      if (!j.is_object()) throw BadRequest("request body must be a JSON object");
      return j;
    } catch (const nlohmann::json::exception& e) {
      throw BadRequest(std::string("malformed JSON body: ") + e.what());
    }
  }

  template <class J>
  static void send(httplib::Response& res, int status, const J& body) {
    res.status = status;
    res.set_content(nlohmann::ordered_json(body).dump(), "application/json");
  }

  template <class F>
  static void guarded(httplib::Response& res, F&& f) {
    const auto fail = [&](int status, const std::string& message) {
      send(res, status, nlohmann::ordered_json{{"error", message}});
    };
    try {
      f();
    } catch (const BadRequest& e) {
      fail(400, e.what());
    } catch (const NotFoundError& e) {
      fail(404, e.what());
    } catch (const StateError& e) {
      fail(409, e.what());
    } catch (const std::exception& e) {
      spdlog::error("request failed: {}", e.what());
      fail(500, e.what());
    }
  }

  ServiceOptions options_;
  SessionStore store_;
  mutable std::mutex blacklist_mutex_;
};

/// Binds `host:port` and serves until the server is stopped. A port that
/// cannot be bound is a fatal error.
inline void serve(ReviewService& service, httplib::Server& server, const std::string& host, int port) {
  service.install(server);
  // httplib's default adds SO_REUSEPORT, which would let a second instance
  // share the port instead of failing.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  if (!server.bind_to_port(host, port)) {
    throw ConfigError("cannot listen on " + host + ":" + std::to_string(port));
  }
  spdlog::info("serving on http://{}:{}", host, port);
  server.listen_after_bind();
}

}  // namespace dataref
