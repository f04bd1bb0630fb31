#ifndef VERSEWRIGHT_REVIEW_SERVER_HPP_
#define VERSEWRIGHT_REVIEW_SERVER_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "versewright/errors.hpp"
#include "versewright/review.hpp"

namespace versewright::review {

// JSON-over-HTTP front end for a Store. Static UI assets, when given, are
// served under /ui/.
class Server {
 public:
  explicit Server(Store& store, std::optional<std::filesystem::path> ui_dir = std::nullopt)
      : store_(store) {
    if (ui_dir) {
      if (!std::filesystem::is_directory(*ui_dir)) {
        throw IoError("ui directory not found: " + ui_dir->string());
      }
      http_.set_mount_point("/ui", ui_dir->string());
    }
    routes();
  }

  // Blocks until stop().
  bool listen(const std::string& host, int port) { return http_.listen(host, port); }

  int bind_to_any_port(const std::string& host) { return http_.bind_to_any_port(host); }
  bool listen_after_bind() { return http_.listen_after_bind(); }
  void wait_until_ready() { http_.wait_until_ready(); }
  void stop() { http_.stop(); }

 private:
  static void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& msg) {
    send_json(res, status, {{"error", msg}});
  }

  template <class Fn>
  static void guarded(httplib::Response& res, Fn&& fn) {
    try {
      fn();
    } catch (const NotFound& e) {
      send_error(res, 404, e.what());
    } catch (const ValidationError& e) {
      send_error(res, 400, e.what());
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 400, std::string("malformed JSON: ") + e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  }

  static nlohmann::json parse_body(const httplib::Request& req) {
    try {
      return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("malformed JSON: ") + e.what());
    }
  }

  static nlohmann::json item_json(const NextItem& n) {
    return {{"done", false},
            {"index", n.index},
            {"poem", {{"id", n.item->id}, {"text", n.item->text}}},
            {"dimensions", n.unanswered}};
  }

  void routes() {
    http_.Post("/campaigns", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const Campaign& c = store_.create_campaign(parse_body(req));
        send_json(res, 201, {{"id", c.id}});
      });
    });

    http_.Get("/campaigns", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, {{"campaigns", store_.campaign_ids()}}); });
    });

    http_.Get(R"(/campaigns/([^/]+))",
              [this](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  const std::string id = req.matches[1];
                  auto c = store_.campaign(id);
                  if (!c) throw NotFound("unknown campaign '" + id + "'");
                  send_json(res, 200, to_json_spec(*c));
                });
              });

    http_.Get(R"(/campaigns/([^/]+)/next)",
              [this](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  if (!req.has_param("reviewer")) {
                    throw ValidationError("missing reviewer parameter");
                  }
                  const NextItem n =
                      store_.next_item(req.matches[1], req.get_param_value("reviewer"));
                  send_json(res, 200, n.done ? nlohmann::json{{"done", true}} : item_json(n));
                });
              });

    http_.Post(R"(/campaigns/([^/]+)/ratings)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 guarded(res, [&] {
                   const std::string id = req.matches[1];
                   const nlohmann::json body = parse_body(req);
                   std::vector<Rating> batch;
                   if (body.is_array()) {
                     for (const auto& j : body) batch.push_back(rating_from_json(id, j));
                   } else {
                     batch.push_back(rating_from_json(id, body));
                   }
                   store_.submit(batch);
                   res.status = 204;
                 });
               });

    http_.Get(R"(/campaigns/([^/]+)/report)",
              [this](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] { send_json(res, 200, store_.report(req.matches[1])); });
              });
  }

  Store& store_;
  httplib::Server http_;
};

}  // namespace versewright::review

#endif  // VERSEWRIGHT_REVIEW_SERVER_HPP_
