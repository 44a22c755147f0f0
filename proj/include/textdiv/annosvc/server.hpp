#pragma once

// HTTP JSON API over AnnotationService (cpp-httplib).
//
//   GET  /session                     models, bands, progress per annotator
//   GET  /pairs/next?annotator=ID     next unscored pair with highlight spans
//   GET  /pairs/:id                   one pair
//   POST /scores                      {"annotator_id", "pair_id", "category"}
//   GET  /report                      agreement report
//   GET  /audit                       overwrite trail
//   GET  /                            static annotation UI, when a directory is given

#include <filesystem>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "textdiv/annosvc/service.hpp"
#include "textdiv/error.hpp"

namespace textdiv::annosvc {

inline int http_status(Errc c) {
  switch (c) {
    case Errc::invalid_parameter:
    case Errc::format: return 400;
    case Errc::not_found: return 404;
    default: return 500;
  }
}

/// Registers the API routes on an existing server. The service must outlive it.
inline void install_routes(httplib::Server& server, AnnotationService& svc,
                           const std::filesystem::path& static_dir = {}) {
  auto reply = [](httplib::Response& res, const nlohmann::json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  };
  auto guarded = [reply](auto fn) {
    return [reply, fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        reply(res, {{"error", to_string(e.code())}, {"message", e.what()}}, http_status(e.code()));
      } catch (const std::exception& e) {
        reply(res, {{"error", "internal"}, {"message", e.what()}}, 500);
      }
    };
  };

  server.Get("/session", guarded([&svc, reply](const auto&, auto& res) { reply(res, svc.session_json()); }));
  server.Get("/pairs/next", guarded([&svc, reply](const httplib::Request& req, auto& res) {
               reply(res, svc.next_pair(req.get_param_value("annotator")));
             }));
  server.Get("/pairs/:id", guarded([&svc, reply](const httplib::Request& req, auto& res) {
               reply(res, svc.pair_json(req.path_params.at("id")));
             }));
  server.Post("/scores", guarded([&svc, reply](const httplib::Request& req, auto& res) {
                nlohmann::json body;
                try {
                  body = nlohmann::json::parse(req.body);
                  reply(res, svc.submit(body.at("annotator_id").get<std::string>(),
                                        body.at("pair_id").get<std::string>(), body.at("category").get<int>()));
                } catch (const nlohmann::json::exception& e) {
                  throw Error(Errc::invalid_parameter, std::string("bad score payload: ") + e.what());
                }
              }));
  server.Get("/report", guarded([&svc, reply](const auto&, auto& res) { reply(res, to_json(svc.report())); }));
  server.Get("/audit", guarded([&svc, reply](const auto&, auto& res) { reply(res, svc.audit_json()); }));
  if (!static_dir.empty() && std::filesystem::is_directory(static_dir)) server.set_mount_point("/", static_dir.string());
}

}  // namespace textdiv::annosvc
