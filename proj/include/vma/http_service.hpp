#ifndef VMA_HTTP_SERVICE_HPP_
#define VMA_HTTP_SERVICE_HPP_

// HTTP routes of the verification service. Requires cpp-httplib on the
// include path; the rest of the library does not.

#include <filesystem>
#include <string>

#include <httplib.h>

#include "vma/verification.hpp"

namespace vma {

namespace http_detail {

inline void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

inline int status_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Parse: return 400;
    case ErrorCode::InvalidGeometry:
    case ErrorCode::InvalidArgument: return 422;
    default: return 500;
  }
}

}  // namespace http_detail

/// Registers the verification endpoints on `server`:
///   GET /map, GET /elements/{id}, PATCH /elements/{id},
///   POST /elements/{id}/status, POST /export, GET /report.
/// Element ids may contain '/', so they travel percent-encoded.
inline void register_routes(httplib::Server& server, VerificationSession& session,
                            const std::filesystem::path& export_dir) {
  using namespace http_detail;
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, PATCH, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  server.Get("/map", [&session](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, session.map_json());
  });

  server.Get("/report", [&session](const httplib::Request&, httplib::Response& res) {
    if (const auto& r = session.report()) send_json(res, 200, *r);
    else send_error(res, 404, "no evaluation report loaded");
  });

  server.Post(R"(/elements/(.+)/status)", [&session](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    try {
      const json body = json::parse(req.body);
      if (!body.is_object() || !body.contains("status") || !body["status"].is_string() ||
          (body["status"] != "accepted" && body["status"] != "deleted"))
        return send_error(res, 400, "body must be {\"status\": \"accepted\"|\"deleted\"}");
      if (!session.set_status(id, body["status"].get<std::string>()))
        return send_error(res, 404, "unknown element '" + id + "'");
      send_json(res, 200, *session.element_json(id));
    } catch (const json::exception& e) {
      send_error(res, 400, e.what());
    } catch (const Error& e) {
      send_error(res, status_for(e), e.what());
    }
  });

  server.Get(R"(/elements/(.+))", [&session](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    if (auto e = session.element_json(id)) send_json(res, 200, *e);
    else send_error(res, 404, "unknown element '" + id + "'");
  });

  server.Patch(R"(/elements/(.+))", [&session](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    try {
      const json body = json::parse(req.body);
      if (auto e = session.patch(id, body)) send_json(res, 200, *e);
      else send_error(res, 404, "unknown element '" + id + "'");
    } catch (const json::exception& e) {
      send_error(res, 400, e.what());
    } catch (const Error& e) {
      send_error(res, status_for(e), e.what());
    }
  });

  server.Post("/export", [&session, export_dir](const httplib::Request&, httplib::Response& res) {
    try {
      const auto path = session.export_to(export_dir);
      send_json(res, 200, {{"path", path.string()}, {"summary", VerificationSession::summary_to_json(session.summary())}});
    } catch (const Error& e) {
      send_error(res, 500, e.what());
    }
  });
}

}  // namespace vma

#endif  // VMA_HTTP_SERVICE_HPP_
