#include "hear/http.hpp"

#include <charconv>

#include "httplib.h"

namespace hear {

namespace {

constexpr const char* kJson = "application/json";

void send(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

Json error_body(const std::string& code, const std::string& message) {
  return {{"schema_version", kSchemaVersion}, {"error", code}, {"message", message}};
}

Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  try {
    return Json::parse(req.body);
  } catch (const Json::parse_error& e) {
    throw ServiceError(400, "bad_json", e.what());
  }
}

template <typename F>
httplib::Server::Handler guarded(F&& f) {
  return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      send(res, 200, f(req));
    } catch (const ServiceError& e) {
      send(res, e.status, error_body(e.code, e.what()));
    } catch (const FormatError& e) {
      send(res, 400, error_body("bad_request", e.what()));
    } catch (const std::exception& e) {
      send(res, 500, error_body("internal", e.what()));
    }
  };
}

std::size_t parse_index(std::string_view text) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size() || text.empty()) {
    throw ServiceError(400, "bad_span", "span must look like i-j");
  }
  return v;
}

}  // namespace

void mount_service(httplib::Server& server, Service& service) {
  server.Post("/session", guarded([&](const httplib::Request& req) {
                return service.create_session(parse_body(req));
              }));
  server.Get(R"(/session/([^/]+))", guarded([&](const httplib::Request& req) {
               return service.get_session(req.matches[1]);
             }));
  server.Get(R"(/session/([^/]+)/task/([^/]+))", guarded([&](const httplib::Request& req) {
               return service.get_task(req.matches[1], req.matches[2]);
             }));
  server.Get(R"(/session/([^/]+)/task/([^/]+)/suggestions)", guarded([&](const httplib::Request& req) {
               if (!req.has_param("span")) throw ServiceError(400, "bad_span", "missing span parameter");
               const auto span = req.get_param_value("span");
               const auto dash = span.find('-');
               if (dash == std::string::npos) throw ServiceError(400, "bad_span", "span must look like i-j");
               return service.get_suggestions(req.matches[1], req.matches[2],
                                              parse_index(std::string_view(span).substr(0, dash)),
                                              parse_index(std::string_view(span).substr(dash + 1)));
             }));
  using Method = Json (Service::*)(const std::string&, const std::string&, const Json&);
  const std::pair<const char*, Method> posts[] = {
      {"move", &Service::post_move},       {"check", &Service::post_check},
      {"apply", &Service::post_apply},     {"revert", &Service::post_revert},
      {"rating", &Service::post_rating},   {"submit", &Service::post_submit},
  };
  for (const auto& [name, method] : posts) {
    server.Post(std::string(R"(/session/([^/]+)/task/([^/]+)/)") + name,
                guarded([&service, method = method](const httplib::Request& req) {
                  return (service.*method)(req.matches[1], req.matches[2], parse_body(req));
                }));
  }
  server.Get("/export", guarded([&](const httplib::Request& req) {
               std::optional<std::string> session;
               if (req.has_param("session")) session = req.get_param_value("session");
               return service.export_logs(session);
             }));
}

void serve(Service& service, const std::string& host, int port, const std::filesystem::path& static_dir) {
  httplib::Server server;
  mount_service(server, service);
  if (!static_dir.empty() && !server.set_mount_point("/ui", static_dir.string())) {
    throw std::runtime_error("cannot serve static directory " + static_dir.string());
  }
  if (!server.listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace hear
