#pragma once

#include <filesystem>
#include <string>

#include "hear/service.hpp"

namespace httplib {
class Server;
}

namespace hear {

/// Registers the service endpoints on `server`:
///
///   POST /session
///   GET  /session/{id}
///   GET  /session/{id}/task/{tid}
///   GET  /session/{id}/task/{tid}/suggestions?span=i-j
///   POST /session/{id}/task/{tid}/{move|check|apply|revert|rating|submit}
///   GET  /export[?session=id]
///
/// Errors are JSON bodies {"schema_version", "error": code, "message"}.
void mount_service(httplib::Server& server, Service& service);

/// Blocks serving on host:port; `static_dir`, when set, is served at "/ui".
void serve(Service& service, const std::string& host, int port,
           const std::filesystem::path& static_dir = {});

}  // namespace hear
