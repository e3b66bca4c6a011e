#pragma once

#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "gesgpt/dictionary.hpp"
#include "gesgpt/error.hpp"
#include "gesgpt/pipeline.hpp"
#include "gesgpt/synthesis.hpp"

namespace gesgpt {

struct ApiResponse {
  int status = 200;
  std::string body;  // canonical JSON
};

// Error payload shared by the service and the C API:
// {"error":{"code":..,"message":..,"problems":[..]?}}
nlohmann::json error_payload(const Error& error);
int http_status_for(ErrorCode code);

// Request handlers behind the /api endpoints. They never throw; failures come
// back as error payloads with the matching HTTP status.
class Api {
 public:
  Api(std::shared_ptr<const Dictionary> dict, std::shared_ptr<const Parser> parser,
      BaseGestureSpec default_base = {});

  ApiResponse parse(const std::string& body) const;       // POST /api/parse
  ApiResponse synthesize(const std::string& body) const;  // POST /api/synthesize
  ApiResponse dictionary() const;                         // GET /api/dictionary
  ApiResponse unit(const std::string& id) const;          // GET /api/units/{id}

 private:
  std::shared_ptr<const Dictionary> dict_;
  std::shared_ptr<const Parser> parser_;
  BaseGestureSpec default_base_;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8765;  // 0 picks a free port
  std::optional<std::string> cors_origin;
};

class Server {
 public:
  Server(std::shared_ptr<const Api> api, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds the socket; returns the bound port. Throws Io on failure.
  int bind();
  // Serves until stop(); binds first if needed.
  void run();
  void stop();
  // Blocks until a concurrent run() accepts connections.
  void wait_until_ready() const;
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = -1;
};

}  // namespace gesgpt
