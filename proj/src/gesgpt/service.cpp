#include "gesgpt/service.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "gesgpt/error.hpp"

namespace gesgpt {

namespace {

ApiResponse ok(const nlohmann::json& j) { return {200, j.dump()}; }

ApiResponse failure(const Error& e) { return {http_status_for(e.code()), error_payload(e).dump()}; }

nlohmann::json parse_body(const std::string& body) {
  nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(ErrorCode::Format, "request body must be a JSON object");
  return j;
}

template <typename F>
ApiResponse guarded(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    return failure(e);
  } catch (const std::exception& e) {
    return {500, error_payload(Error(ErrorCode::Io, e.what())).dump()};
  }
}

}  // namespace

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Transport: return 502;
    case ErrorCode::Io: return 500;
    default: return 400;
  }
}

nlohmann::json error_payload(const Error& error) {
  nlohmann::json e = {{"code", to_string(error.code())}, {"message", error.what()}};
  if (const auto* v = dynamic_cast<const ValidationError*>(&error)) e["problems"] = v->problems();
  return {{"error", std::move(e)}};
}

Api::Api(std::shared_ptr<const Dictionary> dict, std::shared_ptr<const Parser> parser, BaseGestureSpec default_base)
    : dict_(std::move(dict)), parser_(std::move(parser)), default_base_(std::move(default_base)) {}

ApiResponse Api::parse(const std::string& body) const {
  return guarded([&] {
    const nlohmann::json req = parse_body(body);
    if (!req.contains("text") || !req["text"].is_string()) fail(ErrorCode::Format, "\"text\" must be a string");
    std::vector<WordTiming> timings;
    if (req.contains("timings")) {
      timings = parse_timings_json(req["timings"]);
    } else if (req.contains("textgrid") && req["textgrid"].is_string()) {
      timings = parse_textgrid(req["textgrid"].get<std::string>());
    } else {
      fail(ErrorCode::Format, "request needs \"timings\" or \"textgrid\"");
    }
    return ok(script_to_json(parser_->parse(req["text"].get<std::string>(), timings).script));
  });
}

ApiResponse Api::synthesize(const std::string& body) const {
  return guarded([&] {
    const nlohmann::json req = parse_body(body);
    if (!req.contains("script")) fail(ErrorCode::Format, "request needs \"script\"");
    const GestureScript script = script_from_json(req["script"]);
    const nlohmann::json options = req.value("options", nlohmann::json::object());
    const SynthesisConfig config = SynthesisConfig::from_json(options);
    const BaseGestureSpec base = options.contains("base") ? BaseGestureSpec::from_json(options["base"]) : default_base_;
    return ok(result_to_json(gesgpt::synthesize(script, *dict_, base, config)));
  });
}

ApiResponse Api::dictionary() const {
  return guarded([&] { return ok(manifest_to_json(*dict_)); });
}

ApiResponse Api::unit(const std::string& id) const {
  return guarded([&] {
    const GestureUnit* u = dict_->find(id);
    if (u == nullptr) fail(ErrorCode::NotFound, "no unit '" + id + "'");
    return ok(clip_to_json(u->clip));
  });
}

struct Server::Impl {
  std::shared_ptr<const Api> api;
  ServerOptions options;
  httplib::Server http;
  bool bound = false;
};

Server::Server(std::shared_ptr<const Api> api, ServerOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->api = std::move(api);
  impl_->options = std::move(options);
  httplib::Server& http = impl_->http;
  const Api& a = *impl_->api;
  const auto reply = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  http.Post("/api/parse", [&a, reply](const httplib::Request& req, httplib::Response& res) { reply(res, a.parse(req.body)); });
  http.Post("/api/synthesize",
            [&a, reply](const httplib::Request& req, httplib::Response& res) { reply(res, a.synthesize(req.body)); });
  http.Get("/api/dictionary", [&a, reply](const httplib::Request&, httplib::Response& res) { reply(res, a.dictionary()); });
  http.Get("/api/units/(.+)",
           [&a, reply](const httplib::Request& req, httplib::Response& res) { reply(res, a.unit(req.matches[1].str())); });
  if (const auto& origin = impl_->options.cors_origin) {
    http.set_default_headers({{"Access-Control-Allow-Origin", *origin},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
    http.Options("/api/.*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  }
}

Server::~Server() { stop(); }

int Server::bind() {
  if (impl_->bound) return port_;
  const auto& o = impl_->options;
  if (o.port == 0) {
    port_ = impl_->http.bind_to_any_port(o.host);
  } else {
    port_ = impl_->http.bind_to_port(o.host, o.port) ? o.port : -1;
  }
  if (port_ < 0) fail(ErrorCode::Io, "cannot bind " + o.host + ":" + std::to_string(o.port));
  impl_->bound = true;
  return port_;
}

void Server::run() {
  bind();
  impl_->http.listen_after_bind();
}

void Server::wait_until_ready() const { impl_->http.wait_until_ready(); }

void Server::stop() {
  if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

}  // namespace gesgpt
