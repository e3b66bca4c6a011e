#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "gesgpt/llm_client.hpp"

#include <mutex>

#include "gesgpt/error.hpp"
#include "gesgpt/util.hpp"

namespace gesgpt {

nlohmann::json ChatRequest::to_json() const {
  nlohmann::json msgs = nlohmann::json::array();
  for (const ChatMessage& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", model}, {"messages", std::move(msgs)}, {"temperature", temperature}};
}

std::string extract_assistant_content(const nlohmann::json& reply) {
  try {
    for (const auto& choice : reply.at("choices")) {
      const auto& message = choice.at("message");
      if (message.value("role", std::string("assistant")) == "assistant") {
        return message.at("content").get<std::string>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedReply, std::string("chat completion reply has no assistant content: ") + e.what());
  }
  fail(ErrorCode::MalformedReply, "chat completion reply has no assistant message");
}

HttpChatTransport::HttpChatTransport(std::string endpoint_url, std::string api_key, double timeout_s)
    : api_key_(std::move(api_key)), timeout_s_(timeout_s) {
  const std::size_t scheme_end = endpoint_url.find("://");
  if (scheme_end == std::string::npos) fail(ErrorCode::InvalidArgument, "endpoint URL needs a scheme: " + endpoint_url);
  const std::size_t path_start = endpoint_url.find('/', scheme_end + 3);
  scheme_host_port_ = endpoint_url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : endpoint_url.substr(path_start);
}

std::string HttpChatTransport::complete(const ChatRequest& request) {
  httplib::Client client(scheme_host_port_);
  const auto seconds = static_cast<time_t>(timeout_s_);
  const auto micros = static_cast<time_t>((timeout_s_ - static_cast<double>(seconds)) * 1e6);
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const auto res = client.Post(path_, headers, request.to_json().dump(), "application/json");
  if (!res) fail(ErrorCode::Transport, "POST " + scheme_host_port_ + path_ + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    fail(ErrorCode::Transport, "POST " + scheme_host_port_ + path_ + " returned HTTP " + std::to_string(res->status));
  }
  const nlohmann::json body = nlohmann::json::parse(res->body, nullptr, false);
  if (body.is_discarded()) fail(ErrorCode::MalformedReply, "chat completion reply is not JSON");
  return extract_assistant_content(body);
}

ReplayCache::ReplayCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) fail(ErrorCode::Io, "cannot create cache directory '" + dir_.string() + "': " + ec.message());
}

std::string ReplayCache::key_for(std::string_view template_id, std::string_view prompt) {
  std::string material(template_id);
  material.push_back('\n');
  material.append(prompt);
  return sha256_hex(material);
}

std::optional<std::string> ReplayCache::lookup(const std::string& key) const {
  std::shared_lock lock(mutex_);
  const auto path = dir_ / (key + ".json");
  if (!std::filesystem::exists(path)) return std::nullopt;
  const nlohmann::json entry = nlohmann::json::parse(read_file(path.string()), nullptr, false);
  if (entry.is_discarded() || !entry.contains("reply") || !entry["reply"].is_string()) return std::nullopt;
  return entry["reply"].get<std::string>();
}

void ReplayCache::store(const std::string& key, std::string_view template_id, std::string_view prompt,
                        std::string_view reply) {
  const nlohmann::json entry = {
      {"template_id", template_id}, {"prompt", prompt}, {"reply", reply}, {"key", key},
  };
  std::unique_lock lock(mutex_);
  write_file((dir_ / (key + ".json")).string(), entry.dump(2));
}

}  // namespace gesgpt
