#pragma once

#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "gesgpt/intent.hpp"

namespace gesgpt {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;

  // {"model":..,"messages":[{"role":..,"content":..}],"temperature":..}
  nlohmann::json to_json() const;
};

// Sends one chat-completion request and returns the first assistant message.
// Implementations throw Error(ErrorCode::Transport) on any delivery failure.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

class HttpChatTransport final : public ChatTransport {
 public:
  HttpChatTransport(std::string endpoint_url, std::string api_key, double timeout_s);
  std::string complete(const ChatRequest& request) override;

 private:
  std::string scheme_host_port_;
  std::string path_;
  std::string api_key_;
  double timeout_s_;
};

// Reply body -> choices[0].message.content.
std::string extract_assistant_content(const nlohmann::json& reply);

// Content-addressed store of successful LLM exchanges, one JSON file per
// request. Concurrent lookups are fine; stores are exclusive and atomic on
// disk.
class ReplayCache {
 public:
  explicit ReplayCache(std::filesystem::path dir);

  static std::string key_for(std::string_view template_id, std::string_view prompt);

  std::optional<std::string> lookup(const std::string& key) const;
  void store(const std::string& key, std::string_view template_id, std::string_view prompt, std::string_view reply);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::shared_mutex mutex_;
};

}  // namespace gesgpt
