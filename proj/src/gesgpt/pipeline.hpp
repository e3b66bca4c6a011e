#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gesgpt/intent.hpp"
#include "gesgpt/llm_client.hpp"
#include "gesgpt/script.hpp"

namespace gesgpt {

struct ParserOptions {
  ClassifierMode mode = ClassifierMode::Offline;
  std::optional<std::string> lexicon_path;  // starter lexicon when absent
  std::optional<std::string> cache_dir;
  LlmConfig llm;
  // When false no request ever leaves the process; LLM modes then rely on
  // the replay cache alone.
  bool allow_network = true;
};

struct ParseResult {
  GestureScript script;
  std::vector<Classification> classifications;
};

// Text + word timings -> gesture script: sentence segmentation, alignment,
// intent classification and keyword timing.
class Parser {
 public:
  explicit Parser(ParserOptions options);
  // For tests and embedders that bring their own transport.
  Parser(ParserOptions options, std::shared_ptr<ChatTransport> transport);

  ParseResult parse(std::string_view text, const std::vector<WordTiming>& timings) const;
  ClassifierMode mode() const { return options_.mode; }

 private:
  ParserOptions options_;
  Lexicon lexicon_;
  std::unique_ptr<ReplayCache> cache_;
  std::shared_ptr<ChatTransport> transport_;
};

// One line per sentence: index, intent, keyword, provenance.
std::string render_provenance_table(const ParseResult& result);

}  // namespace gesgpt
