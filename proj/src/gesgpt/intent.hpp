#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gesgpt/script.hpp"

namespace gesgpt {

class ChatTransport;
class ReplayCache;

struct LexiconCue {
  IntentLabel intent = IntentLabel::Description;
  std::optional<std::string> semantic_tag;
};

// Cue words/phrases (lowercase) mapped to intents, plus the stopwords used to
// pick a fallback keyword.
struct Lexicon {
  std::string lexicon_id;
  std::map<std::string, LexiconCue> cues;
  std::set<std::string> stopwords;
  IntentLabel default_intent = IntentLabel::Description;

  static Lexicon from_json(const nlohmann::json& j);
  static Lexicon load(const std::string& path);
  // The versioned starter lexicon compiled into the library.
  static const Lexicon& starter();
};

struct FewShotExample {
  std::string sentence;
  IntentLabel intent;
  std::string keyword;
  std::optional<std::string> semantic_tag;
};

struct PromptTemplate {
  std::string template_id;
  std::string system_text;
  std::vector<std::pair<IntentLabel, std::string>> definitions;
  std::vector<FewShotExample> fewshot_examples;
  // "{count}" is replaced with the number of sentences.
  std::string output_contract;

  static const PromptTemplate& standard();
  std::string definitions_section() const;
  // Every intent label must be defined exactly once.
  void validate() const;
};

enum class Provenance { Llm, Fallback, Repaired };
std::string_view to_string(Provenance p);

struct Classification {
  IntentLabel intent = IntentLabel::Description;
  std::string keyword;
  std::optional<std::string> semantic_tag;
  Provenance provenance = Provenance::Fallback;

  friend bool operator==(const Classification&, const Classification&) = default;
};

struct LlmAnnotation {
  int index = 0;
  IntentLabel intent = IntentLabel::Description;
  std::string keyword;
  std::optional<std::string> semantic_tag;
};

struct LlmConfig {
  std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
  std::string model_name = "gpt-4o-mini";
  std::string api_key_env_var = "OPENAI_API_KEY";
  double timeout_s = 60.0;
  int max_retries = 2;
  double temperature = 0.0;
  std::size_t batch_size = 16;
  std::size_t max_parallel = 2;

  void validate() const;
};

enum class ClassifierMode {
  Offline,  // lexicon only
  Llm,      // LLM with cache replay; silent per-batch fallback to the lexicon
  Strict,   // LLM; transport failure after retries is an error
};

struct ClassifierContext {
  ClassifierMode mode = ClassifierMode::Offline;
  const Lexicon* lexicon = nullptr;
  const PromptTemplate* prompt = nullptr;
  LlmConfig config;
  ReplayCache* cache = nullptr;        // optional
  ChatTransport* transport = nullptr;  // null means networking is disabled
};

std::string build_prompt(const PromptTemplate& tmpl, const std::vector<std::string>& sentences);

// Pulls the first JSON array out of a free-form reply (prose, markdown fences)
// and checks it against the reply contract.
std::vector<LlmAnnotation> parse_llm_response(std::string_view reply, std::size_t expected_count);

Classification classify_offline(const std::vector<std::string>& tokens, const Lexicon& lexicon);

std::vector<Classification> classify(const std::vector<Sentence>& sentences, const ClassifierContext& ctx);

}  // namespace gesgpt
