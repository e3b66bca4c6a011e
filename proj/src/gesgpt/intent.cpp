#include "gesgpt/intent.hpp"

#include <algorithm>
#include <future>

#include "gesgpt/error.hpp"
#include "gesgpt/lexicon_data.hpp"
#include "gesgpt/llm_client.hpp"
#include "gesgpt/util.hpp"

namespace gesgpt {

namespace {

IntentLabel require_intent(const nlohmann::json& value, const std::string& where) {
  if (!value.is_string()) fail(ErrorCode::Format, where + ": intent must be a string");
  const auto label = intent_from_string(value.get<std::string>());
  if (!label) fail(ErrorCode::Format, where + ": unknown intent '" + value.get<std::string>() + "'");
  return *label;
}

std::size_t codepoint_count(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

// Offset of the first balanced [...] starting at `open`, or npos. String
// literals are skipped so brackets inside keywords do not confuse the scan.
std::size_t matching_bracket(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') in_string = true;
    if (c == '[') ++depth;
    if (c == ']' && --depth == 0) return i;
  }
  return std::string_view::npos;
}

}  // namespace

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Llm: return "llm";
    case Provenance::Fallback: return "fallback";
    case Provenance::Repaired: return "repaired";
  }
  return "unknown";
}

Lexicon Lexicon::from_json(const nlohmann::json& j) {
  Lexicon lex;
  try {
    lex.lexicon_id = j.value("lexicon_id", std::string("unnamed"));
    lex.default_intent = require_intent(j.at("default_intent"), "lexicon default_intent");
    for (const auto& [cue, spec] : j.at("cues").items()) {
      if (cue.empty() || normalize_token(cue) != cue) {
        fail(ErrorCode::Format, "lexicon cue '" + cue + "' must be lowercase without edge punctuation");
      }
      LexiconCue entry;
      entry.intent = require_intent(spec.at("intent"), "lexicon cue '" + cue + "'");
      if (spec.contains("semantic_tag")) {
        if (entry.intent != IntentLabel::Semantic) {
          fail(ErrorCode::Format, "lexicon cue '" + cue + "': semantic_tag requires the semantic intent");
        }
        entry.semantic_tag = spec.at("semantic_tag").get<std::string>();
      }
      lex.cues.emplace(cue, std::move(entry));
    }
    for (const auto& w : j.at("stopwords")) lex.stopwords.insert(w.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, std::string("malformed lexicon: ") + e.what());
  }
  return lex;
}

Lexicon Lexicon::load(const std::string& path) {
  const nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::Format, path + ": lexicon is not valid JSON");
  return from_json(j);
}

const Lexicon& Lexicon::starter() {
  static const Lexicon lexicon = from_json(nlohmann::json::parse(detail::kStarterLexiconJson));
  return lexicon;
}

const PromptTemplate& PromptTemplate::standard() {
  static const PromptTemplate tmpl = [] {
    PromptTemplate t;
    t.template_id = "gesture-intent-v1";
    t.system_text =
        "You annotate speech transcripts for a co-speech gesture generator. Every sentence receives exactly one "
        "gesture intent and exactly one keyword: the single word of that sentence where the gesture should peak.";
    t.definitions = {
        {IntentLabel::Welcome, "greeting the audience or opening the talk."},
        {IntentLabel::Farewell, "closing the talk, thanking the audience or saying goodbye."},
        {IntentLabel::Description, "depicting the size, shape, position or movement of something concrete."},
        {IntentLabel::Explanation, "giving reasons, causes, consequences or clarifications."},
        {IntentLabel::Emphasis, "stressing importance, certainty, urgency or negation."},
        {IntentLabel::SelfReference, "the speaker talking about themselves."},
        {IntentLabel::Semantic, "a word with a conventional emblem gesture, like a thumbs up for \"awesome\"."},
    };
    t.fewshot_examples = {
        {"Good evening and welcome to the show.", IntentLabel::Welcome, "welcome", std::nullopt},
        {"The new bridge is enormous.", IntentLabel::Description, "enormous", std::nullopt},
        {"We stopped the project because the budget ran out.", IntentLabel::Explanation, "because", std::nullopt},
        {"You must never give up.", IntentLabel::Emphasis, "never", std::nullopt},
        {"I grew up in a small village.", IntentLabel::SelfReference, "I", std::nullopt},
        {"That result is awesome.", IntentLabel::Semantic, "awesome", std::string("thumbs_up")},
        {"Thank you all and goodbye.", IntentLabel::Farewell, "goodbye", std::nullopt},
    };
    t.output_contract =
        "Reply with only a JSON array of {count} objects, one per numbered sentence, in order. Each object is "
        "{\"index\": <sentence number>, \"intent\": <an intent label defined above>, \"keyword\": <one word copied "
        "verbatim from that sentence>}. Add \"semantic_tag\" naming the emblem only for the semantic intent. No "
        "other text.";
    t.validate();
    return t;
  }();
  return tmpl;
}

std::string PromptTemplate::definitions_section() const {
  std::string out = "Intent definitions:\n";
  for (const auto& [label, text] : definitions) {
    out += "- ";
    out += to_string(label);
    out += ": " + text + "\n";
  }
  return out;
}

void PromptTemplate::validate() const {
  if (template_id.empty()) fail(ErrorCode::InvalidArgument, "prompt template needs an id");
  const std::string section = definitions_section();
  for (IntentLabel label : kAllIntents) {
    const std::string name(to_string(label));
    std::size_t count = 0;
    for (std::size_t pos = section.find(name); pos != std::string::npos; pos = section.find(name, pos + 1)) ++count;
    if (count != 1) {
      fail(ErrorCode::InvalidArgument, "prompt definitions must name '" + name + "' exactly once, found " +
                                           std::to_string(count));
    }
  }
  if (output_contract.find("{count}") == std::string::npos) {
    fail(ErrorCode::InvalidArgument, "prompt output contract must contain {count}");
  }
}

void LlmConfig::validate() const {
  if (max_retries < 0) fail(ErrorCode::InvalidArgument, "max_retries must be >= 0");
  if (temperature < 0.0) fail(ErrorCode::InvalidArgument, "temperature must be >= 0");
  if (!(timeout_s > 0.0)) fail(ErrorCode::InvalidArgument, "timeout_s must be positive");
  if (batch_size == 0 || max_parallel == 0) fail(ErrorCode::InvalidArgument, "batch_size and max_parallel must be >= 1");
}

std::string build_prompt(const PromptTemplate& tmpl, const std::vector<std::string>& sentences) {
  if (sentences.empty()) fail(ErrorCode::EmptyInput, "prompt needs at least one sentence");
  std::string out = tmpl.system_text + "\n\n" + tmpl.definitions_section() + "\nExamples:\n";
  for (const FewShotExample& ex : tmpl.fewshot_examples) {
    nlohmann::json answer = {{"intent", to_string(ex.intent)}, {"keyword", ex.keyword}};
    if (ex.semantic_tag) answer["semantic_tag"] = *ex.semantic_tag;
    out += "Sentence: " + nlohmann::json(ex.sentence).dump() + " -> " + answer.dump() + "\n";
  }
  out += "\nSentences:\n";
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    out += std::to_string(i) + ". " + nlohmann::json(sentences[i]).dump() + "\n";
  }
  std::string contract = tmpl.output_contract;
  contract.replace(contract.find("{count}"), 7, std::to_string(sentences.size()));
  out += "\n" + contract + "\n";
  return out;
}

std::vector<LlmAnnotation> parse_llm_response(std::string_view reply, std::size_t expected_count) {
  nlohmann::json array;
  bool found = false;
  for (std::size_t open = reply.find('['); open != std::string_view::npos; open = reply.find('[', open + 1)) {
    const std::size_t close = matching_bracket(reply, open);
    if (close == std::string_view::npos) continue;
    nlohmann::json candidate = nlohmann::json::parse(reply.substr(open, close - open + 1), nullptr, false);
    if (!candidate.is_discarded() && candidate.is_array()) {
      array = std::move(candidate);
      found = true;
      break;
    }
  }
  if (!found) fail(ErrorCode::MalformedReply, "reply contains no JSON array");
  if (array.size() != expected_count) {
    fail(ErrorCode::ContractViolation, "reply has " + std::to_string(array.size()) + " entries, expected " +
                                           std::to_string(expected_count));
  }
  std::vector<LlmAnnotation> out(expected_count);
  std::vector<bool> seen(expected_count, false);
  for (const auto& item : array) {
    if (!item.is_object() || !item.contains("index") || !item["index"].is_number_integer() ||
        !item.contains("intent") || !item["intent"].is_string() || !item.contains("keyword") ||
        !item["keyword"].is_string()) {
      fail(ErrorCode::ContractViolation, "reply entry is not {index, intent, keyword}: " + item.dump());
    }
    const auto index = item["index"].get<long long>();
    if (index < 0 || static_cast<std::size_t>(index) >= expected_count || seen[static_cast<std::size_t>(index)]) {
      fail(ErrorCode::ContractViolation, "reply index " + std::to_string(index) + " is out of range or repeated");
    }
    const std::string intent = item["intent"].get<std::string>();
    const auto label = intent_from_string(intent);
    if (!label) fail(ErrorCode::ContractViolation, "reply uses unknown intent '" + intent + "'");
    LlmAnnotation& a = out[static_cast<std::size_t>(index)];
    a.index = static_cast<int>(index);
    a.intent = *label;
    a.keyword = item["keyword"].get<std::string>();
    if (item.contains("semantic_tag") && item["semantic_tag"].is_string() &&
        !item["semantic_tag"].get<std::string>().empty()) {
      a.semantic_tag = item["semantic_tag"].get<std::string>();
    }
    seen[static_cast<std::size_t>(index)] = true;
  }
  return out;
}

Classification classify_offline(const std::vector<std::string>& tokens, const Lexicon& lexicon) {
  if (tokens.empty()) fail(ErrorCode::EmptyInput, "offline classification needs at least one token");
  std::vector<std::string> norm;
  norm.reserve(tokens.size());
  for (const auto& t : tokens) norm.push_back(normalize_token(t));

  std::size_t max_words = 1;
  for (const auto& [cue, _] : lexicon.cues) {
    max_words = std::max<std::size_t>(max_words, 1 + static_cast<std::size_t>(std::count(cue.begin(), cue.end(), ' ')));
  }
  auto hit = [](const LexiconCue& cue, std::string keyword) {
    return Classification{cue.intent, std::move(keyword), cue.semantic_tag, Provenance::Fallback};
  };

  for (std::size_t i = 0; i < norm.size(); ++i) {
    if (norm[i].empty()) continue;
    for (std::size_t len = std::min(max_words, norm.size() - i); len >= 1; --len) {
      std::string phrase = norm[i];
      for (std::size_t k = 1; k < len; ++k) phrase += " " + norm[i + k];
      if (auto it = lexicon.cues.find(phrase); it != lexicon.cues.end()) return hit(it->second, norm[i]);
    }
    if (has_non_ascii(norm[i])) {
      // Unsegmented (CJK) token: earliest contained cue wins, longer cue on ties.
      const LexiconCue* best = nullptr;
      std::string best_cue;
      std::size_t best_pos = std::string::npos;
      for (const auto& [cue, entry] : lexicon.cues) {
        if (!has_non_ascii(cue)) continue;
        const std::size_t pos = norm[i].find(cue);
        if (pos == std::string::npos) continue;
        if (pos < best_pos || (pos == best_pos && cue.size() > best_cue.size())) {
          best = &entry;
          best_cue = cue;
          best_pos = pos;
        }
      }
      if (best != nullptr) return hit(*best, best_cue);
    }
  }

  Classification out{lexicon.default_intent, {}, std::nullopt, Provenance::Fallback};
  std::size_t best_len = 0;
  for (const auto& n : norm) {
    if (n.empty() || lexicon.stopwords.contains(n)) continue;
    if (codepoint_count(n) > best_len) {
      best_len = codepoint_count(n);
      out.keyword = n;
    }
  }
  if (out.keyword.empty()) {
    const auto first = std::find_if(norm.begin(), norm.end(), [](const std::string& n) { return !n.empty(); });
    out.keyword = first != norm.end() ? *first : tokens.front();
  }
  return out;
}

namespace {

std::vector<Classification> classify_batch(const std::vector<const Sentence*>& batch, const ClassifierContext& ctx) {
  std::vector<Classification> offline;
  std::vector<std::string> texts;
  for (const Sentence* s : batch) {
    offline.push_back(classify_offline(s->tokens, *ctx.lexicon));
    texts.push_back(s->text);
  }
  if (ctx.mode == ClassifierMode::Offline) return offline;

  const PromptTemplate& tmpl = ctx.prompt != nullptr ? *ctx.prompt : PromptTemplate::standard();
  const std::string prompt = build_prompt(tmpl, texts);
  const std::string key = ReplayCache::key_for(tmpl.template_id, prompt);

  std::optional<std::vector<LlmAnnotation>> annotations;
  if (ctx.cache != nullptr) {
    if (auto cached = ctx.cache->lookup(key)) {
      try {
        annotations = parse_llm_response(*cached, batch.size());
      } catch (const Error&) {
        // Unusable cache entry: treat as a miss.
      }
    }
  }
  if (!annotations && ctx.transport != nullptr) {
    ChatRequest request{ctx.config.model_name, {{"user", prompt}}, ctx.config.temperature};
    bool transport_failed = false;
    std::string last_error;
    for (int attempt = 0; attempt <= ctx.config.max_retries && !annotations; ++attempt) {
      try {
        const std::string reply = ctx.transport->complete(request);
        annotations = parse_llm_response(reply, batch.size());
        if (ctx.cache != nullptr) ctx.cache->store(key, tmpl.template_id, prompt, reply);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Transport && e.code() != ErrorCode::MalformedReply &&
            e.code() != ErrorCode::ContractViolation) {
          throw;
        }
        transport_failed = e.code() == ErrorCode::Transport;
        last_error = e.what();
      }
    }
    if (!annotations && transport_failed && ctx.mode == ClassifierMode::Strict) {
      fail(ErrorCode::Transport, "LLM request failed after " + std::to_string(ctx.config.max_retries + 1) +
                                     " attempt(s): " + last_error);
    }
  } else if (!annotations && ctx.mode == ClassifierMode::Strict) {
    fail(ErrorCode::Transport, "no cached reply for this prompt and networking is unavailable");
  }
  if (!annotations) return offline;

  std::vector<Classification> out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const LlmAnnotation& a = (*annotations)[i];
    Classification c;
    c.intent = a.intent;
    c.provenance = Provenance::Llm;
    c.keyword = a.keyword;
    if (!keyword_in_sentence(a.keyword, batch[i]->text)) {
      c.keyword = offline[i].keyword;
      c.provenance = Provenance::Repaired;
    }
    if (c.intent == IntentLabel::Semantic) {
      c.semantic_tag = a.semantic_tag;
      if (!c.semantic_tag && offline[i].intent == IntentLabel::Semantic) c.semantic_tag = offline[i].semantic_tag;
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

std::vector<Classification> classify(const std::vector<Sentence>& sentences, const ClassifierContext& ctx) {
  if (ctx.lexicon == nullptr) fail(ErrorCode::InvalidArgument, "classification needs a lexicon");
  ctx.config.validate();
  std::vector<std::vector<const Sentence*>> batches;
  for (std::size_t i = 0; i < sentences.size(); i += ctx.config.batch_size) {
    std::vector<const Sentence*> batch;
    for (std::size_t k = i; k < std::min(sentences.size(), i + ctx.config.batch_size); ++k) batch.push_back(&sentences[k]);
    batches.push_back(std::move(batch));
  }

  std::vector<std::vector<Classification>> results(batches.size());
  if (ctx.mode == ClassifierMode::Offline || batches.size() == 1) {
    for (std::size_t b = 0; b < batches.size(); ++b) results[b] = classify_batch(batches[b], ctx);
  } else {
    for (std::size_t start = 0; start < batches.size(); start += ctx.config.max_parallel) {
      std::vector<std::future<std::vector<Classification>>> wave;
      const std::size_t end = std::min(batches.size(), start + ctx.config.max_parallel);
      for (std::size_t b = start; b < end; ++b) {
        wave.push_back(std::async(std::launch::async, [&, b] { return classify_batch(batches[b], ctx); }));
      }
      for (std::size_t b = start; b < end; ++b) results[b] = wave[b - start].get();
    }
  }

  std::vector<Classification> out;
  out.reserve(sentences.size());
  for (auto& r : results) std::move(r.begin(), r.end(), std::back_inserter(out));
  return out;
}

}  // namespace gesgpt
