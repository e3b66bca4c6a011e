#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace gesgpt {

enum class IntentLabel {
  Welcome,
  Farewell,
  Description,
  Explanation,
  Emphasis,
  SelfReference,
  Semantic,
};

inline constexpr std::array<IntentLabel, 7> kAllIntents = {
    IntentLabel::Welcome,  IntentLabel::Farewell,      IntentLabel::Description, IntentLabel::Explanation,
    IntentLabel::Emphasis, IntentLabel::SelfReference, IntentLabel::Semantic,
};

std::string_view to_string(IntentLabel label);
std::optional<IntentLabel> intent_from_string(std::string_view name);

struct WordTiming {
  std::string word;
  double start_s = 0.0;
  double end_s = 0.0;

  friend bool operator==(const WordTiming&, const WordTiming&) = default;
};

struct Keyword {
  std::string text;
  double start_s = 0.0;
  double end_s = 0.0;

  double midpoint() const { return 0.5 * (start_s + end_s); }
  friend bool operator==(const Keyword&, const Keyword&) = default;
};

struct SentenceEntry {
  int index = 0;
  std::string text;
  double start_s = 0.0;
  double end_s = 0.0;
  IntentLabel intent = IntentLabel::Description;
  // Absent only when a human edit removed it; synthesis then falls back to
  // onset placement for the sentence.
  std::optional<Keyword> keyword;
  std::optional<std::string> gesture_id;
  std::optional<std::string> semantic_tag;

  double duration_s() const { return end_s - start_s; }
  friend bool operator==(const SentenceEntry&, const SentenceEntry&) = default;
};

struct GestureScript {
  int version = 1;
  std::vector<SentenceEntry> sentences;

  friend bool operator==(const GestureScript&, const GestureScript&) = default;
};

struct Sentence {
  int index = 0;
  std::string text;
  std::vector<std::string> tokens;
};

// Word timings matched against one sentence token.
struct TokenTiming {
  std::string token;
  std::vector<WordTiming> words;  // empty for punctuation-only tokens
};

// Sentence with times filled in; intent and keyword still unassigned.
struct TimedSentence {
  Sentence sentence;
  double start_s = 0.0;
  double end_s = 0.0;
  std::vector<TokenTiming> tokens;
};

// Case-folds ASCII, strips leading/trailing ASCII punctuation and removes CJK
// punctuation anywhere. Non-ASCII text is otherwise kept byte-for-byte.
std::string normalize_token(std::string_view token);
bool has_non_ascii(std::string_view text);

// Splits on . ! ? and the CJK terminals; consecutive terminals stay with the
// sentence they end. Abbreviation periods ("Mr.") also split.
std::vector<Sentence> segment_sentences(std::string_view text);

// Greedy left-to-right alignment of sentence tokens with forced-alignment
// words. A token may absorb several consecutive words (CJK text, where the
// aligner supplies the segmentation).
std::vector<TimedSentence> attach_timings(const std::vector<Sentence>& sentences,
                                          const std::vector<WordTiming>& timings);

// True when `keyword` equals a normalized token of `text`, or, for non-ASCII
// keywords, occurs inside the normalized text.
bool keyword_in_sentence(std::string_view keyword, std::string_view text);

// Finds the keyword's time span inside a timed sentence.
std::optional<Keyword> locate_keyword(const TimedSentence& sentence, std::string_view keyword);

// Long-form Praat TextGrid, "words" interval tier only.
std::vector<WordTiming> parse_textgrid(const std::string& content);

// {"words":[{"word":..,"start_s":..,"end_s":..},...]}
std::vector<WordTiming> parse_timings_json(const nlohmann::json& j);
nlohmann::json timings_to_json(const std::vector<WordTiming>& timings);
void validate_timings(const std::vector<WordTiming>& timings);

// Lists every invariant violation ("sentence 2: keyword_start_s ...").
std::vector<std::string> script_problems(const GestureScript& script);
void validate_script(const GestureScript& script);

nlohmann::json script_to_json(const GestureScript& script);
GestureScript script_from_json(const nlohmann::json& j);
// Canonical form: sorted keys, no insignificant whitespace.
std::string serialize_script(const GestureScript& script);
GestureScript parse_script(const std::string& text);

}  // namespace gesgpt
