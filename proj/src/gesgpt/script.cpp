#include "gesgpt/script.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "gesgpt/error.hpp"

namespace gesgpt {

namespace {

constexpr std::array<std::string_view, 7> kIntentNames = {
    "welcome", "farewell", "description", "explanation", "emphasis", "self_reference", "semantic",
};

struct CodePoint {
  char32_t value;
  std::size_t length;
};

// Lenient UTF-8 decoding: malformed bytes come back as single-byte units.
CodePoint decode(std::string_view s, std::size_t pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  auto cont = [&](std::size_t i) {
    return pos + i < s.size() && (static_cast<unsigned char>(s[pos + i]) & 0xC0) == 0x80;
  };
  auto bits = [&](std::size_t i) { return static_cast<char32_t>(static_cast<unsigned char>(s[pos + i]) & 0x3F); };
  if (b0 < 0x80) return {b0, 1};
  if ((b0 & 0xE0) == 0xC0 && cont(1)) return {(static_cast<char32_t>(b0 & 0x1F) << 6) | bits(1), 2};
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    return {(static_cast<char32_t>(b0 & 0x0F) << 12) | (bits(1) << 6) | bits(2), 3};
  }
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    return {(static_cast<char32_t>(b0 & 0x07) << 18) | (bits(1) << 12) | (bits(2) << 6) | bits(3), 4};
  }
  return {b0, 1};
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_ascii_punct(char32_t cp) {
  return cp < 0x80 && std::ispunct(static_cast<int>(cp)) != 0;
}

bool is_cjk_punct(char32_t cp) {
  return (cp >= 0x3000 && cp <= 0x303F) || (cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
         (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65) || (cp >= 0x2010 && cp <= 0x2027);
}

bool is_terminal(char32_t cp) { return cp == '.' || cp == '!' || cp == '?' || cp == 0x3002 || cp == 0xFF01 || cp == 0xFF1F; }

bool is_closer(char32_t cp) {
  return cp == '"' || cp == '\'' || cp == ')' || cp == ']' || cp == 0x201D || cp == 0x2019 || cp == 0x300D ||
         cp == 0x300F || cp == 0xFF09;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

// Key used for alignment: lowercased with every punctuation character removed,
// so "well-known" matches the aligner's "well" + "known".
std::string match_key(std::string_view token) {
  std::string out;
  for (std::size_t i = 0; i < token.size();) {
    const CodePoint cp = decode(token, i);
    if (!is_ascii_punct(cp.value) && !is_cjk_punct(cp.value) && !(cp.length == 1 && is_space(token[i]))) {
      out.append(token.substr(i, cp.length));
    }
    i += cp.length;
  }
  return lower_ascii(out);
}

[[noreturn]] void mismatch(const std::string& message) { fail(ErrorCode::AlignmentMismatch, message); }

std::string quote(std::string_view s) { return "'" + std::string(s) + "'"; }

}  // namespace

std::string_view to_string(IntentLabel label) { return kIntentNames[static_cast<std::size_t>(label)]; }

std::optional<IntentLabel> intent_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kIntentNames.size(); ++i) {
    if (kIntentNames[i] == name) return kAllIntents[i];
  }
  return std::nullopt;
}

bool has_non_ascii(std::string_view text) {
  return std::any_of(text.begin(), text.end(), [](char c) { return static_cast<unsigned char>(c) >= 0x80; });
}

std::string normalize_token(std::string_view token) {
  std::string kept;
  for (std::size_t i = 0; i < token.size();) {
    const CodePoint cp = decode(token, i);
    if (!is_cjk_punct(cp.value)) kept.append(token.substr(i, cp.length));
    i += cp.length;
  }
  std::string_view v = kept;
  while (!v.empty() && is_ascii_punct(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
  while (!v.empty() && is_ascii_punct(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
  return lower_ascii(v);
}

std::vector<Sentence> segment_sentences(std::string_view text) {
  if (trim(text).empty()) fail(ErrorCode::EmptyInput, "input text is empty");
  std::vector<Sentence> out;
  auto emit = [&](std::string_view piece) {
    piece = trim(piece);
    if (piece.empty()) return;
    Sentence s;
    s.index = static_cast<int>(out.size());
    s.text = std::string(piece);
    s.tokens = split_whitespace(piece);
    out.push_back(std::move(s));
  };
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    const CodePoint cp = decode(text, i);
    i += cp.length;
    if (!is_terminal(cp.value)) continue;
    while (i < text.size()) {
      const CodePoint next = decode(text, i);
      if (!is_terminal(next.value) && !is_closer(next.value)) break;
      i += next.length;
    }
    emit(text.substr(start, i - start));
    start = i;
  }
  emit(text.substr(start));
  return out;
}

void validate_timings(const std::vector<WordTiming>& timings) {
  for (std::size_t i = 0; i < timings.size(); ++i) {
    const WordTiming& w = timings[i];
    if (!std::isfinite(w.start_s) || !std::isfinite(w.end_s) || w.start_s < 0.0 || !(w.end_s > w.start_s)) {
      fail(ErrorCode::Validation, "word timing " + std::to_string(i) + " (" + quote(w.word) +
                                      ") needs 0 <= start_s < end_s");
    }
    if (i > 0 && w.start_s < timings[i - 1].end_s) {
      fail(ErrorCode::Validation, "word timing " + std::to_string(i) + " (" + quote(w.word) +
                                      ") overlaps or precedes the previous word");
    }
  }
}

std::vector<TimedSentence> attach_timings(const std::vector<Sentence>& sentences,
                                          const std::vector<WordTiming>& timings) {
  validate_timings(timings);
  std::size_t cursor = 0;
  auto next_word = [&]() -> const WordTiming* {
    while (cursor < timings.size() && match_key(timings[cursor].word).empty()) ++cursor;
    return cursor < timings.size() ? &timings[cursor] : nullptr;
  };

  std::vector<TimedSentence> out;
  out.reserve(sentences.size());
  for (const Sentence& sentence : sentences) {
    TimedSentence ts;
    ts.sentence = sentence;
    for (const std::string& token : sentence.tokens) {
      TokenTiming tt;
      tt.token = token;
      const std::string key = match_key(token);
      std::string consumed;
      while (consumed.size() < key.size()) {
        const WordTiming* w = next_word();
        if (w == nullptr) {
          mismatch("sentence " + std::to_string(sentence.index) + ": token " + quote(token) +
                   " has no matching timing (timings exhausted)");
        }
        const std::string candidate = consumed + match_key(w->word);
        if (key.compare(0, candidate.size(), candidate) != 0) {
          mismatch("sentence " + std::to_string(sentence.index) + ": token " + quote(token) +
                   " diverges from timing word " + quote(w->word) + " at " + std::to_string(w->start_s) + " s");
        }
        consumed = candidate;
        tt.words.push_back(*w);
        ++cursor;
      }
      ts.tokens.push_back(std::move(tt));
    }
    const auto first = std::find_if(ts.tokens.begin(), ts.tokens.end(), [](const TokenTiming& t) { return !t.words.empty(); });
    if (first == ts.tokens.end()) {
      mismatch("sentence " + std::to_string(sentence.index) + " (" + quote(sentence.text) + ") has no alignable token");
    }
    const auto last = std::find_if(ts.tokens.rbegin(), ts.tokens.rend(), [](const TokenTiming& t) { return !t.words.empty(); });
    ts.start_s = first->words.front().start_s;
    ts.end_s = last->words.back().end_s;
    out.push_back(std::move(ts));
  }
  if (const WordTiming* extra = next_word()) {
    mismatch("timing word " + quote(extra->word) + " at " + std::to_string(extra->start_s) +
             " s does not match any sentence token");
  }
  return out;
}

bool keyword_in_sentence(std::string_view keyword, std::string_view text) {
  const std::string norm = normalize_token(keyword);
  if (norm.empty()) return false;
  for (const std::string& token : split_whitespace(text)) {
    if (normalize_token(token) == norm) return true;
  }
  if (!has_non_ascii(keyword)) return false;
  const std::string key = match_key(keyword);
  return !key.empty() && match_key(text).find(key) != std::string::npos;
}

std::optional<Keyword> locate_keyword(const TimedSentence& sentence, std::string_view keyword) {
  const std::string key = match_key(keyword);
  if (key.empty()) return std::nullopt;
  for (const TokenTiming& t : sentence.tokens) {
    if (!t.words.empty() && match_key(t.token) == key) {
      return Keyword{std::string(keyword), t.words.front().start_s, t.words.back().end_s};
    }
  }
  // Substring search over the concatenated aligned words (CJK keywords,
  // multi-word phrases).
  std::string joined;
  std::vector<std::pair<std::size_t, const WordTiming*>> offsets;
  for (const TokenTiming& t : sentence.tokens) {
    for (const WordTiming& w : t.words) {
      offsets.emplace_back(joined.size(), &w);
      joined += match_key(w.word);
    }
  }
  const std::size_t pos = joined.find(key);
  if (pos == std::string::npos) return std::nullopt;
  const std::size_t end = pos + key.size();
  const WordTiming* first = nullptr;
  const WordTiming* last = nullptr;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const std::size_t begin_i = offsets[i].first;
    const std::size_t end_i = i + 1 < offsets.size() ? offsets[i + 1].first : joined.size();
    if (end_i > pos && begin_i < end) {
      if (first == nullptr) first = offsets[i].second;
      last = offsets[i].second;
    }
  }
  return Keyword{std::string(keyword), first->start_s, last->end_s};
}

namespace {

struct TextGridLine {
  std::size_t number;
  std::string_view text;
};

[[noreturn]] void format_error(std::size_t line, const std::string& message) {
  fail(ErrorCode::Format, "TextGrid line " + std::to_string(line) + ": " + message);
}

bool split_assignment(std::string_view line, std::string_view& key, std::string_view& value) {
  const std::size_t eq = line.find(" = ");
  if (eq == std::string_view::npos) return false;
  key = trim(line.substr(0, eq));
  value = trim(line.substr(eq + 3));
  return true;
}

double parse_number(const TextGridLine& l, std::string_view value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
    format_error(l.number, "expected a number, got '" + std::string(value) + "'");
  }
  return out;
}

std::string parse_string(const TextGridLine& l, std::string_view value) {
  if (value.size() < 2 || value.front() != '"' || value.back() != '"') {
    format_error(l.number, "expected a quoted string");
  }
  std::string out;
  const std::string_view body = value.substr(1, value.size() - 2);
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '"') {
      if (i + 1 >= body.size() || body[i + 1] != '"') format_error(l.number, "unescaped quote in string");
      ++i;
    }
    out.push_back(body[i]);
  }
  return out;
}

}  // namespace

std::vector<WordTiming> parse_textgrid(const std::string& content) {
  std::vector<TextGridLine> lines;
  {
    std::size_t start = 0;
    std::size_t number = 1;
    while (start <= content.size()) {
      std::size_t end = content.find('\n', start);
      if (end == std::string::npos) end = content.size();
      const std::string_view line = trim(std::string_view(content).substr(start, end - start));
      if (!line.empty()) lines.push_back({number, line});
      start = end + 1;
      ++number;
    }
  }
  if (lines.size() < 2 || lines[0].text.find("ooTextFile") == std::string_view::npos ||
      lines[1].text.find("\"TextGrid\"") == std::string_view::npos) {
    fail(ErrorCode::Format, "not a Praat TextGrid (missing ooTextFile/TextGrid header)");
  }
  const bool long_form = std::any_of(lines.begin(), lines.end(), [](const TextGridLine& l) {
    return l.text.starts_with("item [") && l.text != "item []:";
  });
  if (!long_form) fail(ErrorCode::Format, "short-form TextGrid files are not supported; save as a long text file");

  std::vector<WordTiming> words;
  bool found_words_tier = false;
  bool in_words_tier = false;
  std::string tier_class;
  long declared_intervals = -1;
  long parsed_intervals = 0;
  std::size_t tier_line = 0;

  auto finish_tier = [&]() {
    if (in_words_tier && declared_intervals >= 0 && parsed_intervals != declared_intervals) {
      format_error(tier_line, "tier \"words\" declares " + std::to_string(declared_intervals) + " intervals but has " +
                                  std::to_string(parsed_intervals));
    }
  };

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const TextGridLine& l = lines[i];
    std::string_view key;
    std::string_view value;
    if (l.text.starts_with("item [") && l.text != "item []:") {
      finish_tier();
      in_words_tier = false;
      tier_class.clear();
      declared_intervals = -1;
      parsed_intervals = 0;
      tier_line = l.number;
      continue;
    }
    if (l.text.starts_with("intervals [")) {
      if (!l.text.ends_with(":")) format_error(l.number, "malformed interval header");
      double xmin = 0.0;
      double xmax = 0.0;
      std::string label;
      const char* expected[] = {"xmin", "xmax", "text"};
      for (int f = 0; f < 3; ++f) {
        if (i + 1 >= lines.size()) format_error(l.number, "interval block ends early");
        const TextGridLine& fl = lines[++i];
        if (!split_assignment(fl.text, key, value) || key != expected[f]) {
          format_error(fl.number, std::string("expected '") + expected[f] + " = ...' inside interval block");
        }
        if (f == 0) xmin = parse_number(fl, value);
        if (f == 1) xmax = parse_number(fl, value);
        if (f == 2) label = parse_string(fl, value);
      }
      if (xmax < xmin) format_error(l.number, "interval has xmax < xmin");
      ++parsed_intervals;
      const std::string_view trimmed = trim(label);
      if (in_words_tier && !trimmed.empty()) words.push_back({std::string(trimmed), xmin, xmax});
      continue;
    }
    if (l.text.starts_with("intervals: size = ")) {
      declared_intervals = static_cast<long>(parse_number(l, trim(l.text.substr(18))));
      continue;
    }
    if (split_assignment(l.text, key, value)) {
      if (key == "class") tier_class = parse_string(l, value);
      if (key == "name" && tier_line != 0) {
        in_words_tier = parse_string(l, value) == "words" && tier_class == "IntervalTier";
        found_words_tier = found_words_tier || in_words_tier;
      }
    }
  }
  finish_tier();
  if (!found_words_tier) fail(ErrorCode::Format, "TextGrid has no interval tier named \"words\"");
  return words;
}

std::vector<WordTiming> parse_timings_json(const nlohmann::json& j) {
  std::vector<WordTiming> out;
  try {
    const nlohmann::json& words = j.is_array() ? j : j.at("words");
    if (!words.is_array()) fail(ErrorCode::Format, "\"words\" must be an array");
    for (const auto& w : words) {
      out.push_back({w.at("word").get<std::string>(), w.at("start_s").get<double>(), w.at("end_s").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, std::string("malformed word timings: ") + e.what());
  }
  validate_timings(out);
  return out;
}

nlohmann::json timings_to_json(const std::vector<WordTiming>& timings) {
  nlohmann::json words = nlohmann::json::array();
  for (const WordTiming& w : timings) words.push_back({{"word", w.word}, {"start_s", w.start_s}, {"end_s", w.end_s}});
  return {{"words", std::move(words)}};
}

std::vector<std::string> script_problems(const GestureScript& script) {
  std::vector<std::string> problems;
  if (script.version != 1) problems.push_back("script: version must be 1");
  for (std::size_t i = 0; i < script.sentences.size(); ++i) {
    const SentenceEntry& s = script.sentences[i];
    const std::string where = "sentence " + std::to_string(i) + ": ";
    auto bad = [&](const std::string& field, const std::string& what) { problems.push_back(where + field + " " + what); };
    if (s.index != static_cast<int>(i)) bad("index", "must be " + std::to_string(i) + " (contiguous from 0)");
    if (trim(s.text).empty()) bad("text", "must not be empty");
    if (!std::isfinite(s.start_s) || s.start_s < 0.0) bad("start_s", "must be a non-negative number");
    if (!std::isfinite(s.end_s) || !(s.end_s > s.start_s)) bad("end_s", "must be greater than start_s");
    if (s.keyword) {
      const Keyword& k = *s.keyword;
      if (!keyword_in_sentence(k.text, s.text)) bad("keyword", quote(k.text) + " is not a token of the sentence");
      if (!(s.start_s <= k.start_s)) bad("keyword_start_s", "must not precede start_s");
      if (!(k.start_s < k.end_s)) bad("keyword_end_s", "must be greater than keyword_start_s");
      if (!(k.end_s <= s.end_s)) bad("keyword_end_s", "must not exceed end_s");
    }
    if (s.semantic_tag) {
      if (s.intent != IntentLabel::Semantic) bad("semantic_tag", "is only allowed when intent is semantic");
      if (s.semantic_tag->empty()) bad("semantic_tag", "must not be empty");
    }
    if (s.gesture_id && s.gesture_id->empty()) bad("gesture_id", "must not be empty");
    if (i > 0 && s.start_s < script.sentences[i - 1].end_s) bad("start_s", "overlaps the previous sentence");
  }
  return problems;
}

void validate_script(const GestureScript& script) {
  auto problems = script_problems(script);
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

nlohmann::json script_to_json(const GestureScript& script) {
  nlohmann::json sentences = nlohmann::json::array();
  for (const SentenceEntry& s : script.sentences) {
    nlohmann::json e = {
        {"index", s.index}, {"text", s.text}, {"start_s", s.start_s}, {"end_s", s.end_s}, {"intent", to_string(s.intent)},
    };
    if (s.keyword) {
      e["keyword"] = s.keyword->text;
      e["keyword_start_s"] = s.keyword->start_s;
      e["keyword_end_s"] = s.keyword->end_s;
    }
    if (s.gesture_id) e["gesture_id"] = *s.gesture_id;
    if (s.semantic_tag) e["semantic_tag"] = *s.semantic_tag;
    sentences.push_back(std::move(e));
  }
  return {{"version", script.version}, {"sentences", std::move(sentences)}};
}

GestureScript script_from_json(const nlohmann::json& j) {
  static const std::set<std::string> kSentenceKeys = {
      "index", "text", "start_s", "end_s", "intent", "keyword", "keyword_start_s", "keyword_end_s", "gesture_id",
      "semantic_tag",
  };
  std::vector<std::string> problems;
  GestureScript script;
  if (!j.is_object()) throw ValidationError({"script: must be a JSON object"});
  for (const auto& [key, value] : j.items()) {
    if (key != "version" && key != "sentences") problems.push_back("script: unknown field '" + key + "'");
  }
  if (!j.contains("version") || !j["version"].is_number_integer()) {
    problems.push_back("script: version must be an integer");
  } else {
    script.version = j["version"].get<int>();
  }
  if (!j.contains("sentences") || !j["sentences"].is_array()) {
    problems.push_back("script: sentences must be an array");
    throw ValidationError(std::move(problems));
  }
  const auto& arr = j["sentences"];
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& e = arr[i];
    const std::string where = "sentence " + std::to_string(i) + ": ";
    if (!e.is_object()) {
      problems.push_back(where + "must be an object");
      continue;
    }
    for (const auto& [key, value] : e.items()) {
      if (!kSentenceKeys.contains(key)) problems.push_back(where + "unknown field '" + key + "'");
    }
    SentenceEntry s;
    auto number = [&](const char* key, double& out) {
      if (!e.contains(key) || !e[key].is_number()) {
        problems.push_back(where + key + " must be a number");
        return false;
      }
      out = e[key].get<double>();
      return true;
    };
    auto string = [&](const char* key, std::string& out, bool required) {
      if (!e.contains(key)) {
        if (required) problems.push_back(where + key + " is required");
        return false;
      }
      if (!e[key].is_string()) {
        problems.push_back(where + key + " must be a string");
        return false;
      }
      out = e[key].get<std::string>();
      return true;
    };
    if (!e.contains("index") || !e["index"].is_number_integer()) {
      problems.push_back(where + "index must be an integer");
    } else {
      s.index = e["index"].get<int>();
    }
    string("text", s.text, true);
    number("start_s", s.start_s);
    number("end_s", s.end_s);
    std::string intent;
    if (string("intent", intent, true)) {
      if (auto label = intent_from_string(intent)) {
        s.intent = *label;
      } else {
        problems.push_back(where + "intent '" + intent + "' is not one of the 7 intent labels");
      }
    }
    const bool has_kw = e.contains("keyword") || e.contains("keyword_start_s") || e.contains("keyword_end_s");
    if (has_kw) {
      Keyword k;
      const bool ok = string("keyword", k.text, true) & number("keyword_start_s", k.start_s) &
                      number("keyword_end_s", k.end_s);
      if (ok) s.keyword = k;
    }
    std::string text;
    if (string("gesture_id", text, false)) s.gesture_id = text;
    if (string("semantic_tag", text, false)) s.semantic_tag = text;
    script.sentences.push_back(std::move(s));
  }
  if (problems.empty()) problems = script_problems(script);
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return script;
}

std::string serialize_script(const GestureScript& script) {
  validate_script(script);
  return script_to_json(script).dump();
}

GestureScript parse_script(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ValidationError({"script: not valid JSON"});
  return script_from_json(j);
}

}  // namespace gesgpt
