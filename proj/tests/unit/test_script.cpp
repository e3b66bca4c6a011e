#include <doctest.h>

#include <random>

#include "gesgpt/error.hpp"
#include "gesgpt/script.hpp"
#include "helpers.hpp"

using namespace gesgpt;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

std::vector<std::string> problems_of(const std::string& text) {
  try {
    parse_script(text);
  } catch (const ValidationError& e) {
    return e.problems();
  }
  return {};
}

std::string strip_ws(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  }
  return out;
}

SentenceEntry entry(int index, const std::string& text, double start, double end, IntentLabel intent,
                    std::optional<Keyword> kw = std::nullopt) {
  SentenceEntry s;
  s.index = index;
  s.text = text;
  s.start_s = start;
  s.end_s = end;
  s.intent = intent;
  s.keyword = std::move(kw);
  return s;
}

const char* kMinimalTextGrid = R"(File type = "ooTextFile"
Object class = "TextGrid"

xmin = 0
xmax = 0.9
tiers? <exists>
size = 1
item []:
    item [1]:
        class = "IntervalTier"
        name = "words"
        xmin = 0
        xmax = 0.9
        intervals: size = 2
        intervals [1]:
            xmin = 0
            xmax = 0.5
            text = ""
        intervals [2]:
            xmin = 0.5
            xmax = 0.9
            text = "hello"
)";

}  // namespace

TEST_CASE("intent labels are a closed set of seven") {
  CHECK(kAllIntents.size() == 7);
  for (IntentLabel l : kAllIntents) CHECK(intent_from_string(to_string(l)) == l);
  CHECK(to_string(IntentLabel::SelfReference) == "self_reference");
  CHECK_FALSE(intent_from_string("waving").has_value());
  CHECK_FALSE(intent_from_string("Welcome").has_value());
}

TEST_CASE("segment sentences") {
  SUBCASE("two terminals") {
    const auto s = segment_sentences("Hello. Bye!");
    REQUIRE(s.size() == 2);
    CHECK(s[0].index == 0);
    CHECK(s[0].text == "Hello.");
    CHECK(s[1].index == 1);
    CHECK(s[1].text == "Bye!");
  }
  SUBCASE("no terminal") {
    const auto s = segment_sentences("No terminal punctuation");
    REQUIRE(s.size() == 1);
    CHECK(s[0].text == "No terminal punctuation");
    CHECK(s[0].tokens == std::vector<std::string>{"No", "terminal", "punctuation"});
  }
  SUBCASE("abbreviation period splits") {
    const auto s = segment_sentences("I met Mr. Smith today. He waved.");
    REQUIRE(s.size() == 3);
    CHECK(s[0].text == "I met Mr.");
    CHECK(s[1].text == "Smith today.");
    CHECK(s[2].text == "He waved.");
  }
  SUBCASE("runs of terminals stay together") {
    const auto s = segment_sentences("Really?! Yes...");
    REQUIRE(s.size() == 2);
    CHECK(s[0].text == "Really?!");
    CHECK(s[1].text == "Yes...");
  }
  SUBCASE("CJK terminals") {
    const auto s = segment_sentences("你好。再见！");
    REQUIRE(s.size() == 2);
    CHECK(s[0].text == "你好。");
    CHECK(s[1].text == "再见！");
  }
  SUBCASE("empty input") {
    CHECK(code_of([] { segment_sentences(""); }) == ErrorCode::EmptyInput);
    CHECK(code_of([] { segment_sentences("  \n\t "); }) == ErrorCode::EmptyInput);
  }
  SUBCASE("no non-whitespace character is lost") {
    std::mt19937_64 rng(21);
    const std::vector<std::string> pieces{"a", "bc", "Def", " ", "  ", ".", "!", "?", "\n", "x,", "'q'", "。", "好"};
    std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
    for (int trial = 0; trial < 200; ++trial) {
      std::string text = "w";
      for (int k = 0; k < 30; ++k) text += pieces[pick(rng)];
      std::string joined;
      for (const Sentence& s : segment_sentences(text)) joined += s.text;
      CHECK(strip_ws(joined) == strip_ws(text));
    }
  }
}

TEST_CASE("normalize token") {
  CHECK(normalize_token("Hello,") == "hello");
  CHECK(normalize_token("\"Quote\"") == "quote");
  CHECK(normalize_token("don't") == "don't");
  CHECK(normalize_token("...") == "");
  CHECK(normalize_token("你好。") == "你好");
}

TEST_CASE("attach timings") {
  SUBCASE("single sentence") {
    const auto t = attach_timings(segment_sentences("hi there"), {{"hi", 0.0, 0.3}, {"there", 0.35, 0.7}});
    REQUIRE(t.size() == 1);
    CHECK(t[0].start_s == 0.0);
    CHECK(t[0].end_s == 0.7);
  }
  SUBCASE("empty timing list") {
    CHECK(code_of([] { attach_timings(segment_sentences("hi there"), {}); }) == ErrorCode::AlignmentMismatch);
  }
  SUBCASE("divergent token is named") {
    try {
      attach_timings(segment_sentences("hi there"), {{"hi", 0.0, 0.3}, {"where", 0.35, 0.7}});
      FAIL("expected mismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::AlignmentMismatch);
      CHECK(std::string(e.what()).find("there") != std::string::npos);
    }
  }
  SUBCASE("punctuation-only tokens are skipped") {
    // Hand alignment: sentence 0 covers "Well" .. "done", sentence 1 covers
    // "See" .. "you"; the standalone dash has no timing of its own.
    const auto t = attach_timings(segment_sentences("Well - done! See you."),
                                  {{"well", 0.1, 0.4}, {"done", 0.5, 0.9}, {"see", 1.2, 1.4}, {"you", 1.45, 1.8}});
    REQUIRE(t.size() == 2);
    CHECK(t[0].start_s == 0.1);
    CHECK(t[0].end_s == 0.9);
    CHECK(t[1].start_s == 1.2);
    CHECK(t[1].end_s == 1.8);
    CHECK(t[0].tokens[1].words.empty());
  }
  SUBCASE("CJK token absorbs several aligned words") {
    const auto t = attach_timings(segment_sentences("你好世界。"), {{"你好", 0.0, 0.4}, {"世界", 0.5, 0.9}});
    REQUIRE(t.size() == 1);
    CHECK(t[0].end_s == 0.9);
    CHECK(t[0].tokens[0].words.size() == 2);
  }
  SUBCASE("spans are ordered and disjoint when timings are") {
    const auto text = testing::read_fixture("transcript.txt");
    const auto timings = parse_timings_json(nlohmann::json::parse(testing::read_fixture("transcript_timings.json")));
    const auto t = attach_timings(segment_sentences(text), timings);
    REQUIRE(t.size() == 10);
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(t[i].start_s < t[i].end_s);
      if (i > 0) CHECK(t[i].start_s >= t[i - 1].end_s);
    }
  }
  SUBCASE("unsorted timings are rejected") {
    CHECK(code_of([] { validate_timings({{"a", 0.5, 0.9}, {"b", 0.2, 0.4}}); }) == ErrorCode::Validation);
    CHECK(code_of([] { validate_timings({{"a", 0.5, 0.5}}); }) == ErrorCode::Validation);
  }
}

TEST_CASE("keyword lookup") {
  CHECK(keyword_in_sentence("never", "I will Never stop."));
  CHECK_FALSE(keyword_in_sentence("neve", "I will never stop."));
  CHECK(keyword_in_sentence("世界", "你好世界。"));
  const auto t = attach_timings(segment_sentences("I will never stop."),
                                {{"I", 0, 0.2}, {"will", 0.3, 0.5}, {"never", 0.6, 0.9}, {"stop", 1.0, 1.3}});
  const auto k = locate_keyword(t[0], "never");
  REQUIRE(k.has_value());
  CHECK(k->text == "never");
  CHECK(k->start_s == 0.6);
  CHECK(k->end_s == 0.9);
  CHECK_FALSE(locate_keyword(t[0], "always").has_value());
}

TEST_CASE("TextGrid") {
  SUBCASE("minimal file") {
    const auto w = parse_textgrid(kMinimalTextGrid);
    REQUIRE(w.size() == 1);
    CHECK(w[0] == WordTiming{"hello", 0.5, 0.9});
  }
  SUBCASE("all intervals empty") {
    std::string text = kMinimalTextGrid;
    text.replace(text.find("\"hello\""), 7, "\"\"");
    CHECK(parse_textgrid(text).empty());
  }
  SUBCASE("missing words tier") {
    std::string text = kMinimalTextGrid;
    text.replace(text.find("\"words\""), 7, "\"phones\"");
    CHECK(code_of([&] { parse_textgrid(text); }) == ErrorCode::Format);
  }
  SUBCASE("short form is unsupported") {
    const char* short_form = "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n0\n0.9\n<exists>\n1\n"
                             "\"IntervalTier\"\n\"words\"\n0\n0.9\n1\n0\n0.9\n\"hello\"\n";
    CHECK(code_of([&] { parse_textgrid(short_form); }) == ErrorCode::Format);
  }
  SUBCASE("malformed interval names its line") {
    std::string text = kMinimalTextGrid;
    text.replace(text.find("xmax = 0.9\n            text"), 10, "xmax = oops");
    try {
      parse_textgrid(text);
      FAIL("expected format error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Format);
      CHECK(std::string(e.what()).find("line") != std::string::npos);
    }
  }
  SUBCASE("bundled TextGrid agrees with the JSON timings") {
    const auto grid = parse_textgrid(testing::read_fixture("transcript.TextGrid"));
    const auto json = parse_timings_json(nlohmann::json::parse(testing::read_fixture("transcript_timings.json")));
    REQUIRE(grid.size() == json.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(grid[i].word == json[i].word);
      CHECK(grid[i].start_s == doctest::Approx(json[i].start_s));
      CHECK(grid[i].end_s == doctest::Approx(json[i].end_s));
    }
  }
}

TEST_CASE("timings JSON") {
  const std::vector<WordTiming> w{{"a", 0, 0.5}, {"b", 0.6, 1.0}};
  CHECK(parse_timings_json(timings_to_json(w)) == w);
  CHECK(code_of([] { parse_timings_json(nlohmann::json{{"words", 3}}); }) == ErrorCode::Format);
  CHECK(code_of([] { parse_timings_json(nlohmann::json::parse(R"({"words":[{"word":"a"}]})")); }) ==
        ErrorCode::Format);
}

TEST_CASE("script serialization") {
  SUBCASE("empty script") {
    GestureScript s;
    const std::string text = serialize_script(s);
    CHECK(text == R"({"sentences":[],"version":1})");
    CHECK(parse_script(text) == s);
    CHECK(parse_script(R"({"version":1,"sentences":[]})") == s);
  }
  SUBCASE("closed intent enum") {
    const auto p = problems_of(
        R"({"version":1,"sentences":[{"index":0,"text":"Hi.","start_s":0,"end_s":1,"intent":"waving"}]})");
    REQUIRE(p.size() == 1);
    CHECK(p[0].find("sentence 0") != std::string::npos);
    CHECK(p[0].find("intent") != std::string::npos);
  }
  SUBCASE("bundled fixture round-trips byte-identically") {
    const std::string text = testing::read_fixture("golden/short_script.json");
    const GestureScript s = parse_script(text);
    CHECK(s.sentences.size() == 3);
    CHECK(serialize_script(s) == text);
  }
  SUBCASE("random valid scripts round-trip") {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> gap(0.0, 0.5), len(0.5, 4.0);
    std::uniform_int_distribution<int> label(0, 6), coin(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
      GestureScript s;
      double t = gap(rng);
      const int n = trial % 6;
      for (int i = 0; i < n; ++i) {
        const double end = t + len(rng);
        SentenceEntry e = entry(i, "Alpha beta gamma.", t, end, kAllIntents[static_cast<std::size_t>(label(rng))]);
        if (coin(rng)) e.keyword = Keyword{"beta", t + 0.1, t + 0.4};
        if (coin(rng)) e.gesture_id = "unit_" + std::to_string(i);
        if (e.intent == IntentLabel::Semantic && coin(rng)) e.semantic_tag = "thumbs_up";
        s.sentences.push_back(e);
        t = end + gap(rng);
      }
      CHECK(parse_script(serialize_script(s)) == s);
    }
  }
  SUBCASE("invariant violations are all listed") {
    GestureScript s;
    s.sentences.push_back(entry(0, "Go now.", 1.0, 2.0, IntentLabel::Emphasis, Keyword{"now", 0.5, 1.5}));
    s.sentences.push_back(entry(2, "Then stop.", 1.5, 3.0, IntentLabel::Description, Keyword{"halt", 1.6, 1.8}));
    const auto p = script_problems(s);
    auto has = [&](const std::string& needle) {
      for (const auto& x : p) {
        if (x.find(needle) != std::string::npos) return true;
      }
      return false;
    };
    CHECK(has("sentence 0: keyword_start_s"));
    CHECK(has("sentence 1: index"));
    CHECK(has("sentence 1: keyword"));
    CHECK(has("sentence 1: start_s overlaps"));
    CHECK_THROWS_AS(validate_script(s), ValidationError);
  }
  SUBCASE("semantic tag only on semantic intent") {
    GestureScript s;
    s.sentences.push_back(entry(0, "Great.", 0, 1, IntentLabel::Emphasis));
    s.sentences[0].semantic_tag = "thumbs_up";
    CHECK(script_problems(s).size() == 1);
  }
  SUBCASE("unknown keys and malformed JSON") {
    CHECK_FALSE(problems_of(R"({"version":1,"sentences":[],"extra":true})").empty());
    CHECK_FALSE(problems_of("{not json").empty());
    CHECK_FALSE(problems_of("[]").empty());
  }
}
