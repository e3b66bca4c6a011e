#include <doctest.h>

#include <filesystem>

#include "gesgpt/motion.hpp"
#include "gesgpt/pipeline.hpp"
#include "gesgpt/script.hpp"
#include "gesgpt/util.hpp"
#include "helpers.hpp"
#include "transports.hpp"

using namespace gesgpt;
using nlohmann::json;
using testing::quote;

namespace {

testing::CommandResult gesgpt_cli(const std::string& args) { return testing::run(testing::cli() + " " + args + " 2>&1"); }

std::string fx(const std::string& relative) { return quote(testing::fixture(relative)); }

std::string parse_args(const std::string& text = "transcript.txt", const std::string& timings = "transcript_timings.json") {
  return "parse --text " + fx(text) + " --timings " + fx(timings);
}

// Copy of the fixture dictionary that a test may damage.
void copy_dictionary(const testing::TempDir& dir) {
  std::filesystem::copy(testing::fixture("dictionary"), dir.path() / "dict", std::filesystem::copy_options::recursive);
}

}  // namespace

TEST_CASE("usage and exit codes") {
  testing::TempDir dir;
  SUBCASE("help and version") {
    CHECK(gesgpt_cli("--help").exit_code == 0);
    const auto v = gesgpt_cli("--version");
    CHECK(v.exit_code == 0);
    CHECK_FALSE(v.output.empty());
    CHECK(gesgpt_cli("").exit_code == 1);
    CHECK(gesgpt_cli("dance").exit_code == 1);
  }
  SUBCASE("parse needs exactly one timing source") {
    CHECK(gesgpt_cli("parse --text " + fx("transcript.txt")).exit_code == 1);
    CHECK(gesgpt_cli(parse_args() + " --textgrid " + fx("transcript.TextGrid")).exit_code == 1);
  }
  SUBCASE("alignment mismatch") {
    const auto r = gesgpt_cli(parse_args("transcript.txt", "short_timings.json"));
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("alignment") != std::string::npos);
  }
  SUBCASE("bad synthesis flags") {
    const std::string base = "synth --script " + fx("golden/short_script.json") + " --dict " + fx("dictionary") + " --out " +
                             quote(dir.file("m.json"));
    CHECK(gesgpt_cli(base + " --fps 0").exit_code == 1);
    CHECK(gesgpt_cli(base + " --mode sideways").exit_code == 1);
    CHECK(gesgpt_cli(base + " --base nothing").exit_code == 1);
    CHECK(gesgpt_cli(base + " --base file:" + quote(dir.file("missing.json"))).exit_code == 2);
  }
  SUBCASE("invalid script") {
    json script = json::parse(testing::read_fixture("golden/short_script.json"));
    script["sentences"][0]["intent"] = "waving";
    write_file(dir.file("bad.json"), script.dump());
    const auto r = gesgpt_cli("synth --script " + quote(dir.file("bad.json")) + " --dict " + fx("dictionary") + " --out " +
                              quote(dir.file("m.json")));
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("waving") != std::string::npos);
  }
  SUBCASE("invalid dictionary is a validation failure, a missing clip an I/O failure") {
    copy_dictionary(dir);
    const std::string manifest = dir.file("dict/manifest.json");
    const json original = json::parse(read_file(manifest));
    json broken = original;
    broken["units"][0]["stages"]["stroke_apex"] = 0;
    write_file(manifest, broken.dump());
    const auto r = gesgpt_cli("dict-check --dict " + quote(dir.file("dict")));
    CHECK(r.exit_code == 1);
    CHECK(r.output.find(original["units"][0]["id"].get<std::string>()) != std::string::npos);

    write_file(manifest, original.dump());
    CHECK(gesgpt_cli("dict-check --dict " + quote(dir.file("dict"))).exit_code == 0);
    std::filesystem::remove(dir.path() / "dict" / original["units"][3]["file"].get<std::string>());
    CHECK(gesgpt_cli("dict-check --dict " + quote(dir.file("dict"))).exit_code == 2);
  }
  SUBCASE("unwritable output") {
    write_file(dir.file("plain"), "x");
    const auto r = gesgpt_cli("synth --script " + fx("golden/short_script.json") + " --dict " + fx("dictionary") +
                              " --out " + quote(dir.file("plain/m.json")));
    CHECK(r.exit_code == 2);
  }
}

TEST_CASE("parse") {
  testing::TempDir dir;
  SUBCASE("offline parse reproduces the golden script") {
    const auto r = gesgpt_cli(parse_args() + " --offline --out " + quote(dir.file("script.json")));
    REQUIRE(r.exit_code == 0);
    CHECK(read_file(dir.file("script.json")) == testing::read_fixture("golden/script.json"));
    // the provenance table has a header and one row per sentence
    CHECK(std::count(r.output.begin(), r.output.end(), '\n') == 11);
    CHECK(r.output.find("fallback") != std::string::npos);
  }
  SUBCASE("offline is the default and stdout carries the script") {
    const auto r = testing::run(testing::cli() + " " + parse_args("short.txt", "short_timings.json") + " 2>/dev/null");
    REQUIRE(r.exit_code == 0);
    CHECK(r.output == testing::read_fixture("golden/short_script.json") + "\n");
  }
  SUBCASE("TextGrid input gives the same script") {
    const auto r = gesgpt_cli("parse --text " + fx("transcript.txt") + " --textgrid " + fx("transcript.TextGrid") +
                              " --out " + quote(dir.file("script.json")));
    REQUIRE(r.exit_code == 0);
    CHECK(read_file(dir.file("script.json")) == testing::read_fixture("golden/script.json"));
  }
  SUBCASE("LLM mode replays a seeded cache without network") {
    ParserOptions options;
    options.mode = ClassifierMode::Llm;
    options.cache_dir = dir.file("cache");
    const Parser seeding(options, std::make_shared<testing::EchoTransport>("explanation"));
    const auto timings = parse_timings_json(json::parse(testing::read_fixture("short_timings.json")));
    const GestureScript expected = seeding.parse(testing::read_fixture("short.txt"), timings).script;
    for (const auto& s : expected.sentences) CHECK(s.intent == IntentLabel::Explanation);

    const auto r = gesgpt_cli(parse_args("short.txt", "short_timings.json") + " --llm --no-network --cache " +
                              quote(dir.file("cache")) + " --out " + quote(dir.file("script.json")));
    REQUIRE(r.exit_code == 0);
    CHECK(read_file(dir.file("script.json")) == serialize_script(expected));
    CHECK(r.output.find("llm") != std::string::npos);
    CHECK(r.output.find("fallback") == std::string::npos);
  }
  SUBCASE("LLM mode without a cache or network falls back to the lexicon") {
    const auto r = gesgpt_cli(parse_args("short.txt", "short_timings.json") + " --llm --no-network --out " +
                              quote(dir.file("script.json")));
    REQUIRE(r.exit_code == 0);
    CHECK(read_file(dir.file("script.json")) == testing::read_fixture("golden/short_script.json"));
  }
  SUBCASE("strict mode without a reachable model fails") {
    const auto r = gesgpt_cli(parse_args("short.txt", "short_timings.json") + " --strict --no-network --out " +
                              quote(dir.file("script.json")));
    CHECK(r.exit_code == 2);
  }
}

TEST_CASE("synth") {
  testing::TempDir dir;
  const std::string common = "synth --script " + fx("golden/script.json") + " --dict " + fx("dictionary");

  SUBCASE("seed 42 reproduces the golden files") {
    const auto r = gesgpt_cli(common + " --seed 42 --mode stroke --out " + quote(dir.file("motion.json")));
    REQUIRE(r.exit_code == 0);
    CHECK(read_file(dir.file("motion.json")) == testing::read_fixture("golden/motion.json"));
    CHECK(read_file(dir.file("motion.schedule.json")) == testing::read_fixture("golden/motion.schedule.json"));
    CHECK(read_file(dir.file("motion.report.txt")) == testing::read_fixture("golden/motion.report.txt"));
    CHECK(r.output == testing::read_fixture("golden/motion.report.txt"));
  }
  SUBCASE("explicit output paths and CSV") {
    const auto r = gesgpt_cli(common + " --seed 42 --out " + quote(dir.file("a/m.json")) + " --schedule-out " +
                              quote(dir.file("s.json")) + " --report-out " + quote(dir.file("r.txt")) + " --csv " +
                              quote(dir.file("m.csv")));
    REQUIRE(r.exit_code == 0);
    CHECK(read_file(dir.file("s.json")) == testing::read_fixture("golden/motion.schedule.json"));
    const MotionClip motion = load_clip(dir.file("a/m.json"));
    const std::string csv = read_file(dir.file("m.csv"));
    CHECK(csv.rfind("frame,joint,x,y,z\n", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) ==
          1 + motion.frame_count() * motion.joint_count());
  }
  SUBCASE("onset and stroke schedules differ") {
    REQUIRE(gesgpt_cli(common + " --seed 42 --mode onset --out " + quote(dir.file("onset.json"))).exit_code == 0);
    REQUIRE(gesgpt_cli(common + " --seed 42 --mode stroke --out " + quote(dir.file("stroke.json"))).exit_code == 0);
    const json onset = json::parse(read_file(dir.file("onset.schedule.json")));
    const json stroke = json::parse(read_file(dir.file("stroke.schedule.json")));
    CHECK(onset != stroke);
    CHECK(read_file(dir.file("onset.json")) != read_file(dir.file("stroke.json")));
  }
  SUBCASE("another seed changes the output") {
    REQUIRE(gesgpt_cli(common + " --seed 7 --out " + quote(dir.file("m.json"))).exit_code == 0);
    CHECK(read_file(dir.file("m.json")) != testing::read_fixture("golden/motion.json"));
  }
  SUBCASE("file base at another frame rate") {
    const auto r = gesgpt_cli("synth --script " + fx("golden/short_script.json") + " --dict " + fx("dictionary") +
                              " --base file:" + fx("base_15fps.json") + " --out " + quote(dir.file("m.json")));
    CHECK(r.exit_code == 0);
    CHECK(load_clip(dir.file("m.json")).fps() == 25.0);
  }
}

TEST_CASE("eval") {
  SUBCASE("identical clips") {
    const auto r = gesgpt_cli("eval --gt " + fx("golden/motion.json") + " --pred " + fx("golden/motion.json"));
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("total 0.000000\n") != std::string::npos);
    CHECK(r.output.find("position_l1 0.000000\n") != std::string::npos);
  }
  SUBCASE("incompatible clips") {
    CHECK(gesgpt_cli("eval --gt " + fx("golden/motion.json") + " --pred " + fx("golden/short_motion.json")).exit_code ==
          1);
  }
  SUBCASE("constant offset") {
    testing::TempDir dir;
    const MotionClip a = testing::line_clip({0.0, 0.5, 0.2, 0.9, 0.4}, 25.0);
    const MotionClip b = testing::line_clip({0.25, 0.75, 0.45, 1.15, 0.65}, 25.0);
    save_clip(a, dir.file("a.json"));
    save_clip(b, dir.file("b.json"));
    const auto r = gesgpt_cli("eval --gt " + quote(dir.file("a.json")) + " --pred " + quote(dir.file("b.json")));
    REQUIRE(r.exit_code == 0);
    // offset 0.25 on one of three coordinates
    CHECK(r.output == "position_l1 0.083333\nvelocity_l1 0.000000\nacceleration_l1 0.000000\ntotal 0.083333\n");
  }
}

TEST_CASE("segmentation to dictionary") {
  testing::TempDir dir;
  SUBCASE("static clip has no units") {
    save_clip(testing::line_clip(std::vector<double>(50, 0.2), 25.0), dir.file("still.json"));
    const auto r = gesgpt_cli("segment --clip " + quote(dir.file("still.json")));
    REQUIRE(r.exit_code == 0);
    CHECK(r.output == "0 units\n");
  }
  SUBCASE("performance to a checked dictionary") {
    const std::string units = dir.file("units");
    const auto seg = gesgpt_cli("segment --clip " + fx("performance.json") + " --params " + fx("performance_params.json") +
                                " --out " + quote(units));
    REQUIRE(seg.exit_code == 0);
    CHECK(seg.output.rfind("2 units\n", 0) == 0);
    const json fragment = json::parse(read_file(dir.file("units/manifest_fragment.json")));
    REQUIRE(fragment["units"].size() == 2);

    json labels = json::object();
    labels[fragment["units"][0]["id"].get<std::string>()] = {{"intent", "emphasis"}};
    labels[fragment["units"][1]["id"].get<std::string>()] = {{"intent", "welcome"}};
    write_file(dir.file("labels.json"), labels.dump());
    const auto build = gesgpt_cli("dict-build --units " + quote(units) + " --labels " + quote(dir.file("labels.json")) +
                                  " --rest " + fx("dictionary/rest.json"));
    REQUIRE(build.exit_code == 0);
    CHECK(build.output.find("with 2 units") != std::string::npos);

    const auto check = gesgpt_cli("dict-check --dict " + quote(units));
    CHECK(check.exit_code == 0);
    CHECK(check.output == "ok: 2 units\n");

    // a freshly built dictionary drives synthesis
    const auto synth = gesgpt_cli("synth --script " + fx("golden/short_script.json") + " --dict " + quote(units) +
                                  " --out " + quote(dir.file("m.json")));
    CHECK(synth.exit_code == 0);
  }
  SUBCASE("labels with an unknown intent") {
    const std::string units = dir.file("units");
    REQUIRE(gesgpt_cli("segment --clip " + fx("performance.json") + " --params " + fx("performance_params.json") +
                       " --out " + quote(units))
                .exit_code == 0);
    const json fragment = json::parse(read_file(dir.file("units/manifest_fragment.json")));
    write_file(dir.file("labels.json"), json{{fragment["units"][0]["id"].get<std::string>(), {{"intent", "waving"}}}}.dump());
    CHECK(gesgpt_cli("dict-build --units " + quote(units) + " --labels " + quote(dir.file("labels.json")) + " --rest " +
                     fx("dictionary/rest.json"))
              .exit_code == 1);
  }
}
