// Command-line front end over the C API.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <pthread.h>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "gesgpt.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

struct CliFailure {
  int exit_code;
  std::string message;
};

// Owns a string handed out by the library.
struct LibString {
  char* p = nullptr;
  ~LibString() { gesgpt_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

void check(gesgpt_status status) {
  if (status == GESGPT_OK) return;
  const int code = status == GESGPT_ERR_IO || status == GESGPT_ERR_TRANSPORT ? kExitIo : kExitValidation;
  throw CliFailure{code, std::string(gesgpt_status_name(status)) + ": " + gesgpt_last_error()};
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliFailure{kExitIo, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& content) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out || !out.write(content.data(), static_cast<std::streamsize>(content.size()))) {
    throw CliFailure{kExitIo, "cannot write " + path};
  }
}

std::string manifest_path(const std::string& dict) {
  return fs::is_directory(dict) ? (fs::path(dict) / "manifest.json").string() : dict;
}

// "out/motion.json" -> "out/motion.<suffix>"
std::string sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  return (p.parent_path() / (p.stem().string() + "." + suffix)).string();
}

struct Dict {
  gesgpt_dictionary* d = nullptr;
  explicit Dict(const std::string& dir, double eps = 0.0) { check(gesgpt_dictionary_load(manifest_path(dir).c_str(), eps, &d)); }
  ~Dict() { gesgpt_dictionary_free(d); }
};

struct Parser {
  gesgpt_parser* p = nullptr;
  explicit Parser(const nlohmann::json& options) { check(gesgpt_parser_create(options.dump().c_str(), &p)); }
  ~Parser() { gesgpt_parser_free(p); }
};

struct ClassifierFlags {
  bool offline = false;
  bool llm = false;
  bool strict = false;
  bool no_network = false;
  std::string cache;
  std::string lexicon;
  std::string endpoint;
  std::string model;
  std::string api_key_env;

  void add_to(CLI::App* cmd) {
    auto* off = cmd->add_flag("--offline", offline, "Lexicon classifier only (default)");
    auto* on = cmd->add_flag("--llm", llm, "LLM classifier with cache replay and lexicon fallback");
    auto* st = cmd->add_flag("--strict", strict, "LLM classifier; transport failure is an error");
    off->excludes(on)->excludes(st);
    on->excludes(st);
    cmd->add_flag("--no-network", no_network, "Never contact the LLM endpoint; replay the cache only");
    cmd->add_option("--cache", cache, "Replay cache directory");
    cmd->add_option("--lexicon", lexicon, "Lexicon JSON replacing the starter lexicon")->check(CLI::ExistingFile);
    cmd->add_option("--endpoint", endpoint, "Chat-completions endpoint URL");
    cmd->add_option("--model", model, "Model name");
    cmd->add_option("--api-key-env", api_key_env, "Environment variable holding the API key");
  }

  nlohmann::json options() const {
    nlohmann::json o = {{"mode", strict ? "strict" : llm ? "llm" : "offline"}, {"allow_network", !no_network}};
    if (!cache.empty()) o["cache_dir"] = cache;
    if (!lexicon.empty()) o["lexicon_path"] = lexicon;
    nlohmann::json l = nlohmann::json::object();
    if (!endpoint.empty()) l["endpoint_url"] = endpoint;
    if (!model.empty()) l["model_name"] = model;
    if (!api_key_env.empty()) l["api_key_env_var"] = api_key_env;
    o["llm"] = l;
    return o;
  }
};

std::string timings_json(const std::string& timings, const std::string& textgrid) {
  if (!timings.empty()) return read_text(timings);
  LibString out;
  check(gesgpt_textgrid_to_timings(read_text(textgrid).c_str(), &out.p));
  return out.str();
}

int cmd_parse(const std::string& text, const std::string& timings, const std::string& textgrid, const std::string& out,
              const ClassifierFlags& flags) {
  if (timings.empty() == textgrid.empty()) throw CliFailure{kExitValidation, "parse needs exactly one of --timings or --textgrid"};
  Parser parser(flags.options());
  LibString script;
  LibString table;
  check(gesgpt_parse(parser.p, read_text(text).c_str(), timings_json(timings, textgrid).c_str(), &script.p, &table.p));
  if (out.empty()) {
    std::cout << script.str() << "\n";
    std::cerr << table.str();
  } else {
    write_text(out, script.str());
    std::cout << table.str();
  }
  return kExitOk;
}

struct SynthFlags {
  std::string script;
  std::string dict;
  std::string base = "rest";
  std::string mode = "stroke";
  std::string anchor = "midpoint";
  double fps = 25.0;
  std::uint64_t seed = 0;
  double ramp = 0.2;
  double min_gesture = 1.5;
  std::string out;
  std::string schedule_out;
  std::string report_out;
  std::string csv;
};

int cmd_synth(const SynthFlags& f) {
  Dict dict(f.dict);
  const nlohmann::json options = {{"fps", f.fps},       {"seed", f.seed},          {"ramp_s", f.ramp},
                                  {"mode", f.mode},     {"anchor", f.anchor},      {"min_gesture_s", f.min_gesture},
                                  {"base", f.base}};
  gesgpt_synthesis* result = nullptr;
  check(gesgpt_synthesize(dict.d, read_text(f.script).c_str(), options.dump().c_str(), &result));
  std::unique_ptr<gesgpt_synthesis, void (*)(gesgpt_synthesis*)> guard(result, gesgpt_synthesis_free);

  LibString motion, schedule, report;
  check(gesgpt_synthesis_motion(result, &motion.p));
  check(gesgpt_synthesis_schedule(result, &schedule.p));
  check(gesgpt_synthesis_report_text(result, &report.p));
  write_text(f.out, motion.str());
  write_text(f.schedule_out.empty() ? sibling(f.out, "schedule.json") : f.schedule_out, schedule.str());
  write_text(f.report_out.empty() ? sibling(f.out, "report.txt") : f.report_out, report.str());
  if (!f.csv.empty()) {
    LibString csv;
    check(gesgpt_synthesis_motion_csv(result, &csv.p));
    write_text(f.csv, csv.str());
  }
  std::cout << report.str();
  return kExitOk;
}

int cmd_segment(const std::string& clip, const std::string& params, const std::string& out_dir) {
  const std::string params_json = params.empty() ? std::string() : read_text(params);
  size_t count = 0;
  LibString fragment;
  check(gesgpt_segment(clip.c_str(), params.empty() ? nullptr : params_json.c_str(),
                       out_dir.empty() ? nullptr : out_dir.c_str(), &count, &fragment.p));
  std::cout << count << (count == 1 ? " unit" : " units") << "\n";
  const nlohmann::json parsed = nlohmann::json::parse(fragment.str());
  for (const auto& u : parsed["units"]) {
    std::cout << "  frames " << u["source_span"][0] << "-" << u["source_span"][1];
    if (u.contains("id")) std::cout << "  " << u["id"].get<std::string>();
    std::cout << "\n";
  }
  return kExitOk;
}

int cmd_dict_build(const std::string& units, const std::string& labels, const std::string& rest, std::string out) {
  const fs::path dir(units);
  const fs::path rest_name = fs::path(rest).filename();
  std::error_code ec;
  if (!fs::equivalent(rest, dir / rest_name, ec)) {
    fs::copy_file(rest, dir / rest_name, fs::copy_options::overwrite_existing, ec);
    if (ec) throw CliFailure{kExitIo, "cannot copy " + rest + " into " + units + ": " + ec.message()};
  }
  LibString manifest, skipped;
  check(gesgpt_dictionary_build((dir / "manifest_fragment.json").string().c_str(), labels.c_str(),
                                rest_name.string().c_str(), &manifest.p, &skipped.p));
  if (out.empty()) out = (dir / "manifest.json").string();
  write_text(out, manifest.str());
  const auto skipped_ids = nlohmann::json::parse(skipped.str());
  Dict check_load(out);
  size_t count = 0;
  check(gesgpt_dictionary_unit_count(check_load.d, &count));
  std::cout << "wrote " << out << " with " << count << " units";
  if (!skipped_ids.empty()) std::cout << " (" << skipped_ids.size() << " unlabelled skipped)";
  std::cout << "\n";
  return kExitOk;
}

int cmd_dict_check(const std::string& dict, double eps) {
  Dict d(dict, eps);
  size_t count = 0;
  check(gesgpt_dictionary_unit_count(d.d, &count));
  std::cout << "ok: " << count << " units\n";
  return kExitOk;
}

int cmd_eval(const std::string& gt, const std::string& pred) {
  gesgpt_loss_report r{};
  check(gesgpt_eval(gt.c_str(), pred.c_str(), &r));
  std::printf("position_l1 %.6f\nvelocity_l1 %.6f\nacceleration_l1 %.6f\ntotal %.6f\n", r.position_l1, r.velocity_l1,
              r.acceleration_l1, r.total);
  return kExitOk;
}

int cmd_serve(const std::string& dict_dir, const std::string& host, int port, const std::string& cors,
              const std::string& base, const ClassifierFlags& flags) {
  // Block the stop signals before any thread exists so only the waiter
  // below receives them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Dict dict(dict_dir);
  Parser parser(flags.options());
  nlohmann::json options = {{"host", host}, {"port", port}, {"base", base}};
  if (!cors.empty()) options["cors_origin"] = cors;
  gesgpt_server* server = nullptr;
  check(gesgpt_server_create(dict.d, parser.p, options.dump().c_str(), &server));
  std::unique_ptr<gesgpt_server, void (*)(gesgpt_server*)> guard(server, gesgpt_server_free);
  int bound = 0;
  check(gesgpt_server_bind(server, &bound));
  std::cout << "listening on http://" << host << ":" << bound << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    gesgpt_server_stop(server);
  });
  const gesgpt_status status = gesgpt_server_run(server);
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  check(status);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Co-speech gesture scripting and synthesis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", gesgpt_version());

  std::string text, timings, textgrid, out;
  ClassifierFlags parse_flags;
  auto* parse = app.add_subcommand("parse", "Text + word timings -> gesture script");
  parse->add_option("--text", text, "Transcript text file")->required()->check(CLI::ExistingFile);
  auto* t1 = parse->add_option("--timings", timings, "Word timings JSON")->check(CLI::ExistingFile);
  auto* t2 = parse->add_option("--textgrid", textgrid, "Praat TextGrid with a words tier")->check(CLI::ExistingFile);
  t1->excludes(t2);
  parse->add_option("--out", out, "Script output file (stdout when omitted)");
  parse_flags.add_to(parse);

  SynthFlags sf;
  auto* synth = app.add_subcommand("synth", "Gesture script + dictionary -> motion");
  synth->add_option("--script", sf.script, "Gesture script JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--dict", sf.dict, "Dictionary directory or manifest")->required()->check(CLI::ExistingPath);
  synth->add_option("--base", sf.base, "rest | sway | file:PATH")->capture_default_str();
  synth->add_option("--mode", sf.mode, "onset | stroke")->check(CLI::IsMember({"onset", "stroke"}))->capture_default_str();
  synth->add_option("--anchor", sf.anchor, "Keyword anchor for the stroke apex")
      ->check(CLI::IsMember({"midpoint", "onset"}))
      ->capture_default_str();
  synth->add_option("--fps", sf.fps, "Output frame rate")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--seed", sf.seed, "Unit selection seed")->capture_default_str();
  synth->add_option("--ramp", sf.ramp, "Blend ramp in seconds")->check(CLI::NonNegativeNumber)->capture_default_str();
  synth->add_option("--min-gesture", sf.min_gesture, "Shortest allowed gesture in seconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--out", sf.out, "Motion output file")->required();
  synth->add_option("--schedule-out", sf.schedule_out, "Schedule file (default <out stem>.schedule.json)");
  synth->add_option("--report-out", sf.report_out, "Report file (default <out stem>.report.txt)");
  synth->add_option("--csv", sf.csv, "Also write frame,joint,x,y,z rows");

  std::string clip, params, seg_out;
  auto* segment = app.add_subcommand("segment", "Detect gesture units in a motion clip");
  segment->add_option("--clip", clip, "Motion clip JSON")->required()->check(CLI::ExistingFile);
  segment->add_option("--params", params, "Segmentation parameters JSON")->check(CLI::ExistingFile);
  segment->add_option("--out", seg_out, "Directory for unit clips and manifest_fragment.json");

  std::string units_dir, labels, rest, manifest_out;
  auto* build = app.add_subcommand("dict-build", "Merge exported units with labels into a manifest");
  build->add_option("--units", units_dir, "Directory written by segment --out")->required()->check(CLI::ExistingDirectory);
  build->add_option("--labels", labels, "Labels JSON keyed by unit id")->required()->check(CLI::ExistingFile);
  build->add_option("--rest", rest, "Rest pose clip JSON")->required()->check(CLI::ExistingFile);
  build->add_option("--out", manifest_out, "Manifest path (default <units>/manifest.json)");

  std::string check_dict;
  double eps_rest = 0.0;
  auto* dcheck = app.add_subcommand("dict-check", "Validate a dictionary");
  dcheck->add_option("--dict", check_dict, "Dictionary directory or manifest")->required()->check(CLI::ExistingPath);
  dcheck->add_option("--eps-rest", eps_rest, "Endpoint tolerance (mean joint distance)")->check(CLI::PositiveNumber);

  std::string gt, pred;
  auto* eval = app.add_subcommand("eval", "L1 trajectory loss between two clips");
  eval->add_option("--gt", gt, "Ground-truth clip")->required()->check(CLI::ExistingFile);
  eval->add_option("--pred", pred, "Predicted clip")->required()->check(CLI::ExistingFile);

  std::string serve_dict, host = "127.0.0.1", cors, serve_base = "rest";
  int port = 8765;
  ClassifierFlags serve_flags;
  auto* serve = app.add_subcommand("serve", "Local HTTP service for scripting and the viewer");
  serve->add_option("--dict", serve_dict, "Dictionary directory or manifest")->required()->check(CLI::ExistingPath);
  serve->add_option("--port", port, "TCP port (0 picks one)")->check(CLI::Range(0, 65535))->capture_default_str();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--cors-origin", cors, "Allowed browser origin");
  serve->add_option("--base", serve_base, "Default base for synthesis requests")->capture_default_str();
  serve_flags.add_to(serve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*parse) return cmd_parse(text, timings, textgrid, out, parse_flags);
    if (*synth) return cmd_synth(sf);
    if (*segment) return cmd_segment(clip, params, seg_out);
    if (*build) return cmd_dict_build(units_dir, labels, rest, manifest_out);
    if (*dcheck) return cmd_dict_check(check_dict, eps_rest);
    if (*eval) return cmd_eval(gt, pred);
    if (*serve) return cmd_serve(serve_dict, host, port, cors, serve_base, serve_flags);
  } catch (const CliFailure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitValidation;
}
