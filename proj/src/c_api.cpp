#include "gesgpt.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "gesgpt/dictionary.hpp"
#include "gesgpt/error.hpp"
#include "gesgpt/pipeline.hpp"
#include "gesgpt/segmentation.hpp"
#include "gesgpt/service.hpp"
#include "gesgpt/synthesis.hpp"
#include "gesgpt/util.hpp"

using namespace gesgpt;

struct gesgpt_dictionary {
  std::shared_ptr<const Dictionary> dict;
};

struct gesgpt_parser {
  std::shared_ptr<const Parser> parser;
};

struct gesgpt_synthesis {
  SynthesisResult result;
};

struct gesgpt_server {
  std::unique_ptr<Server> server;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_error_json;

gesgpt_status status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return GESGPT_ERR_INVALID_ARGUMENT;
    case ErrorCode::IncompatibleClips: return GESGPT_ERR_INCOMPATIBLE_CLIPS;
    case ErrorCode::Validation: return GESGPT_ERR_VALIDATION;
    case ErrorCode::Format: return GESGPT_ERR_FORMAT;
    case ErrorCode::AlignmentMismatch: return GESGPT_ERR_ALIGNMENT;
    case ErrorCode::EmptyInput: return GESGPT_ERR_EMPTY_INPUT;
    case ErrorCode::MalformedReply: return GESGPT_ERR_MALFORMED_REPLY;
    case ErrorCode::ContractViolation: return GESGPT_ERR_CONTRACT;
    case ErrorCode::Transport: return GESGPT_ERR_TRANSPORT;
    case ErrorCode::NoGestureAvailable: return GESGPT_ERR_NO_GESTURE;
    case ErrorCode::Coverage: return GESGPT_ERR_COVERAGE;
    case ErrorCode::NotFound: return GESGPT_ERR_NOT_FOUND;
    case ErrorCode::Io: return GESGPT_ERR_IO;
  }
  return GESGPT_ERR_INTERNAL;
}

gesgpt_status record(const Error& e) {
  g_last_error = e.what();
  g_last_error_json = error_payload(e).dump();
  return status_for(e.code());
}

// Runs f, translating exceptions into a status plus the thread's last error.
template <typename F>
gesgpt_status guard(F&& f) {
  g_last_error.clear();
  g_last_error_json.clear();
  try {
    f();
    return GESGPT_OK;
  } catch (const Error& e) {
    return record(e);
  } catch (const nlohmann::json::exception& e) {
    return record(Error(ErrorCode::Format, e.what()));
  } catch (const std::bad_alloc&) {
    return record(Error(ErrorCode::Io, "out of memory"));
  } catch (const std::exception& e) {
    record(Error(ErrorCode::Io, e.what()));
    return GESGPT_ERR_INTERNAL;
  }
}

void require(const void* p, const char* name) {
  if (p == nullptr) fail(ErrorCode::InvalidArgument, std::string(name) + " must not be NULL");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

nlohmann::json parse_json_arg(const char* text, const char* name) {
  if (text == nullptr) return nlohmann::json();
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::Format, std::string(name) + " is not valid JSON");
  return j;
}

ParserOptions parser_options(const nlohmann::json& j) {
  ParserOptions o;
  if (j.is_null()) return o;
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, "parser options must be an object");
  const std::string mode = j.value("mode", std::string("offline"));
  if (mode == "llm") {
    o.mode = ClassifierMode::Llm;
  } else if (mode == "strict") {
    o.mode = ClassifierMode::Strict;
  } else if (mode != "offline") {
    fail(ErrorCode::InvalidArgument, "mode must be offline, llm or strict");
  }
  if (j.contains("cache_dir")) o.cache_dir = j["cache_dir"].get<std::string>();
  if (j.contains("lexicon_path")) o.lexicon_path = j["lexicon_path"].get<std::string>();
  o.allow_network = j.value("allow_network", o.allow_network);
  if (j.contains("llm")) {
    const auto& l = j["llm"];
    o.llm.endpoint_url = l.value("endpoint_url", o.llm.endpoint_url);
    o.llm.model_name = l.value("model_name", o.llm.model_name);
    o.llm.api_key_env_var = l.value("api_key_env_var", o.llm.api_key_env_var);
    o.llm.timeout_s = l.value("timeout_s", o.llm.timeout_s);
    o.llm.max_retries = l.value("max_retries", o.llm.max_retries);
    o.llm.temperature = l.value("temperature", o.llm.temperature);
    o.llm.batch_size = l.value("batch_size", o.llm.batch_size);
    o.llm.max_parallel = l.value("max_parallel", o.llm.max_parallel);
  }
  return o;
}

}  // namespace

extern "C" {

void gesgpt_string_free(char* s) { std::free(s); }

const char* gesgpt_version(void) { return "1.0.0"; }

const char* gesgpt_status_name(gesgpt_status status) {
  switch (status) {
    case GESGPT_OK: return "ok";
    case GESGPT_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case GESGPT_ERR_INCOMPATIBLE_CLIPS: return "incompatible-clips";
    case GESGPT_ERR_VALIDATION: return "validation";
    case GESGPT_ERR_FORMAT: return "format";
    case GESGPT_ERR_ALIGNMENT: return "alignment-mismatch";
    case GESGPT_ERR_EMPTY_INPUT: return "empty-input";
    case GESGPT_ERR_MALFORMED_REPLY: return "malformed-reply";
    case GESGPT_ERR_CONTRACT: return "contract-violation";
    case GESGPT_ERR_TRANSPORT: return "transport";
    case GESGPT_ERR_NO_GESTURE: return "no-gesture-available";
    case GESGPT_ERR_COVERAGE: return "coverage";
    case GESGPT_ERR_NOT_FOUND: return "not-found";
    case GESGPT_ERR_IO: return "io";
    case GESGPT_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* gesgpt_last_error(void) { return g_last_error.c_str(); }
const char* gesgpt_last_error_json(void) { return g_last_error_json.c_str(); }

gesgpt_status gesgpt_dictionary_load(const char* manifest_path, double eps_rest, gesgpt_dictionary** out) {
  return guard([&] {
    require(manifest_path, "manifest_path");
    require(out, "out");
    DictionaryLoadOptions options;
    if (eps_rest > 0.0) options.eps_rest = eps_rest;
    *out = new gesgpt_dictionary{std::make_shared<const Dictionary>(load_dictionary(manifest_path, options))};
  });
}

void gesgpt_dictionary_free(gesgpt_dictionary* dict) { delete dict; }

gesgpt_status gesgpt_dictionary_manifest(const gesgpt_dictionary* dict, char** out_json) {
  return guard([&] {
    require(dict, "dict");
    require(out_json, "out_json");
    *out_json = dup(serialize_manifest(*dict->dict));
  });
}

gesgpt_status gesgpt_dictionary_unit_count(const gesgpt_dictionary* dict, size_t* out) {
  return guard([&] {
    require(dict, "dict");
    require(out, "out");
    *out = dict->dict->units().size();
  });
}

gesgpt_status gesgpt_dictionary_unit_clip(const gesgpt_dictionary* dict, const char* unit_id, char** out_json) {
  return guard([&] {
    require(dict, "dict");
    require(unit_id, "unit_id");
    require(out_json, "out_json");
    const GestureUnit* u = dict->dict->find(unit_id);
    if (u == nullptr) fail(ErrorCode::NotFound, std::string("no unit '") + unit_id + "'");
    *out_json = dup(dump_clip(u->clip));
  });
}

gesgpt_status gesgpt_parser_create(const char* options_json, gesgpt_parser** out) {
  return guard([&] {
    require(out, "out");
    ParserOptions options;
    try {
      options = parser_options(parse_json_arg(options_json, "options_json"));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::InvalidArgument, std::string("malformed parser options: ") + e.what());
    }
    *out = new gesgpt_parser{std::make_shared<const Parser>(std::move(options))};
  });
}

void gesgpt_parser_free(gesgpt_parser* parser) { delete parser; }

gesgpt_status gesgpt_parse(const gesgpt_parser* parser, const char* text, const char* timings_json,
                           char** out_script_json, char** out_table) {
  return guard([&] {
    require(parser, "parser");
    require(text, "text");
    require(timings_json, "timings_json");
    require(out_script_json, "out_script_json");
    const auto timings = parse_timings_json(parse_json_arg(timings_json, "timings_json"));
    const ParseResult result = parser->parser->parse(text, timings);
    char* script = dup(serialize_script(result.script));
    if (out_table != nullptr) {
      try {
        *out_table = dup(render_provenance_table(result));
      } catch (...) {
        std::free(script);
        throw;
      }
    }
    *out_script_json = script;
  });
}

gesgpt_status gesgpt_textgrid_to_timings(const char* textgrid, char** out_timings_json) {
  return guard([&] {
    require(textgrid, "textgrid");
    require(out_timings_json, "out_timings_json");
    *out_timings_json = dup(timings_to_json(parse_textgrid(textgrid)).dump());
  });
}

gesgpt_status gesgpt_synthesize(const gesgpt_dictionary* dict, const char* script_json, const char* options_json,
                                gesgpt_synthesis** out) {
  return guard([&] {
    require(dict, "dict");
    require(script_json, "script_json");
    require(out, "out");
    const GestureScript script = parse_script(script_json);
    const nlohmann::json options = parse_json_arg(options_json, "options_json");
    const SynthesisConfig config = SynthesisConfig::from_json(options);
    BaseGestureSpec base;
    if (options.is_object() && options.contains("base")) base = BaseGestureSpec::from_json(options["base"]);
    *out = new gesgpt_synthesis{synthesize(script, *dict->dict, base, config)};
  });
}

void gesgpt_synthesis_free(gesgpt_synthesis* result) { delete result; }

gesgpt_status gesgpt_synthesis_motion(const gesgpt_synthesis* result, char** out_json) {
  return guard([&] {
    require(result, "result");
    require(out_json, "out_json");
    *out_json = dup(dump_clip(result->result.motion));
  });
}

gesgpt_status gesgpt_synthesis_motion_csv(const gesgpt_synthesis* result, char** out_csv) {
  return guard([&] {
    require(result, "result");
    require(out_csv, "out_csv");
    *out_csv = dup(clip_to_csv(result->result.motion));
  });
}

gesgpt_status gesgpt_synthesis_schedule(const gesgpt_synthesis* result, char** out_json) {
  return guard([&] {
    require(result, "result");
    require(out_json, "out_json");
    *out_json = dup(schedule_to_json(result->result.schedule, result->result.report.mode).dump());
  });
}

gesgpt_status gesgpt_synthesis_report(const gesgpt_synthesis* result, char** out_json) {
  return guard([&] {
    require(result, "result");
    require(out_json, "out_json");
    *out_json = dup(report_to_json(result->result.report).dump());
  });
}

gesgpt_status gesgpt_synthesis_report_text(const gesgpt_synthesis* result, char** out_text) {
  return guard([&] {
    require(result, "result");
    require(out_text, "out_text");
    *out_text = dup(render_report(result->result.report));
  });
}

gesgpt_status gesgpt_synthesis_json(const gesgpt_synthesis* result, char** out_json) {
  return guard([&] {
    require(result, "result");
    require(out_json, "out_json");
    *out_json = dup(result_to_json(result->result).dump());
  });
}

gesgpt_status gesgpt_segment(const char* clip_path, const char* params_json, const char* out_dir,
                             size_t* out_unit_count, char** out_fragment_json) {
  return guard([&] {
    require(clip_path, "clip_path");
    const nlohmann::json pj = parse_json_arg(params_json, "params_json");
    const SegmentationParams params = pj.is_null() ? SegmentationParams{} : SegmentationParams::from_json(pj);
    const MotionClip clip = load_clip(clip_path);
    const std::vector<Detection> units = detect_units(clip, params);
    nlohmann::json fragment;
    if (out_dir != nullptr) {
      fragment = export_units(clip, units, out_dir);
    } else {
      nlohmann::json list = nlohmann::json::array();
      for (const Detection& d : units) {
        list.push_back({{"source_span", {d.span.first, d.span.last}}, {"stages", stages_to_json(d.stages)}});
      }
      fragment = {{"version", 1}, {"units", std::move(list)}};
    }
    if (out_unit_count != nullptr) *out_unit_count = units.size();
    if (out_fragment_json != nullptr) *out_fragment_json = dup(fragment.dump());
  });
}

gesgpt_status gesgpt_dictionary_build(const char* fragment_path, const char* labels_path, const char* rest_pose_file,
                                      char** out_manifest_json, char** out_skipped_json) {
  return guard([&] {
    require(fragment_path, "fragment_path");
    require(labels_path, "labels_path");
    require(rest_pose_file, "rest_pose_file");
    require(out_manifest_json, "out_manifest_json");
    const nlohmann::json fragment = nlohmann::json::parse(read_file(fragment_path), nullptr, false);
    const nlohmann::json labels = nlohmann::json::parse(read_file(labels_path), nullptr, false);
    if (fragment.is_discarded()) fail(ErrorCode::Format, std::string(fragment_path) + " is not valid JSON");
    if (labels.is_discarded()) fail(ErrorCode::Format, std::string(labels_path) + " is not valid JSON");
    std::vector<std::string> skipped;
    const nlohmann::json manifest = build_manifest(fragment, labels, rest_pose_file, &skipped);
    char* m = dup(manifest.dump());
    if (out_skipped_json != nullptr) {
      try {
        *out_skipped_json = dup(nlohmann::json(skipped).dump());
      } catch (...) {
        std::free(m);
        throw;
      }
    }
    *out_manifest_json = m;
  });
}

gesgpt_status gesgpt_eval(const char* ground_truth_path, const char* predicted_path, gesgpt_loss_report* out) {
  return guard([&] {
    require(ground_truth_path, "ground_truth_path");
    require(predicted_path, "predicted_path");
    require(out, "out");
    const LossReport r = trajectory_l1_loss(load_clip(ground_truth_path), load_clip(predicted_path));
    *out = {r.position_l1, r.velocity_l1, r.acceleration_l1, r.total};
  });
}

gesgpt_status gesgpt_server_create(const gesgpt_dictionary* dict, const gesgpt_parser* parser,
                                   const char* options_json, gesgpt_server** out) {
  return guard([&] {
    require(dict, "dict");
    require(parser, "parser");
    require(out, "out");
    const nlohmann::json j = parse_json_arg(options_json, "options_json");
    ServerOptions options;
    BaseGestureSpec base;
    if (j.is_object()) {
      options.host = j.value("host", options.host);
      options.port = j.value("port", options.port);
      if (j.contains("cors_origin") && j["cors_origin"].is_string()) options.cors_origin = j["cors_origin"].get<std::string>();
      if (j.contains("base")) base = BaseGestureSpec::from_json(j["base"]);
    }
    auto api = std::make_shared<const Api>(dict->dict, parser->parser, base);
    *out = new gesgpt_server{std::make_unique<Server>(std::move(api), std::move(options))};
  });
}

gesgpt_status gesgpt_server_bind(gesgpt_server* server, int* out_port) {
  return guard([&] {
    require(server, "server");
    const int port = server->server->bind();
    if (out_port != nullptr) *out_port = port;
  });
}

gesgpt_status gesgpt_server_run(gesgpt_server* server) {
  return guard([&] {
    require(server, "server");
    server->server->run();
  });
}

void gesgpt_server_wait_ready(gesgpt_server* server) {
  if (server != nullptr) server->server->wait_until_ready();
}

void gesgpt_server_stop(gesgpt_server* server) {
  if (server != nullptr) server->server->stop();
}

void gesgpt_server_free(gesgpt_server* server) { delete server; }

}  // extern "C"
