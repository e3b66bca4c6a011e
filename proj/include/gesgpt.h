#ifndef GESGPT_H
#define GESGPT_H

#include <stddef.h>

#if defined(_WIN32)
#define GESGPT_API __declspec(dllexport)
#else
#define GESGPT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gesgpt_status {
  GESGPT_OK = 0,
  GESGPT_ERR_INVALID_ARGUMENT = 1,
  GESGPT_ERR_INCOMPATIBLE_CLIPS = 2,
  GESGPT_ERR_VALIDATION = 3,
  GESGPT_ERR_FORMAT = 4,
  GESGPT_ERR_ALIGNMENT = 5,
  GESGPT_ERR_EMPTY_INPUT = 6,
  GESGPT_ERR_MALFORMED_REPLY = 7,
  GESGPT_ERR_CONTRACT = 8,
  GESGPT_ERR_TRANSPORT = 9,
  GESGPT_ERR_NO_GESTURE = 10,
  GESGPT_ERR_COVERAGE = 11,
  GESGPT_ERR_NOT_FOUND = 12,
  GESGPT_ERR_IO = 13,
  GESGPT_ERR_INTERNAL = 14
} gesgpt_status;

typedef struct gesgpt_dictionary gesgpt_dictionary;
typedef struct gesgpt_parser gesgpt_parser;
typedef struct gesgpt_synthesis gesgpt_synthesis;
typedef struct gesgpt_server gesgpt_server;

typedef struct gesgpt_loss_report {
  double position_l1;
  double velocity_l1;
  double acceleration_l1;
  double total;
} gesgpt_loss_report;

/* Strings returned through char** outputs are owned by the caller. */
GESGPT_API void gesgpt_string_free(char* s);

GESGPT_API const char* gesgpt_version(void);
GESGPT_API const char* gesgpt_status_name(gesgpt_status status);

/* Message of the most recent failure on the calling thread ("" if none). */
GESGPT_API const char* gesgpt_last_error(void);
/* Same failure as {"error":{"code":..,"message":..,"problems":[..]}}. */
GESGPT_API const char* gesgpt_last_error_json(void);

/* Dictionary. eps_rest <= 0 selects the default tolerance. */
GESGPT_API gesgpt_status gesgpt_dictionary_load(const char* manifest_path, double eps_rest, gesgpt_dictionary** out);
GESGPT_API void gesgpt_dictionary_free(gesgpt_dictionary* dict);
GESGPT_API gesgpt_status gesgpt_dictionary_manifest(const gesgpt_dictionary* dict, char** out_json);
GESGPT_API gesgpt_status gesgpt_dictionary_unit_count(const gesgpt_dictionary* dict, size_t* out);
GESGPT_API gesgpt_status gesgpt_dictionary_unit_clip(const gesgpt_dictionary* dict, const char* unit_id, char** out_json);

/* Parser. options_json may be NULL (offline, starter lexicon):
   {"mode":"offline"|"llm"|"strict","cache_dir":..,"lexicon_path":..,"allow_network":bool,
    "llm":{"endpoint_url":..,"model_name":..,"api_key_env_var":..,"timeout_s":..,"max_retries":..,
           "temperature":..,"batch_size":..,"max_parallel":..}} */
GESGPT_API gesgpt_status gesgpt_parser_create(const char* options_json, gesgpt_parser** out);
GESGPT_API void gesgpt_parser_free(gesgpt_parser* parser);
/* timings_json: {"words":[{"word","start_s","end_s"},..]}. out_table may be NULL. */
GESGPT_API gesgpt_status gesgpt_parse(const gesgpt_parser* parser, const char* text, const char* timings_json,
                                      char** out_script_json, char** out_table);
GESGPT_API gesgpt_status gesgpt_textgrid_to_timings(const char* textgrid, char** out_timings_json);

/* Synthesis. options_json may be NULL:
   {"fps":..,"ramp_s":..,"mode":"onset"|"stroke","seed":..,"min_gesture_s":..,"anchor":"midpoint"|"onset",
    "base":"rest"|"sway"|"file:PATH"|{..}} */
GESGPT_API gesgpt_status gesgpt_synthesize(const gesgpt_dictionary* dict, const char* script_json,
                                           const char* options_json, gesgpt_synthesis** out);
GESGPT_API void gesgpt_synthesis_free(gesgpt_synthesis* result);
GESGPT_API gesgpt_status gesgpt_synthesis_motion(const gesgpt_synthesis* result, char** out_json);
GESGPT_API gesgpt_status gesgpt_synthesis_motion_csv(const gesgpt_synthesis* result, char** out_csv);
GESGPT_API gesgpt_status gesgpt_synthesis_schedule(const gesgpt_synthesis* result, char** out_json);
GESGPT_API gesgpt_status gesgpt_synthesis_report(const gesgpt_synthesis* result, char** out_json);
GESGPT_API gesgpt_status gesgpt_synthesis_report_text(const gesgpt_synthesis* result, char** out_text);
/* {"motion":..,"schedule":..,"report":..} */
GESGPT_API gesgpt_status gesgpt_synthesis_json(const gesgpt_synthesis* result, char** out_json);

/* Unit segmentation of a motion clip file. params_json may be NULL. When
   out_dir is non-NULL the units and manifest_fragment.json are written there. */
GESGPT_API gesgpt_status gesgpt_segment(const char* clip_path, const char* params_json, const char* out_dir,
                                        size_t* out_unit_count, char** out_fragment_json);
/* Merges a fragment with a labels file into a manifest. out_skipped_json
   (array of unlabelled ids) may be NULL. */
GESGPT_API gesgpt_status gesgpt_dictionary_build(const char* fragment_path, const char* labels_path,
                                                 const char* rest_pose_file, char** out_manifest_json,
                                                 char** out_skipped_json);

GESGPT_API gesgpt_status gesgpt_eval(const char* ground_truth_path, const char* predicted_path,
                                     gesgpt_loss_report* out);

/* Local HTTP service. options_json may be NULL:
   {"host":"127.0.0.1","port":8765,"cors_origin":..,"base":..}. The server keeps
   its own references; dict and parser may be freed after creation. */
GESGPT_API gesgpt_status gesgpt_server_create(const gesgpt_dictionary* dict, const gesgpt_parser* parser,
                                              const char* options_json, gesgpt_server** out);
GESGPT_API gesgpt_status gesgpt_server_bind(gesgpt_server* server, int* out_port);
/* Blocks until gesgpt_server_stop is called from another thread. */
GESGPT_API gesgpt_status gesgpt_server_run(gesgpt_server* server);
GESGPT_API void gesgpt_server_wait_ready(gesgpt_server* server);
GESGPT_API void gesgpt_server_stop(gesgpt_server* server);
GESGPT_API void gesgpt_server_free(gesgpt_server* server);

#ifdef __cplusplus
}
#endif

#endif
