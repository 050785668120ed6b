// Copyright 2026 The Diverlink Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// C interface to the diverlink core.
//
// Every fallible call returns a dl_status. On failure the message is available
// from dl_last_error() on the calling thread until the next API call there.
// Strings returned through char** out-parameters are owned by the caller and
// released with dl_string_free(). Handles are not thread-safe unless noted.

#ifndef DIVERLINK_DIVERLINK_H
#define DIVERLINK_DIVERLINK_H

#include <stdint.h>

#if defined(_WIN32)
#define DL_API __declspec(dllexport)
#else
#define DL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dl_status {
  DL_OK = 0,
  DL_ERR_ARGUMENT = 1,
  DL_ERR_PARSE = 2,
  DL_ERR_VALIDATION = 3,
  DL_ERR_UNSUPPORTED = 4,
  DL_ERR_IO = 5,
  DL_ERR_TRAINING = 6,
  DL_ERR_NUMERIC = 7,
  DL_ERR_CONTRACT = 8,
  DL_ERR_RUNTIME = 9,
  DL_ERR_INTERNAL = 10
} dl_status;

typedef enum dl_scheme {
  DL_SCHEME_DEFAULT = -1,  // scenario's scheme, else the config's
  DL_SCHEME_HEAD = 0,
  DL_SCHEME_THROAT = 1,
  DL_SCHEME_MULTIMODAL = 2
} dl_scheme;

typedef enum dl_mode { DL_MODE_SERVO = 0, DL_MODE_THRUSTER = 1 } dl_mode;

DL_API const char* dl_version(void);
DL_API const char* dl_status_name(dl_status status);
DL_API const char* dl_last_error(void);
DL_API void dl_string_free(char* s);

// Configuration ------------------------------------------------------------

typedef struct dl_config dl_config;

DL_API dl_status dl_config_new(dl_config** out);
// Parses a key-value file (see docs/configuration.md).
DL_API dl_status dl_config_load(const char* path, dl_config** out);
DL_API dl_status dl_config_set(dl_config* cfg, const char* key, const char* value);
// *out is 1 when the key was given in the file or via dl_config_set.
DL_API dl_status dl_config_has(const dl_config* cfg, const char* key, int* out);
// Newline-separated list of recognised keys.
DL_API dl_status dl_config_keys(char** out);
DL_API void dl_config_free(dl_config* cfg);

// Batch workflows --------------------------------------------------------------

typedef enum dl_synth_kind {
  DL_SYNTH_HEAD_CORPUS = 0,
  DL_SYNTH_TONE_CORPUS = 1,
  DL_SYNTH_SCENARIO = 2
} dl_synth_kind;

typedef struct dl_synth_request {
  dl_synth_kind kind;
  const char* out_dir;
  uint64_t seed;
  int per_class;            // 0: generator default
  double snr_db;            // tone corpus; NaN: default
  double max_noise_deg;     // head corpus; NaN: default
  dl_scheme scheme;         // scenario
  const char* inject_from;  // scenario misrecognition rule, e.g. "(re,long,null)"; may be NULL
  const char* inject_to;
  int inject_count;         // < 0: unlimited
} dl_synth_request;

DL_API void dl_synth_request_init(dl_synth_request* req);
// *out_path receives the manifest or scenario file written.
DL_API dl_status dl_synth(const dl_synth_request* req, char** out_path);

// Head scheme: half/half split, templates written to artifact_out.
// Throat scheme: 70/30 split, LSTM model written to artifact_out.
// *report_json holds counts, the confusion matrix and a printable table.
DL_API dl_status dl_train(const dl_config* cfg, const char* manifest, dl_scheme scheme,
                          const char* artifact_out, char** report_json);
DL_API dl_status dl_eval(const dl_config* cfg, const char* manifest, dl_scheme scheme,
                         const char* artifact, char** report_json);

// Replays a scenario through the full pipeline. out_dir (may be NULL) receives
// trace.csv, tokens.csv and summary.json; *summary_json gets the summary.
DL_API dl_status dl_replay(const dl_config* cfg, const char* scenario, dl_scheme scheme,
                           const char* out_dir, char** summary_json);

// Live session -----------------------------------------------------------------
// Session calls are thread-safe.

typedef struct dl_session dl_session;

DL_API dl_status dl_session_open(const dl_config* cfg, dl_scheme scheme, dl_session** out);
DL_API dl_status dl_session_port(const dl_session* s, uint16_t* out);
// Handles one control message exactly like a WebSocket client would; *reply
// receives the ack or error frame.
DL_API dl_status dl_session_control(dl_session* s, const char* message, char** reply);
DL_API dl_status dl_session_load_scenario(dl_session* s, const char* path);
DL_API dl_status dl_session_start(dl_session* s);
DL_API dl_status dl_session_stop(dl_session* s);
DL_API dl_status dl_session_running(const dl_session* s, int* out);
DL_API dl_status dl_session_wait(dl_session* s);
DL_API void dl_session_free(dl_session* s);

// Mapper and plant ------------------------------------------------------------------

enum {
  DL_CMD_SERVO_LEFT = 1u << 0,
  DL_CMD_SERVO_RIGHT = 1u << 1,
  DL_CMD_SPEED_LEFT = 1u << 2,
  DL_CMD_SPEED_RIGHT = 1u << 3
};

// Fields not flagged in mask hold. PWM codes accompany the speeds; on input
// they are recomputed from the speeds.
typedef struct dl_command {
  uint32_t mask;
  double servo_left;
  double servo_right;
  double speed_left;
  double speed_right;
  int pwm_left;
  int pwm_right;
} dl_command;

typedef struct dl_state {
  double t;
  double servo_left;
  double servo_right;
  double rpm_left;
  double rpm_right;
  double thrust_left;
  double thrust_right;
} dl_state;

typedef struct dl_mapper dl_mapper;

// cfg may be NULL for default gains and initial mode.
DL_API dl_status dl_mapper_new(dl_scheme scheme, const dl_config* cfg, dl_mapper** out);
// token: "(scale,duration,head)". magnitude is the head peak angle (head
// scheme) or the 64 ms amplitude (throat scheme) and is unused otherwise.
DL_API dl_status dl_mapper_apply(dl_mapper* m, const char* token, double magnitude, dl_command* out);
DL_API dl_status dl_mapper_mode(const dl_mapper* m, dl_mode* out);
DL_API dl_status dl_mapper_set_gain(dl_mapper* m, const char* name, double value);
DL_API void dl_mapper_free(dl_mapper* m);

typedef struct dl_plant dl_plant;

DL_API dl_status dl_plant_new(const dl_config* cfg, dl_plant** out);
DL_API dl_status dl_plant_apply(dl_plant* p, const dl_command* cmd);
// Steps the plant up to time t (seconds).
DL_API dl_status dl_plant_advance(dl_plant* p, double t);
DL_API dl_status dl_plant_state(const dl_plant* p, dl_state* out);
DL_API void dl_plant_free(dl_plant* p);

#ifdef __cplusplus
}
#endif

#endif  // DIVERLINK_DIVERLINK_H
