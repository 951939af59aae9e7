/* Copyright 2026 The avseci Authors
 * License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
 *
 * C interface to the avseci library: ACE and ECS coding, audio-visual
 * enhancement, joint training, evaluation and the experiment harness.
 *
 * Every function returns an avseci_status. On failure the message is
 * available from avseci_last_error() on the same thread until the next
 * call into the library. Strings are UTF-8 paths or JSON text; NULL marks
 * an optional argument as absent. Handles are opaque and must be released
 * with their _free function.
 */
#ifndef AVSECI_AVSECI_H_
#define AVSECI_AVSECI_H_

#include <stddef.h>

#if defined(_WIN32)
#define AVSECI_API __declspec(dllexport)
#elif defined(AVSECI_BUILDING_LIBRARY)
#define AVSECI_API __attribute__((visibility("default")))
#else
#define AVSECI_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum avseci_status {
  AVSECI_OK = 0,
  AVSECI_ERR_USAGE = 1,
  AVSECI_ERR_DATA = 2,
  AVSECI_ERR_NUMERIC = 3,
  AVSECI_ERR_INTERNAL = 4
} avseci_status;

typedef struct avseci_electrodogram avseci_electrodogram;
typedef struct avseci_ecs avseci_ecs;
typedef struct avseci_enhancer avseci_enhancer;

/* Progress lines from long-running calls; may be NULL. */
typedef void (*avseci_log_fn)(const char* line, void* user);

AVSECI_API const char* avseci_version(void);
/* SHA-256 over the library sources at build time. */
AVSECI_API const char* avseci_source_hash(void);
AVSECI_API const char* avseci_last_error(void);

/* out must hold 65 bytes. */
AVSECI_API avseci_status avseci_sha256_file(const char* path, char* out);

/* Corpus. config_json holds partial corpus settings; writes
 * <out_dir>/manifest.json and the referenced files. */
AVSECI_API avseci_status avseci_corpus_build(const char* config_json, const char* out_dir);

/* Electrodograms. */
AVSECI_API avseci_status avseci_electrodogram_read(const char* path, avseci_electrodogram** out);
AVSECI_API avseci_status avseci_electrodogram_write(const avseci_electrodogram* e, const char* path);
AVSECI_API void avseci_electrodogram_free(avseci_electrodogram* e);
AVSECI_API avseci_status avseci_electrodogram_shape(const avseci_electrodogram* e, int* channels, int* frames);
/* Copies channels*frames values, channel-major (frame index fastest). */
AVSECI_API avseci_status avseci_electrodogram_copy(const avseci_electrodogram* e, double* values, size_t count);

/* ACE on a 16 kHz WAV file. reference_peak <= 0 normalizes by the
 * utterance's own envelope peak. */
AVSECI_API avseci_status avseci_ace_encode(const char* wav_path, double reference_peak, int maxima,
                                           avseci_electrodogram** out);

/* ECS. */
AVSECI_API avseci_status avseci_ecs_train(const char* manifest_path, const char* config_json,
                                          const char* checkpoint_dir, avseci_log_fn log, void* user);
AVSECI_API avseci_status avseci_ecs_load(const char* checkpoint_dir, avseci_ecs** out);
AVSECI_API void avseci_ecs_free(avseci_ecs* ecs);
AVSECI_API avseci_status avseci_ecs_corpus_peak(const avseci_ecs* ecs, double* peak);
AVSECI_API avseci_status avseci_ecs_encode(avseci_ecs* ecs, const char* wav_path, avseci_electrodogram** out);

/* Enhancer training through the frozen ECS. fusion is "cross" or "self";
 * config_json carries optional training settings. Writes the checkpoint
 * and <checkpoint_dir>/loss.csv. */
AVSECI_API avseci_status avseci_avse_train(const char* manifest_path, const char* ecs_checkpoint,
                                           const char* fusion, double alpha, double beta,
                                           const char* config_json, const char* checkpoint_dir,
                                           avseci_log_fn log, void* user);
AVSECI_API avseci_status avseci_enhancer_load(const char* checkpoint_dir, avseci_enhancer** out);
AVSECI_API void avseci_enhancer_free(avseci_enhancer* enh);
/* visual_path is required for cross fusion and ignored otherwise. */
AVSECI_API avseci_status avseci_enhance(avseci_enhancer* enh, const char* wav_path, const char* visual_path,
                                        const char* out_wav);

/* Tone vocoder at the ACE channel centres. */
AVSECI_API avseci_status avseci_vocode(const avseci_electrodogram* e, const char* out_wav);

/* Evaluates a system ("ace", "ecs", "ase-ecs", "avse-ecs") on a manifest
 * split. conditions is a comma-separated subset of "clean,noisy".
 * Writes per-utterance CSV to out_csv and, if mean_json is not NULL,
 * the condition means as JSON to that path. */
AVSECI_API avseci_status avseci_eval(const char* manifest_path, const char* system, const char* ecs_checkpoint,
                                     const char* enhancer_checkpoint, const char* split, const char* conditions,
                                     const char* out_csv, const char* mean_json);

/* Runs "table1", "table2" or "table3" under root. ecs_checkpoint may be
 * NULL to pretrain one. On success report_path (if not NULL) receives the
 * markdown path, truncated to report_cap bytes. */
AVSECI_API avseci_status avseci_experiment(const char* name, const char* manifest_path, const char* ecs_checkpoint,
                                           const char* config_json, const char* root, avseci_log_fn log,
                                           void* user, char* report_path, size_t report_cap);

/* Writes <out>.pgm and <out>.csv. */
AVSECI_API avseci_status avseci_plot_electrodogram(const char* elec_path, const char* out);

#ifdef __cplusplus
}
#endif

#endif /* AVSECI_AVSECI_H_ */
