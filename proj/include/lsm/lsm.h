/* liblsm - language style matching analytics for conversation transcripts.
 *
 * C interface over the C++ core. All objects are opaque handles created and
 * released by the library; every fallible call returns an lsm_status and the
 * failing call's message is available from lsm_last_error() on the same
 * thread. Strings returned through char** are owned by the caller and must
 * be released with lsm_string_free().
 */

#ifndef LSM_H
#define LSM_H

#include <stddef.h>

#if defined(_WIN32)
#define LSM_API __declspec(dllexport)
#else
#define LSM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lsm_status {
    LSM_OK = 0,
    LSM_ERR_PARSE = 1,             /* malformed input file */
    LSM_ERR_VALIDATION = 2,        /* input violates a documented invariant */
    LSM_ERR_NOT_FOUND = 3,         /* unknown speaker, marker, or debate */
    LSM_ERR_INSUFFICIENT_DATA = 4, /* empty window or sample */
    LSM_ERR_DEGENERATE = 5,        /* statistic undefined for this input */
    LSM_ERR_CONFIG = 6,            /* bad configuration or missing file */
    LSM_ERR_IO = 7,                /* filesystem failure */
    LSM_ERR_SUITES_FAILED = 8,     /* a validation suite did not pass */
    LSM_ERR_INTERNAL = 9
} lsm_status;

typedef enum lsm_lexicon_format {
    LSM_LEXICON_LEX = 0, /* "%category <name>" sections, one pattern per line */
    LSM_LEXICON_LIWC = 1 /* two-part LIWC 2007 .dic layout */
} lsm_lexicon_format;

typedef enum lsm_transcript_format {
    LSM_TRANSCRIPT_JSON = 0, /* canonical structured document */
    LSM_TRANSCRIPT_TEXT = 1  /* "SPEAKER: text" lines plus a speaker-map sidecar */
} lsm_transcript_format;

typedef enum lsm_null_method {
    LSM_NULL_MONTE_CARLO = 0,
    LSM_NULL_ANALYTIC = 1,
    LSM_NULL_EXACT = 2 /* exhaustive; focal utterance count <= 8 */
} lsm_null_method;

typedef struct lsm_lexicon lsm_lexicon;
typedef struct lsm_conversation lsm_conversation;
typedef struct lsm_score lsm_score;

LSM_API const char* lsm_version(void);

/* Message from the most recent failing call on this thread; never NULL. */
LSM_API const char* lsm_last_error(void);

LSM_API void lsm_string_free(char* s);

/* ---- lexicon ---------------------------------------------------------- */

LSM_API lsm_status lsm_lexicon_load_default(lsm_lexicon** out);
LSM_API lsm_status lsm_lexicon_load_file(const char* path, lsm_lexicon_format format,
                                         lsm_lexicon** out);
LSM_API lsm_status lsm_lexicon_load_text(const char* text, lsm_lexicon_format format,
                                         lsm_lexicon** out);
LSM_API void lsm_lexicon_free(lsm_lexicon* lexicon);

LSM_API int lsm_lexicon_marker_count(const lsm_lexicon* lexicon);
/* Marker name by index; NULL when out of range. The string lives as long as
 * the lexicon. */
LSM_API const char* lsm_lexicon_marker_name(const lsm_lexicon* lexicon, int index);
/* Pattern count of any category (marker or auxiliary); -1 when unknown. */
LSM_API int lsm_lexicon_category_size(const lsm_lexicon* lexicon, const char* name);

/* ---- conversations ---------------------------------------------------- */

LSM_API lsm_status lsm_conversation_parse_file(const char* path,
                                               lsm_transcript_format format,
                                               const char* speaker_map_path, /* or NULL */
                                               lsm_conversation** out);
LSM_API lsm_status lsm_conversation_parse_text(const char* text,
                                               lsm_transcript_format format,
                                               const char* speaker_map_json, /* or NULL */
                                               lsm_conversation** out);
LSM_API void lsm_conversation_free(lsm_conversation* conv);

LSM_API const char* lsm_conversation_id(const lsm_conversation* conv);
LSM_API int lsm_conversation_utterance_count(const lsm_conversation* conv);
LSM_API int lsm_conversation_speaker_count(const lsm_conversation* conv);
/* Distinct speaker by order of first appearance; NULL when out of range. */
LSM_API const char* lsm_conversation_speaker(const lsm_conversation* conv, int index);
/* Canonical JSON document for the conversation. */
LSM_API lsm_status lsm_conversation_to_json(const lsm_conversation* conv, char** out_json);

/* ---- synthetic conversations ------------------------------------------ */

/* config_json: {"n_utterances", "seed", "q0", "q1", "q1_end"?, "drive_rate"?,
 *               "topology"?: "alternating"|"moderated", "fillers"?}.
 * The generating parameters stay attached to the handle. */
LSM_API lsm_status lsm_synth_generate(const char* config_json, const lsm_lexicon* lexicon,
                                      lsm_conversation** out);
/* Ground-truth parameters of a generated conversation; LSM_ERR_NOT_FOUND for
 * conversations that were parsed rather than generated. */
LSM_API lsm_status lsm_conversation_truth_json(const lsm_conversation* conv,
                                               char** out_json);

/* ---- scoring ----------------------------------------------------------- */

typedef struct lsm_score_config {
    int n_permutations;            /* default 10000 */
    unsigned long long seed;       /* default 0 */
    lsm_null_method method;        /* default LSM_NULL_MONTE_CARLO */
    int workers;                   /* <= 0: LSM_WORKERS env or hardware */
} lsm_score_config;

LSM_API void lsm_score_config_init(lsm_score_config* config);

LSM_API lsm_status lsm_score_compute(const lsm_conversation* conv,
                                     const char* focal_speaker,
                                     const lsm_lexicon* lexicon,
                                     const lsm_score_config* config, /* or NULL */
                                     lsm_score** out);
LSM_API void lsm_score_free(lsm_score* score);

typedef struct lsm_marker_stat {
    int n_prev;
    int n_joint;
    double p_obs;     /* valid when n_prev > 0 */
    double null_mean; /* valid when defined */
    double null_std;  /* valid when defined */
    double z;         /* valid when defined */
    int defined;
} lsm_marker_stat;

LSM_API int lsm_score_marker_count(const lsm_score* score);
LSM_API const char* lsm_score_marker_name(const lsm_score* score, int index);
LSM_API lsm_status lsm_score_marker_stat(const lsm_score* score, int index,
                                         lsm_marker_stat* out);
/* LSM_ERR_DEGENERATE when no marker is defined. */
LSM_API lsm_status lsm_score_mean_z(const lsm_score* score, double* out);
LSM_API lsm_status lsm_score_to_json(const lsm_score* score, char** out_json);

/* Turn-by-turn percentage-similarity measure between two speakers. */
LSM_API lsm_status lsm_turn_lsm(const lsm_conversation* conv, const char* speaker_a,
                                const char* speaker_b, const lsm_lexicon* lexicon,
                                double* out);
/* mean_z(a) - mean_z(b). */
LSM_API lsm_status lsm_asymmetry(const lsm_conversation* conv, const char* speaker_a,
                                 const char* speaker_b, const lsm_lexicon* lexicon,
                                 const lsm_score_config* config, /* or NULL */
                                 double* out);

/* ---- statistics on plain arrays ---------------------------------------- */

LSM_API lsm_status lsm_mann_whitney_u(const double* a, int n_a, const double* b, int n_b,
                                      double* out_u, double* out_p);
LSM_API lsm_status lsm_t_test(const double* a, int n_a, const double* b, int n_b,
                              int pooled, double* out_t, double* out_df, double* out_p,
                              double* out_eta_squared);
LSM_API lsm_status lsm_pearson_r(const double* x, const double* y, int n, double* out_r);

/* ---- pipeline ----------------------------------------------------------
 * Runs a full command (score | study1 | temporal | validate | synth) from a
 * manifest document; see the README for the schema. Output files land under
 * the manifest's out_dir with the manifest embedded. out_summary (optional)
 * receives a human-readable report including any warnings.
 * Returns LSM_ERR_SUITES_FAILED when a validate suite fails. `workers` <= 0
 * defers to the LSM_WORKERS environment variable. */
LSM_API lsm_status lsm_run_manifest(const char* manifest_json, int workers,
                                    char** out_summary);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* LSM_H */
