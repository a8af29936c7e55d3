#ifndef TELL_TELL_H
#define TELL_TELL_H

#include <stddef.h>

#if defined(_WIN32)
#define TELL_API __declspec(dllexport)
#else
#define TELL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status values. Every call returns TELL_OK or one of these; the context's
 * last error holds the message. */
enum tell_status {
  TELL_OK = 0,
  TELL_E_MISSING_FIELD,
  TELL_E_TYPE_MISMATCH,
  TELL_E_INVARIANT_VIOLATION,
  TELL_E_PARSE_ERROR,
  TELL_E_DUPLICATE_TYPE_ID,
  TELL_E_UNDECLARED_PLACEHOLDER,
  TELL_E_EMPTY_DB,
  TELL_E_CONSTRAINT_UNSATISFIABLE,
  TELL_E_ORACLE_MISMATCH,
  TELL_E_EMPTY_PLOT,
  TELL_E_LENGTH_MISMATCH,
  TELL_E_NEGATIVE_REMAINDER,
  TELL_E_TIE_VALUES,
  TELL_E_MISSING_ROW,
  TELL_E_ZERO_TOTAL,
  TELL_E_MISSING_CATEGORY,
  TELL_E_AMBIGUOUS_MODE,
  TELL_E_VALIDATION_ERROR,
  TELL_E_NO_TEMPLATE_FOUND,
  TELL_E_SCHEMA_ERROR,
  TELL_E_PROVIDER_FAILURE,
  TELL_E_UNPARSEABLE_REPLY,
  TELL_E_STRUCTURE_ERROR,
  TELL_E_EMPTY_TEXT,
  TELL_E_ID_MISMATCH,
  TELL_E_DUPLICATE_PREDICTION,
  TELL_E_UNKNOWN_SAMPLE_ID,
  TELL_E_IO_ERROR,
  TELL_E_INVALID_ARGUMENT,
  TELL_E_INTERNAL
};

typedef struct tell_context tell_context;
typedef struct tell_corpus tell_corpus;

TELL_API const char* tell_version(void);
/* "OK", "ParseError", ... */
TELL_API const char* tell_status_name(int status);

/* A context owns the template database (built-in types plus any loaded user
 * files) and the last error message. Not safe for concurrent use; create one
 * per thread. */
TELL_API tell_context* tell_context_new(void);
TELL_API void tell_context_free(tell_context* ctx);
TELL_API const char* tell_last_error(const tell_context* ctx);

/* Strings returned through char** out-parameters are owned by the caller. */
TELL_API void tell_string_free(char* s);

TELL_API int tell_load_templates(tell_context* ctx, const char* path);
TELL_API int tell_template_count(const tell_context* ctx, size_t* out);
/* Writes the context's template database as JSON. */
TELL_API int tell_export_templates(tell_context* ctx, const char* out_path);
TELL_API int tell_templates_json(tell_context* ctx, char** out_json);

/* Reads TabMWP problem files or corpus files; a directory stands for its
 * problems_train.json, problems_dev.json and problems_test.json. */
TELL_API int tell_ingest(tell_context* ctx, const char* const* paths, size_t n_paths, const char* out_path,
                         char** summary_json);
TELL_API int tell_stats(tell_context* ctx, const char* const* paths, size_t n_paths, char** report_text,
                        char** report_json);

/* Options are a JSON object; see the README for keys. Report paths may be
 * NULL. */
TELL_API int tell_generate(tell_context* ctx, const char* options_json, const char* out_path,
                           const char* report_path, char** summary_json);
TELL_API int tell_paraphrase(tell_context* ctx, const char* options_json, const char* in_path, const char* out_path,
                             const char* report_path, char** summary_json);
TELL_API int tell_filter(tell_context* ctx, const char* options_json, const char* in_path, const char* out_path,
                         const char* report_path, char** summary_json);
TELL_API int tell_evaluate(tell_context* ctx, const char* predictions_path, const char* corpus_path,
                           char** report_json, char** report_text);
TELL_API int tell_augment(tell_context* ctx, const char* options_json, char** outcome_json);

TELL_API int tell_bleu(tell_context* ctx, const char* candidate, const char* reference, int order, double* out);
/* 1 when `raw` names the answer of `sample_json`'s record, else 0. */
TELL_API int tell_exact_match(tell_context* ctx, const char* raw, const char* sample_json, int* out);

TELL_API int tell_corpus_read(tell_context* ctx, const char* path, tell_corpus** out);
TELL_API size_t tell_corpus_size(const tell_corpus* corpus);
TELL_API int tell_corpus_sample_json(tell_context* ctx, const tell_corpus* corpus, size_t index, char** out_json);
TELL_API void tell_corpus_free(tell_corpus* corpus);

#ifdef __cplusplus
}
#endif

#endif
