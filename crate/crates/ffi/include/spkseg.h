#ifndef SPKSEG_H
#define SPKSEG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; non-zero values match the command-line exit codes.
 */
typedef enum SpksegStatus {
  SPKSEG_STATUS_OK = 0,
  /**
   * Null pointer or invalid argument.
   */
  SPKSEG_STATUS_USAGE = 1,
  SPKSEG_STATUS_IO = 2,
  /**
   * Malformed input or invalid configuration.
   */
  SPKSEG_STATUS_FORMAT = 3,
  /**
   * Input too short or otherwise outside an operation's preconditions.
   */
  SPKSEG_STATUS_PRECONDITION = 4,
  /**
   * A Rust panic was caught at the boundary.
   */
  SPKSEG_STATUS_INTERNAL = 5,
} SpksegStatus;

typedef enum SpksegMethod {
  SPKSEG_METHOD_PITCH = 0,
  SPKSEG_METHOD_BIC_GROW = 1,
  SPKSEG_METHOD_BIC_FIXED = 2,
} SpksegMethod;

typedef enum SpksegPitchMethod {
  SPKSEG_PITCH_METHOD_ACF = 0,
  SPKSEG_PITCH_METHOD_AMDF = 1,
  SPKSEG_PITCH_METHOD_CEPSTRAL = 2,
} SpksegPitchMethod;

/**
 * Decoded mono audio.
 */
typedef struct SpksegAudio SpksegAudio;

/**
 * Output of one segmentation run.
 */
typedef struct SpksegResult SpksegResult;

/**
 * Segmentation knobs. Start from [`spkseg_options_default`] and change fields.
 */
typedef struct SpksegOptions {
  enum SpksegMethod method;
  enum SpksegPitchMethod pitch_method;
  double threshold_coef;
  double gamma;
  double verify_window_s;
  /**
   * Penalty weight, used by both the verification step and the BIC methods.
   */
  double lambda;
  double min_gap_s;
  size_t n_ini;
  size_t n_g;
  size_t n_max;
  size_t n_s;
} SpksegOptions;

typedef struct SpksegEvalReport {
  double fd;
  double fr;
  double f;
  size_t n_hyp;
  size_t n_ref;
  size_t n_matched;
  double tolerance_s;
} SpksegEvalReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *spkseg_last_error_message(void);

/**
 * Loads a 16-bit PCM WAV file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SpksegStatus spkseg_audio_load_wav(const char *path, struct SpksegAudio **out);

/**
 * Wraps `len` samples in `[-1, 1]`.
 *
 * # Safety
 * `samples` must point to `len` readable doubles and `out` must be valid.
 */
enum SpksegStatus spkseg_audio_from_samples(const double *samples,
                                            size_t len,
                                            uint32_t sample_rate_hz,
                                            struct SpksegAudio **out);

/**
 * Duration in seconds, or a negative value for a NULL handle.
 *
 * # Safety
 * `audio` must be NULL or a live handle.
 */
double spkseg_audio_duration(const struct SpksegAudio *audio);

/**
 * # Safety
 * `audio` must be NULL or a handle not yet freed.
 */
void spkseg_audio_free(struct SpksegAudio *audio);

struct SpksegOptions spkseg_options_default(void);

/**
 * Runs segmentation. `options` may be NULL for defaults.
 *
 * # Safety
 * `audio` must be a live handle, `options` NULL or valid, `out` valid.
 */
enum SpksegStatus spkseg_segment(const struct SpksegAudio *audio,
                                 const struct SpksegOptions *options,
                                 struct SpksegResult **out);

/**
 * Number of change points, or 0 for a NULL handle.
 *
 * # Safety
 * `result` must be NULL or a live handle.
 */
size_t spkseg_result_len(const struct SpksegResult *result);

/**
 * Copies up to `capacity` change-point times into `times` and returns the
 * total count, so a call with `capacity = 0` sizes the buffer.
 *
 * # Safety
 * `result` must be a live handle; `times` must hold `capacity` doubles.
 */
size_t spkseg_result_times(const struct SpksegResult *result, double *times, size_t capacity);

/**
 * Candidate counters and wall time of a run. Any output pointer may be NULL.
 *
 * # Safety
 * `result` must be a live handle.
 */
enum SpksegStatus spkseg_result_stats(const struct SpksegResult *result,
                                      size_t *examined,
                                      size_t *rejected,
                                      double *wall_time_s);

/**
 * # Safety
 * `result` must be NULL or a handle not yet freed.
 */
void spkseg_result_free(struct SpksegResult *result);

double spkseg_f_measure(double fd, double fr);

/**
 * Scores `hypothesis` against `reference`; both must be strictly increasing.
 *
 * # Safety
 * Arrays must hold the given number of doubles; `out` must be valid.
 */
enum SpksegStatus spkseg_evaluate(const double *reference,
                                  size_t n_reference,
                                  const double *hypothesis,
                                  size_t n_hypothesis,
                                  double tolerance_s,
                                  struct SpksegEvalReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPKSEG_H */
