#ifndef QIMG_H
#define QIMG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QimgStatus {
  QIMG_STATUS_OK = 0,
  QIMG_STATUS_NULL_POINTER = 1,
  QIMG_STATUS_INVALID_ARGUMENT = 2,
  QIMG_STATUS_IO = 3,
  QIMG_STATUS_PGM = 4,
  QIMG_STATUS_INVALID_IMAGE = 5,
  QIMG_STATUS_DOMAIN = 6,
  QIMG_STATUS_OVERFLOW = 7,
  QIMG_STATUS_CIRCUIT = 8,
  QIMG_STATUS_PANIC = 9,
} QimgStatus;

typedef enum QimgScheme {
  QIMG_SCHEME_PLAIN = 0,
  QIMG_SCHEME_BEC = 1,
  QIMG_SCHEME_QJPEG = 2,
} QimgScheme;

/**
 * Opaque circuit handle.
 */
typedef struct QimgCircuit QimgCircuit;

/**
 * Opaque image handle.
 */
typedef struct QimgImage QimgImage;

typedef struct QimgTally {
  uint64_t hadamard;
  uint64_t mcx;
  uint64_t muler;
  uint64_t adder;
  uint64_t adder_reversed;
  /**
   * Multipliers and adders at their formula cost, every other gate as one.
   */
  double elementary_cost;
} QimgTally;

typedef struct QimgCostReport {
  uint32_t n;
  uint32_t q;
  double r_j;
  double c;
  double c2;
  double c3;
  double c4;
  double c5;
  double total;
  double a;
  double b;
  double m;
  double r;
} QimgCostReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *qimg_last_error(void);

/**
 * Loads a PGM file, zero-padding it to a power-of-two square.
 */
enum QimgStatus qimg_image_load_pgm(const char *path, struct QimgImage **out);

/**
 * Builds a `2^n × 2^n` image of `q`-bit pixels from `len` row-major values.
 */
enum QimgStatus qimg_image_from_pixels(uint32_t n,
                                       uint32_t q,
                                       const uint32_t *pixels,
                                       size_t len,
                                       struct QimgImage **out);

void qimg_image_free(struct QimgImage *img);

/**
 * Side length in pixels, or 0 for a null handle.
 */
size_t qimg_image_side(const struct QimgImage *img);

/**
 * Colour depth in bits, or 0 for a null handle.
 */
uint32_t qimg_image_depth(const struct QimgImage *img);

/**
 * Copies the pixels into `buf`, which must hold `side²` values.
 */
enum QimgStatus qimg_image_pixels(const struct QimgImage *img, uint32_t *buf, size_t len);

/**
 * Synthesizes a preparation circuit. For [`QimgScheme::Qjpeg`] this is the
 * whole four-stage pipeline circuit.
 */
enum QimgStatus qimg_prepare(const struct QimgImage *img,
                             enum QimgScheme scheme,
                             struct QimgCircuit **out);

void qimg_circuit_free(struct QimgCircuit *c);

enum QimgStatus qimg_circuit_tally(const struct QimgCircuit *c, struct QimgTally *out);

/**
 * Circuit in the line-oriented text format; free with [`qimg_string_free`].
 */
enum QimgStatus qimg_circuit_to_text(const struct QimgCircuit *c, char **out);

void qimg_string_free(char *s);

/**
 * Runs the JPEG pipeline and returns the recovered image and its PSNR
 * against the input. Either output pointer may be null.
 */
enum QimgStatus qimg_run_pipeline(const struct QimgImage *img,
                                  struct QimgImage **recovered,
                                  double *psnr_db);

/**
 * PSNR in dB; infinite for identical images.
 */
enum QimgStatus qimg_psnr(const struct QimgImage *a, const struct QimgImage *b, double *out);

enum QimgStatus qimg_analytic_costs(uint32_t n, uint32_t q, double r_j, struct QimgCostReport *out);

/**
 * Smallest size exponent at which the JPEG scheme beats plain preparation.
 */
enum QimgStatus qimg_min_n(uint32_t q, uint32_t *out);

/**
 * Measured JPEG bit ratio. `defined` is set to false, and `out` left
 * untouched, for an image with no set pixel bits.
 */
enum QimgStatus qimg_measured_rj(const struct QimgImage *img, double *out, bool *defined);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QIMG_H */
