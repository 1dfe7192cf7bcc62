#ifndef CDIFFMR_H
#define CDIFFMR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CdmScheduleKind {
  CDM_SCHEDULE_KIND_LINEAR = 0,
  CDM_SCHEDULE_KIND_LOG = 1,
} CdmScheduleKind;

typedef enum CdmStatus {
  CDM_STATUS_OK = 0,
  CDM_STATUS_NULL_POINTER = 1,
  CDM_STATUS_INVALID_INPUT = 2,
  CDM_STATUS_SHAPE_MISMATCH = 3,
  CDM_STATUS_INDEX_OUT_OF_RANGE = 4,
  CDM_STATUS_UNSUPPORTED_RATE = 5,
  CDM_STATUS_CONFIG = 6,
  CDM_STATUS_FORMAT = 7,
  CDM_STATUS_IO = 8,
  CDM_STATUS_DIVERGED = 9,
  CDM_STATUS_INTERNAL = 10,
} CdmStatus;

typedef struct CdmFamily CdmFamily;

typedef struct CdmImage CdmImage;

typedef struct CdmMask CdmMask;

typedef struct CdmRestorer CdmRestorer;

/**
 * Sampler switches. `start_override` 0 means "use the located start".
 */
typedef struct CdmReconOptions {
  bool use_spc;
  bool use_dcc;
  bool terminal_dc;
  uint32_t start_override;
} CdmReconOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *cdm_version(void);

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *cdm_last_error(void);

struct CdmReconOptions cdm_recon_options_default(void);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum CdmStatus cdm_sampling_rate(enum CdmScheduleKind kind,
                                 uint32_t steps,
                                 double sr_min,
                                 uint32_t t,
                                 double *out);

/**
 * Smallest step whose sampling rate does not exceed `task_sr`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum CdmStatus cdm_locate_start_step(enum CdmScheduleKind kind,
                                     uint32_t steps,
                                     double sr_min,
                                     double task_sr,
                                     uint32_t *out);

/**
 * Image from `height * width` interleaved (re, im) pairs, row-major.
 *
 * # Safety
 * `data` must point to `2 * height * width` doubles; `out` must be valid for writes.
 */
enum CdmStatus cdm_image_new(uint32_t height,
                             uint32_t width,
                             const double *data,
                             struct CdmImage **out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum CdmStatus cdm_phantom(uint32_t size,
                           uint32_t n_ellipses,
                           uint64_t seed,
                           uint32_t phase_order,
                           struct CdmImage **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum CdmStatus cdm_image_read(const char *path, struct CdmImage **out);

/**
 * # Safety
 * `img` must be a live handle; `path` a NUL-terminated string.
 */
enum CdmStatus cdm_image_write(const struct CdmImage *img, const char *path);

/**
 * # Safety
 * `img` must be a live handle; `height` and `width` valid for writes.
 */
enum CdmStatus cdm_image_shape(const struct CdmImage *img, uint32_t *height, uint32_t *width);

/**
 * Copies interleaved (re, im) pixels into `data`, which holds `len` doubles.
 *
 * # Safety
 * `img` must be a live handle; `data` valid for `len` writes.
 */
enum CdmStatus cdm_image_copy(const struct CdmImage *img, double *data, size_t len);

/**
 * # Safety
 * `img` must be null or a handle not yet freed.
 */
void cdm_image_free(struct CdmImage *img);

/**
 * Centre block plus seeded random columns up to `round(width / af)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum CdmStatus cdm_mask_generate(uint32_t width,
                                 double af,
                                 double center_fraction,
                                 uint64_t seed,
                                 struct CdmMask **out);

/**
 * Mask from `width` bytes, nonzero meaning selected.
 *
 * # Safety
 * `selected` must point to `width` bytes; `out` must be valid for writes.
 */
enum CdmStatus cdm_mask_from_selection(const uint8_t *selected,
                                       uint32_t width,
                                       struct CdmMask **out);

/**
 * # Safety
 * `mask` must be a live handle; `count` valid for writes.
 */
enum CdmStatus cdm_mask_count(const struct CdmMask *mask, uint32_t *count);

/**
 * # Safety
 * `mask` must be null or a handle not yet freed.
 */
void cdm_mask_free(struct CdmMask *mask);

/**
 * Nested mask family. `center_fraction <= 0` selects a one-column centre.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum CdmStatus cdm_family_build(enum CdmScheduleKind kind,
                                uint32_t steps,
                                double sr_min,
                                uint32_t width,
                                double center_fraction,
                                uint64_t seed,
                                struct CdmFamily **out);

/**
 * The family's own mask at the start step for `af`.
 *
 * # Safety
 * `family` must be a live handle; `step` and `out` valid for writes.
 */
enum CdmStatus cdm_family_snapped_mask(const struct CdmFamily *family,
                                       double af,
                                       uint32_t *step,
                                       struct CdmMask **out);

/**
 * # Safety
 * `family` and `mask` must be live handles; `step` valid for writes.
 */
enum CdmStatus cdm_family_start_step(const struct CdmFamily *family,
                                     const struct CdmMask *mask,
                                     uint32_t *step);

/**
 * # Safety
 * `family` must be null or a handle not yet freed.
 */
void cdm_family_free(struct CdmFamily *family);

/**
 * Loads a trained restorer; if `family` is non-null it receives the mask
 * family the restorer was trained with.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` valid for writes; `family`
 * null or valid for writes.
 */
enum CdmStatus cdm_restorer_load(const char *path,
                                 struct CdmRestorer **out,
                                 struct CdmFamily **family);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum CdmStatus cdm_restorer_zerofill(struct CdmRestorer **out);

/**
 * Restorer that always returns a copy of `truth`.
 *
 * # Safety
 * `truth` must be a live handle; `out` valid for writes.
 */
enum CdmStatus cdm_restorer_oracle(const struct CdmImage *truth, struct CdmRestorer **out);

/**
 * # Safety
 * `restorer` must be null or a handle not yet freed.
 */
void cdm_restorer_free(struct CdmRestorer *restorer);

/**
 * Synthesizes measurements `M F truth` and runs the reverse process.
 * `steps` (may be null) receives the number of reverse steps taken.
 *
 * # Safety
 * All handles must be live; `options` null (defaults) or valid; `out` valid
 * for writes; `steps` null or valid for writes.
 */
enum CdmStatus cdm_reconstruct(const struct CdmImage *truth,
                               const struct CdmMask *mask,
                               const struct CdmFamily *family,
                               const struct CdmRestorer *restorer,
                               const struct CdmReconOptions *options,
                               struct CdmImage **out,
                               uint32_t *steps);

/**
 * # Safety
 * Both handles must be live; `out` valid for writes.
 */
enum CdmStatus cdm_psnr(const struct CdmImage *recon, const struct CdmImage *truth, double *out);

/**
 * # Safety
 * Both handles must be live; `out` valid for writes.
 */
enum CdmStatus cdm_ssim(const struct CdmImage *recon, const struct CdmImage *truth, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CDIFFMR_H */
