#ifndef WMLAB_H
#define WMLAB_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Reconstruction step of `wmlab_regenerate`, with parameters derived from sigma.
 */
typedef enum WmlabDenoiser {
  WMLAB_DENOISER_NONE = 0,
  WMLAB_DENOISER_TV = 1,
  WMLAB_DENOISER_BILATERAL = 2,
  WMLAB_DENOISER_NLM = 3,
} WmlabDenoiser;

typedef enum WmlabScheme {
  WMLAB_SCHEME_LSB = 0,
  WMLAB_SCHEME_DWT_DCT_SVD = 1,
  WMLAB_SCHEME_ADDITIVE = 2,
} WmlabScheme;

typedef enum WmlabStatus {
  WMLAB_STATUS_OK = 0,
  WMLAB_STATUS_NULL_POINTER = 1,
  WMLAB_STATUS_INVALID_ARGUMENT = 2,
  WMLAB_STATUS_IO = 3,
  WMLAB_STATUS_FORMAT = 4,
  WMLAB_STATUS_DIMENSION = 5,
  WMLAB_STATUS_CAPACITY = 6,
  WMLAB_STATUS_INFEASIBLE = 7,
  WMLAB_STATUS_PLUGIN = 8,
  WMLAB_STATUS_PANIC = 9,
} WmlabStatus;

/*
 Opaque image handle.
 */
typedef struct WmlabImage WmlabImage;

typedef struct WmlabDetection {
  uint32_t matched;
  uint32_t k;
  uint32_t tau;
  double p_value;
  bool detected;
} WmlabDetection;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the most recent failure on this thread, or null. The pointer
 stays valid until the next failing call on the same thread.
 */
const char *wmlab_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *wmlab_version(void);

/*
 Copies `width * height * channels` interleaved samples into a new image.
 Samples are clipped to [0, 1].

 # Safety
 `data` must point to that many readable doubles.
 */
enum WmlabStatus wmlab_image_new(uintptr_t width,
                                 uintptr_t height,
                                 uintptr_t channels,
                                 const double *data,
                                 struct WmlabImage **out);

/*
 Deterministic smooth-noise test image with three channels.

 # Safety
 `out` must be a valid pointer.
 */
enum WmlabStatus wmlab_image_synthetic(uint64_t seed,
                                       uintptr_t width,
                                       uintptr_t height,
                                       struct WmlabImage **out);

/*
 # Safety
 `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum WmlabStatus wmlab_image_load(const char *path, struct WmlabImage **out);

/*
 Writes an 8-bit PNG.

 # Safety
 `img` must be a live handle and `path` a NUL-terminated string.
 */
enum WmlabStatus wmlab_image_save(const struct WmlabImage *img, const char *path);

/*
 Releases a handle. Null is ignored.

 # Safety
 `img` must come from this library and not be used afterwards.
 */
void wmlab_image_free(struct WmlabImage *img);

/*
 # Safety
 `img` must be a live handle or null (which yields 0).
 */
uintptr_t wmlab_image_width(const struct WmlabImage *img);

/*
 # Safety
 `img` must be a live handle or null (which yields 0).
 */
uintptr_t wmlab_image_height(const struct WmlabImage *img);

/*
 # Safety
 `img` must be a live handle or null (which yields 0).
 */
uintptr_t wmlab_image_channels(const struct WmlabImage *img);

/*
 Copies the interleaved samples into `buf`, which holds `len` doubles.

 # Safety
 `img` must be a live handle and `buf` valid for `len` writes.
 */
enum WmlabStatus wmlab_image_copy_data(const struct WmlabImage *img, double *buf, uintptr_t len);

/*
 Embeds a hex message. `strength <= 0` selects the scheme default.

 # Safety
 Pointers must be valid; `msg_hex` NUL-terminated.
 */
enum WmlabStatus wmlab_embed(const struct WmlabImage *img,
                             enum WmlabScheme scheme,
                             uint64_t key,
                             const char *msg_hex,
                             double strength,
                             struct WmlabImage **out);

/*
 Additive-scheme embedding at an exact ℓ₂ distance `delta` from the cover.

 # Safety
 Pointers must be valid; `msg_hex` NUL-terminated.
 */
enum WmlabStatus wmlab_embed_additive_exact(const struct WmlabImage *img,
                                            uint64_t key,
                                            const char *msg_hex,
                                            double delta,
                                            struct WmlabImage **out);

/*
 # Safety
 Pointers must be valid; `msg_hex` NUL-terminated.
 */
enum WmlabStatus wmlab_detect(const struct WmlabImage *img,
                              enum WmlabScheme scheme,
                              uint64_t key,
                              const char *msg_hex,
                              double strength,
                              double alpha,
                              struct WmlabDetection *out);

/*
 Adds `N(0, sigma²)` noise per sample (unit scale) and denoises.

 # Safety
 Pointers must be valid.
 */
enum WmlabStatus wmlab_regenerate(const struct WmlabImage *img,
                                  double sigma,
                                  enum WmlabDenoiser denoiser,
                                  uint64_t seed,
                                  struct WmlabImage **out);

/*
 Applies an attack given as JSON, e.g. `{"kind":"jpeg","quality":50}`.

 # Safety
 Pointers must be valid; `attack_json` NUL-terminated.
 */
enum WmlabStatus wmlab_attack_json(const struct WmlabImage *img,
                                   const char *attack_json,
                                   uint64_t seed,
                                   struct WmlabImage **out);

/*
 # Safety
 Pointers must be valid.
 */
enum WmlabStatus wmlab_psnr(const struct WmlabImage *a, const struct WmlabImage *b, double *out);

/*
 # Safety
 Pointers must be valid.
 */
enum WmlabStatus wmlab_ssim(const struct WmlabImage *a, const struct WmlabImage *b, double *out);

/*
 Smallest match threshold with false positive rate below `alpha`;
 `k + 1` when none qualifies.
 */
uint32_t wmlab_threshold_for_alpha(uint32_t k, double alpha);

/*
 `P[M > tau]` for `M ~ Binomial(k, 1/2)`.

 # Safety
 `out` must be a valid pointer.
 */
enum WmlabStatus wmlab_false_positive_rate(uint32_t tau, uint32_t k, double *out);

/*
 Certified minimum Type II error at Type I error `eps1`.

 # Safety
 `out` must be a valid pointer.
 */
enum WmlabStatus wmlab_cwf_tradeoff(double eps1,
                                    double lipschitz,
                                    double delta,
                                    double sigma,
                                    double *out);

/*
 Failure probability of denoising a watermarked image.

 # Safety
 `out` must be a valid pointer.
 */
enum WmlabStatus wmlab_delta_tilde(double delta_prob, double distance, double sigma, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WMLAB_H */
