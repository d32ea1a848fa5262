#ifndef FDG_H
#define FDG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FdgStatus {
  FDG_STATUS_OK = 0,
  FDG_STATUS_NULL_POINTER = 1,
  FDG_STATUS_INVALID_ARGUMENT = 2,
  FDG_STATUS_IO = 3,
  FDG_STATUS_FORMAT = 4,
  FDG_STATUS_DIMENSION_MISMATCH = 5,
  FDG_STATUS_IMAGE_TOO_SMALL = 6,
  FDG_STATUS_RUNTIME = 7,
  FDG_STATUS_PANIC = 8,
} FdgStatus;

/*
 Opaque image handle.
 */
typedef struct FdgImage FdgImage;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread; empty after a
 success. Valid until the next call into the library from the same
 thread.
 */
const char *fdg_last_error(void);

/*
 Creates an image from `width*height*channels` samples, or zeros when
 `data` is null. `channels` must be 1 or 3.

 # Safety
 `data` must be null or point to the stated number of floats; `out` must
 be writable.
 */
enum FdgStatus fdg_image_new(size_t width,
                             size_t height,
                             size_t channels,
                             const float *data,
                             struct FdgImage **out);

/*
 Releases a handle. Null is ignored.

 # Safety
 `img` must be null or a handle from this library not yet freed.
 */
void fdg_image_free(struct FdgImage *img);

/*
 # Safety
 `img` must be a live handle; the out pointers must be writable or null.
 */
enum FdgStatus fdg_image_dims(const struct FdgImage *img,
                              size_t *width,
                              size_t *height,
                              size_t *channels);

/*
 Borrowed pointer to the interleaved samples, valid while the handle
 lives. Null for a null handle.

 # Safety
 `img` must be null or a live handle.
 */
const float *fdg_image_data(const struct FdgImage *img);

/*
 Reads a binary PPM (P6) or PGM (P5) with maxval 255.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum FdgStatus fdg_image_load_ppm(const char *path, struct FdgImage **out);

/*
 Writes the image rounded to 8 bits.

 # Safety
 `img` must be a live handle and `path` a NUL-terminated string.
 */
enum FdgStatus fdg_image_save_ppm(const struct FdgImage *img, const char *path);

/*
 PSNR in dB with a peak of 1; +infinity for identical images.

 # Safety
 `a` and `b` must be live handles; `out` must be writable.
 */
enum FdgStatus fdg_psnr(const struct FdgImage *a, const struct FdgImage *b, double *out);

/*
 # Safety
 `a` and `b` must be live handles; `out` must be writable.
 */
enum FdgStatus fdg_ssim(const struct FdgImage *a, const struct FdgImage *b, double *out);

/*
 JPEG round trip at quality `qf`; the result is the decoded image.

 # Safety
 `img` must be a live handle; `out` must be writable.
 */
enum FdgStatus fdg_simulate_jpeg(const struct FdgImage *img, uint8_t qf, struct FdgImage **out);

/*
 Encodes a baseline JFIF stream. Release the buffer with
 `fdg_bytes_free`.

 # Safety
 `img` must be a live handle; `out` and `out_len` must be writable.
 */
enum FdgStatus fdg_encode_jpeg(const struct FdgImage *img,
                               uint8_t qf,
                               uint8_t **out,
                               size_t *out_len);

/*
 # Safety
 `bytes` and `len` must come from one `fdg_encode_jpeg` call, or
 `bytes` is null.
 */
void fdg_bytes_free(uint8_t *bytes, size_t len);

/*
 Runs the patch diffusion sampler. `config_json` follows the CLI run
 configuration schema and may be null for defaults. The oracle
 decomposer is unavailable here since it needs a reference image.

 # Safety
 `img` must be a live handle, `config_json` null or NUL-terminated, and
 `out` writable.
 */
enum FdgStatus fdg_restore(const struct FdgImage *img,
                           const char *config_json,
                           struct FdgImage **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FDG_H */
