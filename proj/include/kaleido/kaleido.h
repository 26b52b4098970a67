/* C interface to the kaleidoscopic mirror calibration library.
 *
 * Objects are opaque handles created by the library and released with the
 * matching *_destroy function. Every fallible call returns a kaleido_status;
 * on failure kaleido_last_error() describes the problem (per thread, valid
 * until the next call on that thread). Strings returned through char** are
 * NUL-terminated and must be released with kaleido_string_free().
 */
#ifndef KALEIDO_KALEIDO_H
#define KALEIDO_KALEIDO_H

#include <stddef.h>

#if defined(_WIN32)
#if defined(KALEIDO_BUILDING_LIBRARY)
#define KALEIDO_API __declspec(dllexport)
#else
#define KALEIDO_API __declspec(dllimport)
#endif
#else
#define KALEIDO_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as the CLI exit codes. */
typedef enum kaleido_status {
  KALEIDO_OK = 0,
  KALEIDO_ERR_INVALID_ARGUMENT = 1,
  KALEIDO_ERR_PARSE = 2,
  KALEIDO_ERR_GENERATION = 3,
  KALEIDO_ERR_MISSING_CHAMBERS = 4,
  KALEIDO_ERR_DEGENERATE = 5,
  KALEIDO_ERR_INTERNAL = 6
} kaleido_status;

typedef enum kaleido_method {
  KALEIDO_METHOD_PROPOSED = 0,
  KALEIDO_METHOD_BASELINE = 1,
  KALEIDO_METHOD_TAKAHASHI = 2
} kaleido_method;

typedef struct kaleido_scene kaleido_scene;
typedef struct kaleido_correspondences kaleido_correspondences;
typedef struct kaleido_reference kaleido_reference;
typedef struct kaleido_calibration kaleido_calibration;
typedef struct kaleido_sweep kaleido_sweep;

typedef struct kaleido_calibrate_options {
  kaleido_method method;
  int bundle_adjust; /* non-zero: refine with kaleidoscopic bundle adjustment */
} kaleido_calibrate_options;

KALEIDO_API const char* kaleido_version(void);
KALEIDO_API const char* kaleido_last_error(void);
KALEIDO_API const char* kaleido_status_name(kaleido_status status);
KALEIDO_API void kaleido_string_free(char* str);

/* Simulation: a scene holds correspondences, ground truth and the reference
 * object of one generated configuration. */
KALEIDO_API kaleido_status kaleido_default_config_json(char** out_json);
KALEIDO_API kaleido_status kaleido_simulate(const char* config_json, kaleido_scene** out_scene);
KALEIDO_API kaleido_status kaleido_scene_correspondences_json(const kaleido_scene* scene,
                                                              char** out_json);
KALEIDO_API kaleido_status kaleido_scene_truth_json(const kaleido_scene* scene, char** out_json);
KALEIDO_API kaleido_status kaleido_scene_reference_json(const kaleido_scene* scene,
                                                        char** out_json);
KALEIDO_API void kaleido_scene_destroy(kaleido_scene* scene);

KALEIDO_API kaleido_status kaleido_correspondences_parse(const char* json,
                                                         kaleido_correspondences** out);
KALEIDO_API kaleido_status kaleido_correspondences_to_json(const kaleido_correspondences* c,
                                                           char** out_json);
KALEIDO_API size_t kaleido_correspondences_point_count(const kaleido_correspondences* c);
KALEIDO_API void kaleido_correspondences_destroy(kaleido_correspondences* c);

KALEIDO_API kaleido_status kaleido_reference_parse(const char* json, kaleido_reference** out);
KALEIDO_API void kaleido_reference_destroy(kaleido_reference* reference);

/* reference may be NULL for the proposed method. A calibration flagged as
 * degenerate is still returned with KALEIDO_OK; see kaleido_calibration_degenerate. */
KALEIDO_API kaleido_status kaleido_calibrate(const kaleido_correspondences* c,
                                             const kaleido_calibrate_options* options,
                                             const kaleido_reference* reference,
                                             kaleido_calibration** out);
KALEIDO_API kaleido_status kaleido_calibration_parse(const char* json, kaleido_calibration** out);
KALEIDO_API kaleido_status kaleido_calibration_to_json(const kaleido_calibration* cal,
                                                       char** out_json);
/* index is 1, 2 or 3. */
KALEIDO_API kaleido_status kaleido_calibration_mirror(const kaleido_calibration* cal, int index,
                                                      double normal[3], double* distance);
KALEIDO_API double kaleido_calibration_reprojection_error(const kaleido_calibration* cal);
KALEIDO_API int kaleido_calibration_degenerate(const kaleido_calibration* cal);
KALEIDO_API void kaleido_calibration_destroy(kaleido_calibration* cal);

/* Writes 3 * point_count doubles (x, y, z per point) into xyz. */
KALEIDO_API kaleido_status kaleido_triangulate(const kaleido_correspondences* c,
                                               const kaleido_calibration* cal, double* xyz,
                                               size_t capacity);
KALEIDO_API kaleido_status kaleido_triangulate_json(const kaleido_correspondences* c,
                                                    const kaleido_calibration* cal,
                                                    char** out_json);

KALEIDO_API kaleido_status kaleido_sweep_run(const char* spec_json, kaleido_sweep** out);
KALEIDO_API size_t kaleido_sweep_row_count(const kaleido_sweep* sweep);
KALEIDO_API kaleido_status kaleido_sweep_csv(const kaleido_sweep* sweep, char** out_csv);
KALEIDO_API void kaleido_sweep_destroy(kaleido_sweep* sweep);

#ifdef __cplusplus
}
#endif

#endif /* KALEIDO_KALEIDO_H */
