/*
 * dermacolor.h - C interface to the dermacolor skin-color toolkit.
 *
 * Every function returns a dc_status. On failure a message describing the
 * error is available from dc_last_error() on the calling thread until the
 * next API call on that thread. Objects are opaque handles released with
 * the matching *_free function; passing NULL to a *_free function is a
 * no-op.
 */
#ifndef DERMACOLOR_DERMACOLOR_H
#define DERMACOLOR_DERMACOLOR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DC_API __declspec(dllexport)
#else
#define DC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dc_status {
    DC_OK = 0,
    DC_ERR_INVALID_ARGUMENT = 1,
    DC_ERR_DEGENERATE_INPUT = 2,
    DC_ERR_INVALID_THRESHOLDS = 3,
    DC_ERR_IMAGE_TOO_SMALL = 4,
    DC_ERR_INVALID_KERNEL = 5,
    DC_ERR_INSUFFICIENT_SKIN_PIXELS = 6,
    DC_ERR_INVALID_K = 7,
    DC_ERR_NO_KNEE = 8,
    DC_ERR_RANK_DEFICIENT = 9,
    DC_ERR_OUT_OF_RANGE = 10,
    DC_ERR_INVALID_PARAMS = 11,
    DC_ERR_INSUFFICIENT_BINS = 12,
    DC_ERR_INSUFFICIENT_DATA = 13,
    DC_ERR_IO = 14,
    DC_ERR_FORMAT = 15,
    DC_ERR_INTERNAL = 16
} dc_status;

/* Message for the last failed call on this thread ("" if none). */
DC_API const char* dc_last_error(void);
DC_API const char* dc_status_name(dc_status status);
/* Process exit code for a status: 0 ok, 2 usage/validation, 3 I/O, 4 numeric. */
DC_API int dc_status_exit_code(dc_status status);
DC_API const char* dc_version(void);

/* ------------------------------------------------------------------------ */
/* Color                                                                    */
/* ------------------------------------------------------------------------ */

typedef struct dc_lab {
    double l_star;
    double a_star;
    double b_star;
} dc_lab;

typedef enum dc_ita_variant { DC_ITA_ARCTAN = 0, DC_ITA_ARCTAN2 = 1 } dc_ita_variant;

DC_API dc_status dc_srgb_to_lab(uint8_t r, uint8_t g, uint8_t b, dc_lab* out);
DC_API dc_status dc_lab_to_srgb(dc_lab lab, uint8_t out_rgb[3]);
/* ITA in degrees. */
DC_API dc_status dc_ita(double l_star, double b_star, dc_ita_variant variant, double* out_degrees);
/* thresholds: five strictly decreasing ITA boundaries, or NULL for the defaults. */
DC_API dc_status dc_ita_to_fitzpatrick(double ita_degrees, const double* thresholds, int* out_type);

/* ------------------------------------------------------------------------ */
/* Images and masks                                                         */
/* ------------------------------------------------------------------------ */

typedef struct dc_image dc_image;
typedef struct dc_mask dc_mask;

/* rgb: width * height * 3 interleaved bytes, copied. */
DC_API dc_status dc_image_create(int width, int height, const uint8_t* rgb, dc_image** out);
DC_API dc_status dc_image_load_png(const char* path, dc_image** out);
DC_API dc_status dc_image_save_png(const dc_image* image, const char* path);
DC_API int dc_image_width(const dc_image* image);
DC_API int dc_image_height(const dc_image* image);
/* Interleaved RGB bytes owned by the image. */
DC_API const uint8_t* dc_image_data(const dc_image* image);
DC_API void dc_image_free(dc_image* image);

/* values: width * height bytes, nonzero = set; copied. */
DC_API dc_status dc_mask_create(int width, int height, const uint8_t* values, dc_mask** out);
DC_API dc_status dc_mask_load_png(const char* path, dc_mask** out);
DC_API size_t dc_mask_count(const dc_mask* mask);
DC_API void dc_mask_free(dc_mask* mask);

/* ------------------------------------------------------------------------ */
/* ITA estimators                                                           */
/* ------------------------------------------------------------------------ */

typedef enum dc_method { DC_METHOD_SEGMENTATION = 0, DC_METHOD_PATCH = 1, DC_METHOD_QUANTIZATION = 2 } dc_method;

DC_API const char* dc_method_name(dc_method method);
DC_API dc_status dc_parse_method(const char* name, dc_method* out);

typedef struct dc_estimate_options {
    int patch_size;           /* patch method, default 32 */
    int n_patches;            /* patch method, default 8 */
    uint64_t seed;            /* quantization k-means seed, default 0 */
    int clahe_clustering;     /* quantization: cluster on CLAHE L*, default 0 */
} dc_estimate_options;

DC_API void dc_estimate_options_init(dc_estimate_options* options);

typedef struct dc_estimate_result {
    double ita;                  /* degrees */
    long long n_pixels_used;     /* -1 when not applicable */
    int chosen_patch_index;      /* -1 when not applicable */
    long long chosen_cluster_size;
    int k_selected;
    double masked_fraction;      /* NaN when not applicable */
    int knee_fallback;
    int suspect_inverted_contrast;
} dc_estimate_result;

/* lesion_mask is required for segmentation and ignored otherwise;
 * options may be NULL for the defaults. */
DC_API dc_status dc_estimate_ita(const dc_image* image, const dc_mask* lesion_mask, dc_method method,
                                 const dc_estimate_options* options, dc_estimate_result* out);

/* ------------------------------------------------------------------------ */
/* Calibration                                                              */
/* ------------------------------------------------------------------------ */

typedef struct dc_calibration dc_calibration;

DC_API dc_status dc_calibration_fit(const double* raw, const double* reference, size_t n, dc_calibration** out);
DC_API dc_status dc_calibration_load(const char* path, dc_calibration** out);
DC_API dc_status dc_calibration_save(const dc_calibration* model, const char* path);
DC_API dc_status dc_calibration_params(const dc_calibration* model, double* slope, double* intercept);
DC_API double dc_calibration_apply(const dc_calibration* model, double raw_ita);
DC_API void dc_calibration_free(dc_calibration* model);

/* ------------------------------------------------------------------------ */
/* Ordinal (CORAL) model                                                    */
/* ------------------------------------------------------------------------ */

typedef struct dc_coral_model dc_coral_model;

DC_API dc_status dc_coral_load(const char* path, dc_coral_model** out);
/* Cumulative probabilities P(type > k), k = 1..5. */
DC_API dc_status dc_coral_probabilities(const dc_coral_model* model, const dc_image* image, double out[5]);
DC_API dc_status dc_coral_predict(const dc_coral_model* model, const dc_image* image, int* out_type);
DC_API void dc_coral_free(dc_coral_model* model);

/* ------------------------------------------------------------------------ */
/* Dataset commands                                                         */
/* ------------------------------------------------------------------------ */

typedef struct dc_generate_options {
    const char* out;
    size_t n;           /* >= 18, default 180 */
    uint64_t seed;
    double m_min;       /* default 0.01 */
    double m_max;       /* default 0.50 */
    int size;           /* px, default 512 */
    int overwrite;      /* replace an existing dataset directory */
} dc_generate_options;

DC_API void dc_generate_options_init(dc_generate_options* options);
/* out_hash (may be NULL) receives the 64-character content hash plus NUL. */
DC_API dc_status dc_generate(const dc_generate_options* options, char out_hash[65]);

typedef struct dc_label_options {
    const char* dataset;
    const char* out;              /* labels CSV */
    const double* ita_thresholds; /* five values, or NULL for the defaults */
} dc_label_options;

DC_API void dc_label_options_init(dc_label_options* options);
DC_API dc_status dc_label(const dc_label_options* options);

typedef struct dc_estimate_dataset_options {
    const char* dataset;
    dc_method method;
    const char* out;          /* estimates CSV */
    const char* calibration;  /* calibration JSON or NULL */
    dc_estimate_options estimator;
    double max_failure_fraction; /* default 0.10 */
} dc_estimate_dataset_options;

DC_API void dc_estimate_dataset_options_init(dc_estimate_dataset_options* options);
/* Fails with DC_ERR_INSUFFICIENT_DATA (after writing the CSV) when more
 * than max_failure_fraction of the images fail. */
DC_API dc_status dc_estimate_dataset(const dc_estimate_dataset_options* options, size_t* out_n_failed);

typedef struct dc_calibrate_options {
    const char* raw_estimates;
    const char* reference_estimates;
    const char* out;
    double fit_fraction;  /* default 0.2 */
    uint64_t seed;
} dc_calibrate_options;

typedef struct dc_calibrate_summary {
    double slope;
    double intercept;
    size_t n_fit;
    size_t n_eval;
    double bias_fit;
    double mse_raw_eval;
    double mse_calibrated_eval;
} dc_calibrate_summary;

DC_API void dc_calibrate_options_init(dc_calibrate_options* options);
DC_API dc_status dc_calibrate(const dc_calibrate_options* options, dc_calibrate_summary* out);

typedef struct dc_train_options {
    const char* dataset;
    const char* labels;       /* labels CSV or NULL for metadata gt_fp */
    const char* out;          /* model JSON */
    const char* log;          /* NULL for "<out stem>.log.csv" */
    const char* predictions;  /* NULL for "<out stem>.predictions.csv" */
    double train_fraction;    /* 0.8 */
    double val_fraction;      /* 0.1 */
    double test_fraction;     /* 0.1 */
    int max_epochs;           /* 100 */
    int batch_size;           /* 64 */
    double learning_rate;     /* 1e-3 */
    int hidden;               /* 0 = linear */
    uint64_t seed;
} dc_train_options;

typedef struct dc_train_summary {
    int best_epoch;
    double best_val_loss;
    size_t n_test;
    double test_qw_kappa;
} dc_train_summary;

DC_API void dc_train_options_init(dc_train_options* options);
DC_API dc_status dc_train(const dc_train_options* options, dc_train_summary* out);

typedef struct dc_evaluate_options {
    const char* dataset;
    const char* const* estimates;  /* n_estimates CSV paths */
    size_t n_estimates;
    const char* gt_labels;         /* labels CSV or NULL for metadata gt_fp */
    const char* predictions;       /* model predictions CSV or NULL */
    const char* out;               /* report.json */
    const char* reference_method;  /* default "segmentation" */
    size_t bootstrap_resamples;    /* default 1000 */
    double alpha;                  /* default 0.05 */
    uint64_t seed;
} dc_evaluate_options;

DC_API void dc_evaluate_options_init(dc_evaluate_options* options);
DC_API dc_status dc_evaluate(const dc_evaluate_options* options);

#ifdef __cplusplus
}
#endif

#endif /* DERMACOLOR_DERMACOLOR_H */
