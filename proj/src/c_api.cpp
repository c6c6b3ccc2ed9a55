/**
 * @file c_api.cpp
 * @brief extern "C" wrappers: exceptions become dc_status codes plus a
 *        thread-local message
 */
#include <dermacolor/dermacolor.h>

#include "calibration.hpp"
#include "color.hpp"
#include "error.hpp"
#include "estimators.hpp"
#include "io.hpp"
#include "ordinal.hpp"
#include "pipeline.hpp"

#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <new>
#include <string>

using namespace dermacolor;

struct dc_image {
    RgbImage image;
};

struct dc_mask {
    Mask mask;
};

struct dc_calibration {
    calibration::CalibrationModel model;
};

struct dc_coral_model {
    ordinal::CoralModel model;
};

namespace {

thread_local std::string last_error;

dc_status to_status(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return DC_ERR_INVALID_ARGUMENT;
        case ErrorCode::DegenerateInput: return DC_ERR_DEGENERATE_INPUT;
        case ErrorCode::InvalidThresholds: return DC_ERR_INVALID_THRESHOLDS;
        case ErrorCode::ImageTooSmall: return DC_ERR_IMAGE_TOO_SMALL;
        case ErrorCode::InvalidKernel: return DC_ERR_INVALID_KERNEL;
        case ErrorCode::InsufficientSkinPixels: return DC_ERR_INSUFFICIENT_SKIN_PIXELS;
        case ErrorCode::InvalidK: return DC_ERR_INVALID_K;
        case ErrorCode::NoKnee: return DC_ERR_NO_KNEE;
        case ErrorCode::RankDeficient: return DC_ERR_RANK_DEFICIENT;
        case ErrorCode::OutOfRange: return DC_ERR_OUT_OF_RANGE;
        case ErrorCode::InvalidParams: return DC_ERR_INVALID_PARAMS;
        case ErrorCode::InsufficientBins: return DC_ERR_INSUFFICIENT_BINS;
        case ErrorCode::InsufficientData: return DC_ERR_INSUFFICIENT_DATA;
        case ErrorCode::Io: return DC_ERR_IO;
        case ErrorCode::Format: return DC_ERR_FORMAT;
    }
    return DC_ERR_INTERNAL;
}

template <typename F>
dc_status guarded(F&& body) noexcept {
    last_error.clear();
    try {
        body();
        return DC_OK;
    } catch (const Error& e) {
        last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
    } catch (const std::exception& e) {
        last_error = e.what();
    } catch (...) {
        last_error = "unknown error";
    }
    return DC_ERR_INTERNAL;
}

void require_ptr(const void* p, const char* what) {
    if (p == nullptr) fail(ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

std::string required_path(const char* p, const char* flag) {
    if (p == nullptr || *p == '\0') fail(ErrorCode::InvalidArgument, std::string(flag) + " is required");
    return p;
}

std::optional<std::filesystem::path> optional_path(const char* p) {
    if (p == nullptr || *p == '\0') return std::nullopt;
    return std::filesystem::path(p);
}

estimators::Method to_method(dc_method m) {
    switch (m) {
        case DC_METHOD_SEGMENTATION: return estimators::Method::Segmentation;
        case DC_METHOD_PATCH: return estimators::Method::Patch;
        case DC_METHOD_QUANTIZATION: return estimators::Method::Quantization;
    }
    fail(ErrorCode::InvalidArgument, "unknown method");
}

void apply_estimator_options(const dc_estimate_options* o, estimators::PatchConfig& patch,
                             estimators::QuantizationConfig& quant) {
    if (o == nullptr) return;
    patch.patch_size = o->patch_size;
    patch.n_patches = o->n_patches;
    quant.seed = o->seed;
    quant.clahe_clustering = o->clahe_clustering != 0;
}

}  // namespace

extern "C" {

const char* dc_last_error(void) { return last_error.c_str(); }

const char* dc_status_name(dc_status status) {
    switch (status) {
        case DC_OK: return "Ok";
        case DC_ERR_INVALID_ARGUMENT: return "InvalidArgument";
        case DC_ERR_DEGENERATE_INPUT: return "DegenerateInput";
        case DC_ERR_INVALID_THRESHOLDS: return "InvalidThresholds";
        case DC_ERR_IMAGE_TOO_SMALL: return "ImageTooSmall";
        case DC_ERR_INVALID_KERNEL: return "InvalidKernel";
        case DC_ERR_INSUFFICIENT_SKIN_PIXELS: return "InsufficientSkinPixels";
        case DC_ERR_INVALID_K: return "InvalidK";
        case DC_ERR_NO_KNEE: return "NoKnee";
        case DC_ERR_RANK_DEFICIENT: return "RankDeficient";
        case DC_ERR_OUT_OF_RANGE: return "OutOfRange";
        case DC_ERR_INVALID_PARAMS: return "InvalidParams";
        case DC_ERR_INSUFFICIENT_BINS: return "InsufficientBins";
        case DC_ERR_INSUFFICIENT_DATA: return "InsufficientData";
        case DC_ERR_IO: return "Io";
        case DC_ERR_FORMAT: return "Format";
        case DC_ERR_INTERNAL: return "Internal";
    }
    return "Unknown";
}

int dc_status_exit_code(dc_status status) {
    switch (status) {
        case DC_OK: return 0;
        case DC_ERR_INVALID_ARGUMENT:
        case DC_ERR_INVALID_THRESHOLDS:
        case DC_ERR_INVALID_KERNEL:
        case DC_ERR_INVALID_K:
        case DC_ERR_OUT_OF_RANGE:
        case DC_ERR_INVALID_PARAMS: return 2;
        case DC_ERR_IO:
        case DC_ERR_FORMAT: return 3;
        case DC_ERR_INTERNAL: return 1;
        default: return 4;
    }
}

const char* dc_version(void) { return pipeline::kToolVersion; }

// Color -----------------------------------------------------------------------

dc_status dc_srgb_to_lab(uint8_t r, uint8_t g, uint8_t b, dc_lab* out) {
    return guarded([&] {
        require_ptr(out, "out");
        const auto lab = color::srgb_to_lab({r, g, b});
        *out = {lab.l_star, lab.a_star, lab.b_star};
    });
}

dc_status dc_lab_to_srgb(dc_lab lab, uint8_t out_rgb[3]) {
    return guarded([&] {
        require_ptr(out_rgb, "out_rgb");
        const auto p = color::lab_to_srgb({lab.l_star, lab.a_star, lab.b_star});
        out_rgb[0] = p.r;
        out_rgb[1] = p.g;
        out_rgb[2] = p.b;
    });
}

dc_status dc_ita(double l_star, double b_star, dc_ita_variant variant, double* out_degrees) {
    return guarded([&] {
        require_ptr(out_degrees, "out_degrees");
        const auto v = variant == DC_ITA_ARCTAN2 ? color::ItaVariant::Arctan2 : color::ItaVariant::Arctan;
        *out_degrees = color::ita(l_star, b_star, v).value;
    });
}

dc_status dc_ita_to_fitzpatrick(double ita_degrees, const double* thresholds, int* out_type) {
    return guarded([&] {
        require_ptr(out_type, "out_type");
        auto t = color::ItaThresholds::defaults();
        if (thresholds != nullptr) {
            t = color::ItaThresholds({thresholds[0], thresholds[1], thresholds[2], thresholds[3], thresholds[4]});
        }
        *out_type = color::ita_to_fitzpatrick({ita_degrees}, t).index();
    });
}

// Images ----------------------------------------------------------------------

dc_status dc_image_create(int width, int height, const uint8_t* rgb, dc_image** out) {
    return guarded([&] {
        require_ptr(out, "out");
        require_ptr(rgb, "rgb");
        if (width < 1 || height < 1) fail(ErrorCode::InvalidArgument, "image dimensions must be positive");
        const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3;
        *out = new dc_image{RgbImage(width, height, std::vector<std::uint8_t>(rgb, rgb + n))};
    });
}

dc_status dc_image_load_png(const char* path, dc_image** out) {
    return guarded([&] {
        require_ptr(out, "out");
        *out = new dc_image{io::read_png_rgb(required_path(path, "path"))};
    });
}

dc_status dc_image_save_png(const dc_image* image, const char* path) {
    return guarded([&] {
        require_ptr(image, "image");
        io::write_png_rgb(required_path(path, "path"), image->image);
    });
}

int dc_image_width(const dc_image* image) { return image ? image->image.width() : 0; }
int dc_image_height(const dc_image* image) { return image ? image->image.height() : 0; }
const uint8_t* dc_image_data(const dc_image* image) { return image ? image->image.bytes().data() : nullptr; }
void dc_image_free(dc_image* image) { delete image; }

dc_status dc_mask_create(int width, int height, const uint8_t* values, dc_mask** out) {
    return guarded([&] {
        require_ptr(out, "out");
        require_ptr(values, "values");
        if (width < 1 || height < 1) fail(ErrorCode::InvalidArgument, "mask dimensions must be positive");
        Mask m(width, height);
        for (std::size_t i = 0; i < m.size(); ++i) m.set(i, values[i] != 0);
        *out = new dc_mask{std::move(m)};
    });
}

dc_status dc_mask_load_png(const char* path, dc_mask** out) {
    return guarded([&] {
        require_ptr(out, "out");
        *out = new dc_mask{io::read_png_mask(required_path(path, "path"))};
    });
}

size_t dc_mask_count(const dc_mask* mask) { return mask ? mask->mask.count() : 0; }
void dc_mask_free(dc_mask* mask) { delete mask; }

// Estimators ------------------------------------------------------------------

const char* dc_method_name(dc_method method) {
    switch (method) {
        case DC_METHOD_SEGMENTATION:
        case DC_METHOD_PATCH:
        case DC_METHOD_QUANTIZATION: return estimators::method_name(to_method(method));
    }
    return "unknown";
}

dc_status dc_parse_method(const char* name, dc_method* out) {
    return guarded([&] {
        require_ptr(out, "out");
        require_ptr(name, "name");
        switch (estimators::parse_method(name)) {
            case estimators::Method::Segmentation: *out = DC_METHOD_SEGMENTATION; break;
            case estimators::Method::Patch: *out = DC_METHOD_PATCH; break;
            case estimators::Method::Quantization: *out = DC_METHOD_QUANTIZATION; break;
        }
    });
}

void dc_estimate_options_init(dc_estimate_options* options) {
    if (!options) return;
    const estimators::PatchConfig p;
    const estimators::QuantizationConfig q;
    options->patch_size = p.patch_size;
    options->n_patches = p.n_patches;
    options->seed = q.seed;
    options->clahe_clustering = q.clahe_clustering ? 1 : 0;
}

dc_status dc_estimate_ita(const dc_image* image, const dc_mask* lesion_mask, dc_method method,
                          const dc_estimate_options* options, dc_estimate_result* out) {
    return guarded([&] {
        require_ptr(image, "image");
        require_ptr(out, "out");
        estimators::PatchConfig patch;
        estimators::QuantizationConfig quant;
        apply_estimator_options(options, patch, quant);
        estimators::ItaEstimate e;
        switch (to_method(method)) {
            case estimators::Method::Segmentation:
                require_ptr(lesion_mask, "lesion_mask");
                e = estimators::estimate_segmentation(color::to_lab(image->image), lesion_mask->mask);
                break;
            case estimators::Method::Patch: e = estimators::estimate_patch(image->image, patch); break;
            case estimators::Method::Quantization: e = estimators::estimate_quantization(image->image, quant); break;
        }
        const auto& d = e.diagnostics;
        out->ita = e.ita.value;
        out->n_pixels_used = d.n_pixels_used ? static_cast<long long>(*d.n_pixels_used) : -1;
        out->chosen_patch_index = d.chosen_patch_index.value_or(-1);
        out->chosen_cluster_size = d.chosen_cluster_size ? static_cast<long long>(*d.chosen_cluster_size) : -1;
        out->k_selected = d.k_selected.value_or(-1);
        out->masked_fraction = d.masked_fraction.value_or(std::numeric_limits<double>::quiet_NaN());
        out->knee_fallback = d.knee_fallback ? 1 : 0;
        out->suspect_inverted_contrast = d.suspect_inverted_contrast ? 1 : 0;
    });
}

// Calibration -----------------------------------------------------------------

dc_status dc_calibration_fit(const double* raw, const double* reference, size_t n, dc_calibration** out) {
    return guarded([&] {
        require_ptr(out, "out");
        require_ptr(raw, "raw");
        require_ptr(reference, "reference");
        *out = new dc_calibration{calibration::fit_ols({raw, n}, {reference, n})};
    });
}

dc_status dc_calibration_load(const char* path, dc_calibration** out) {
    return guarded([&] {
        require_ptr(out, "out");
        calibration::CalibrationModel m;
        calibration::from_json(io::read_json(required_path(path, "path")), m);
        *out = new dc_calibration{m};
    });
}

dc_status dc_calibration_save(const dc_calibration* model, const char* path) {
    return guarded([&] {
        require_ptr(model, "model");
        nlohmann::json j;
        calibration::to_json(j, model->model);
        io::write_json(required_path(path, "path"), j);
    });
}

dc_status dc_calibration_params(const dc_calibration* model, double* slope, double* intercept) {
    return guarded([&] {
        require_ptr(model, "model");
        if (slope) *slope = model->model.slope;
        if (intercept) *intercept = model->model.intercept;
    });
}

double dc_calibration_apply(const dc_calibration* model, double raw_ita) {
    if (!model) return std::numeric_limits<double>::quiet_NaN();
    return calibration::apply(model->model, {raw_ita}).value;
}

void dc_calibration_free(dc_calibration* model) { delete model; }

// CORAL -----------------------------------------------------------------------

dc_status dc_coral_load(const char* path, dc_coral_model** out) {
    return guarded([&] {
        require_ptr(out, "out");
        ordinal::CoralModel m;
        ordinal::from_json(io::read_json(required_path(path, "path")), m);
        *out = new dc_coral_model{std::move(m)};
    });
}

dc_status dc_coral_probabilities(const dc_coral_model* model, const dc_image* image, double out[5]) {
    return guarded([&] {
        require_ptr(model, "model");
        require_ptr(image, "image");
        require_ptr(out, "out");
        const auto p = ordinal::coral_forward(model->model, ordinal::featurize(image->image, model->model.feature_config));
        std::copy(p.begin(), p.end(), out);
    });
}

dc_status dc_coral_predict(const dc_coral_model* model, const dc_image* image, int* out_type) {
    return guarded([&] {
        require_ptr(model, "model");
        require_ptr(image, "image");
        require_ptr(out_type, "out_type");
        *out_type = ordinal::predict(model->model, image->image).index();
    });
}

void dc_coral_free(dc_coral_model* model) { delete model; }

// Dataset commands ------------------------------------------------------------

void dc_generate_options_init(dc_generate_options* o) {
    if (!o) return;
    const pipeline::GenerateOptions d;
    *o = {nullptr, d.n, d.seed, d.m_min, d.m_max, d.size, 0};
}

dc_status dc_generate(const dc_generate_options* o, char out_hash[65]) {
    return guarded([&] {
        require_ptr(o, "options");
        pipeline::GenerateOptions g;
        g.out = required_path(o->out, "--out");
        g.n = o->n;
        g.seed = o->seed;
        g.m_min = o->m_min;
        g.m_max = o->m_max;
        g.size = o->size;
        g.overwrite = o->overwrite != 0;
        const auto s = pipeline::generate(g);
        if (out_hash) {
            std::strncpy(out_hash, s.content_hash.c_str(), 64);
            out_hash[64] = '\0';
        }
    });
}

void dc_label_options_init(dc_label_options* o) {
    if (o) *o = {nullptr, nullptr, nullptr};
}

dc_status dc_label(const dc_label_options* o) {
    return guarded([&] {
        require_ptr(o, "options");
        pipeline::LabelOptions l;
        l.dataset = required_path(o->dataset, "--dataset");
        l.out = required_path(o->out, "--out");
        if (o->ita_thresholds) {
            const double* t = o->ita_thresholds;
            l.ita_thresholds = color::ItaThresholds({t[0], t[1], t[2], t[3], t[4]});
        }
        pipeline::label(l);
    });
}

void dc_estimate_dataset_options_init(dc_estimate_dataset_options* o) {
    if (!o) return;
    *o = {};
    o->method = DC_METHOD_SEGMENTATION;
    dc_estimate_options_init(&o->estimator);
    o->max_failure_fraction = pipeline::EstimateOptions{}.max_failure_fraction;
}

dc_status dc_estimate_dataset(const dc_estimate_dataset_options* o, size_t* out_n_failed) {
    return guarded([&] {
        require_ptr(o, "options");
        pipeline::EstimateOptions e;
        e.dataset = required_path(o->dataset, "--dataset");
        e.method = to_method(o->method);
        e.out = required_path(o->out, "--out");
        e.calibration = optional_path(o->calibration);
        apply_estimator_options(&o->estimator, e.patch, e.quantization);
        e.max_failure_fraction = o->max_failure_fraction;
        if (out_n_failed) *out_n_failed = 0;
        try {
            const auto s = pipeline::estimate(e);
            if (out_n_failed) *out_n_failed = s.n_failed;
        } catch (const Error& err) {
            if (out_n_failed && err.code() == ErrorCode::InsufficientData) {
                std::size_t failed = 0;
                for (const auto& r : pipeline::read_estimates(e.out)) failed += r.ita ? 0 : 1;
                *out_n_failed = failed;
            }
            throw;
        }
    });
}

void dc_calibrate_options_init(dc_calibrate_options* o) {
    if (!o) return;
    const pipeline::CalibrateOptions d;
    *o = {nullptr, nullptr, nullptr, d.fit_fraction, d.seed};
}

dc_status dc_calibrate(const dc_calibrate_options* o, dc_calibrate_summary* out) {
    return guarded([&] {
        require_ptr(o, "options");
        pipeline::CalibrateOptions c;
        c.raw_estimates = required_path(o->raw_estimates, "--estimates");
        c.reference_estimates = required_path(o->reference_estimates, "--reference");
        c.out = required_path(o->out, "--out");
        c.fit_fraction = o->fit_fraction;
        c.seed = o->seed;
        const auto s = pipeline::calibrate(c);
        if (out) {
            *out = {s.model.slope,  s.model.intercept, s.model.n_fit,          s.n_eval,
                    s.bias_fit,     s.mse_raw_eval,    s.mse_calibrated_eval};
        }
    });
}

void dc_train_options_init(dc_train_options* o) {
    if (!o) return;
    const ordinal::TrainConfig d;
    *o = {};
    o->train_fraction = d.train_fraction;
    o->val_fraction = d.val_fraction;
    o->test_fraction = d.test_fraction;
    o->max_epochs = d.max_epochs;
    o->batch_size = d.batch_size;
    o->learning_rate = d.learning_rate;
    o->hidden = d.hidden;
    o->seed = d.seed;
}

dc_status dc_train(const dc_train_options* o, dc_train_summary* out) {
    return guarded([&] {
        require_ptr(o, "options");
        pipeline::TrainOptions t;
        t.dataset = required_path(o->dataset, "--dataset");
        t.labels = optional_path(o->labels);
        t.out = required_path(o->out, "--out");
        t.log = optional_path(o->log);
        t.predictions = optional_path(o->predictions);
        t.config.train_fraction = o->train_fraction;
        t.config.val_fraction = o->val_fraction;
        t.config.test_fraction = o->test_fraction;
        t.config.max_epochs = o->max_epochs;
        t.config.batch_size = o->batch_size;
        t.config.learning_rate = o->learning_rate;
        t.config.hidden = o->hidden;
        t.config.seed = o->seed;
        const auto s = pipeline::train(t);
        if (out) *out = {s.best_epoch, s.best_val_loss, s.n_test, s.test_qw_kappa};
    });
}

void dc_evaluate_options_init(dc_evaluate_options* o) {
    if (!o) return;
    const pipeline::EvaluateOptions d;
    *o = {};
    o->reference_method = "segmentation";
    o->bootstrap_resamples = d.bootstrap_resamples;
    o->alpha = d.alpha;
    o->seed = d.seed;
}

dc_status dc_evaluate(const dc_evaluate_options* o) {
    return guarded([&] {
        require_ptr(o, "options");
        pipeline::EvaluateOptions e;
        e.dataset = required_path(o->dataset, "--dataset");
        if (o->n_estimates > 0) require_ptr(o->estimates, "estimates");
        for (std::size_t i = 0; i < o->n_estimates; ++i) e.estimates.emplace_back(required_path(o->estimates[i], "--estimates"));
        e.gt_labels = optional_path(o->gt_labels);
        e.predictions = optional_path(o->predictions);
        e.out = required_path(o->out, "--out");
        if (o->reference_method) e.reference_method = o->reference_method;
        e.bootstrap_resamples = o->bootstrap_resamples;
        e.alpha = o->alpha;
        e.seed = o->seed;
        pipeline::evaluate(e);
    });
}

}  // extern "C"
