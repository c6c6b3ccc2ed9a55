/**
 * @file pipeline.hpp
 * @brief Dataset-level commands: generate, label, estimate, calibrate,
 *        train and evaluate. Each writes its outputs plus a run manifest.
 */
#pragma once

#include "calibration.hpp"
#include "color.hpp"
#include "estimators.hpp"
#include "io.hpp"
#include "ordinal.hpp"
#include "synth.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dermacolor::pipeline {

namespace fs = std::filesystem;

extern const char* const kToolVersion;

/// Sidecar manifest path for a file output: "<file>.manifest.json".
fs::path manifest_path_for(const fs::path& output);

struct RunManifest {
    std::string command;
    nlohmann::json config;
    std::optional<fs::path> dataset;
    std::string dataset_hash;
    std::uint64_t seed = 0;
    std::string started_at;
    std::string finished_at;
    std::vector<std::string> outputs;
    nlohmann::json results;
};

nlohmann::json to_json(const RunManifest& m);
void write_manifest(const fs::path& path, RunManifest m);

// =============================================================================
// generate
// =============================================================================

struct GenerateOptions {
    fs::path out;
    std::size_t n = 180;
    std::uint64_t seed = 0;
    double m_min = 0.01;
    double m_max = 0.50;
    int size = 512;
    bool overwrite = false;  ///< replace an existing dataset directory (one holding a manifest.json)
};

struct GenerateSummary {
    std::size_t n = 0;
    std::string content_hash;
    synth::MelanosomeThresholds thresholds;
};

std::string sample_id(std::size_t index);

GenerateSummary generate(const GenerateOptions& options);

// =============================================================================
// label
// =============================================================================

struct LabelOptions {
    fs::path dataset;
    fs::path out;  ///< CSV: id, mean_ita, provisional_fp, gt_fp
    color::ItaThresholds ita_thresholds = color::ItaThresholds::defaults();
};

synth::GtLabels label(const LabelOptions& options);

// =============================================================================
// estimate
// =============================================================================

struct EstimateOptions {
    fs::path dataset;
    estimators::Method method = estimators::Method::Segmentation;
    fs::path out;
    std::optional<fs::path> calibration;
    estimators::PatchConfig patch{};
    estimators::QuantizationConfig quantization{};
    double max_failure_fraction = 0.10;
};

struct EstimateSummary {
    std::size_t n = 0;
    std::size_t n_failed = 0;
};

/// Writes the CSV even when images fail; throws InsufficientData afterwards
/// if more than max_failure_fraction of them did.
EstimateSummary estimate(const EstimateOptions& options);

/// One parsed row of an estimates CSV.
struct EstimateRow {
    std::string id;
    std::string method;
    std::optional<double> ita;  ///< empty for failed rows
    std::optional<double> raw_ita;
    std::string error_code;
};

std::vector<EstimateRow> read_estimates(const fs::path& path);

// =============================================================================
// calibrate
// =============================================================================

struct CalibrateOptions {
    fs::path raw_estimates;        ///< method to calibrate (e.g. patch)
    fs::path reference_estimates;  ///< reference (e.g. segmentation)
    fs::path out;                  ///< model JSON
    double fit_fraction = 0.2;
    std::uint64_t seed = 0;
};

struct CalibrateSummary {
    calibration::CalibrationModel model;
    std::size_t n_eval = 0;
    double bias_fit = 0.0;  ///< mean(calibrated - reference) on the fit split
    double mse_raw_eval = 0.0;
    double mse_calibrated_eval = 0.0;
};

CalibrateSummary calibrate(const CalibrateOptions& options);

// =============================================================================
// train
// =============================================================================

struct TrainOptions {
    fs::path dataset;
    std::optional<fs::path> labels;  ///< labels CSV; metadata gt_fp otherwise
    fs::path out;                    ///< model JSON
    std::optional<fs::path> log;     ///< default "<out stem>.log.csv"
    std::optional<fs::path> predictions;  ///< default "<out stem>.predictions.csv"
    ordinal::TrainConfig config{};
};

struct TrainSummary {
    int best_epoch = 0;
    double best_val_loss = 0.0;
    std::size_t n_test = 0;
    double test_qw_kappa = 0.0;
    fs::path log;
    fs::path predictions;
};

TrainSummary train(const TrainOptions& options);

// =============================================================================
// evaluate
// =============================================================================

struct EvaluateOptions {
    fs::path dataset;
    std::vector<fs::path> estimates;
    std::optional<fs::path> gt_labels;
    std::optional<fs::path> predictions;  ///< model predictions CSV from train
    fs::path out;                         ///< report.json
    std::string reference_method = "segmentation";
    std::size_t bootstrap_resamples = 1000;
    double alpha = 0.05;
    std::uint64_t seed = 0;
};

/// Writes the report plus "<out stem>.bland_altman.csv" and
/// "<out stem>.confusion.csv"; returns the report.
nlohmann::json evaluate(const EvaluateOptions& options);

}  // namespace dermacolor::pipeline
