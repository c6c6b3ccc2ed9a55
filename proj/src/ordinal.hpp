/**
 * @file ordinal.hpp
 * @brief CORAL ordinal regression of Fitzpatrick type from blurred,
 *        downscaled images
 */
#pragma once

#include "color.hpp"
#include "raster.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace dermacolor::ordinal {

inline constexpr int kRanks = 5;  ///< K - 1 cumulative tasks for six types
inline constexpr double kProbEpsilon = 1e-7;

struct FeatureConfig {
    double blur_sigma = 5.0;
    int kernel_size = 21;
    int resize = 32;
    int channels = 3;

    std::size_t dimension() const noexcept {
        return static_cast<std::size_t>(resize) * static_cast<std::size_t>(resize) *
               static_cast<std::size_t>(channels);
    }
};

/// Blur at native resolution, resize to resize x resize, scale to [0, 1] and
/// flatten channel-major (all R, then all G, then all B).
std::vector<double> featurize(const RgbImage& img, const FeatureConfig& config = {});

struct TrainMeta {
    std::uint64_t seed = 0;
    int epochs_run = 0;
    int best_epoch = 0;  ///< 1-based
    double best_val_loss = 0.0;
    std::size_t n_train = 0;
    std::size_t n_val = 0;
    std::size_t n_test = 0;
    bool biases_resorted = false;
};

/// Shared-weight cumulative-logit model. With z the standardized input,
/// the score is w . z when hidden == 0 and w . tanh(W1 z + b1) otherwise,
/// W1 stored row-major (hidden x d).
struct CoralModel {
    std::size_t d = 0;
    int hidden = 0;
    /// Per-feature standardization (x - mean) / scale applied before the
    /// first layer; empty means identity.
    std::vector<double> input_mean;
    std::vector<double> input_scale;
    std::vector<double> hidden_weights;
    std::vector<double> hidden_biases;
    std::vector<double> weights;  ///< length d, or hidden when hidden > 0
    std::array<double, kRanks> biases{};
    FeatureConfig feature_config;
    TrainMeta train_meta;

    static CoralModel zeros(std::size_t d, int hidden = 0);
    std::size_t parameter_count() const noexcept;
};

double score(const CoralModel& model, std::span<const double> x);
std::array<double, kRanks> coral_logits(const CoralModel& model, std::span<const double> x);
/// P(type > k) for k = 1..5.
std::array<double, kRanks> coral_forward(const CoralModel& model, std::span<const double> x);

struct CoralLoss {
    double loss = 0.0;
    std::array<double, kRanks> d_logits{};  ///< derivative of the loss per cumulative logit
};

/// Sum over the five tasks of the binary cross-entropy between P(type > k)
/// and 1[gt > k], with probabilities clipped to [eps, 1 - eps].
CoralLoss coral_loss(std::span<const double, kRanks> probs, color::FitzpatrickType gt);

/// Parameter gradient laid out as hidden_weights, hidden_biases, weights,
/// biases (the first two empty for a linear model).
struct Gradient {
    double loss = 0.0;
    std::vector<double> values;
};

Gradient loss_gradient(const CoralModel& model, std::span<const double> x, color::FitzpatrickType gt);

/// Flat parameter access in the same layout as Gradient::values.
std::vector<double> flatten(const CoralModel& model);
void unflatten(CoralModel& model, std::span<const double> params);

color::FitzpatrickType predict_from_probs(std::span<const double, kRanks> probs);
color::FitzpatrickType predict(const CoralModel& model, std::span<const double> features);
color::FitzpatrickType predict(const CoralModel& model, const RgbImage& img);

/// Sorts biases into descending order; returns whether anything moved.
bool sort_biases(CoralModel& model);

// =============================================================================
// Training
// =============================================================================

enum class Split : std::uint8_t { Train, Validation, Test };

struct TrainConfig {
    double train_fraction = 0.8;
    double val_fraction = 0.1;
    double test_fraction = 0.1;
    int max_epochs = 100;
    int batch_size = 64;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    int hidden = 0;
    FeatureConfig feature_config{};

    void validate() const;
};

/// Per-class split with round(fraction * n_c) validation and test members
/// (at least one each for classes with three or more images).
std::vector<Split> stratified_split(std::span<const color::FitzpatrickType> labels, const TrainConfig& config);

struct EpochLog {
    int epoch = 0;  ///< 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    CoralModel model;
    std::vector<EpochLog> log;
    std::vector<Split> split;
};

/// Mini-batch Adam on the mean per-sample CORAL loss. The returned model is
/// the checkpoint with the lowest validation loss, biases sorted.
/// features is row-major n x d.
TrainResult train(std::span<const double> features, std::span<const color::FitzpatrickType> labels,
                  const TrainConfig& config);

/// Same, with a caller-supplied split.
TrainResult train(std::span<const double> features, std::span<const color::FitzpatrickType> labels,
                  std::span<const Split> split, const TrainConfig& config);

double mean_loss(const CoralModel& model, std::span<const double> features,
                 std::span<const color::FitzpatrickType> labels, std::span<const std::size_t> rows);

void to_json(nlohmann::json& j, const CoralModel& m);
void from_json(const nlohmann::json& j, CoralModel& m);

}  // namespace dermacolor::ordinal
