/**
 * @file ordinal.cpp
 */
#include "ordinal.hpp"

#include "error.hpp"
#include "imgproc.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace dermacolor::ordinal {

namespace {

double sigmoid(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void require_dimension(const CoralModel& model, std::span<const double> x) {
    if (x.size() != model.d) {
        fail(ErrorCode::InvalidArgument,
             "feature vector has length " + std::to_string(x.size()) + ", model expects " + std::to_string(model.d));
    }
}

std::size_t hidden_size(const CoralModel& m) noexcept { return static_cast<std::size_t>(m.hidden); }

/// Standardized copy of x, or x itself when the model has no statistics.
std::span<const double> standardize(const CoralModel& m, std::span<const double> x, std::vector<double>& buffer) {
    if (m.input_mean.empty()) return x;
    buffer.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) buffer[i] = (x[i] - m.input_mean[i]) / m.input_scale[i];
    return buffer;
}

/// Hidden activations (empty for a linear model).
std::vector<double> hidden_activations(const CoralModel& m, std::span<const double> x) {
    const std::size_t h = hidden_size(m);
    std::vector<double> act(h);
    for (std::size_t j = 0; j < h; ++j) {
        const double* row = m.hidden_weights.data() + j * m.d;
        double z = m.hidden_biases[j];
        for (std::size_t i = 0; i < m.d; ++i) z += row[i] * x[i];
        act[j] = std::tanh(z);
    }
    return act;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

/// Adds scale * gradient into grad (Gradient layout) and returns the loss.
double accumulate_gradient(const CoralModel& m, std::span<const double> raw, color::FitzpatrickType gt, double* grad,
                           double scale) {
    std::vector<double> buffer;
    const auto x = standardize(m, raw, buffer);
    const std::size_t h = hidden_size(m);
    const auto act = hidden_activations(m, x);
    const std::span<const double> input = h > 0 ? std::span<const double>(act) : x;
    const double s = dot(m.weights, input);
    std::array<double, kRanks> probs{};
    for (std::size_t k = 0; k < kRanks; ++k) probs[k] = sigmoid(s + m.biases[k]);
    const CoralLoss cl = coral_loss(probs, gt);
    const double d_score = std::accumulate(cl.d_logits.begin(), cl.d_logits.end(), 0.0);

    double* g_hw = grad;
    double* g_hb = g_hw + h * m.d;
    double* g_w = g_hb + h;
    double* g_b = g_w + m.weights.size();
    for (std::size_t i = 0; i < input.size(); ++i) g_w[i] += scale * d_score * input[i];
    for (std::size_t k = 0; k < kRanks; ++k) g_b[k] += scale * cl.d_logits[k];
    for (std::size_t j = 0; j < h; ++j) {
        const double dz = scale * d_score * m.weights[j] * (1.0 - act[j] * act[j]);
        if (dz == 0.0) continue;
        g_hb[j] += dz;
        double* row = g_hw + j * m.d;
        for (std::size_t i = 0; i < m.d; ++i) row[i] += dz * x[i];
    }
    return cl.loss;
}

}  // namespace

// =============================================================================
// Features
// =============================================================================

std::vector<double> featurize(const RgbImage& img, const FeatureConfig& config) {
    if (img.width() < 1 || img.height() < 1) fail(ErrorCode::InvalidArgument, "featurize needs a non-empty image");
    if (config.channels != 3 || config.resize < 1) {
        fail(ErrorCode::InvalidArgument, "feature config needs 3 channels and a positive resize");
    }
    const std::size_t plane = static_cast<std::size_t>(config.resize) * static_cast<std::size_t>(config.resize);
    std::vector<double> out(config.dimension());
    const auto bytes = img.bytes();
    for (int c = 0; c < 3; ++c) {
        Raster<double> channel(img.width(), img.height());
        auto px = channel.pixels();
        for (std::size_t i = 0; i < px.size(); ++i) px[i] = bytes[3 * i + static_cast<std::size_t>(c)];
        const auto blurred = imgproc::gaussian_blur(channel, config.blur_sigma, config.kernel_size);
        const auto small = imgproc::resize(blurred, config.resize, config.resize);
        const auto sp = small.pixels();
        for (std::size_t i = 0; i < plane; ++i) {
            out[static_cast<std::size_t>(c) * plane + i] = std::clamp(sp[i] / 255.0, 0.0, 1.0);
        }
    }
    return out;
}

// =============================================================================
// Model
// =============================================================================

CoralModel CoralModel::zeros(std::size_t d, int hidden) {
    if (d == 0 || hidden < 0) fail(ErrorCode::InvalidArgument, "model needs d > 0 and hidden >= 0");
    CoralModel m;
    m.d = d;
    m.hidden = hidden;
    const auto h = static_cast<std::size_t>(hidden);
    m.hidden_weights.assign(h * d, 0.0);
    m.hidden_biases.assign(h, 0.0);
    m.weights.assign(hidden > 0 ? h : d, 0.0);
    return m;
}

std::size_t CoralModel::parameter_count() const noexcept {
    return hidden_weights.size() + hidden_biases.size() + weights.size() + kRanks;
}

double score(const CoralModel& model, std::span<const double> raw) {
    require_dimension(model, raw);
    std::vector<double> buffer;
    const auto x = standardize(model, raw, buffer);
    if (model.hidden == 0) return dot(model.weights, x);
    const auto act = hidden_activations(model, x);
    return dot(model.weights, act);
}

std::array<double, kRanks> coral_logits(const CoralModel& model, std::span<const double> x) {
    const double s = score(model, x);
    std::array<double, kRanks> logits{};
    for (std::size_t k = 0; k < kRanks; ++k) logits[k] = s + model.biases[k];
    return logits;
}

std::array<double, kRanks> coral_forward(const CoralModel& model, std::span<const double> x) {
    auto p = coral_logits(model, x);
    for (double& v : p) v = sigmoid(v);
    return p;
}

CoralLoss coral_loss(std::span<const double, kRanks> probs, color::FitzpatrickType gt) {
    CoralLoss out;
    for (std::size_t k = 0; k < kRanks; ++k) {
        const double y = gt.index() > static_cast<int>(k) + 1 ? 1.0 : 0.0;
        const double p = probs[k];
        const double pc = std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
        out.loss -= y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc);
        // d/dz of the BCE through the sigmoid; zero where the clip is active
        out.d_logits[k] = (p == pc) ? p - y : 0.0;
    }
    return out;
}

Gradient loss_gradient(const CoralModel& model, std::span<const double> x, color::FitzpatrickType gt) {
    require_dimension(model, x);
    Gradient g;
    g.values.assign(model.parameter_count(), 0.0);
    g.loss = accumulate_gradient(model, x, gt, g.values.data(), 1.0);
    return g;
}

std::vector<double> flatten(const CoralModel& m) {
    std::vector<double> p;
    p.reserve(m.parameter_count());
    p.insert(p.end(), m.hidden_weights.begin(), m.hidden_weights.end());
    p.insert(p.end(), m.hidden_biases.begin(), m.hidden_biases.end());
    p.insert(p.end(), m.weights.begin(), m.weights.end());
    p.insert(p.end(), m.biases.begin(), m.biases.end());
    return p;
}

void unflatten(CoralModel& m, std::span<const double> p) {
    if (p.size() != m.parameter_count()) fail(ErrorCode::InvalidArgument, "parameter vector has the wrong length");
    auto it = p.begin();
    auto take = [&](auto& dst) {
        std::copy(it, it + static_cast<std::ptrdiff_t>(dst.size()), dst.begin());
        it += static_cast<std::ptrdiff_t>(dst.size());
    };
    take(m.hidden_weights);
    take(m.hidden_biases);
    take(m.weights);
    take(m.biases);
}

color::FitzpatrickType predict_from_probs(std::span<const double, kRanks> probs) {
    int count = 0;
    for (double p : probs) count += p > 0.5 ? 1 : 0;
    return color::FitzpatrickType(1 + count);
}

color::FitzpatrickType predict(const CoralModel& model, std::span<const double> features) {
    const auto p = coral_forward(model, features);
    return predict_from_probs(p);
}

color::FitzpatrickType predict(const CoralModel& model, const RgbImage& img) {
    return predict(model, featurize(img, model.feature_config));
}

bool sort_biases(CoralModel& model) {
    const auto before = model.biases;
    std::sort(model.biases.begin(), model.biases.end(), std::greater<>());
    return before != model.biases;
}

// =============================================================================
// Training
// =============================================================================

void TrainConfig::validate() const {
    const bool fractions_ok = train_fraction > 0.0 && val_fraction > 0.0 && test_fraction >= 0.0 &&
                              std::abs(train_fraction + val_fraction + test_fraction - 1.0) < 1e-9;
    if (!fractions_ok) fail(ErrorCode::InvalidArgument, "split fractions must be positive and sum to 1");
    if (max_epochs < 1) fail(ErrorCode::InvalidArgument, "max_epochs must be >= 1");
    if (batch_size < 1) fail(ErrorCode::InvalidArgument, "batch_size must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        fail(ErrorCode::InvalidArgument, "learning_rate must be positive");
    }
    if (hidden < 0) fail(ErrorCode::InvalidArgument, "hidden must be >= 0");
}

std::vector<Split> stratified_split(std::span<const color::FitzpatrickType> labels, const TrainConfig& config) {
    config.validate();
    std::vector<Split> split(labels.size(), Split::Train);
    Rng rng(config.seed);
    for (int c = 1; c <= color::kFitzpatrickTypes; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i].index() == c) members.push_back(i);
        }
        std::shuffle(members.begin(), members.end(), rng);
        const double n = static_cast<double>(members.size());
        auto n_val = static_cast<std::size_t>(std::lround(config.val_fraction * n));
        auto n_test = static_cast<std::size_t>(std::lround(config.test_fraction * n));
        if (members.size() >= 3) {
            n_val = std::max<std::size_t>(n_val, 1);
            if (config.test_fraction > 0.0) n_test = std::max<std::size_t>(n_test, 1);
        }
        n_val = std::min(n_val, members.size());
        n_test = std::min(n_test, members.size() - n_val);
        for (std::size_t i = 0; i < n_val; ++i) split[members[i]] = Split::Validation;
        for (std::size_t i = n_val; i < n_val + n_test; ++i) split[members[i]] = Split::Test;
    }
    return split;
}

double mean_loss(const CoralModel& model, std::span<const double> features,
                 std::span<const color::FitzpatrickType> labels, std::span<const std::size_t> rows) {
    if (rows.empty()) fail(ErrorCode::InsufficientData, "mean_loss over an empty set");
    double total = 0.0;
    for (std::size_t r : rows) {
        const auto x = features.subspan(r * model.d, model.d);
        const auto p = coral_forward(model, x);
        total += coral_loss(p, labels[r]).loss;
    }
    return total / static_cast<double>(rows.size());
}

TrainResult train(std::span<const double> features, std::span<const color::FitzpatrickType> labels,
                  const TrainConfig& config) {
    return train(features, labels, stratified_split(labels, config), config);
}

TrainResult train(std::span<const double> features, std::span<const color::FitzpatrickType> labels,
                  std::span<const Split> split, const TrainConfig& config) {
    config.validate();
    const std::size_t n = labels.size();
    if (n == 0 || features.size() % n != 0 || split.size() != n) {
        fail(ErrorCode::InvalidArgument, "features, labels and split sizes disagree");
    }
    const std::size_t d = features.size() / n;

    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> val_rows;
    std::size_t n_test = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (split[i] == Split::Train) train_rows.push_back(i);
        if (split[i] == Split::Validation) val_rows.push_back(i);
        if (split[i] == Split::Test) ++n_test;
    }
    std::array<std::size_t, 6> class_counts{};
    for (std::size_t r : train_rows) ++class_counts[static_cast<std::size_t>(labels[r].index() - 1)];
    const auto classes = std::count_if(class_counts.begin(), class_counts.end(), [](std::size_t c) { return c > 0; });
    if (classes < 2) fail(ErrorCode::InsufficientData, "training split needs at least 2 Fitzpatrick classes");
    if (val_rows.empty()) fail(ErrorCode::InsufficientData, "validation split is empty");

    CoralModel model = CoralModel::zeros(d, config.hidden);
    model.feature_config = config.feature_config;
    model.input_mean.assign(d, 0.0);
    model.input_scale.assign(d, 0.0);
    for (std::size_t r : train_rows) {
        for (std::size_t i = 0; i < d; ++i) model.input_mean[i] += features[r * d + i];
    }
    for (double& v : model.input_mean) v /= static_cast<double>(train_rows.size());
    for (std::size_t r : train_rows) {
        for (std::size_t i = 0; i < d; ++i) {
            const double dv = features[r * d + i] - model.input_mean[i];
            model.input_scale[i] += dv * dv;
        }
    }
    for (double& v : model.input_scale) v = std::max(std::sqrt(v / static_cast<double>(train_rows.size())), 1e-6);
    Rng init_rng(derive_seed(config.seed, 0xC0FFEE));
    if (config.hidden > 0) {
        const double a = std::sqrt(6.0 / static_cast<double>(d + hidden_size(model)));
        std::uniform_real_distribution<double> u(-a, a);
        for (double& w : model.hidden_weights) w = u(init_rng);
        const double b = 1.0 / std::sqrt(static_cast<double>(config.hidden));
        std::uniform_real_distribution<double> v(-b, b);
        for (double& w : model.weights) w = v(init_rng);
    }
    // biases start at the log-odds of the cumulative training prevalences
    for (std::size_t k = 0; k < kRanks; ++k) {
        std::size_t above = 0;
        for (std::size_t c = k + 1; c < 6; ++c) above += class_counts[c];
        const double p = std::clamp((static_cast<double>(above) + 0.5) / (static_cast<double>(train_rows.size()) + 1.0),
                                    1e-3, 1.0 - 1e-3);
        model.biases[k] = std::log(p / (1.0 - p));
    }

    std::vector<double> params = flatten(model);
    std::vector<double> m1(params.size(), 0.0);
    std::vector<double> m2(params.size(), 0.0);
    std::vector<double> grad(params.size(), 0.0);
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double adam_eps = 1e-8;
    long step = 0;

    TrainResult result;
    result.split.assign(split.begin(), split.end());
    CoralModel best = model;
    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = 0;
    const auto batch = static_cast<std::size_t>(config.batch_size);

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::vector<std::size_t> order = train_rows;
        Rng shuffle_rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t stop = std::min(order.size(), start + batch);
            const double scale = 1.0 / static_cast<double>(stop - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t i = start; i < stop; ++i) {
                const std::size_t r = order[i];
                epoch_loss += accumulate_gradient(model, features.subspan(r * d, d), labels[r], grad.data(), scale);
            }
            ++step;
            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (std::size_t p = 0; p < params.size(); ++p) {
                m1[p] = beta1 * m1[p] + (1.0 - beta1) * grad[p];
                m2[p] = beta2 * m2[p] + (1.0 - beta2) * grad[p] * grad[p];
                params[p] -= config.learning_rate * (m1[p] / c1) / (std::sqrt(m2[p] / c2) + adam_eps);
            }
            unflatten(model, params);
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.train_loss = epoch_loss / static_cast<double>(order.size());
        entry.val_loss = mean_loss(model, features, labels, val_rows);
        std::size_t correct = 0;
        for (std::size_t r : val_rows) correct += predict(model, features.subspan(r * d, d)) == labels[r] ? 1 : 0;
        entry.val_accuracy = static_cast<double>(correct) / static_cast<double>(val_rows.size());
        result.log.push_back(entry);
        if (entry.val_loss < best_val) {
            best_val = entry.val_loss;
            best_epoch = epoch;
            best = model;
        }
    }

    best.train_meta.seed = config.seed;
    best.train_meta.epochs_run = config.max_epochs;
    best.train_meta.best_epoch = best_epoch;
    best.train_meta.best_val_loss = best_val;
    best.train_meta.n_train = train_rows.size();
    best.train_meta.n_val = val_rows.size();
    best.train_meta.n_test = n_test;
    best.train_meta.biases_resorted = sort_biases(best);
    result.model = std::move(best);
    return result;
}

// =============================================================================
// JSON
// =============================================================================

void to_json(nlohmann::json& j, const CoralModel& m) {
    j = nlohmann::json{
        {"d", m.d},
        {"hidden", m.hidden},
        {"weights", m.weights},
        {"input_mean", m.input_mean},
        {"input_scale", m.input_scale},
        {"biases", m.biases},
        {"feature_config",
         {{"blur_sigma", m.feature_config.blur_sigma},
          {"kernel_size", m.feature_config.kernel_size},
          {"resize", m.feature_config.resize},
          {"channels", m.feature_config.channels},
          {"pixel_scale", "0-1"}}},
        {"train_meta",
         {{"seed", m.train_meta.seed},
          {"epochs_run", m.train_meta.epochs_run},
          {"best_epoch", m.train_meta.best_epoch},
          {"best_val_loss", m.train_meta.best_val_loss},
          {"n_train", m.train_meta.n_train},
          {"n_val", m.train_meta.n_val},
          {"n_test", m.train_meta.n_test},
          {"biases_resorted", m.train_meta.biases_resorted}}},
    };
    if (m.hidden > 0) {
        j["hidden_weights"] = m.hidden_weights;
        j["hidden_biases"] = m.hidden_biases;
    }
}

void from_json(const nlohmann::json& j, CoralModel& m) {
    try {
        CoralModel out = CoralModel::zeros(j.at("d").get<std::size_t>(), j.value("hidden", 0));
        const auto weights = j.at("weights").get<std::vector<double>>();
        const auto biases = j.at("biases").get<std::vector<double>>();
        if (weights.size() != out.weights.size() || biases.size() != kRanks) {
            fail(ErrorCode::Format, "model JSON has inconsistent weight or bias lengths");
        }
        out.weights = weights;
        out.input_mean = j.value("input_mean", std::vector<double>{});
        out.input_scale = j.value("input_scale", std::vector<double>{});
        const bool stats_ok = (out.input_mean.empty() && out.input_scale.empty()) ||
                              (out.input_mean.size() == out.d && out.input_scale.size() == out.d);
        if (!stats_ok) fail(ErrorCode::Format, "model JSON input statistics have the wrong length");
        for (double v : out.input_scale) {
            if (!(v > 0.0)) fail(ErrorCode::Format, "model JSON input_scale must be positive");
        }
        std::copy(biases.begin(), biases.end(), out.biases.begin());
        if (out.hidden > 0) {
            out.hidden_weights = j.at("hidden_weights").get<std::vector<double>>();
            out.hidden_biases = j.at("hidden_biases").get<std::vector<double>>();
            if (out.hidden_weights.size() != out.d * hidden_size(out) || out.hidden_biases.size() != hidden_size(out)) {
                fail(ErrorCode::Format, "model JSON hidden layer has the wrong shape");
            }
        }
        const auto& fc = j.at("feature_config");
        out.feature_config.blur_sigma = fc.at("blur_sigma").get<double>();
        out.feature_config.kernel_size = fc.at("kernel_size").get<int>();
        out.feature_config.resize = fc.at("resize").get<int>();
        out.feature_config.channels = fc.at("channels").get<int>();
        if (out.feature_config.dimension() != out.d) fail(ErrorCode::Format, "feature_config does not match d");
        if (j.contains("train_meta")) {
            const auto& tm = j.at("train_meta");
            out.train_meta.seed = tm.value("seed", std::uint64_t{0});
            out.train_meta.epochs_run = tm.value("epochs_run", 0);
            out.train_meta.best_epoch = tm.value("best_epoch", 0);
            out.train_meta.best_val_loss = tm.value("best_val_loss", 0.0);
            out.train_meta.n_train = tm.value("n_train", std::size_t{0});
            out.train_meta.n_val = tm.value("n_val", std::size_t{0});
            out.train_meta.n_test = tm.value("n_test", std::size_t{0});
            out.train_meta.biases_resorted = tm.value("biases_resorted", false);
        }
        for (double b : out.biases) {
            if (!std::isfinite(b)) fail(ErrorCode::Format, "model JSON has a non-finite bias");
        }
        out.train_meta.biases_resorted = sort_biases(out) || out.train_meta.biases_resorted;
        m = std::move(out);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Format, std::string("malformed model JSON: ") + e.what());
    }
}

}  // namespace dermacolor::ordinal
