#include "ordinal.hpp"
#include "rng.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace dermacolor::ordinal {
namespace {

using color::FitzpatrickType;
using testing::expect_error;
using testing::fill_rect;
using testing::uniform_image;

double sig(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Forward pass written out by hand from the model fields.
std::array<double, kRanks> forward_oracle(const CoralModel& m, const std::vector<double>& raw) {
    std::vector<double> x(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        x[i] = m.input_mean.empty() ? raw[i] : (raw[i] - m.input_mean[i]) / m.input_scale[i];
    }
    double s = 0.0;
    if (m.hidden == 0) {
        for (std::size_t i = 0; i < x.size(); ++i) s += m.weights[i] * x[i];
    } else {
        for (int j = 0; j < m.hidden; ++j) {
            double z = m.hidden_biases[static_cast<std::size_t>(j)];
            for (std::size_t i = 0; i < x.size(); ++i) z += m.hidden_weights[static_cast<std::size_t>(j) * m.d + i] * x[i];
            s += m.weights[static_cast<std::size_t>(j)] * std::tanh(z);
        }
    }
    std::array<double, kRanks> p{};
    for (std::size_t k = 0; k < kRanks; ++k) p[k] = sig(s + m.biases[k]);
    return p;
}

CoralModel random_model(Rng& rng, std::size_t d, int hidden, double scale) {
    std::normal_distribution<double> n(0.0, scale);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    auto m = CoralModel::zeros(d, hidden);
    for (auto& w : m.hidden_weights) w = n(rng);
    for (auto& w : m.hidden_biases) w = n(rng);
    for (auto& w : m.weights) w = n(rng);
    m.input_mean.resize(d);
    m.input_scale.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        m.input_mean[i] = 0.3 * n(rng);
        m.input_scale[i] = u(rng);
    }
    m.biases = {2.0 + n(rng), 1.0 + n(rng), n(rng), -1.0 + n(rng), -2.0 + n(rng)};
    return m;
}

// ------------------------------------------------------------ features

TEST(Featurize, MidGrayIsConstant) {
    const auto f = featurize(uniform_image(100, 80, {128, 128, 128}));
    ASSERT_EQ(f.size(), 3072u);
    for (double v : f) EXPECT_NEAR(v, 128.0 / 255.0, 1e-12);
}

TEST(Featurize, LengthIndependentOfInputSize) {
    for (int s : {32, 64, 129}) EXPECT_EQ(featurize(uniform_image(s, s + 3, {1, 2, 3})).size(), 3072u);
}

TEST(Featurize, ChannelMajorLayout) {
    const auto f = featurize(uniform_image(64, 64, {255, 0, 51}));
    EXPECT_NEAR(f[0], 1.0, 1e-12);
    EXPECT_NEAR(f[1024], 0.0, 1e-12);
    EXPECT_NEAR(f[2048], 0.2, 1e-12);
}

TEST(Featurize, BlurContractsLocalPerturbation) {
    const auto base = uniform_image(64, 64, {180, 140, 120});
    auto bumped = base;
    fill_rect(bumped, 30, 30, 3, 3, {20, 240, 10});
    FeatureConfig sharp;
    sharp.blur_sigma = 1e-3;
    sharp.kernel_size = 3;
    double blurred = 0.0, unblurred = 0.0;
    const auto a = featurize(base), b = featurize(bumped);
    const auto c = featurize(base, sharp), d = featurize(bumped, sharp);
    for (std::size_t i = 0; i < a.size(); ++i) {
        blurred = std::max(blurred, std::abs(a[i] - b[i]));
        unblurred = std::max(unblurred, std::abs(c[i] - d[i]));
    }
    EXPECT_GT(blurred, 0.0);
    EXPECT_LT(blurred, unblurred);
}

// ------------------------------------------------------------- forward

TEST(Forward, ZeroWeightsOrderedBiases) {
    auto m = CoralModel::zeros(4);
    m.biases = {2, 1, 0, -1, -2};
    const std::vector<double> x{0.3, -1, 5, 2};
    const auto p = coral_forward(m, x);
    const std::array<double, 5> expected{sig(2), sig(1), 0.5, sig(-1), sig(-2)};
    for (std::size_t k = 0; k < 5; ++k) EXPECT_DOUBLE_EQ(p[k], expected[k]);
}

TEST(Forward, SortedBiasesGiveNonIncreasingProbabilities) {
    Rng rng(3);
    std::normal_distribution<double> n(0.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        auto m = random_model(rng, 7, trial % 2 ? 3 : 0, 1.0);
        sort_biases(m);
        std::vector<double> x(7);
        for (auto& v : x) v = n(rng);
        const auto p = coral_forward(m, x);
        for (std::size_t k = 1; k < 5; ++k) EXPECT_LE(p[k], p[k - 1]);
    }
}

TEST(Forward, MatchesScalarReimplementation) {
    Rng rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t d = 1 + static_cast<std::size_t>(trial % 40);
        const auto m = random_model(rng, d, trial % 3 == 0 ? 5 : 0, 0.3);
        std::vector<double> x(d);
        for (auto& v : x) v = u(rng);
        const auto got = coral_forward(m, x);
        const auto want = forward_oracle(m, x);
        for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(got[k], want[k], 1e-12);
    }
}

// ---------------------------------------------------------------- loss

TEST(Loss, PerfectPredictionNearZero) {
    for (int t = 1; t <= 6; ++t) {
        std::array<double, 5> p{};
        for (int k = 0; k < 5; ++k) p[static_cast<std::size_t>(k)] = t > k + 1 ? 1.0 : 0.0;
        const auto l = coral_loss(p, FitzpatrickType(t));
        EXPECT_GE(l.loss, 0.0);
        EXPECT_LE(l.loss, 5.0 * -std::log(1.0 - kProbEpsilon) + 1e-15);
    }
}

TEST(Loss, TypeOneFormula) {
    const std::array<double, 5> p{0.9, 0.6, 0.3, 0.2, 0.05};
    double expected = 0.0;
    for (double v : p) expected -= std::log(1.0 - v);
    EXPECT_NEAR(coral_loss(p, FitzpatrickType(1)).loss, expected, 1e-14);
}

TEST(Loss, GradientMatchesFiniteDifferences) {
    Rng rng(2718);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> type(1, 6);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t d = 2 + static_cast<std::size_t>(trial % 9);
        CoralModel m = random_model(rng, d, trial % 4 == 0 ? 4 : 0, 0.5);
        std::vector<double> x(d);
        for (auto& v : x) v = u(rng);
        const FitzpatrickType gt(type(rng));
        const auto g = loss_gradient(m, x, gt);
        auto params = flatten(m);
        ASSERT_EQ(g.values.size(), params.size());
        std::vector<double> fd(params.size());
        const double h = 1e-5;
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double keep = params[i];
            params[i] = keep + h;
            unflatten(m, params);
            const double up = coral_loss(coral_forward(m, x), gt).loss;
            params[i] = keep - h;
            unflatten(m, params);
            const double down = coral_loss(coral_forward(m, x), gt).loss;
            params[i] = keep;
            fd[i] = (up - down) / (2 * h);
        }
        unflatten(m, params);
        double diff = 0.0, norm = 0.0;
        for (std::size_t i = 0; i < fd.size(); ++i) {
            diff += (fd[i] - g.values[i]) * (fd[i] - g.values[i]);
            norm = std::max(norm, std::max(std::abs(fd[i]), std::abs(g.values[i])));
        }
        const double rel = std::sqrt(diff) / std::max(norm * std::sqrt(static_cast<double>(fd.size())), 1e-12);
        worst = std::max(worst, rel);
        EXPECT_LT(rel, 1e-4) << "trial " << trial;
    }
    RecordProperty("worst_relative_error", std::to_string(worst));
}

// ------------------------------------------------------------- predict

TEST(Predict, CountRule) {
    EXPECT_EQ(predict_from_probs(std::array<double, 5>{0.1, 0.2, 0.3, 0.4, 0.49}).index(), 1);
    EXPECT_EQ(predict_from_probs(std::array<double, 5>{0.9, 0.8, 0.7, 0.6, 0.51}).index(), 6);
    EXPECT_EQ(predict_from_probs(std::array<double, 5>{0.9, 0.8, 0.4, 0.3, 0.1}).index(), 3);
}

TEST(Predict, StepFunctionOfScoreWithSortedBiases) {
    auto m = CoralModel::zeros(1);
    m.weights = {1.0};
    m.biases = {-1.0, 3.0, 0.5, -4.0, 1.5};
    EXPECT_TRUE(sort_biases(m));
    EXPECT_FALSE(sort_biases(m));
    int prev = 1;
    for (double s = -10.0; s <= 10.0; s += 0.01) {
        const int t = predict(m, std::vector<double>{s}).index();
        EXPECT_GE(t, prev);
        prev = t;
    }
    EXPECT_EQ(prev, 6);
}

// ------------------------------------------------------------- training

struct Toy {
    std::vector<double> features;
    std::vector<FitzpatrickType> labels;
};

Toy separable_toy(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> noise(0.0, 0.15);
    Toy t;
    for (std::size_t i = 0; i < n; ++i) {
        const bool dark = i % 2 == 1;
        t.features.push_back((dark ? 1.0 : -1.0) + noise(rng));
        t.features.push_back(0.5 * noise(rng));
        t.labels.emplace_back(dark ? 4 : 2);
    }
    return t;
}

TEST(Train, SeparableToy) {
    const auto toy = separable_toy(200, 1);
    TrainConfig cfg;
    cfg.max_epochs = 40;
    cfg.batch_size = 16;
    cfg.learning_rate = 0.05;
    cfg.seed = 3;
    const auto r = train(toy.features, toy.labels, cfg);
    ASSERT_EQ(r.log.size(), 40u);
    for (std::size_t e = 1; e < 10; ++e) EXPECT_LT(r.log[e].train_loss, r.log[e - 1].train_loss) << "epoch " << e + 1;
    std::size_t correct = 0, n_train = 0;
    for (std::size_t i = 0; i < toy.labels.size(); ++i) {
        if (r.split[i] != Split::Train) continue;
        ++n_train;
        correct += predict(r.model, std::span<const double>(toy.features).subspan(2 * i, 2)) == toy.labels[i];
    }
    EXPECT_EQ(correct, n_train);
}

TEST(Train, CheckpointHasMinimumValidationLoss) {
    const auto toy = separable_toy(120, 2);
    TrainConfig cfg;
    cfg.max_epochs = 25;
    cfg.learning_rate = 0.02;
    const auto r = train(toy.features, toy.labels, cfg);
    for (const auto& e : r.log) EXPECT_LE(r.model.train_meta.best_val_loss, e.val_loss);
    EXPECT_EQ(r.log[static_cast<std::size_t>(r.model.train_meta.best_epoch - 1)].val_loss,
              r.model.train_meta.best_val_loss);
}

TEST(Train, DeterministicPerSeed) {
    const auto toy = separable_toy(100, 5);
    TrainConfig cfg;
    cfg.max_epochs = 8;
    cfg.seed = 21;
    cfg.hidden = 3;
    const auto a = train(toy.features, toy.labels, cfg);
    const auto b = train(toy.features, toy.labels, cfg);
    EXPECT_EQ(flatten(a.model), flatten(b.model));
    EXPECT_EQ(a.split, b.split);
    cfg.seed = 22;
    EXPECT_NE(flatten(train(toy.features, toy.labels, cfg).model), flatten(a.model));
}

TEST(Train, StratifiedSplitCoversEveryClass) {
    std::vector<FitzpatrickType> labels;
    for (int i = 0; i < 180; ++i) labels.emplace_back(1 + i % 6);
    const auto split = stratified_split(labels, TrainConfig{});
    for (int c = 1; c <= 6; ++c) {
        int val = 0, test = 0, tr = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i].index() != c) continue;
            val += split[i] == Split::Validation;
            test += split[i] == Split::Test;
            tr += split[i] == Split::Train;
        }
        EXPECT_EQ(val, 3);
        EXPECT_EQ(test, 3);
        EXPECT_EQ(tr, 24);
    }
}

TEST(Train, RejectsSingleClass) {
    std::vector<double> f(40, 0.5);
    std::vector<FitzpatrickType> labels(20, FitzpatrickType(3));
    expect_error(ErrorCode::InsufficientData, [&] { train(f, labels, TrainConfig{}); });
    TrainConfig bad;
    bad.train_fraction = 0.9;
    expect_error(ErrorCode::InvalidArgument, [&] { bad.validate(); });
}

TEST(Json, RoundTripPreservesPredictions) {
    Rng rng(10);
    for (int hidden : {0, 3}) {
        auto m = random_model(rng, 12, hidden, 0.7);
        m.feature_config.resize = 2;
        m.train_meta.best_epoch = 17;
        sort_biases(m);
        const nlohmann::json j = m;
        EXPECT_EQ(j.at("d"), 12);
        EXPECT_EQ(j.at("biases").size(), 5u);
        const auto back = j.get<CoralModel>();
        EXPECT_EQ(flatten(back), flatten(m));
        EXPECT_EQ(back.input_scale, m.input_scale);
        EXPECT_EQ(back.train_meta.best_epoch, 17);
    }
    expect_error(ErrorCode::Format, [] { nlohmann::json{{"d", 3}}.get<CoralModel>(); });
}

}  // namespace
}  // namespace dermacolor::ordinal
