#include "h2ad/errors.hpp"
#include "h2ad/fusion_net.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace h2ad;

namespace {

Eigen::MatrixXd random_inputs(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-70.0, 70.0);
    Eigen::MatrixXd x(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) x(r, c) = u(rng);
    return x;
}

LabeledDataset mean_dataset(int rows, std::uint64_t seed) {
    LabeledDataset d;
    d.inputs = random_inputs(rows, 4, seed);
    d.labels = d.inputs.rowwise().mean();
    return d;
}

TrainingConfig quick_config() {
    TrainingConfig c;
    c.hidden = {16, 8};
    c.epochs = 100;
    c.batch_size = 16;
    c.learning_rate = 3e-3;
    c.refit_output_layer = false;
    return c;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("h2ad_test_" + name);
}

}  // namespace

TEST(Mlp, ZeroNetworkOutputsZero) {
    auto m = make_mlp({4, 8, 8, 1}, Activation::ReLU, 1);
    for (auto& w : m.weights) w.setZero();
    for (auto& b : m.biases) b.setZero();
    const std::vector<double> x{10.0, -20.0, 30.0, 40.0};
    EXPECT_EQ(forward(m, x), 0.0);
}

TEST(Mlp, IdentityChain) {
    auto m = make_mlp({4, 3, 2, 1}, Activation::ReLU, 1);
    for (auto& w : m.weights) w.setZero();
    for (auto& b : m.biases) b.setZero();
    m.weights[0](0, 0) = 1.0;
    m.weights[1](0, 0) = 1.0;
    m.weights[2](0, 0) = 1.0;
    for (double v : {0.5, 12.0, 41.0, 89.0}) {
        const std::vector<double> x{v, -3.0, 7.0, 1.0};
        EXPECT_NEAR(forward(m, x), v, 1e-12);
    }
}

TEST(Mlp, ShapesAndParameterCount) {
    const auto m = make_mlp({4, 64, 32, 1}, Activation::ReLU, 3);
    ASSERT_EQ(m.num_layers(), 3u);
    EXPECT_EQ(m.weights[0].rows(), 64);
    EXPECT_EQ(m.weights[0].cols(), 4);
    EXPECT_EQ(m.num_parameters(), 4u * 64 + 64 + 64 * 32 + 32 + 32 + 1);
    EXPECT_NO_THROW(m.validate());
}

TEST(Mlp, BatchMatchesSingle) {
    const auto m = make_mlp({4, 16, 8, 1}, Activation::Tanh, 5);
    const auto x = random_inputs(20, 4, 9);
    const auto y = forward_batch(m, x);
    for (int r = 0; r < 20; ++r) {
        std::vector<double> v{x(r, 0), x(r, 1), x(r, 2), x(r, 3)};
        EXPECT_NEAR(y(r), forward(m, v), 1e-12);
    }
}

TEST(Mlp, LinearPathStartsAtInputMean) {
    const auto m = make_mlp({4, 64, 32, 1}, Activation::ReLU, 11, Initialization::LinearPath);
    const auto x = random_inputs(50, 4, 12);
    const auto y = forward_batch(m, x);
    for (int r = 0; r < 50; ++r) EXPECT_NEAR(y(r), x.row(r).mean(), 1e-9);
    EXPECT_THROW(make_mlp({4, 64, 32, 1}, Activation::Tanh, 11, Initialization::LinearPath), ConfigError);
}

TEST(Mlp, RejectsBadInput) {
    const auto m = make_mlp({4, 8, 8, 1}, Activation::ReLU, 1);
    EXPECT_THROW(forward(m, std::vector<double>{1.0, 2.0}), ShapeError);
}

class GradientCheck : public ::testing::TestWithParam<Activation> {};

TEST_P(GradientCheck, MatchesCentralDifferences) {
    const auto model = make_mlp({4, 12, 6, 1}, GetParam(), 21);
    const auto x = random_inputs(5, 4, 22);
    Eigen::VectorXd labels(5);
    labels << 10.0, -5.0, 33.0, 0.5, -60.0;
    const auto grad = loss_and_gradient(model, x, labels);

    const double h = 1e-6;
    auto loss_at = [&](const MlpModel& m) { return loss_and_gradient(m, x, labels).loss; };
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        for (Eigen::Index i = 0; i < model.weights[l].size(); ++i) {
            MlpModel plus = model, minus = model;
            plus.weights[l].data()[i] += h;
            minus.weights[l].data()[i] -= h;
            const double num = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
            const double ana = grad.d_weights[l].data()[i];
            ASSERT_LE(std::abs(num - ana), 1e-4 * (std::abs(num) + std::abs(ana)) + 1e-9)
                << "layer " << l << " weight " << i;
        }
        for (Eigen::Index i = 0; i < model.biases[l].size(); ++i) {
            MlpModel plus = model, minus = model;
            plus.biases[l](i) += h;
            minus.biases[l](i) -= h;
            const double num = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
            const double ana = grad.d_biases[l](i);
            ASSERT_LE(std::abs(num - ana), 1e-4 * (std::abs(num) + std::abs(ana)) + 1e-9)
                << "layer " << l << " bias " << i;
        }
    }
}

INSTANTIATE_TEST_SUITE_P(Activations, GradientCheck,
                         ::testing::Values(Activation::ReLU, Activation::LeakyReLU, Activation::Tanh),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Training, ConstantLabelsAreLearned) {
    LabeledDataset d;
    d.inputs = random_inputs(64, 4, 30);
    d.labels = Eigen::VectorXd::Constant(64, 25.0);
    auto cfg = quick_config();
    cfg.epochs = 1000;
    const auto r = train(make_mlp({4, 16, 8, 1}, Activation::ReLU, 31), d, cfg);
    const auto y = forward_batch(r.model, d.inputs);
    EXPECT_LT((y.array() - 25.0).abs().maxCoeff(), 1.0);

    cfg.epochs = 1;
    cfg.refit_output_layer = true;
    const auto refit = train(make_mlp({4, 16, 8, 1}, Activation::ReLU, 31), d, cfg);
    EXPECT_LT((forward_batch(refit.model, d.inputs).array() - 25.0).abs().maxCoeff(), 1e-6);
}

TEST(Training, LossDecreases) {
    const auto d = mean_dataset(128, 40);
    const auto r = train(make_mlp({4, 16, 8, 1}, Activation::ReLU, 41, Initialization::He), d, quick_config());
    ASSERT_EQ(r.loss_history.size(), 100u);
    EXPECT_LT(r.loss_history[99], r.loss_history[0]);
    EXPECT_LT(r.final_loss, r.loss_history[0]);
}

TEST(Training, SgdAlsoDecreases) {
    const auto d = mean_dataset(128, 42);
    auto cfg = quick_config();
    cfg.optimizer = Optimizer::SGD;
    cfg.learning_rate = 1e-2;
    const auto r = train(make_mlp({4, 16, 8, 1}, Activation::Tanh, 43, Initialization::He), d, cfg);
    EXPECT_LT(r.loss_history.back(), r.loss_history.front());
}

TEST(Training, Deterministic) {
    const auto d = mean_dataset(64, 50);
    const auto a = train(make_mlp({4, 16, 8, 1}, Activation::ReLU, 51), d, quick_config());
    const auto b = train(make_mlp({4, 16, 8, 1}, Activation::ReLU, 51), d, quick_config());
    EXPECT_TRUE(a.model == b.model);
    EXPECT_EQ(a.loss_history, b.loss_history);
}

TEST(Training, RefitNeverIncreasesLoss) {
    const auto d = mean_dataset(96, 60);
    const auto model = make_mlp({4, 16, 8, 1}, Activation::ReLU, 61, Initialization::He);
    const double before = loss_and_gradient(model, d.inputs, d.labels).loss;
    const auto refit = refit_output_layer(model, d);
    EXPECT_LE(loss_and_gradient(refit, d.inputs, d.labels).loss, before);
}

TEST(Training, KeepsInitialFeaturesWhenTheyFitBetter) {
    // Labels are exactly linear in the inputs, which the initial linear path
    // represents without error; an aggressive step size ruins the hidden layers.
    const auto d = mean_dataset(96, 62);
    auto cfg = quick_config();
    cfg.learning_rate = 0.05;
    cfg.final_learning_rate = 0.05;
    cfg.epochs = 20;
    cfg.refit_output_layer = true;
    const auto r = train(make_mlp({4, 16, 8, 1}, Activation::ReLU, 63, Initialization::LinearPath), d, cfg);
    EXPECT_TRUE(r.kept_initial_features);
    EXPECT_LT(r.final_loss, 1e-20);
    EXPECT_LE(r.final_loss, r.loss_history.back());
}

TEST(Training, DivergenceIsReported) {
    const auto d = mean_dataset(64, 70);
    auto cfg = quick_config();
    cfg.optimizer = Optimizer::SGD;
    cfg.learning_rate = 1e6;
    cfg.final_learning_rate = 1e6;
    EXPECT_THROW(train(make_mlp({4, 16, 8, 1}, Activation::ReLU, 71, Initialization::He), d, cfg), NumericalError);
}

TEST(Training, ConfigValidation) {
    TrainingConfig c;
    EXPECT_NO_THROW(c.validate());
    c.epochs = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = TrainingConfig{};
    c.snr_list_db.clear();
    EXPECT_THROW(c.validate(), ConfigError);
    c = TrainingConfig{};
    c.grid_step_deg = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Dataset, NoiselessRowsEqualLabels) {
    const auto g = ArrayGeometry::reference();
    TrainingConfig c;
    c.angle_limit_deg = 70.0;
    c.grid_step_deg = 10.0;
    c.snr_list_db = {0.0};
    c.realizations = 1;
    const auto d = generate_training_data(g, zero_combiners(g), c, ClusterMethod::GMinD, true);
    ASSERT_EQ(d.inputs.cols(), 4);
    EXPECT_EQ(d.size() + d.dropped, 15u);
    for (std::size_t r = 0; r < d.size(); ++r)
        for (Eigen::Index k = 0; k < 4; ++k)
            EXPECT_NEAR(d.inputs(static_cast<Eigen::Index>(r), k), d.labels(static_cast<Eigen::Index>(r)), 1e-6);
}

TEST(Dataset, SizeAndProvenance) {
    const auto g = ArrayGeometry::reference();
    TrainingConfig c;
    c.grid_step_deg = 10.0;
    c.snr_list_db = {0.0, 10.0, 15.0, 5.0};
    c.realizations = 1;
    const auto d = generate_training_data(g, zero_combiners(g), c, ClusterMethod::GMaxCS);
    EXPECT_LE(d.size(), 15u * 4);
    EXPECT_EQ(d.size() + d.dropped, 15u * 4);
    ASSERT_EQ(d.provenance.size(), d.size());
    for (std::size_t r = 0; r < d.size(); ++r)
        EXPECT_EQ(d.labels(static_cast<Eigen::Index>(r)), d.provenance[r].angle_deg);
    const auto again = generate_training_data(g, zero_combiners(g), c, ClusterMethod::GMaxCS);
    EXPECT_TRUE(d.inputs == again.inputs);
}

TEST(Serialization, RoundTripIsExact) {
    const auto m = make_mlp({4, 64, 32, 1}, Activation::LeakyReLU, 80);
    const auto path = temp_file("model.json");
    save_model(m, path);
    const auto back = load_model(path);
    std::filesystem::remove(path);
    EXPECT_TRUE(back == m);
    const auto x = random_inputs(100, 4, 81);
    const auto y0 = forward_batch(m, x), y1 = forward_batch(back, x);
    for (int r = 0; r < 100; ++r) EXPECT_EQ(y0(r), y1(r));
}

TEST(Serialization, TruncatedFileIsCorrupt) {
    const auto text = serialize_model(make_mlp({4, 8, 8, 1}, Activation::ReLU, 82));
    EXPECT_THROW(deserialize_model(text.substr(0, text.size() / 2)), FormatError);
    const auto path = temp_file("truncated.json");
    {
        std::ofstream out(path);
        out << text.substr(0, text.size() - 10);
    }
    EXPECT_THROW(load_model(path), FormatError);
    std::filesystem::remove(path);
}

TEST(Serialization, VersionChecks) {
    auto j = serialize_model(make_mlp({4, 8, 8, 1}, Activation::ReLU, 83));
    const auto pos = j.find("\"format_version\"");
    ASSERT_NE(pos, std::string::npos);
    std::string bumped = j;
    bumped.replace(j.find(':', pos) + 1, 2, " 99");
    EXPECT_THROW(deserialize_model(bumped), VersionError);
    std::string missing = j;
    missing.replace(pos, std::string("\"format_version\"").size(), "\"fmt_version\"");
    EXPECT_THROW(deserialize_model(missing), VersionError);
    EXPECT_THROW(load_model(temp_file("does_not_exist.json")), std::exception);
}

TEST(ModelSet, SelectNearestTieLower) {
    FusionModelSet s;
    for (int i = 0; i < 3; ++i) s.models.push_back(make_mlp({4, 8, 8, 1}, Activation::ReLU, 90 + i));
    s.snr_db = {-10.0, 0.0, 10.0};
    EXPECT_TRUE(&s.select(-30.0) == &s.models[0]);
    EXPECT_TRUE(&s.select(-5.0) == &s.models[0]);
    EXPECT_TRUE(&s.select(-4.9) == &s.models[1]);
    EXPECT_TRUE(&s.select(5.0) == &s.models[1]);
    EXPECT_TRUE(&s.select(40.0) == &s.models[2]);
    const auto back = deserialize_model_set(serialize_model_set(s));
    EXPECT_TRUE(back == s);

    FusionModelSet mix;
    mix.models.push_back(s.models[0]);
    EXPECT_FALSE(mix.per_snr());
    EXPECT_TRUE(&mix.select(12.0) == &mix.models[0]);
    const auto single = deserialize_model_set(serialize_model(s.models[0]));
    EXPECT_TRUE(single == mix);
}
