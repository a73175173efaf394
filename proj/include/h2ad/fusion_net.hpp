#pragma once

#include "h2ad/array_model.hpp"
#include "h2ad/disambiguation.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace h2ad {

enum class Activation { ReLU, LeakyReLU, Tanh };

std::string_view to_string(Activation activation);
Activation parse_activation(std::string_view name);

/// Fully connected regressor [P+1] -> h1 -> h2 -> 1 with a hidden nonlinearity and
/// a linear output. Inputs and output are degrees; the network itself works on
/// degrees / scale.
struct MlpModel {
    std::vector<int> layer_dims;              // {P+1, h1, h2, 1}
    std::vector<Eigen::MatrixXd> weights;     // weights[l] is dims[l+1] x dims[l]
    std::vector<Eigen::VectorXd> biases;
    Activation activation = Activation::ReLU;
    double input_scale_deg = 90.0;
    double output_scale_deg = 90.0;

    std::size_t num_layers() const { return weights.size(); }
    std::size_t num_parameters() const;
    /// Throws ShapeError / NumericalError on an inconsistent or non-finite model.
    void validate() const;

    bool operator==(const MlpModel& other) const;
};

enum class Initialization {
    He,
    // He init, except that the first 2(P+1) units of every hidden layer carry
    // relu(+x_i) and relu(-x_i) unchanged and the output starts as the input mean.
    // ReLU only.
    LinearPath,
};

std::string_view to_string(Initialization init);
Initialization parse_initialization(std::string_view name);

/// He-style random initialisation with zero biases.
MlpModel make_mlp(std::vector<int> layer_dims, Activation activation, std::uint64_t seed,
                  Initialization init = Initialization::He);

double forward(const MlpModel& model, std::span<const double> input_deg);

/// Row-wise forward pass; inputs are Q x (P+1) degrees.
Eigen::VectorXd forward_batch(const MlpModel& model, const Eigen::MatrixXd& inputs_deg);

/// Mean squared error over normalised outputs and its gradient, laid out like the model.
struct LossGradient {
    double loss = 0.0;
    std::vector<Eigen::MatrixXd> d_weights;
    std::vector<Eigen::VectorXd> d_biases;
};

LossGradient loss_and_gradient(const MlpModel& model, const Eigen::MatrixXd& inputs_deg,
                               const Eigen::VectorXd& labels_deg);

enum class Optimizer { SGD, Adam };

std::string_view to_string(Optimizer optimizer);
Optimizer parse_optimizer(std::string_view name);

struct TrainingConfig {
    double angle_limit_deg = 70.0;          // grid covers [-limit, limit]
    double grid_step_deg = 1.0;
    std::vector<double> snr_list_db{-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0};
    int realizations = 2;                   // noisy draws per (angle, SNR)
    int snapshots = 100;
    std::vector<int> hidden{64, 32};
    Activation activation = Activation::ReLU;
    Initialization initialization = Initialization::LinearPath;
    Optimizer optimizer = Optimizer::Adam;
    int epochs = 200;
    int batch_size = 64;
    double learning_rate = 1e-3;
    double final_learning_rate = 1e-5;      // cosine decay target
    // After the last epoch, re-solve the output layer by linear least squares on
    // the final hidden features.
    bool refit_output_layer = true;
    // One model per entry of snr_list_db instead of one model for the whole mixture.
    bool per_snr_models = false;
    ClusterMethod cluster_method = ClusterMethod::GMinD;
    std::uint64_t seed = 7;

    void validate() const;
    bool operator==(const TrainingConfig&) const = default;
};

struct SampleProvenance {
    double angle_deg;
    double snr_db;
    std::uint64_t seed;
};

struct LabeledDataset {
    Eigen::MatrixXd inputs;   // Q x (P+1), degrees
    Eigen::VectorXd labels;   // Q, degrees
    std::vector<SampleProvenance> provenance;
    std::size_t dropped = 0;  // rows lost to estimation failures

    std::size_t size() const { return static_cast<std::size_t>(labels.size()); }
};

/// Runs the full front end (synthesis, Root-MUSIC, expansion, clustering) at every
/// grid angle, SNR and realization. Points are independent and seeded by position,
/// so the result does not depend on the thread count.
LabeledDataset generate_training_data(const ArrayGeometry& geometry, const std::vector<AnalogCombiner>& combiners,
                                      const TrainingConfig& config, ClusterMethod method, bool noiseless = false);

struct TrainingResult {
    MlpModel model;
    std::vector<double> loss_history;  // mean training loss per epoch (normalised units)
    double final_loss = 0.0;           // after the optional output-layer refit
    // The refit was applied to the initial hidden layers because that beat the
    // refit of the trained ones.
    bool kept_initial_features = false;
};

/// Least-squares re-solve of the output layer with the hidden layers fixed.
/// Never increases the training loss.
MlpModel refit_output_layer(MlpModel model, const LabeledDataset& dataset);

/// With refit_output_layer, the output layer is re-solved on both the trained and
/// the initial hidden layers and the lower-loss model is returned.
/// Throws NumericalError if the loss stops being finite.
TrainingResult train(MlpModel model, const LabeledDataset& dataset, const TrainingConfig& config);

/// One model for every SNR, or one model per training SNR. select() returns the
/// model trained nearest to the requested SNR (ties go to the lower SNR).
struct FusionModelSet {
    std::vector<MlpModel> models;
    std::vector<double> snr_db;  // empty for a single mixture model, else aligned with models

    bool per_snr() const { return !snr_db.empty(); }
    const MlpModel& select(double snr_db) const;
    void validate() const;
    bool operator==(const FusionModelSet&) const = default;
};

struct FusionTrainingReport {
    FusionModelSet models;
    std::vector<TrainingResult> results;   // aligned with models.models
    std::vector<LabeledDataset> datasets;  // aligned with models.models
};

/// Dataset generation plus training for the configured layout (mixture or per SNR).
FusionTrainingReport train_fusion_models(const ArrayGeometry& geometry, const std::vector<AnalogCombiner>& combiners,
                                         const TrainingConfig& config, bool noiseless = false);

inline constexpr int kModelFormatVersion = 1;

void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);
std::string serialize_model(const MlpModel& model);
MlpModel deserialize_model(std::string_view text);

/// A set file holds its models plus their SNRs; load_model_set also accepts a
/// single-model file and treats it as a mixture model.
void save_model_set(const FusionModelSet& set, const std::filesystem::path& path);
FusionModelSet load_model_set(const std::filesystem::path& path);
std::string serialize_model_set(const FusionModelSet& set);
FusionModelSet deserialize_model_set(std::string_view text);

}  // namespace h2ad
