#include "h2ad/fusion_net.hpp"

#include "h2ad/errors.hpp"
#include "h2ad/pipeline.hpp"
#include "h2ad/seeding.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

namespace h2ad {

namespace {

constexpr double kLeakySlope = 0.01;
constexpr const char* kFormatName = "h2ad-fusion-mlp";

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation a) {
    switch (a) {
        case Activation::ReLU: return z.cwiseMax(0.0);
        case Activation::LeakyReLU: return z.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
        case Activation::Tanh: return z.array().tanh().matrix();
    }
    return z;
}

// Derivative expressed through the pre-activation z and activation value y.
Eigen::MatrixXd activation_slope(const Eigen::MatrixXd& z, const Eigen::MatrixXd& y, Activation a) {
    switch (a) {
        case Activation::ReLU: return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
        case Activation::LeakyReLU: return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : kLeakySlope; });
        case Activation::Tanh: return (1.0 - y.array().square()).matrix();
    }
    return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

// Column-per-sample activations of every layer, starting with the scaled input.
struct ForwardCache {
    std::vector<Eigen::MatrixXd> pre;   // z_l
    std::vector<Eigen::MatrixXd> post;  // a_0 = input, a_l = act(z_l), last = linear output
};

ForwardCache run_forward(const MlpModel& model, const Eigen::MatrixXd& inputs_deg) {
    if (inputs_deg.cols() != model.layer_dims.front())
        throw ShapeError("fusion input has " + std::to_string(inputs_deg.cols()) + " columns, model expects " +
                         std::to_string(model.layer_dims.front()));
    ForwardCache cache;
    cache.post.push_back(inputs_deg.transpose() / model.input_scale_deg);
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        Eigen::MatrixXd z = model.weights[l] * cache.post.back();
        z.colwise() += model.biases[l];
        const bool last = l + 1 == model.num_layers();
        cache.post.push_back(last ? z : activate(z, model.activation));
        cache.pre.push_back(std::move(z));
    }
    return cache;
}

class TrainingDivergence : public NumericalError {
public:
    TrainingDivergence(const std::string& what, std::vector<double> history)
        : NumericalError(what), history_(std::move(history)) {}
    const std::vector<double>& history() const { return history_; }

private:
    std::vector<double> history_;
};

}  // namespace

std::string_view to_string(Activation activation) {
    switch (activation) {
        case Activation::ReLU: return "relu";
        case Activation::LeakyReLU: return "leaky_relu";
        case Activation::Tanh: return "tanh";
    }
    return "relu";
}

Activation parse_activation(std::string_view name) {
    if (name == "relu") return Activation::ReLU;
    if (name == "leaky_relu") return Activation::LeakyReLU;
    if (name == "tanh") return Activation::Tanh;
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Optimizer optimizer) { return optimizer == Optimizer::SGD ? "sgd" : "adam"; }

Optimizer parse_optimizer(std::string_view name) {
    if (name == "sgd") return Optimizer::SGD;
    if (name == "adam") return Optimizer::Adam;
    throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

std::size_t MlpModel::num_parameters() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
    return n;
}

void MlpModel::validate() const {
    if (layer_dims.size() < 2) throw ShapeError("model needs at least an input and an output dimension");
    if (layer_dims.back() != 1) throw ShapeError("model output dimension must be 1");
    if (weights.size() != layer_dims.size() - 1 || biases.size() != weights.size())
        throw ShapeError("layer count does not match layer_dims");
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (weights[l].rows() != layer_dims[l + 1] || weights[l].cols() != layer_dims[l] ||
            biases[l].size() != layer_dims[l + 1])
            throw ShapeError("layer " + std::to_string(l) + " does not match layer_dims");
        if (!weights[l].allFinite() || !biases[l].allFinite())
            throw NumericalError("layer " + std::to_string(l) + " has non-finite parameters");
    }
    if (!(input_scale_deg > 0.0) || !(output_scale_deg > 0.0)) throw ShapeError("scales must be positive");
}

bool MlpModel::operator==(const MlpModel& other) const {
    if (layer_dims != other.layer_dims || activation != other.activation ||
        input_scale_deg != other.input_scale_deg || output_scale_deg != other.output_scale_deg ||
        weights.size() != other.weights.size())
        return false;
    for (std::size_t l = 0; l < weights.size(); ++l)
        if (weights[l] != other.weights[l] || biases[l] != other.biases[l]) return false;
    return true;
}

std::string_view to_string(Initialization init) { return init == Initialization::He ? "he" : "linear_path"; }

Initialization parse_initialization(std::string_view name) {
    if (name == "he") return Initialization::He;
    if (name == "linear_path") return Initialization::LinearPath;
    throw ConfigError("unknown initialization '" + std::string(name) + "'");
}

MlpModel make_mlp(std::vector<int> layer_dims, Activation activation, std::uint64_t seed, Initialization init) {
    MlpModel m;
    m.layer_dims = std::move(layer_dims);
    m.activation = activation;
    if (m.layer_dims.size() < 2) throw ShapeError("model needs at least an input and an output dimension");
    std::mt19937_64 engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l) {
        const int fan_in = m.layer_dims[l];
        const double std = std::sqrt(2.0 / fan_in);
        Eigen::MatrixXd w(m.layer_dims[l + 1], fan_in);
        for (Eigen::Index c = 0; c < w.cols(); ++c)
            for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = std * normal(engine);
        m.weights.push_back(std::move(w));
        m.biases.push_back(Eigen::VectorXd::Zero(m.layer_dims[l + 1]));
    }
    if (init == Initialization::LinearPath) {
        if (activation != Activation::ReLU) throw ConfigError("linear_path initialization needs relu");
        const int n_in = m.layer_dims.front();
        for (std::size_t l = 1; l + 1 < m.layer_dims.size(); ++l)
            if (m.layer_dims[l] < 2 * n_in)
                throw ConfigError("linear_path initialization needs hidden widths >= " + std::to_string(2 * n_in));
        const std::size_t last = m.num_layers() - 1;
        for (std::size_t l = 0; l < m.num_layers(); ++l) {
            Eigen::MatrixXd& w = m.weights[l];
            if (l == last) {
                w.setZero();
                for (int i = 0; i < n_in; ++i) {
                    w(0, 2 * i) = 1.0 / n_in;
                    w(0, 2 * i + 1) = -1.0 / n_in;
                }
                continue;
            }
            w.topRows(2 * n_in).setZero();
            // Keep the random units from reading the path so that it starts clean.
            if (l > 0) w.block(2 * n_in, 0, w.rows() - 2 * n_in, 2 * n_in).setZero();
            for (int i = 0; i < n_in; ++i) {
                w(2 * i, l == 0 ? i : 2 * i) = 1.0;
                w(2 * i + 1, l == 0 ? i : 2 * i + 1) = l == 0 ? -1.0 : 1.0;
            }
        }
    }
    m.validate();
    return m;
}

double forward(const MlpModel& model, std::span<const double> input_deg) {
    if (static_cast<int>(input_deg.size()) != model.layer_dims.front())
        throw ShapeError("fusion input has " + std::to_string(input_deg.size()) + " entries, model expects " +
                         std::to_string(model.layer_dims.front()));
    Eigen::MatrixXd row(1, static_cast<Eigen::Index>(input_deg.size()));
    for (std::size_t i = 0; i < input_deg.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = input_deg[i];
    return forward_batch(model, row)(0);
}

Eigen::VectorXd forward_batch(const MlpModel& model, const Eigen::MatrixXd& inputs_deg) {
    const ForwardCache cache = run_forward(model, inputs_deg);
    return cache.post.back().row(0).transpose() * model.output_scale_deg;
}

LossGradient loss_and_gradient(const MlpModel& model, const Eigen::MatrixXd& inputs_deg,
                               const Eigen::VectorXd& labels_deg) {
    if (inputs_deg.rows() != labels_deg.size() || labels_deg.size() == 0)
        throw ShapeError("inputs and labels must be non-empty and aligned");
    const ForwardCache cache = run_forward(model, inputs_deg);
    const double q = static_cast<double>(labels_deg.size());
    const Eigen::RowVectorXd residual =
        cache.post.back().row(0) - labels_deg.transpose() / model.output_scale_deg;

    LossGradient g;
    g.loss = residual.squaredNorm() / q;
    g.d_weights.resize(model.num_layers());
    g.d_biases.resize(model.num_layers());

    Eigen::MatrixXd delta = (2.0 / q) * residual;  // dL/dz of the output layer
    for (std::size_t l = model.num_layers(); l-- > 0;) {
        g.d_weights[l] = delta * cache.post[l].transpose();
        g.d_biases[l] = delta.rowwise().sum();
        if (l == 0) break;
        delta = (model.weights[l].transpose() * delta)
                    .cwiseProduct(activation_slope(cache.pre[l - 1], cache.post[l], model.activation));
    }
    return g;
}

void TrainingConfig::validate() const {
    if (!(angle_limit_deg > 0.0 && angle_limit_deg < 90.0)) throw ConfigError("angle limit must lie in (0, 90)");
    if (!(grid_step_deg > 0.0)) throw ConfigError("grid_step must be positive");
    if (snr_list_db.empty()) throw ConfigError("snr_list must not be empty");
    if (realizations < 1) throw ConfigError("realizations must be >= 1");
    if (snapshots < 1) throw ConfigError("snapshots must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(learning_rate > 0.0) || !(final_learning_rate > 0.0)) throw ConfigError("learning rates must be positive");
    if (hidden.empty()) throw ConfigError("at least one hidden layer is required");
    for (int h : hidden)
        if (h < 1) throw ConfigError("hidden layer widths must be positive");
}

LabeledDataset generate_training_data(const ArrayGeometry& geometry, const std::vector<AnalogCombiner>& combiners,
                                      const TrainingConfig& config, ClusterMethod method, bool noiseless) {
    config.validate();
    geometry.validate();

    std::vector<double> angles;
    const auto steps = static_cast<int>(std::floor(2.0 * config.angle_limit_deg / config.grid_step_deg + 1e-9));
    for (int i = 0; i <= steps; ++i) angles.push_back(-config.angle_limit_deg + i * config.grid_step_deg);

    struct Job {
        double angle;
        double snr_db;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (std::size_t a = 0; a < angles.size(); ++a)
        for (std::size_t s = 0; s < config.snr_list_db.size(); ++s)
            for (int r = 0; r < config.realizations; ++r)
                jobs.push_back({angles[a], config.snr_list_db[s], derive_seed(config.seed, {a, std::bit_cast<std::uint64_t>(config.snr_list_db[s] + 0.0), static_cast<std::uint64_t>(r)})});

    const std::size_t cols = geometry.num_groups() + 1;
    std::vector<std::optional<std::vector<double>>> rows(jobs.size());

#pragma omp parallel for schedule(dynamic)
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        const SourceConfig source{jobs[j].angle, jobs[j].snr_db, config.snapshots};
        try {
            const auto observed = synthesize_snapshots(geometry, source, combiners, jobs[j].seed, {noiseless});
            const auto front = estimate_front_end(observed, geometry);
            rows[j] = fusion_input_row(cluster_true_set(front.fd_angle_deg, front.candidates, method));
        } catch (const EstimationFailure&) {
            rows[j].reset();
        }
    }

    LabeledDataset ds;
    const auto kept = static_cast<Eigen::Index>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.has_value(); }));
    if (kept == 0) throw EstimationFailure("every training row failed estimation");
    ds.inputs.resize(kept, static_cast<Eigen::Index>(cols));
    ds.labels.resize(kept);
    Eigen::Index out = 0;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (!rows[j]) {
            ++ds.dropped;
            continue;
        }
        for (std::size_t c = 0; c < cols; ++c) ds.inputs(out, static_cast<Eigen::Index>(c)) = (*rows[j])[c];
        ds.labels(out) = jobs[j].angle;
        ds.provenance.push_back({jobs[j].angle, jobs[j].snr_db, jobs[j].seed});
        ++out;
    }
    return ds;
}

TrainingResult train(MlpModel model, const LabeledDataset& dataset, const TrainingConfig& config) {
    config.validate();
    model.validate();
    if (dataset.size() == 0) throw ShapeError("training dataset is empty");
    const MlpModel initial = model;

    const auto q = static_cast<Eigen::Index>(dataset.size());
    const Eigen::Index batch = std::min<Eigen::Index>(config.batch_size, q);
    const Eigen::Index batches_per_epoch = (q + batch - 1) / batch;
    const double total_steps = static_cast<double>(batches_per_epoch) * config.epochs;

    std::vector<Eigen::MatrixXd> m_w, v_w;
    std::vector<Eigen::VectorXd> m_b, v_b;
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        m_w.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
        v_w.push_back(m_w.back());
        m_b.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
        v_b.push_back(m_b.back());
    }
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    std::mt19937_64 engine(config.seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(q));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    TrainingResult result;
    long step = 0;
    Eigen::MatrixXd xb;
    Eigen::VectorXd yb;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), engine);
        for (Eigen::Index start = 0; start < q; start += batch) {
            const Eigen::Index n = std::min(batch, q - start);
            xb.resize(n, dataset.inputs.cols());
            yb.resize(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                xb.row(i) = dataset.inputs.row(order[static_cast<std::size_t>(start + i)]);
                yb(i) = dataset.labels(order[static_cast<std::size_t>(start + i)]);
            }
            const LossGradient g = loss_and_gradient(model, xb, yb);
            const double progress = static_cast<double>(step) / total_steps;
            const double lr = config.final_learning_rate +
                              0.5 * (config.learning_rate - config.final_learning_rate) * (1.0 + std::cos(kPi * progress));
            ++step;
            if (config.optimizer == Optimizer::SGD) {
                for (std::size_t l = 0; l < model.num_layers(); ++l) {
                    model.weights[l] -= lr * g.d_weights[l];
                    model.biases[l] -= lr * g.d_biases[l];
                }
                continue;
            }
            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (std::size_t l = 0; l < model.num_layers(); ++l) {
                m_w[l] = beta1 * m_w[l] + (1.0 - beta1) * g.d_weights[l];
                v_w[l] = beta2 * v_w[l] + (1.0 - beta2) * g.d_weights[l].cwiseAbs2();
                m_b[l] = beta1 * m_b[l] + (1.0 - beta1) * g.d_biases[l];
                v_b[l] = beta2 * v_b[l] + (1.0 - beta2) * g.d_biases[l].cwiseAbs2();
                model.weights[l].array() -=
                    lr * (m_w[l].array() / c1) / ((v_w[l].array() / c2).sqrt() + eps);
                model.biases[l].array() -=
                    lr * (m_b[l].array() / c1) / ((v_b[l].array() / c2).sqrt() + eps);
            }
        }
        const double epoch_loss = loss_and_gradient(model, dataset.inputs, dataset.labels).loss;
        result.loss_history.push_back(epoch_loss);
        if (!std::isfinite(epoch_loss))
            throw TrainingDivergence("training loss became non-finite at epoch " + std::to_string(epoch + 1),
                                     result.loss_history);
    }
    result.final_loss = result.loss_history.back();
    if (config.refit_output_layer) {
        MlpModel refit = refit_output_layer(model, dataset);
        const double refit_loss = loss_and_gradient(refit, dataset.inputs, dataset.labels).loss;
        if (refit_loss <= result.final_loss) {
            model = std::move(refit);
            result.final_loss = refit_loss;
        }
        // Gradient steps can bend hidden features that were already right; at
        // high SNR the refit of the untouched network is often the better fit.
        MlpModel refit_initial = refit_output_layer(initial, dataset);
        const double initial_loss = loss_and_gradient(refit_initial, dataset.inputs, dataset.labels).loss;
        if (initial_loss < result.final_loss) {
            model = std::move(refit_initial);
            result.final_loss = initial_loss;
            result.kept_initial_features = true;
        }
    }
    result.model = std::move(model);
    return result;
}

MlpModel refit_output_layer(MlpModel model, const LabeledDataset& dataset) {
    model.validate();
    if (dataset.size() == 0) throw ShapeError("training dataset is empty");
    const ForwardCache cache = run_forward(model, dataset.inputs);
    const Eigen::MatrixXd& hidden = cache.post[model.num_layers() - 1];  // h x Q
    const Eigen::Index h = hidden.rows();
    Eigen::MatrixXd design(hidden.cols(), h + 1);
    design.leftCols(h) = hidden.transpose();
    design.col(h).setOnes();
    const Eigen::VectorXd target = dataset.labels / model.output_scale_deg;
    const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(target);
    if (!coef.allFinite()) throw NumericalError("output-layer refit produced non-finite weights");
    model.weights.back() = coef.head(h).transpose();
    model.biases.back()(0) = coef(h);
    return model;
}

namespace {

constexpr const char* kSetFormatName = "h2ad-fusion-set";

nlohmann::json model_to_json(const MlpModel& model) {
    model.validate();
    nlohmann::json j;
    j["format"] = kFormatName;
    j["format_version"] = kModelFormatVersion;
    j["layer_dims"] = model.layer_dims;
    j["activation"] = std::string(to_string(model.activation));
    j["input_scale_deg"] = model.input_scale_deg;
    j["output_scale_deg"] = model.output_scale_deg;
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index r = 0; r < model.weights[l].rows(); ++r) {
            std::vector<double> row(static_cast<std::size_t>(model.weights[l].cols()));
            for (Eigen::Index c = 0; c < model.weights[l].cols(); ++c) row[static_cast<std::size_t>(c)] = model.weights[l](r, c);
            rows.push_back(row);
        }
        std::vector<double> bias(model.biases[l].data(), model.biases[l].data() + model.biases[l].size());
        layers.push_back({{"weights", rows}, {"biases", bias}});
    }
    j["layers"] = layers;
    return j;
}

nlohmann::json parse_document(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("corrupt model file: ") + e.what());
    }
    if (!j.is_object()) throw FormatError("corrupt model file: top level is not an object");
    return j;
}

void check_version(const nlohmann::json& j) {
    if (!j.contains("format_version")) throw VersionError("model file has no format_version");
    if (!j["format_version"].is_number_integer() || j["format_version"].get<int>() != kModelFormatVersion)
        throw VersionError("unsupported model format_version " + j["format_version"].dump());
}

MlpModel model_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw FormatError("corrupt model file: model entry is not an object");
    check_version(j);
    MlpModel m;
    try {
        if (j.at("format").get<std::string>() != kFormatName) throw FormatError("not a fusion model file");
        m.layer_dims = j.at("layer_dims").get<std::vector<int>>();
        m.activation = parse_activation(j.at("activation").get<std::string>());
        m.input_scale_deg = j.at("input_scale_deg").get<double>();
        m.output_scale_deg = j.at("output_scale_deg").get<double>();
        for (const auto& layer : j.at("layers")) {
            const auto rows = layer.at("weights").get<std::vector<std::vector<double>>>();
            const auto bias = layer.at("biases").get<std::vector<double>>();
            const auto n_cols = rows.empty() ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.front().size());
            Eigen::MatrixXd w(static_cast<Eigen::Index>(rows.size()), n_cols);
            for (std::size_t r = 0; r < rows.size(); ++r) {
                if (static_cast<Eigen::Index>(rows[r].size()) != n_cols) throw FormatError("ragged weight matrix");
                for (std::size_t c = 0; c < rows[r].size(); ++c)
                    w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
            }
            m.weights.push_back(std::move(w));
            m.biases.push_back(Eigen::Map<const Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(bias.size())));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("corrupt model file: ") + e.what());
    } catch (const ConfigError& e) {
        throw FormatError(std::string("corrupt model file: ") + e.what());
    }
    try {
        m.validate();
    } catch (const std::exception& e) {
        throw FormatError(std::string("corrupt model file: ") + e.what());
    }
    return m;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open model file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text(const std::string& text, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out << text << '\n';
    if (!out) throw FormatError("failed writing " + path.string());
}

}  // namespace

std::string serialize_model(const MlpModel& model) { return model_to_json(model).dump(1); }

MlpModel deserialize_model(std::string_view text) { return model_from_json(parse_document(text)); }

void save_model(const MlpModel& model, const std::filesystem::path& path) { write_text(serialize_model(model), path); }

MlpModel load_model(const std::filesystem::path& path) { return deserialize_model(read_text(path)); }

const MlpModel& FusionModelSet::select(double snr) const {
    if (models.empty()) throw ConfigError("fusion model set is empty");
    if (!per_snr()) return models.front();
    std::size_t best = 0;
    for (std::size_t i = 1; i < snr_db.size(); ++i) {
        const double d = std::abs(snr_db[i] - snr), d_best = std::abs(snr_db[best] - snr);
        if (d < d_best || (d == d_best && snr_db[i] < snr_db[best])) best = i;
    }
    return models[best];
}

void FusionModelSet::validate() const {
    if (models.empty()) throw ShapeError("fusion model set is empty");
    if (per_snr() && snr_db.size() != models.size()) throw ShapeError("per-SNR model set is misaligned");
    if (!per_snr() && models.size() != 1) throw ShapeError("a mixture model set holds exactly one model");
    for (const auto& m : models) {
        m.validate();
        if (m.layer_dims.front() != models.front().layer_dims.front())
            throw ShapeError("models in a set must share the input dimension");
    }
}

std::string serialize_model_set(const FusionModelSet& set) {
    set.validate();
    nlohmann::json j;
    j["format"] = kSetFormatName;
    j["format_version"] = kModelFormatVersion;
    j["snr_db"] = set.snr_db;
    nlohmann::json models = nlohmann::json::array();
    for (const auto& m : set.models) models.push_back(model_to_json(m));
    j["models"] = models;
    return j.dump(1);
}

FusionModelSet deserialize_model_set(std::string_view text) {
    const nlohmann::json j = parse_document(text);
    check_version(j);
    FusionModelSet set;
    if (j.value("format", std::string()) == kFormatName) {
        set.models.push_back(model_from_json(j));
        return set;
    }
    try {
        if (j.at("format").get<std::string>() != kSetFormatName) throw FormatError("not a fusion model file");
        set.snr_db = j.at("snr_db").get<std::vector<double>>();
        for (const auto& m : j.at("models")) set.models.push_back(model_from_json(m));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("corrupt model file: ") + e.what());
    }
    try {
        set.validate();
    } catch (const std::exception& e) {
        throw FormatError(std::string("corrupt model file: ") + e.what());
    }
    return set;
}

void save_model_set(const FusionModelSet& set, const std::filesystem::path& path) {
    write_text(serialize_model_set(set), path);
}

FusionModelSet load_model_set(const std::filesystem::path& path) { return deserialize_model_set(read_text(path)); }

FusionTrainingReport train_fusion_models(const ArrayGeometry& geometry, const std::vector<AnalogCombiner>& combiners,
                                         const TrainingConfig& config, bool noiseless) {
    config.validate();
    std::vector<std::vector<double>> groups;
    if (config.per_snr_models)
        for (double s : config.snr_list_db) groups.push_back({s});
    else
        groups.push_back(config.snr_list_db);

    std::vector<int> dims{static_cast<int>(geometry.num_groups()) + 1};
    dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
    dims.push_back(1);

    FusionTrainingReport report;
    for (const auto& snrs : groups) {
        TrainingConfig sub = config;
        sub.snr_list_db = snrs;
        report.datasets.push_back(generate_training_data(geometry, combiners, sub, config.cluster_method, noiseless));
        report.results.push_back(
            train(make_mlp(dims, config.activation, config.seed, config.initialization), report.datasets.back(), sub));
        report.models.models.push_back(report.results.back().model);
        if (config.per_snr_models) report.models.snr_db.push_back(snrs.front());
    }
    return report;
}

}  // namespace h2ad
