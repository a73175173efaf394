#include "h2ad/harness.hpp"

#include "h2ad/crlb.hpp"
#include "h2ad/errors.hpp"
#include "h2ad/pipeline.hpp"
#include "h2ad/seeding.hpp"

#include <json.hpp>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace h2ad {

using nlohmann::json;

namespace {

constexpr Method kAllMethods[] = {Method::IwfGMinD, Method::IwfGMaxCS, Method::FusionNetGMinD,
                                  Method::FusionNetGMaxCS};

// ---- strict JSON reading -------------------------------------------------

void reject_unknown(const json& obj, std::string_view where, std::initializer_list<std::string_view> known) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("unknown field '" + key + "' in " + std::string(where));
    }
}

const json& require(const json& obj, std::string_view where, const std::string& key) {
    if (!obj.contains(key)) throw ConfigError("missing required field '" + key + "' in " + std::string(where));
    return obj.at(key);
}

const json& object_field(const json& obj, std::string_view where, const std::string& key) {
    const json& v = require(obj, where, key);
    if (!v.is_object()) throw ConfigError("field '" + key + "' in " + std::string(where) + " must be an object");
    return v;
}

template <typename T>
T read_as(const json& v, std::string_view where, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("field '" + key + "' in " + std::string(where) + " has the wrong type");
    }
}

template <typename T>
T read_required(const json& obj, std::string_view where, const std::string& key) {
    const json& v = require(obj, where, key);
    if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError("field '" + key + "' in " + std::string(where) + " must be a number");
    } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer())
            throw ConfigError("field '" + key + "' in " + std::string(where) + " must be an integer");
    }
    return read_as<T>(v, where, key);
}

template <typename T>
void read_optional(const json& obj, std::string_view where, const std::string& key, T& out) {
    if (obj.contains(key)) out = read_required<T>(obj, where, key);
}

ArrayGeometry geometry_from_json(const json& j) {
    constexpr std::string_view where = "geometry";
    reject_unknown(j, where,
                   {"antennas_per_subarray", "subarrays_per_group", "fd_antennas", "element_spacing", "wavelength"});
    ArrayGeometry g;
    g.antennas_per_subarray = read_required<std::vector<int>>(j, where, "antennas_per_subarray");
    g.subarrays_per_group = read_required<std::vector<int>>(j, where, "subarrays_per_group");
    g.fd_antennas = read_required<int>(j, where, "fd_antennas");
    read_optional(j, where, "element_spacing", g.element_spacing);
    read_optional(j, where, "wavelength", g.wavelength);
    return g;
}

json geometry_to_json(const ArrayGeometry& g) {
    return {{"antennas_per_subarray", g.antennas_per_subarray},
            {"subarrays_per_group", g.subarrays_per_group},
            {"fd_antennas", g.fd_antennas},
            {"element_spacing", g.element_spacing},
            {"wavelength", g.wavelength}};
}

std::string_view to_string(ConvergenceCriterion c) { return c == ConvergenceCriterion::Absolute ? "absolute" : "relative"; }

ConvergenceCriterion parse_criterion(std::string_view s) {
    if (s == "absolute") return ConvergenceCriterion::Absolute;
    if (s == "relative") return ConvergenceCriterion::Relative;
    throw ConfigError("unknown convergence criterion '" + std::string(s) + "'");
}

// ---- trials --------------------------------------------------------------

double sqrt_crlb(const ExperimentSpec& spec, double snr_db, int snapshots) {
    const CrlbContext c{spec.source.true_angle_deg, std::pow(10.0, snr_db / 10.0), snapshots, spec.geometry};
    return std::sqrt(hybrid_crlb(c));
}

void add_curve_points(RmseCurve& curve, const RunContext& ctx, double value, std::span<const TrialResult> results,
                      double crlb) {
    for (Method m : curve.methods) {
        CurvePoint p;
        p.sweep_value = value;
        p.method = m;
        p.summary = summarize(results, m, ctx.spec.source.true_angle_deg);
        p.crlb_sqrt_deg = crlb;
        curve.points.push_back(p);
    }
}

json rounded(double v) {
    if (!std::isfinite(v)) return nullptr;
    return std::strtod(format_number(v).c_str(), nullptr);
}

}  // namespace

std::string_view to_string(Method method) {
    switch (method) {
        case Method::IwfGMinD: return "IWF-GMinD";
        case Method::IwfGMaxCS: return "IWF-GMaxCS";
        case Method::FusionNetGMinD: return "FusionNet-GMinD";
        case Method::FusionNetGMaxCS: return "FusionNet-GMaxCS";
    }
    return "IWF-GMinD";
}

Method parse_method(std::string_view name) {
    for (Method m : kAllMethods)
        if (to_string(m) == name) return m;
    throw ConfigError("unknown method '" + std::string(name) + "'");
}

bool is_fusion_net(Method method) { return method == Method::FusionNetGMinD || method == Method::FusionNetGMaxCS; }

ClusterMethod cluster_method_of(Method method) {
    return method == Method::IwfGMinD || method == Method::FusionNetGMinD ? ClusterMethod::GMinD
                                                                          : ClusterMethod::GMaxCS;
}

void ExperimentSpec::validate() const {
    geometry.validate();
    source.validate();
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (methods.empty()) throw ConfigError("methods must not be empty");
    if (std::set<Method>(methods.begin(), methods.end()).size() != methods.size())
        throw ConfigError("methods must not repeat");
    const bool needs_model = std::any_of(methods.begin(), methods.end(), is_fusion_net);
    if (needs_model && (!model_path || model_path->empty()))
        throw ConfigError("fusion-net methods require model_path");
    for (double s : snr_grid_db)
        if (!std::isfinite(s)) throw ConfigError("snr_grid_db entries must be finite");
    for (int h : snapshot_grid)
        if (h < 1) throw ConfigError("snapshot_grid entries must be >= 1");
    for (int c : iteration_caps)
        if (c < 0) throw ConfigError("iteration_caps entries must be >= 0");
    if (!std::isfinite(snapshot_sweep_snr_db) || !std::isfinite(iteration_sweep_snr_db))
        throw ConfigError("sweep SNRs must be finite");
    if (!(outlier_threshold_deg > 0.0)) throw ConfigError("outlier_threshold_deg must be positive");
    iwf.validate();
}

ExperimentSpec parse_spec(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("experiment spec is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("experiment spec must be a JSON object");
    constexpr std::string_view top = "spec";
    reject_unknown(j, top,
                   {"geometry", "source", "snr_grid_db", "snapshot_grid", "snapshot_sweep_snr_db", "iteration_caps",
                    "iteration_sweep_snr_db", "trials", "methods", "iwf", "model_path", "master_seed", "noiseless",
                    "outlier_threshold_deg", "emit_inclusive_rmse"});

    ExperimentSpec s;
    s.geometry = geometry_from_json(object_field(j, top, "geometry"));

    const json& src = object_field(j, top, "source");
    reject_unknown(src, "source", {"true_angle_deg", "snr_db", "snapshots"});
    s.source.true_angle_deg = read_required<double>(src, "source", "true_angle_deg");
    s.source.snapshots = read_required<int>(src, "source", "snapshots");
    read_optional(src, "source", "snr_db", s.source.snr_db);

    s.trials = read_required<int>(j, top, "trials");
    s.master_seed = read_required<std::uint64_t>(j, top, "master_seed");
    s.methods.clear();
    for (const auto& name : read_required<std::vector<std::string>>(j, top, "methods")) s.methods.push_back(parse_method(name));

    read_optional(j, top, "snr_grid_db", s.snr_grid_db);
    read_optional(j, top, "snapshot_grid", s.snapshot_grid);
    read_optional(j, top, "snapshot_sweep_snr_db", s.snapshot_sweep_snr_db);
    read_optional(j, top, "iteration_caps", s.iteration_caps);
    read_optional(j, top, "iteration_sweep_snr_db", s.iteration_sweep_snr_db);
    read_optional(j, top, "noiseless", s.noiseless);
    read_optional(j, top, "outlier_threshold_deg", s.outlier_threshold_deg);
    read_optional(j, top, "emit_inclusive_rmse", s.emit_inclusive_rmse);
    if (j.contains("model_path") && !j.at("model_path").is_null())
        s.model_path = read_as<std::string>(j.at("model_path"), top, "model_path");

    if (j.contains("iwf")) {
        const json& w = object_field(j, top, "iwf");
        reject_unknown(w, "iwf", {"tolerance_deg", "max_iterations", "crlb_variant", "criterion"});
        read_optional(w, "iwf", "tolerance_deg", s.iwf.tolerance_deg);
        read_optional(w, "iwf", "max_iterations", s.iwf.max_iterations);
        if (w.contains("crlb_variant"))
            s.iwf.crlb_variant = parse_crlb_variant(read_required<std::string>(w, "iwf", "crlb_variant"));
        if (w.contains("criterion")) s.iwf.criterion = parse_criterion(read_required<std::string>(w, "iwf", "criterion"));
    }
    s.validate();
    return s;
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    ExperimentSpec s = parse_spec(buffer.str());
    if (s.model_path && std::filesystem::path(*s.model_path).is_relative())
        s.model_path = (path.parent_path() / *s.model_path).lexically_normal().string();
    return s;
}

std::string spec_to_json(const ExperimentSpec& spec) {
    json j;
    j["geometry"] = geometry_to_json(spec.geometry);
    j["source"] = {{"true_angle_deg", spec.source.true_angle_deg},
                   {"snr_db", spec.source.snr_db},
                   {"snapshots", spec.source.snapshots}};
    j["snr_grid_db"] = spec.snr_grid_db;
    j["snapshot_grid"] = spec.snapshot_grid;
    j["snapshot_sweep_snr_db"] = spec.snapshot_sweep_snr_db;
    j["iteration_caps"] = spec.iteration_caps;
    j["iteration_sweep_snr_db"] = spec.iteration_sweep_snr_db;
    j["trials"] = spec.trials;
    std::vector<std::string> methods;
    for (Method m : spec.methods) methods.emplace_back(to_string(m));
    j["methods"] = methods;
    j["iwf"] = {{"tolerance_deg", spec.iwf.tolerance_deg},
                {"max_iterations", spec.iwf.max_iterations},
                {"crlb_variant", std::string(to_string(spec.iwf.crlb_variant))},
                {"criterion", std::string(to_string(spec.iwf.criterion))}};
    if (spec.model_path) j["model_path"] = *spec.model_path;
    j["master_seed"] = spec.master_seed;
    j["noiseless"] = spec.noiseless;
    j["outlier_threshold_deg"] = spec.outlier_threshold_deg;
    j["emit_inclusive_rmse"] = spec.emit_inclusive_rmse;
    return j.dump(2);
}

RunContext RunContext::prepare(const ExperimentSpec& spec) {
    std::optional<FusionModelSet> models;
    if (std::any_of(spec.methods.begin(), spec.methods.end(), is_fusion_net)) {
        if (!spec.model_path) throw ConfigError("fusion-net methods require model_path");
        models = load_model_set(*spec.model_path);
    }
    return with_models(spec, std::move(models));
}

RunContext RunContext::with_models(const ExperimentSpec& spec, std::optional<FusionModelSet> models) {
    RunContext ctx;
    ctx.spec = spec;
    ctx.combiners = zero_combiners(spec.geometry);
    if (models) {
        models->validate();
        if (models->models.front().layer_dims.front() != static_cast<int>(spec.geometry.num_groups()) + 1)
            throw ConfigError("fusion model input size does not match the number of groups");
    } else if (std::any_of(spec.methods.begin(), spec.methods.end(), is_fusion_net)) {
        throw ConfigError("fusion-net methods need a fusion model");
    }
    ctx.models = std::move(models);
    return ctx;
}

std::vector<TrialResult> run_trial(const RunContext& ctx, double snr_db, int snapshots, std::uint64_t trial_id,
                                   const TrialOptions& options) {
    const ExperimentSpec& spec = ctx.spec;
    std::vector<TrialResult> out;
    for (Method m : spec.methods) {
        TrialResult r;
        r.trial_id = trial_id;
        r.method = m;
        out.push_back(r);
    }

    const SourceConfig source{spec.source.true_angle_deg, snr_db, snapshots};
    const std::uint64_t seed = trial_seed(spec.master_seed, snr_db, snapshots, trial_id);
    FrontEndEstimate front;
    try {
        const auto observed = synthesize_snapshots(spec.geometry, source, ctx.combiners, seed, {spec.noiseless});
        front = estimate_front_end(observed, spec.geometry);
    } catch (const EstimationFailure&) {
        for (auto& r : out) r.failure = true;
        return out;
    } catch (const NumericalError&) {
        for (auto& r : out) r.failure = true;
        return out;
    }

    const WeightContext weights{spec.geometry, source.snr_linear(), snapshots};
    IwfConfig iwf = spec.iwf;
    if (options.forced_iwf_updates) {
        iwf.max_iterations = *options.forced_iwf_updates;
        iwf.stop_on_tolerance = false;
    }

    for (auto& r : out) {
        const TrueSolutionSet chosen = cluster_true_set(front.fd_angle_deg, front.candidates, cluster_method_of(r.method));
        for (double a : chosen.angles_deg)
            if (std::abs(a - front.fd_angle_deg) > spec.outlier_threshold_deg) r.outlier = true;

        if (is_fusion_net(r.method)) {
            const auto row = fusion_input_row(chosen);
            double y = forward(ctx.models->select(snr_db), row);
            if (!std::isfinite(y)) {
                r.failure = true;
                continue;
            }
            if (std::abs(y) > 90.0) {
                y = std::clamp(y, -90.0, 90.0);
                r.clamped = true;
            }
            r.angle_deg = y;
            continue;
        }
        try {
            FusedEstimate fused = iwf_fuse(front.fd_angle_deg, chosen, weights, iwf);
            r.angle_deg = fused.angle_deg;
            r.iterations_used = fused.iterations_used;
            if (options.keep_trace) r.trace = std::move(fused.trace);
        } catch (const IwfDivergence& e) {
            r.failure = true;
            if (options.keep_trace) r.trace = e.trace();
        } catch (const NumericalError&) {
            r.failure = true;
        } catch (const DomainError&) {
            r.failure = true;
        }
    }
    return out;
}

PointSummary summarize(std::span<const TrialResult> results, Method method, double true_angle_deg) {
    PointSummary s;
    std::vector<double> sq;
    double inclusive = 0.0;
    int inclusive_n = 0;
    for (const auto& r : results) {
        if (r.method != method) continue;
        ++s.trials;
        if (r.clamped) ++s.clamps;
        if (r.failure) {
            ++s.failures;
            continue;
        }
        const double e2 = (r.angle_deg - true_angle_deg) * (r.angle_deg - true_angle_deg);
        inclusive += e2;
        ++inclusive_n;
        if (r.outlier) {
            ++s.outliers;
            ++s.failures;
            continue;
        }
        sq.push_back(e2);
    }
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    s.rmse_inclusive_deg = inclusive_n > 0 ? std::sqrt(inclusive / inclusive_n) : nan;
    if (sq.empty()) {
        s.rmse_deg = nan;
        s.rmse_standard_error = nan;
        return s;
    }
    s.valid = true;
    double mean = 0.0;
    for (double v : sq) mean += v;
    mean /= static_cast<double>(sq.size());
    s.rmse_deg = std::sqrt(mean);
    if (sq.size() > 1 && s.rmse_deg > 0.0) {
        double var = 0.0;
        for (double v : sq) var += (v - mean) * (v - mean);
        var /= static_cast<double>(sq.size() - 1);
        s.rmse_standard_error = std::sqrt(var / static_cast<double>(sq.size())) / (2.0 * s.rmse_deg);
    }
    return s;
}

const CurvePoint& RmseCurve::at(std::size_t value_index, Method method) const {
    const auto it = std::find(methods.begin(), methods.end(), method);
    if (it == methods.end() || value_index >= sweep_values.size()) throw IndexError("no such curve point");
    return points.at(value_index * methods.size() + static_cast<std::size_t>(it - methods.begin()));
}

std::vector<TrialResult> run_point_serial(const RunContext& ctx, double snr_db, int snapshots,
                                          const TrialOptions& options) {
    std::vector<TrialResult> all;
    for (int t = 0; t < ctx.spec.trials; ++t) {
        auto r = run_trial(ctx, snr_db, snapshots, static_cast<std::uint64_t>(t), options);
        all.insert(all.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
    }
    return all;
}

std::vector<TrialResult> run_point(const RunContext& ctx, double snr_db, int snapshots, const TrialOptions& options,
                                   const ExecutionOptions& exec) {
    const int trials = ctx.spec.trials;
    std::vector<std::vector<TrialResult>> per_trial(static_cast<std::size_t>(trials));
    std::exception_ptr error;
    const int threads = exec.threads > 0 ? exec.threads : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int t = 0; t < trials; ++t) {
        try {
            per_trial[static_cast<std::size_t>(t)] = run_trial(ctx, snr_db, snapshots, static_cast<std::uint64_t>(t), options);
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);

    std::vector<TrialResult> all;
    all.reserve(static_cast<std::size_t>(trials) * ctx.spec.methods.size());
    for (auto& r : per_trial) all.insert(all.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
    return all;
}

RmseCurve simulate(const RunContext& ctx, const ExecutionOptions& exec) {
    const auto& s = ctx.spec;
    RmseCurve curve{"single", {s.source.snr_db}, s.methods, {}};
    const auto results = run_point(ctx, s.source.snr_db, s.source.snapshots, {}, exec);
    add_curve_points(curve, ctx, s.source.snr_db, results, sqrt_crlb(s, s.source.snr_db, s.source.snapshots));
    return curve;
}

RmseCurve sweep_snr(const RunContext& ctx, const ExecutionOptions& exec) {
    const auto& s = ctx.spec;
    if (s.snr_grid_db.empty()) throw ConfigError("snr_grid_db is empty");
    RmseCurve curve{"snr_db", s.snr_grid_db, s.methods, {}};
    for (double snr : s.snr_grid_db) {
        const auto results = run_point(ctx, snr, s.source.snapshots, {}, exec);
        add_curve_points(curve, ctx, snr, results, sqrt_crlb(s, snr, s.source.snapshots));
    }
    return curve;
}

RmseCurve sweep_snapshots(const RunContext& ctx, const ExecutionOptions& exec) {
    const auto& s = ctx.spec;
    if (s.snapshot_grid.empty()) throw ConfigError("snapshot_grid is empty");
    RmseCurve curve{"snapshots", {}, s.methods, {}};
    for (int h : s.snapshot_grid) {
        curve.sweep_values.push_back(h);
        const auto results = run_point(ctx, s.snapshot_sweep_snr_db, h, {}, exec);
        add_curve_points(curve, ctx, h, results, sqrt_crlb(s, s.snapshot_sweep_snr_db, h));
    }
    return curve;
}

RmseCurve sweep_iterations(const RunContext& ctx, const ExecutionOptions& exec) {
    const auto& s = ctx.spec;
    if (s.iteration_caps.empty()) throw ConfigError("iteration_caps is empty");
    std::vector<Method> iwf_methods;
    for (Method m : s.methods)
        if (!is_fusion_net(m)) iwf_methods.push_back(m);
    if (iwf_methods.empty()) throw ConfigError("iteration sweep needs at least one IWF method");

    RunContext iwf_ctx = ctx;
    iwf_ctx.spec.methods = iwf_methods;
    iwf_ctx.models.reset();

    // Every cap is a prefix of the longest run, so one pass with traces serves all caps.
    const int max_cap = *std::max_element(s.iteration_caps.begin(), s.iteration_caps.end());
    TrialOptions options;
    options.keep_trace = true;
    options.forced_iwf_updates = max_cap + 1;
    const auto full = run_point(iwf_ctx, s.iteration_sweep_snr_db, s.source.snapshots, options, exec);

    RmseCurve curve{"iterations", {}, iwf_methods, {}};
    const double crlb = sqrt_crlb(s, s.iteration_sweep_snr_db, s.source.snapshots);
    for (int cap : s.iteration_caps) {
        curve.sweep_values.push_back(cap);
        std::vector<TrialResult> at_cap;
        at_cap.reserve(full.size());
        for (const auto& r : full) {
            TrialResult c = r;
            c.trace.clear();
            if (!r.failure) {
                c.angle_deg = r.trace.at(static_cast<std::size_t>(cap) + 1).angle_deg;
                c.iterations_used = cap + 1;
            }
            at_cap.push_back(std::move(c));
        }
        add_curve_points(curve, iwf_ctx, cap, at_cap, crlb);
    }
    return curve;
}

TrainingSpec parse_training_spec(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("training spec is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("training spec must be a JSON object");
    reject_unknown(j, "training spec", {"geometry", "training", "noiseless"});
    TrainingSpec s;
    if (j.contains("geometry")) s.geometry = geometry_from_json(object_field(j, "training spec", "geometry"));
    read_optional(j, "training spec", "noiseless", s.noiseless);
    if (j.contains("training")) {
        constexpr std::string_view where = "training";
        const json& t = object_field(j, "training spec", "training");
        reject_unknown(t, where,
                       {"angle_limit_deg", "grid_step_deg", "snr_list_db", "realizations", "snapshots", "hidden",
                        "activation", "initialization", "optimizer", "epochs", "batch_size", "learning_rate",
                        "final_learning_rate", "refit_output_layer", "per_snr_models", "cluster_method", "seed"});
        TrainingConfig& c = s.training;
        read_optional(t, where, "angle_limit_deg", c.angle_limit_deg);
        read_optional(t, where, "grid_step_deg", c.grid_step_deg);
        read_optional(t, where, "snr_list_db", c.snr_list_db);
        read_optional(t, where, "realizations", c.realizations);
        read_optional(t, where, "snapshots", c.snapshots);
        read_optional(t, where, "hidden", c.hidden);
        read_optional(t, where, "epochs", c.epochs);
        read_optional(t, where, "batch_size", c.batch_size);
        read_optional(t, where, "learning_rate", c.learning_rate);
        read_optional(t, where, "final_learning_rate", c.final_learning_rate);
        read_optional(t, where, "refit_output_layer", c.refit_output_layer);
        read_optional(t, where, "per_snr_models", c.per_snr_models);
        read_optional(t, where, "seed", c.seed);
        if (t.contains("activation")) c.activation = parse_activation(read_required<std::string>(t, where, "activation"));
        if (t.contains("initialization"))
            c.initialization = parse_initialization(read_required<std::string>(t, where, "initialization"));
        if (t.contains("optimizer")) c.optimizer = parse_optimizer(read_required<std::string>(t, where, "optimizer"));
        if (t.contains("cluster_method"))
            c.cluster_method = parse_cluster_method(read_required<std::string>(t, where, "cluster_method"));
    }
    s.geometry.validate();
    s.training.validate();
    return s;
}

TrainingSpec load_training_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_training_spec(buffer.str());
}

std::string training_spec_to_json(const TrainingSpec& spec) {
    const TrainingConfig& c = spec.training;
    json t = {{"angle_limit_deg", c.angle_limit_deg},
              {"grid_step_deg", c.grid_step_deg},
              {"snr_list_db", c.snr_list_db},
              {"realizations", c.realizations},
              {"snapshots", c.snapshots},
              {"hidden", c.hidden},
              {"activation", std::string(to_string(c.activation))},
              {"initialization", std::string(to_string(c.initialization))},
              {"optimizer", std::string(to_string(c.optimizer))},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"final_learning_rate", c.final_learning_rate},
              {"refit_output_layer", c.refit_output_layer},
              {"per_snr_models", c.per_snr_models},
              {"cluster_method", std::string(to_string(c.cluster_method))},
              {"seed", c.seed}};
    return json{{"geometry", geometry_to_json(spec.geometry)}, {"training", t}, {"noiseless", spec.noiseless}}.dump(2);
}

OutputFormat parse_output_format(std::string_view name) {
    if (name == "csv") return OutputFormat::Csv;
    if (name == "json") return OutputFormat::Json;
    throw ConfigError("unknown output format '" + std::string(name) + "'");
}

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

std::string curve_to_csv(const RmseCurve& curve, bool inclusive_column) {
    std::string out = kCsvHeader;
    if (inclusive_column) out += ",rmse_inclusive_deg";
    out += '\n';
    for (const auto& p : curve.points) {
        out += curve.sweep_name + ',' + format_number(p.sweep_value) + ',' + std::string(to_string(p.method)) + ',' +
               format_number(p.summary.rmse_deg) + ',' + format_number(p.crlb_sqrt_deg) + ',' +
               std::to_string(p.summary.trials) + ',' + std::to_string(p.summary.failures);
        if (inclusive_column) out += ',' + format_number(p.summary.rmse_inclusive_deg);
        out += '\n';
    }
    return out;
}

std::string curve_to_json(const RmseCurve& curve, bool inclusive_column) {
    json rows = json::array();
    for (const auto& p : curve.points) {
        json row = json::object();
        row["sweep_name"] = curve.sweep_name;
        row["sweep_value"] = rounded(p.sweep_value);
        row["method"] = std::string(to_string(p.method));
        row["rmse_deg"] = rounded(p.summary.rmse_deg);
        row["crlb_sqrt_deg"] = rounded(p.crlb_sqrt_deg);
        row["trials"] = p.summary.trials;
        row["failures"] = p.summary.failures;
        if (inclusive_column) row["rmse_inclusive_deg"] = rounded(p.summary.rmse_inclusive_deg);
        rows.push_back(std::move(row));
    }
    return rows.dump(2) + "\n";
}

void emit_results(const RmseCurve& curve, const std::filesystem::path& path, OutputFormat format,
                  bool inclusive_column) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
    out << (format == OutputFormat::Csv ? curve_to_csv(curve, inclusive_column) : curve_to_json(curve, inclusive_column));
    if (!out) throw ConfigError("failed writing " + path.string());
}

std::string traces_to_csv(std::span<const TrialResult> results, std::size_t num_groups) {
    std::string out = "trial_id,method,iteration,angle_deg,w_fd";
    for (std::size_t p = 1; p <= num_groups; ++p) out += ",w_" + std::to_string(p);
    out += '\n';
    for (const auto& r : results) {
        for (std::size_t i = 0; i < r.trace.size(); ++i) {
            const auto& step = r.trace[i];
            out += std::to_string(r.trial_id) + ',' + std::string(to_string(r.method)) + ',' + std::to_string(i) + ',' +
                   format_number(step.angle_deg) + ',' + format_number(step.weights.fd);
            for (double w : step.weights.groups) out += ',' + format_number(w);
            out += '\n';
        }
    }
    return out;
}

}  // namespace h2ad
