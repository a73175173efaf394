#pragma once

#include "h2ad/array_model.hpp"
#include "h2ad/fusion_net.hpp"
#include "h2ad/iwf.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace h2ad {

enum class Method { IwfGMinD, IwfGMaxCS, FusionNetGMinD, FusionNetGMaxCS };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);
bool is_fusion_net(Method method);
ClusterMethod cluster_method_of(Method method);

struct ExperimentSpec {
    ArrayGeometry geometry = ArrayGeometry::reference();
    SourceConfig source;                      // theta_0, H and the SNR of single-point runs
    std::vector<double> snr_grid_db{-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0};
    std::vector<int> snapshot_grid{50, 100, 200, 400};
    double snapshot_sweep_snr_db = 0.0;
    std::vector<int> iteration_caps{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    double iteration_sweep_snr_db = 10.0;
    int trials = 500;
    std::vector<Method> methods{Method::IwfGMinD, Method::IwfGMaxCS};
    IwfConfig iwf;
    std::optional<std::string> model_path;
    std::uint64_t master_seed = 1;
    bool noiseless = false;
    double outlier_threshold_deg = 30.0;      // candidate farther than this from theta_F
    bool emit_inclusive_rmse = false;

    /// Throws ConfigError on a violated invariant.
    void validate() const;
    bool operator==(const ExperimentSpec&) const = default;
};

/// Strict parsing: unknown fields are rejected and missing required fields are
/// reported by name.
ExperimentSpec parse_spec(std::string_view json_text);
ExperimentSpec load_spec(const std::filesystem::path& path);
std::string spec_to_json(const ExperimentSpec& spec);

struct TrialResult {
    std::uint64_t trial_id = 0;
    Method method = Method::IwfGMinD;
    double angle_deg = 0.0;
    int iterations_used = 0;
    bool failure = false;   // the front end could not produce estimates
    bool outlier = false;   // a selected candidate lies beyond the outlier threshold
    bool clamped = false;   // network output was clipped to [-90, 90]
    std::vector<IwfStep> trace;  // IWF methods, when requested
};

/// Loaded resources shared by every trial of a run.
struct RunContext {
    ExperimentSpec spec;
    std::vector<AnalogCombiner> combiners;
    std::optional<FusionModelSet> models;

    /// Loads the model file when a fusion-net method is requested.
    static RunContext prepare(const ExperimentSpec& spec);
    /// Uses the given models instead of reading spec.model_path.
    static RunContext with_models(const ExperimentSpec& spec, std::optional<FusionModelSet> models);
};

struct TrialOptions {
    bool keep_trace = false;
    // Overrides for the iteration sweep: exact number of IWF updates, no early stop.
    std::optional<int> forced_iwf_updates;
};

/// One trial for every method of the spec. Never throws for estimation problems;
/// they are recorded in the results.
std::vector<TrialResult> run_trial(const RunContext& ctx, double snr_db, int snapshots, std::uint64_t trial_id,
                                   const TrialOptions& options = {});

struct PointSummary {
    double rmse_deg = 0.0;            // over non-failed, non-outlier trials
    double rmse_standard_error = 0.0;
    double rmse_inclusive_deg = 0.0;  // outliers included, failures still excluded
    int trials = 0;
    int failures = 0;                 // failed or outlier trials
    int outliers = 0;
    int clamps = 0;
    bool valid = false;               // at least one usable trial
};

/// RMSE of the method's results against the true angle.
PointSummary summarize(std::span<const TrialResult> results, Method method, double true_angle_deg);

struct CurvePoint {
    double sweep_value = 0.0;
    Method method = Method::IwfGMinD;
    PointSummary summary;
    double crlb_sqrt_deg = 0.0;
};

struct RmseCurve {
    std::string sweep_name;
    std::vector<double> sweep_values;
    std::vector<Method> methods;
    std::vector<CurvePoint> points;  // sweep value major, method minor

    const CurvePoint& at(std::size_t value_index, Method method) const;
};

struct ExecutionOptions {
    int threads = 0;  // 0 keeps the OpenMP default
};

/// All trials of one grid point, in trial order. The OpenMP version distributes
/// trials over threads; the serial one is the reference it must reproduce exactly.
std::vector<TrialResult> run_point(const RunContext& ctx, double snr_db, int snapshots,
                                   const TrialOptions& options = {}, const ExecutionOptions& exec = {});
std::vector<TrialResult> run_point_serial(const RunContext& ctx, double snr_db, int snapshots,
                                          const TrialOptions& options = {});

RmseCurve simulate(const RunContext& ctx, const ExecutionOptions& exec = {});
RmseCurve sweep_snr(const RunContext& ctx, const ExecutionOptions& exec = {});
RmseCurve sweep_snapshots(const RunContext& ctx, const ExecutionOptions& exec = {});
/// IWF methods only; cap c runs c + 1 updates with the tolerance test disabled.
RmseCurve sweep_iterations(const RunContext& ctx, const ExecutionOptions& exec = {});

/// Input of the train-fusion command.
struct TrainingSpec {
    ArrayGeometry geometry = ArrayGeometry::reference();
    TrainingConfig training;
    bool noiseless = false;

    bool operator==(const TrainingSpec&) const = default;
};

/// Strict like parse_spec; every field is optional and defaults as in TrainingConfig.
TrainingSpec parse_training_spec(std::string_view json_text);
TrainingSpec load_training_spec(const std::filesystem::path& path);
std::string training_spec_to_json(const TrainingSpec& spec);

enum class OutputFormat { Csv, Json };
OutputFormat parse_output_format(std::string_view name);

inline constexpr const char* kCsvHeader = "sweep_name,sweep_value,method,rmse_deg,crlb_sqrt_deg,trials,failures";

std::string format_number(double value);  // 9 significant digits
std::string curve_to_csv(const RmseCurve& curve, bool inclusive_column = false);
std::string curve_to_json(const RmseCurve& curve, bool inclusive_column = false);
void emit_results(const RmseCurve& curve, const std::filesystem::path& path, OutputFormat format,
                  bool inclusive_column = false);

/// trial_id, method, iteration, angle_deg, w_fd, w_1 .. w_P.
std::string traces_to_csv(std::span<const TrialResult> results, std::size_t num_groups);

}  // namespace h2ad
