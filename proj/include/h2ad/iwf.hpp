#pragma once

#include "h2ad/crlb.hpp"
#include "h2ad/disambiguation.hpp"
#include "h2ad/errors.hpp"

#include <string>
#include <utility>
#include <vector>

namespace h2ad {

struct FusionWeights {
    double fd = 0.0;
    std::vector<double> groups;

    double sum() const;
};

enum class ConvergenceCriterion { Absolute, Relative };

struct IwfConfig {
    double tolerance_deg = 1e-4;  // sigma
    int max_iterations = 20;      // fusion updates, the first one-shot update included
    CrlbVariant crlb_variant = CrlbVariant::FisherInverse;
    ConvergenceCriterion criterion = ConvergenceCriterion::Absolute;
    // When false every one of max_iterations updates runs regardless of sigma.
    bool stop_on_tolerance = true;

    void validate() const;
    bool operator==(const IwfConfig&) const = default;
};

/// Everything the weights depend on except the angle they are evaluated at.
struct WeightContext {
    ArrayGeometry geometry;
    double snr_linear = 10.0;
    int snapshots = 100;
};

struct IwfStep {
    double angle_deg;
    FusionWeights weights;  // evaluated at angle_deg
};

struct FusedEstimate {
    double angle_deg = 0.0;
    int iterations_used = 0;
    bool converged = false;
    std::vector<IwfStep> trace;  // theta^(0) = theta_F, ..., theta^(iterations_used)
};

/// Raised when a fused iterate stops being finite; carries the trace up to that point.
class IwfDivergence : public NumericalError {
public:
    IwfDivergence(const std::string& what, std::vector<IwfStep> trace)
        : NumericalError(what), trace_(std::move(trace)) {}
    const std::vector<IwfStep>& trace() const { return trace_; }

private:
    std::vector<IwfStep> trace_;
};

/// Inverse-variance weights normalised to sum to one.
FusionWeights weights_from_variances(double fd_variance, const std::vector<double>& group_variances);

/// Inverse-CRLB weights normalised to sum to one, all evaluated at angle_deg.
FusionWeights compute_weights(double angle_deg, const WeightContext& ctx,
                              CrlbVariant variant = CrlbVariant::FisherInverse);

/// Iterative weighted fusion of the FD coarse angle and the group true solutions.
/// The inputs stay fixed; only the weights follow the current fused angle.
FusedEstimate iwf_fuse(double fd_angle_deg, const TrueSolutionSet& true_set, const WeightContext& ctx,
                       const IwfConfig& config = {});

}  // namespace h2ad
