#include "h2ad/iwf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace h2ad {

double FusionWeights::sum() const {
    double s = fd;
    for (double w : groups) s += w;
    return s;
}

void IwfConfig::validate() const {
    if (!(tolerance_deg > 0.0)) throw ConfigError("IWF tolerance must be positive");
    if (max_iterations < 1) throw ConfigError("IWF max_iterations must be >= 1");
}

FusionWeights weights_from_variances(double fd_variance, const std::vector<double>& group_variances) {
    const double inv_fd = 1.0 / fd_variance;
    double total = inv_fd;
    for (double v : group_variances) total += 1.0 / v;
    if (!(total > 0.0) || !std::isfinite(total)) throw NumericalError("fusion variances must be positive and finite");

    FusionWeights w;
    w.fd = inv_fd / total;
    w.groups.reserve(group_variances.size());
    for (double v : group_variances) w.groups.push_back((1.0 / v) / total);
    return w;
}

FusionWeights compute_weights(double angle_deg, const WeightContext& ctx, CrlbVariant variant) {
    CrlbContext crlb_ctx{angle_deg, ctx.snr_linear, ctx.snapshots, ctx.geometry};
    crlb_ctx.validate();

    std::vector<double> group_variances;
    group_variances.reserve(ctx.geometry.num_groups());
    for (std::size_t p = 0; p < ctx.geometry.num_groups(); ++p)
        group_variances.push_back(crlb_part(crlb_ctx, ChannelKind::of_group(p), variant));
    return weights_from_variances(crlb_part(crlb_ctx, ChannelKind::fd(), variant), group_variances);
}

FusedEstimate iwf_fuse(double fd_angle_deg, const TrueSolutionSet& true_set, const WeightContext& ctx,
                       const IwfConfig& config) {
    config.validate();
    if (true_set.angles_deg.size() != ctx.geometry.num_groups())
        throw ShapeError("true solution set has " + std::to_string(true_set.angles_deg.size()) +
                         " entries for " + std::to_string(ctx.geometry.num_groups()) + " groups");

    FusedEstimate out;
    out.trace.push_back({fd_angle_deg, compute_weights(fd_angle_deg, ctx, config.crlb_variant)});

    double last_change = 0.0;
    for (int i = 0; i < config.max_iterations; ++i) {
        const IwfStep& current = out.trace.back();
        double next = current.weights.fd * fd_angle_deg;
        for (std::size_t p = 0; p < true_set.angles_deg.size(); ++p)
            next += current.weights.groups[p] * true_set.angles_deg[p];
        if (!std::isfinite(next))
            throw IwfDivergence("IWF iterate became non-finite at update " + std::to_string(i + 1), out.trace);

        last_change = std::abs(next - current.angle_deg);
        if (config.criterion == ConvergenceCriterion::Relative)
            last_change /= std::max(std::abs(current.angle_deg), 1e-12);

        out.trace.push_back({next, compute_weights(next, ctx, config.crlb_variant)});
        if (config.stop_on_tolerance && last_change <= config.tolerance_deg) {
            out.converged = true;
            break;
        }
    }
    if (!config.stop_on_tolerance) out.converged = last_change <= config.tolerance_deg;
    out.iterations_used = static_cast<int>(out.trace.size()) - 1;
    out.angle_deg = out.trace.back().angle_deg;
    return out;
}

}  // namespace h2ad
