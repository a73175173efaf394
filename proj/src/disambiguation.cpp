#include "h2ad/disambiguation.hpp"

#include "h2ad/errors.hpp"

#include <cmath>
#include <string>

namespace h2ad {

namespace {

// Arg-max with ties resolved toward the smaller angle.
template <typename Score>
double select_best(const CandidateSet& candidates, Score score) {
    if (candidates.empty()) throw ConfigError("candidate set is empty");
    double best_angle = candidates.angles_deg.front();
    double best_score = score(best_angle);
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double angle = candidates.angles_deg[i];
        const double s = score(angle);
        if (s > best_score || (s == best_score && angle < best_angle)) {
            best_angle = angle;
            best_score = s;
        }
    }
    return best_angle;
}

}  // namespace

std::string_view to_string(ClusterMethod method) {
    return method == ClusterMethod::GMinD ? "GMinD" : "GMaxCS";
}

ClusterMethod parse_cluster_method(std::string_view name) {
    if (name == "GMinD") return ClusterMethod::GMinD;
    if (name == "GMaxCS") return ClusterMethod::GMaxCS;
    throw ConfigError("unknown clustering method '" + std::string(name) + "'");
}

double direction_cosine_similarity(double a_deg, double b_deg) {
    const double a = deg_to_rad(a_deg);
    const double b = deg_to_rad(b_deg);
    const double ux = std::cos(a), uy = std::sin(a);
    const double vx = std::cos(b), vy = std::sin(b);
    return (ux * vx + uy * vy) / (std::hypot(ux, uy) * std::hypot(vx, vy));
}

double gmind_select(double reference_deg, const CandidateSet& candidates) {
    return select_best(candidates, [&](double angle) {
        const double diff = reference_deg - angle;
        return -(diff * diff);
    });
}

double gmaxcs_select(double reference_deg, const CandidateSet& candidates) {
    return select_best(candidates, [&](double angle) { return direction_cosine_similarity(reference_deg, angle); });
}

TrueSolutionSet cluster_true_set(double reference_deg, const std::vector<CandidateSet>& candidates,
                                 ClusterMethod method) {
    TrueSolutionSet out;
    out.reference_deg = reference_deg;
    out.method = method;
    out.angles_deg.reserve(candidates.size());
    for (const auto& set : candidates)
        out.angles_deg.push_back(method == ClusterMethod::GMinD ? gmind_select(reference_deg, set)
                                                                : gmaxcs_select(reference_deg, set));
    return out;
}

}  // namespace h2ad
