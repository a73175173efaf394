#include "h2ad/pipeline.hpp"

#include "h2ad/errors.hpp"

namespace h2ad {

FrontEndEstimate estimate_front_end(const ObservedSnapshots& observed, const ArrayGeometry& geometry,
                                    RootMethod method) {
    if (observed.groups.size() != geometry.num_groups())
        throw ShapeError("observation does not carry one snapshot set per group");

    FrontEndEstimate out;
    const auto fd = fd_root_music(noise_subspace(sample_covariance(observed.fd)), geometry, method);
    out.fd_angle_deg = *fd.angle_deg;

    for (std::size_t p = 0; p < geometry.num_groups(); ++p) {
        const auto group = group_root_music(noise_subspace(sample_covariance(observed.groups[p])), geometry, p, method);
        out.group_phases.push_back(*group.wrapped_phase);
        out.candidates.push_back(expand_candidates(*group.wrapped_phase, geometry, p));
        if (out.candidates.back().empty()) throw EstimationFailure("group candidate set is empty");
    }
    return out;
}

std::vector<double> fusion_input_row(const TrueSolutionSet& true_set) {
    std::vector<double> row(true_set.angles_deg);
    row.push_back(true_set.reference_deg);
    return row;
}

}  // namespace h2ad
