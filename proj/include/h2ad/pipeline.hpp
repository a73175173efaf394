#pragma once

#include "h2ad/disambiguation.hpp"
#include "h2ad/root_music.hpp"

#include <vector>

namespace h2ad {

/// Output of the subspace stage for one observation.
struct FrontEndEstimate {
    double fd_angle_deg = 0.0;
    std::vector<double> group_phases;          // eta_p
    std::vector<CandidateSet> candidates;      // one per group
};

/// Covariance, noise subspace and Root-MUSIC for the FD subarray and every group,
/// followed by ambiguity expansion. Throws EstimationFailure when a root is unusable.
FrontEndEstimate estimate_front_end(const ObservedSnapshots& observed, const ArrayGeometry& geometry,
                                    RootMethod method = RootMethod::Aberth);

/// Network / fusion input row [theta_c1 .. theta_cP, theta_F].
std::vector<double> fusion_input_row(const TrueSolutionSet& true_set);

}  // namespace h2ad
