#pragma once

#include "h2ad/root_music.hpp"

#include <string_view>
#include <vector>

namespace h2ad {

enum class ClusterMethod { GMinD, GMaxCS };

std::string_view to_string(ClusterMethod method);
ClusterMethod parse_cluster_method(std::string_view name);

/// Selected true solution of every group plus the FD reference that picked them.
struct TrueSolutionSet {
    std::vector<double> angles_deg;
    double reference_deg = 0.0;
    ClusterMethod method = ClusterMethod::GMinD;
};

/// cos_sim between (cos a, sin a) and (cos b, sin b).
double direction_cosine_similarity(double a_deg, double b_deg);

/// Candidate nearest the reference in squared angular distance; ties go to the smaller angle.
double gmind_select(double reference_deg, const CandidateSet& candidates);

/// Candidate whose unit direction vector is most cosine-similar to the reference's.
double gmaxcs_select(double reference_deg, const CandidateSet& candidates);

TrueSolutionSet cluster_true_set(double reference_deg, const std::vector<CandidateSet>& candidates,
                                 ClusterMethod method);

}  // namespace h2ad
