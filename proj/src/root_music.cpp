#include "h2ad/root_music.hpp"

#include "h2ad/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace h2ad {

namespace {

// Slack on the closed unit disk: a double root on the circle splits into a
// pair whose moduli straddle 1 by roughly sqrt(machine epsilon).
constexpr double kDiskSlack = 1e-7;
constexpr double kBoundarySlack = 1e-12;

struct Selection {
    cdouble root;
    bool found = false;
};

template <typename Accept>
Selection closest_to_circle(const std::vector<cdouble>& roots, Accept accept) {
    Selection best;
    double best_gap = 0.0;
    for (const cdouble& z : roots) {
        const double modulus = std::abs(z);
        if (!(modulus <= 1.0 + kDiskSlack) || !accept(z)) continue;
        const double gap = std::abs(1.0 - modulus);
        if (!best.found || gap < best_gap ||
            (gap == best_gap && std::abs(std::arg(z)) < std::abs(std::arg(best.root)))) {
            best.root = z;
            best.found = true;
            best_gap = gap;
        }
    }
    return best;
}

void require_rows(const NoiseSubspace& subspace, Eigen::Index rows, const char* what) {
    if (subspace.basis.rows() != rows)
        throw ShapeError(std::string(what) + " noise subspace has " + std::to_string(subspace.basis.rows()) +
                         " rows, expected " + std::to_string(rows));
}

}  // namespace

CMatrix sample_covariance(const SnapshotSet& snapshots) {
    const Eigen::Index h = snapshots.data.cols();
    if (h < 1 || snapshots.data.rows() < 1) throw ShapeError("sample covariance of an empty snapshot set");
    CMatrix r = snapshots.data * snapshots.data.adjoint() / static_cast<double>(h);
    // Enforce exact Hermitian symmetry; the product is symmetric only up to rounding.
    return 0.5 * (r + r.adjoint());
}

NoiseSubspace noise_subspace(const CMatrix& covariance, int num_sources) {
    const Eigen::Index dim = covariance.rows();
    if (covariance.cols() != dim) throw ShapeError("covariance must be square");
    if (num_sources < 1) throw ConfigError("num_sources must be >= 1");
    if (dim <= num_sources)
        throw ShapeError("covariance dimension " + std::to_string(dim) + " leaves no noise subspace for " +
                         std::to_string(num_sources) + " sources");

    Eigen::SelfAdjointEigenSolver<CMatrix> solver(covariance);
    if (solver.info() != Eigen::Success) throw NumericalError("Hermitian eigendecomposition failed");

    NoiseSubspace out;
    // Eigen sorts ascending; the noise directions are the leading columns.
    out.basis = solver.eigenvectors().leftCols(dim - num_sources);
    const auto& ev = solver.eigenvalues();
    out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    std::reverse(out.eigenvalues.begin(), out.eigenvalues.end());
    return out;
}

std::vector<cdouble> root_music_polynomial(const CMatrix& projector) {
    const Eigen::Index n = projector.rows();
    if (projector.cols() != n || n < 2) throw ShapeError("projector must be square with dimension >= 2");
    std::vector<cdouble> coeffs(static_cast<std::size_t>(2 * n - 1), cdouble(0.0));
    for (Eigen::Index i2 = 0; i2 < n; ++i2)
        for (Eigen::Index i1 = 0; i1 < n; ++i1)
            coeffs[static_cast<std::size_t>(i2 - i1 + n - 1)] += projector(i1, i2);
    return coeffs;
}

RootMusicResult fd_root_music(const NoiseSubspace& subspace, const ArrayGeometry& geometry, RootMethod method) {
    require_rows(subspace, geometry.fd_antennas, "FD");
    const auto coeffs = root_music_polynomial(subspace.projector());
    if (std::all_of(coeffs.begin(), coeffs.end(), [](cdouble c) { return c == cdouble(0.0); }))
        throw EstimationFailure("degenerate FD noise subspace");

    RootMusicResult result;
    result.all_roots = solve_polynomial_roots(coeffs, method);

    const double to_sine = geometry.wavelength / (2.0 * kPi * geometry.element_spacing);
    const auto pick = closest_to_circle(result.all_roots, [&](cdouble z) {
        return std::abs(to_sine * std::arg(z)) <= 1.0 + kBoundarySlack;
    });
    if (!pick.found) throw EstimationFailure("no Root-MUSIC root maps to a real FD angle");

    result.selected_root = pick.root;
    const double sine = std::clamp(to_sine * std::arg(pick.root), -1.0, 1.0);
    result.angle_deg = rad_to_deg(std::asin(sine));
    return result;
}

RootMusicResult group_root_music(const NoiseSubspace& subspace, const ArrayGeometry& geometry, std::size_t group,
                                 RootMethod method) {
    if (group >= geometry.num_groups()) throw IndexError("group index out of range");
    require_rows(subspace, geometry.subarrays_per_group[group], "group");
    const CMatrix projector = subspace.projector();
    if (projector.cwiseAbs().maxCoeff() == 0.0) throw EstimationFailure("degenerate group noise subspace");

    RootMusicResult result;
    result.all_roots = solve_polynomial_roots(root_music_polynomial(projector), method);
    const auto pick = closest_to_circle(result.all_roots, [](cdouble) { return true; });
    if (!pick.found) throw EstimationFailure("no group Root-MUSIC root inside the unit disk");
    result.selected_root = pick.root;
    result.wrapped_phase = std::arg(pick.root);
    return result;
}

CandidateSet expand_candidates(double wrapped_phase, const ArrayGeometry& geometry, std::size_t group) {
    if (group >= geometry.num_groups()) throw IndexError("group index out of range");
    const double eta = wrap_phase(wrapped_phase);
    const double aperture = 2.0 * kPi * geometry.antennas_per_subarray[group] * geometry.element_spacing /
                            geometry.wavelength;

    CandidateSet out;
    out.group = group;
    const auto q_lo = static_cast<int>(std::ceil((-aperture - eta) / (2.0 * kPi) - kBoundarySlack));
    const auto q_hi = static_cast<int>(std::floor((aperture - eta) / (2.0 * kPi) + kBoundarySlack));
    bool has_plus_endfire = false;
    for (int q = q_lo; q <= q_hi; ++q) {
        double x = (eta + 2.0 * kPi * q) / aperture;
        if (std::abs(x) > 1.0 + kBoundarySlack) continue;
        x = std::clamp(x, -1.0, 1.0);
        if (x == 1.0) has_plus_endfire = true;
        out.angles_deg.push_back(rad_to_deg(std::asin(x)));
        out.ambiguity_indices.push_back(q);
    }
    // +90 and -90 alias to the same phase when M_p d / lambda is a half-integer; keep one.
    if (has_plus_endfire && !out.angles_deg.empty() && out.angles_deg.front() == -90.0) {
        out.angles_deg.erase(out.angles_deg.begin());
        out.ambiguity_indices.erase(out.ambiguity_indices.begin());
    }

    std::vector<std::size_t> order(out.angles_deg.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return out.angles_deg[a] < out.angles_deg[b]; });
    CandidateSet sorted;
    sorted.group = group;
    for (std::size_t i : order) {
        sorted.angles_deg.push_back(out.angles_deg[i]);
        sorted.ambiguity_indices.push_back(out.ambiguity_indices[i]);
    }
    return sorted;
}

}  // namespace h2ad
