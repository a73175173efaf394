#pragma once

#include "h2ad/array_model.hpp"

#include <string_view>
#include <vector>

namespace h2ad {

/// Point at which the bounds are evaluated.
struct CrlbContext {
    double angle_deg = 41.0;
    double snr_linear = 10.0;
    int snapshots = 100;
    ArrayGeometry geometry = ArrayGeometry::reference();

    void validate() const;
};

/// Which expression produces a per-part variance.
///
/// FisherInverse is 1 / (H F_part) with the closed-form information below.
/// WeightFormula is the literal weight-CRLB expression used for fusion coefficients in
/// the original derivation; for groups it differs from FisherInverse by a
/// positive, angle-dependent factor.
enum class CrlbVariant { FisherInverse, WeightFormula };

std::string_view to_string(CrlbVariant variant);
CrlbVariant parse_crlb_variant(std::string_view name);

struct CrlbReport {
    double crlb_fd_deg2 = 0.0;
    std::vector<double> crlb_group_deg2;
    double hybrid_deg2 = 0.0;
    double fisher_fd = 0.0;                 // rad^-2, per snapshot
    std::vector<double> fisher_group;       // rad^-2, per snapshot
};

/// r_p(theta) = (1 - e^{j k M_p d sin}) / (1 - e^{j k d sin}), with the limit M_p at broadside.
cdouble virtual_gain_r(const ArrayGeometry& geometry, std::size_t group, double theta_deg);

/// sum_{m=1}^{M_p} (m - 1) d e^{-j k (m - 1) d sin(theta)}, in length units.
cdouble varsigma(const ArrayGeometry& geometry, std::size_t group, double theta_deg);

/// M_p + K_p SNR |r_p(theta)|^2.
double psi(const ArrayGeometry& geometry, std::size_t group, double theta_deg, double snr_linear);

/// Sum over FD elements of the squared distance to the array centroid.
double fd_centered_aperture(const ArrayGeometry& geometry);

/// 8 pi^2 SNR cos^2(theta) dbar^2 / lambda^2, per snapshot.
double fisher_fd(const CrlbContext& ctx);

/// Per-snapshot information of group p for the unconditional Gaussian model:
/// 8 pi^2 SNR^2 cos^2 |r_p|^4 M_p K_p^2 (K_p^2 - 1) d^2 / (12 lambda^2 Psi).
double fisher_group(const CrlbContext& ctx, std::size_t group);

/// The group information expression including the varsigma cross terms.
/// Kept for literal reproduction; it is not the exact information of any model.
double fisher_group_with_cross_terms(const CrlbContext& ctx, std::size_t group);

/// (1/H) (F_F + sum_p F_p)^-1 in degrees^2.
double hybrid_crlb(const CrlbContext& ctx);

/// Per-part variance bound in degrees^2.
double crlb_part(const CrlbContext& ctx, ChannelKind part, CrlbVariant variant = CrlbVariant::FisherInverse);

CrlbReport crlb_report(const CrlbContext& ctx);

struct FimOracleOptions {
    double step_rad = 1e-6;
    // Phase-reference shift applied to the part's response, in element spacings.
    double reference_offset = 0.0;
    // The step is halved until h and h/2 agree to this relative tolerance, at
    // most max_halvings times; the result is the Richardson extrapolation of the
    // last pair.
    double convergence_tolerance = 1e-6;
    int max_halvings = 8;
};

/// Fisher information of theta (rad^-2 per snapshot) for one part, computed from
/// y ~ CN(0, s g(theta) g(theta)^H + sigma^2 I) with unknown signal and noise powers.
/// d/dtheta of the covariance is a central finite difference of the response g.
double numeric_fim_oracle(const CrlbContext& ctx, ChannelKind part, const FimOracleOptions& options = {});

/// Single-step oracle without the convergence check; exposed for step-size studies.
double numeric_fim_at_step(const CrlbContext& ctx, ChannelKind part, double step_rad,
                           double reference_offset = 0.0);

}  // namespace h2ad
