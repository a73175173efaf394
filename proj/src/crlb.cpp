#include "h2ad/crlb.hpp"

#include "h2ad/errors.hpp"

#include <cmath>
#include <string>

namespace h2ad {

namespace {

constexpr double kRad2ToDeg2 = (180.0 / kPi) * (180.0 / kPi);

double wavenumber_phase(const ArrayGeometry& g, double theta_deg) {
    return 2.0 * kPi * g.element_spacing * std::sin(deg_to_rad(theta_deg)) / g.wavelength;
}

void check_group(const ArrayGeometry& g, std::size_t group) {
    if (group >= g.num_groups()) throw IndexError("group index " + std::to_string(group) + " out of range");
}

double cos_squared(double theta_deg) {
    const double c = std::cos(deg_to_rad(theta_deg));
    return c * c;
}

// Response of one part to a unit plane wave, optionally with its phase reference shifted.
CVector part_response(const CrlbContext& ctx, ChannelKind part, double theta_deg, double reference_offset) {
    CVector g = part.kind == ChannelKind::Kind::FullyDigital
                    ? fd_steering_vector(ctx.geometry, theta_deg)
                    : group_response(ctx.geometry, part.group, AnalogCombiner::zero(ctx.geometry, part.group), theta_deg);
    if (reference_offset != 0.0) g *= std::polar(1.0, reference_offset * wavenumber_phase(ctx.geometry, theta_deg));
    return g;
}

}  // namespace

void CrlbContext::validate() const {
    if (!std::isfinite(angle_deg) || std::abs(angle_deg) >= 90.0)
        throw DomainError("CRLB angle must lie in (-90, 90) degrees, got " + std::to_string(angle_deg));
    if (!(snr_linear > 0.0) || !std::isfinite(snr_linear)) throw ConfigError("snr_linear must be positive");
    if (snapshots < 1) throw ConfigError("snapshots must be >= 1");
}

std::string_view to_string(CrlbVariant variant) {
    return variant == CrlbVariant::FisherInverse ? "FisherInverse" : "WeightFormula";
}

CrlbVariant parse_crlb_variant(std::string_view name) {
    if (name == "FisherInverse") return CrlbVariant::FisherInverse;
    if (name == "WeightFormula") return CrlbVariant::WeightFormula;
    throw ConfigError("unknown crlb_variant '" + std::string(name) + "'");
}

cdouble virtual_gain_r(const ArrayGeometry& geometry, std::size_t group, double theta_deg) {
    check_group(geometry, group);
    const int m = geometry.antennas_per_subarray[group];
    const double x = wavenumber_phase(geometry, theta_deg);
    const cdouble den = 1.0 - std::polar(1.0, x);
    if (std::abs(den) < 1e-12) {
        // Every term of the geometric sum is (numerically) one.
        cdouble sum = 0.0;
        for (int k = 0; k < m; ++k) sum += std::polar(1.0, x * k);
        return sum;
    }
    return (1.0 - std::polar(1.0, x * m)) / den;
}

cdouble varsigma(const ArrayGeometry& geometry, std::size_t group, double theta_deg) {
    check_group(geometry, group);
    const double x = wavenumber_phase(geometry, theta_deg);
    cdouble sum = 0.0;
    for (int m = 0; m < geometry.antennas_per_subarray[group]; ++m)
        sum += static_cast<double>(m) * geometry.element_spacing * std::polar(1.0, -x * m);
    return sum;
}

double psi(const ArrayGeometry& geometry, std::size_t group, double theta_deg, double snr_linear) {
    const double r2 = std::norm(virtual_gain_r(geometry, group, theta_deg));
    return geometry.antennas_per_subarray[group] + geometry.subarrays_per_group[group] * snr_linear * r2;
}

double fd_centered_aperture(const ArrayGeometry& geometry) {
    const int m = geometry.fd_antennas;
    const double centroid = 0.5 * (m - 1) * geometry.element_spacing;
    double sum = 0.0;
    for (int i = 0; i < m; ++i) {
        const double x = i * geometry.element_spacing - centroid;
        sum += x * x;
    }
    return sum;
}

double fisher_fd(const CrlbContext& ctx) {
    ctx.validate();
    const double lambda = ctx.geometry.wavelength;
    return 8.0 * kPi * kPi * ctx.snr_linear * cos_squared(ctx.angle_deg) * fd_centered_aperture(ctx.geometry) /
           (lambda * lambda);
}

double fisher_group(const CrlbContext& ctx, std::size_t group) {
    ctx.validate();
    check_group(ctx.geometry, group);
    const auto& g = ctx.geometry;
    const double m = g.antennas_per_subarray[group];
    const double k = g.subarrays_per_group[group];
    const double d = g.element_spacing;
    const double r2 = std::norm(virtual_gain_r(g, group, ctx.angle_deg));
    const double big_psi = psi(g, group, ctx.angle_deg, ctx.snr_linear);
    const double snr = ctx.snr_linear;
    return 8.0 * kPi * kPi * snr * snr * cos_squared(ctx.angle_deg) * r2 * r2 * m * k * k * (k * k - 1.0) * d * d /
           (12.0 * g.wavelength * g.wavelength * big_psi);
}

double fisher_group_with_cross_terms(const CrlbContext& ctx, std::size_t group) {
    ctx.validate();
    check_group(ctx.geometry, group);
    const auto& g = ctx.geometry;
    const double m = g.antennas_per_subarray[group];
    const double k = g.subarrays_per_group[group];
    const double d = g.element_spacing;
    const cdouble r = virtual_gain_r(g, group, ctx.angle_deg);
    const cdouble s = varsigma(g, group, ctx.angle_deg);
    const double big_psi = psi(g, group, ctx.angle_deg, ctx.snr_linear);
    const double snr = ctx.snr_linear;
    const double r4 = std::norm(r) * std::norm(r);
    const double bracket = r4 * m * m * k * k * (k * k - 1.0) * d * d / 12.0 +
                           (m * k / big_psi) * (std::norm(r * s) + k * std::real(r * r * s));
    return 8.0 * kPi * kPi * snr * snr * cos_squared(ctx.angle_deg) * bracket /
           (g.wavelength * g.wavelength * m * big_psi);
}

double hybrid_crlb(const CrlbContext& ctx) {
    double info = fisher_fd(ctx);
    for (std::size_t p = 0; p < ctx.geometry.num_groups(); ++p) info += fisher_group(ctx, p);
    return kRad2ToDeg2 / (ctx.snapshots * info);
}

double crlb_part(const CrlbContext& ctx, ChannelKind part, CrlbVariant variant) {
    ctx.validate();
    const double h = ctx.snapshots;
    if (part.kind == ChannelKind::Kind::FullyDigital) return kRad2ToDeg2 / (h * fisher_fd(ctx));
    check_group(ctx.geometry, part.group);
    if (variant == CrlbVariant::FisherInverse) return kRad2ToDeg2 / (h * fisher_group(ctx, part.group));

    const auto& g = ctx.geometry;
    const double m = g.antennas_per_subarray[part.group];
    const double k = g.subarrays_per_group[part.group];
    const double d = g.element_spacing;
    const cdouble r = virtual_gain_r(g, part.group, ctx.angle_deg);
    const cdouble s = varsigma(g, part.group, ctx.angle_deg);
    const double big_psi = psi(g, part.group, ctx.angle_deg, ctx.snr_linear);
    const double r4 = std::norm(r) * std::norm(r);
    const double numerator = g.wavelength * g.wavelength * m * big_psi /
                             (8.0 * h * kPi * kPi * ctx.snr_linear * cos_squared(ctx.angle_deg));
    const double denominator = r4 * m * m * k * k * (k * k - 1.0) * d * d / (12.0 * big_psi) +
                               (m * k / big_psi) * (std::norm(r * s) + k * std::real(r * r * s));
    const double value = numerator / denominator * kRad2ToDeg2;
    if (!(value > 0.0) || !std::isfinite(value))
        throw NumericalError("weight CRLB expression is not positive at " + std::to_string(ctx.angle_deg) + " deg");
    return value;
}

CrlbReport crlb_report(const CrlbContext& ctx) {
    CrlbReport report;
    report.fisher_fd = fisher_fd(ctx);
    report.crlb_fd_deg2 = kRad2ToDeg2 / (ctx.snapshots * report.fisher_fd);
    double info = report.fisher_fd;
    for (std::size_t p = 0; p < ctx.geometry.num_groups(); ++p) {
        const double f = fisher_group(ctx, p);
        report.fisher_group.push_back(f);
        report.crlb_group_deg2.push_back(kRad2ToDeg2 / (ctx.snapshots * f));
        info += f;
    }
    report.hybrid_deg2 = kRad2ToDeg2 / (ctx.snapshots * info);
    return report;
}

double numeric_fim_at_step(const CrlbContext& ctx, ChannelKind part, double step_rad, double reference_offset) {
    ctx.validate();
    if (!(step_rad > 0.0)) throw ConfigError("finite-difference step must be positive");
    const double step_deg = rad_to_deg(step_rad);
    const CVector g = part_response(ctx, part, ctx.angle_deg, reference_offset);
    const CVector g_plus = part_response(ctx, part, ctx.angle_deg + step_deg, reference_offset);
    const CVector g_minus = part_response(ctx, part, ctx.angle_deg - step_deg, reference_offset);

    // Unit noise power; signal power equals the linear SNR.
    const double s = ctx.snr_linear;
    const Eigen::Index n = g.size();
    const CMatrix identity = CMatrix::Identity(n, n);
    const CMatrix cov = s * g * g.adjoint() + identity;
    const CMatrix d_theta = s * (g_plus * g_plus.adjoint() - g_minus * g_minus.adjoint()) / (2.0 * step_rad);
    const CMatrix d_power = g * g.adjoint();

    const Eigen::LDLT<CMatrix> ldlt(cov);
    const CMatrix derivs[3] = {ldlt.solve(d_theta), ldlt.solve(d_power), ldlt.solve(identity)};

    // Slepian-Bangs: F_ij = tr(R^-1 dR_i R^-1 dR_j).
    Eigen::Matrix3d fim;
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            fim(i, j) = (derivs[i].cwiseProduct(derivs[j].transpose())).sum().real();
            fim(j, i) = fim(i, j);
        }
    const Eigen::Matrix2d nuisance = fim.bottomRightCorner<2, 2>();
    const Eigen::Vector2d cross = fim.block<2, 1>(1, 0);
    return fim(0, 0) - cross.dot(nuisance.ldlt().solve(cross));
}

double numeric_fim_oracle(const CrlbContext& ctx, ChannelKind part, const FimOracleOptions& options) {
    // Near a response null the information is tiny and curves fast, so the step
    // shrinks until two successive halvings agree.
    double h = options.step_rad;
    double coarse = numeric_fim_at_step(ctx, part, h, options.reference_offset);
    for (int halving = 0; halving < options.max_halvings; ++halving) {
        const double fine = numeric_fim_at_step(ctx, part, 0.5 * h, options.reference_offset);
        if (!std::isfinite(fine)) break;
        if (std::abs(fine - coarse) <= options.convergence_tolerance * std::abs(fine))
            return (4.0 * fine - coarse) / 3.0;
        coarse = fine;
        h *= 0.5;
    }
    throw NumericalError("finite-difference Fisher information did not converge (last step " + std::to_string(h) +
                         " rad, value " + std::to_string(coarse) + ")");
}

}  // namespace h2ad
