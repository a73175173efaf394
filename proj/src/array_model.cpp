#include "h2ad/array_model.hpp"

#include "h2ad/errors.hpp"

#include <cmath>
#include <random>
#include <string>

namespace h2ad {

double wrap_phase(double radians) {
    double wrapped = std::remainder(radians, 2.0 * kPi);
    if (wrapped <= -kPi) wrapped += 2.0 * kPi;
    return wrapped;
}

namespace {

bool is_prime(int n) {
    if (n < 2) return false;
    for (int f = 2; f * f <= n; ++f)
        if (n % f == 0) return false;
    return true;
}

void check_angle(double theta_deg) {
    if (!std::isfinite(theta_deg) || std::abs(theta_deg) >= 90.0)
        throw DomainError("angle must lie in (-90, 90) degrees, got " + std::to_string(theta_deg));
}

void check_group(const ArrayGeometry& geometry, std::size_t group) {
    if (group >= geometry.num_groups())
        throw IndexError("group index " + std::to_string(group) + " out of range for " +
                         std::to_string(geometry.num_groups()) + " groups");
}

CVector phase_progression(const ArrayGeometry& geometry, Eigen::Index length, double theta_deg) {
    const double step = 2.0 * kPi * geometry.element_spacing * std::sin(deg_to_rad(theta_deg)) /
                        geometry.wavelength;
    CVector v(length);
    for (Eigen::Index m = 0; m < length; ++m) v(m) = std::polar(1.0, step * static_cast<double>(m));
    return v;
}

}  // namespace

int ArrayGeometry::group_antennas(std::size_t p) const {
    check_group(*this, p);
    return antennas_per_subarray[p] * subarrays_per_group[p];
}

int ArrayGeometry::hybrid_antennas() const {
    int total = 0;
    for (std::size_t p = 0; p < num_groups(); ++p) total += group_antennas(p);
    return total;
}

std::vector<std::string> ArrayGeometry::validate() const {
    if (antennas_per_subarray.empty()) throw ConfigError("geometry needs at least one group");
    if (antennas_per_subarray.size() != subarrays_per_group.size())
        throw ConfigError("antennas_per_subarray and subarrays_per_group differ in length");
    for (std::size_t p = 0; p < num_groups(); ++p) {
        if (antennas_per_subarray[p] < 2)
            throw ConfigError("group " + std::to_string(p + 1) + ": antennas_per_subarray must be >= 2");
        if (subarrays_per_group[p] < 2)
            throw ConfigError("group " + std::to_string(p + 1) + ": subarrays_per_group must be >= 2");
    }
    if (fd_antennas < 2) throw ConfigError("fd_antennas must be >= 2");
    if (!(element_spacing > 0.0) || !std::isfinite(element_spacing))
        throw ConfigError("element_spacing must be positive");
    if (!(wavelength > 0.0) || !std::isfinite(wavelength)) throw ConfigError("wavelength must be positive");

    std::vector<std::string> warnings;
    for (std::size_t p = 0; p < num_groups(); ++p) {
        if (!is_prime(antennas_per_subarray[p]))
            warnings.push_back("group " + std::to_string(p + 1) + ": M_p = " +
                               std::to_string(antennas_per_subarray[p]) + " is not prime");
        for (std::size_t q = 0; q < p; ++q)
            if (antennas_per_subarray[q] == antennas_per_subarray[p])
                warnings.push_back("groups " + std::to_string(q + 1) + " and " + std::to_string(p + 1) +
                                   " share M_p = " + std::to_string(antennas_per_subarray[p]));
    }
    return warnings;
}

ArrayGeometry ArrayGeometry::reference() {
    ArrayGeometry g;
    g.antennas_per_subarray = {7, 11, 13};
    g.subarrays_per_group = {16, 16, 16};
    g.fd_antennas = 128;
    g.element_spacing = 0.5;
    g.wavelength = 1.0;
    return g;
}

void SourceConfig::validate() const {
    check_angle(true_angle_deg);
    if (snapshots < 1) throw ConfigError("snapshots must be >= 1");
    if (!std::isfinite(snr_db)) throw ConfigError("snr_db must be finite");
}

double SourceConfig::snr_linear() const { return std::pow(10.0, snr_db / 10.0); }

AnalogCombiner AnalogCombiner::zero(const ArrayGeometry& geometry, std::size_t group) {
    check_group(geometry, group);
    AnalogCombiner c;
    c.phases.assign(static_cast<std::size_t>(geometry.subarrays_per_group[group]),
                    std::vector<double>(static_cast<std::size_t>(geometry.antennas_per_subarray[group]), 0.0));
    return c;
}

std::vector<AnalogCombiner> zero_combiners(const ArrayGeometry& geometry) {
    std::vector<AnalogCombiner> out;
    out.reserve(geometry.num_groups());
    for (std::size_t p = 0; p < geometry.num_groups(); ++p) out.push_back(AnalogCombiner::zero(geometry, p));
    return out;
}

CVector fd_steering_vector(const ArrayGeometry& geometry, double theta_deg) {
    check_angle(theta_deg);
    return phase_progression(geometry, geometry.fd_antennas, theta_deg);
}

CVector group_steering_vector(const ArrayGeometry& geometry, std::size_t group, double theta_deg) {
    check_group(geometry, group);
    check_angle(theta_deg);
    return phase_progression(geometry, geometry.group_antennas(group), theta_deg);
}

CMatrix analog_combining_matrix(const ArrayGeometry& geometry, std::size_t group,
                                const AnalogCombiner& combiner) {
    check_group(geometry, group);
    const auto subarrays = static_cast<std::size_t>(geometry.subarrays_per_group[group]);
    const auto antennas = static_cast<std::size_t>(geometry.antennas_per_subarray[group]);
    if (combiner.phases.size() != subarrays)
        throw ShapeError("combiner has " + std::to_string(combiner.phases.size()) + " blocks, group needs " +
                         std::to_string(subarrays));
    for (const auto& block : combiner.phases)
        if (block.size() != antennas)
            throw ShapeError("combiner block has " + std::to_string(block.size()) + " phases, group needs " +
                             std::to_string(antennas));

    const double scale = 1.0 / std::sqrt(static_cast<double>(antennas));
    CMatrix xi = CMatrix::Zero(static_cast<Eigen::Index>(subarrays * antennas), static_cast<Eigen::Index>(subarrays));
    for (std::size_t k = 0; k < subarrays; ++k)
        for (std::size_t m = 0; m < antennas; ++m)
            xi(static_cast<Eigen::Index>(k * antennas + m), static_cast<Eigen::Index>(k)) =
                std::polar(scale, combiner.phases[k][m]);
    return xi;
}

CVector group_response(const ArrayGeometry& geometry, std::size_t group, const AnalogCombiner& combiner,
                       double theta_deg) {
    return analog_combining_matrix(geometry, group, combiner).adjoint() *
           group_steering_vector(geometry, group, theta_deg);
}

ObservedSnapshots synthesize_snapshots(const ArrayGeometry& geometry, const SourceConfig& source,
                                       const std::vector<AnalogCombiner>& combiners, std::uint64_t seed,
                                       SynthesisOptions options) {
    geometry.validate();
    source.validate();
    if (combiners.size() != geometry.num_groups())
        throw ShapeError("need one combiner per group");

    std::mt19937_64 engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double half = std::sqrt(0.5);
    auto draw = [&](double scale) {
        const double re = normal(engine);
        const double im = normal(engine);
        return cdouble(re, im) * (scale * half);
    };

    const Eigen::Index snapshots = source.snapshots;
    CVector signal(snapshots);
    for (Eigen::Index n = 0; n < snapshots; ++n) signal(n) = draw(1.0);

    const double noise_std = options.noiseless ? 0.0 : std::sqrt(source.noise_variance());
    auto add_noise = [&](CMatrix& data) {
        if (options.noiseless) return;
        for (Eigen::Index n = 0; n < data.cols(); ++n)
            for (Eigen::Index r = 0; r < data.rows(); ++r) data(r, n) += draw(noise_std);
    };

    ObservedSnapshots out;
    out.fd.channel = ChannelKind::fd();
    out.fd.data = fd_steering_vector(geometry, source.true_angle_deg) * signal.transpose();
    add_noise(out.fd.data);

    out.groups.reserve(geometry.num_groups());
    for (std::size_t p = 0; p < geometry.num_groups(); ++p) {
        SnapshotSet set;
        set.channel = ChannelKind::of_group(p);
        set.data = group_response(geometry, p, combiners[p], source.true_angle_deg) * signal.transpose();
        add_noise(set.data);
        out.groups.push_back(std::move(set));
    }
    return out;
}

}  // namespace h2ad
