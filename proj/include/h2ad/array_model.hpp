#pragma once

#include "h2ad/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace h2ad {

/// Fully digital (FD) subarray plus the P heterogeneous analog-digital groups.
///
/// Group p holds K_p subarrays of M_p antennas; each subarray is summed by an
/// analog combiner into a single digital channel. Element spacing and
/// wavelength share one length unit.
struct ArrayGeometry {
    std::vector<int> antennas_per_subarray;  // M_p
    std::vector<int> subarrays_per_group;    // K_p
    int fd_antennas = 128;                   // M
    double element_spacing = 0.5;            // d
    double wavelength = 1.0;                 // lambda

    std::size_t num_groups() const { return antennas_per_subarray.size(); }
    int group_antennas(std::size_t p) const;  // N_p = K_p * M_p
    int hybrid_antennas() const;              // sum of N_p

    /// Throws ConfigError on a violated invariant. Non-prime or repeated M_p
    /// values only produce warnings, returned as text.
    std::vector<std::string> validate() const;

    /// P = 3, M_p = {7, 11, 13}, K_p = 16, M = 128, d = lambda / 2.
    static ArrayGeometry reference();

    bool operator==(const ArrayGeometry&) const = default;
};

struct SourceConfig {
    double true_angle_deg = 41.0;
    double snr_db = 10.0;
    int snapshots = 100;

    void validate() const;
    double snr_linear() const;
    double noise_variance() const { return 1.0 / snr_linear(); }

    bool operator==(const SourceConfig&) const = default;
};

/// Analog phases Upsilon_{p,k,m} for one group, stored as K_p rows of M_p.
struct AnalogCombiner {
    std::vector<std::vector<double>> phases;

    static AnalogCombiner zero(const ArrayGeometry& geometry, std::size_t group);
};

/// Per-group combiners for the whole array (all zero phases by default).
std::vector<AnalogCombiner> zero_combiners(const ArrayGeometry& geometry);

struct ChannelKind {
    enum class Kind { FullyDigital, Group } kind = Kind::FullyDigital;
    std::size_t group = 0;

    static ChannelKind fd() { return {}; }
    static ChannelKind of_group(std::size_t p) { return {Kind::Group, p}; }
    bool operator==(const ChannelKind&) const = default;
};

/// Rows are output channels, columns are snapshots.
struct SnapshotSet {
    CMatrix data;
    ChannelKind channel;

    Eigen::Index channels() const { return data.rows(); }
    Eigen::Index snapshots() const { return data.cols(); }
};

struct ObservedSnapshots {
    SnapshotSet fd;
    std::vector<SnapshotSet> groups;
};

struct SynthesisOptions {
    bool noiseless = false;
};

/// exp(j 2 pi (m - 1) d sin(theta) / lambda) for m = 1..M.
CVector fd_steering_vector(const ArrayGeometry& geometry, double theta_deg);

/// Same progression over the N_p antennas of group p (zero-based index).
CVector group_steering_vector(const ArrayGeometry& geometry, std::size_t group, double theta_deg);

/// Block-diagonal N_p x K_p combiner; block k is exp(j Upsilon_{p,k,:}) / sqrt(M_p).
CMatrix analog_combining_matrix(const ArrayGeometry& geometry, std::size_t group,
                                const AnalogCombiner& combiner);

/// Noise-free response of group p's K_p digital channels to a unit plane wave.
CVector group_response(const ArrayGeometry& geometry, std::size_t group,
                       const AnalogCombiner& combiner, double theta_deg);

/// Draws one observation: a shared unit-power circular Gaussian e(n) seen by the FD
/// subarray and by every group, plus independent noise of variance 10^(-snr/10).
ObservedSnapshots synthesize_snapshots(const ArrayGeometry& geometry, const SourceConfig& source,
                                       const std::vector<AnalogCombiner>& combiners,
                                       std::uint64_t seed, SynthesisOptions options = {});

}  // namespace h2ad
