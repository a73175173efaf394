#pragma once

#include "h2ad/array_model.hpp"
#include "h2ad/polynomial.hpp"

#include <optional>
#include <vector>

namespace h2ad {

struct NoiseSubspace {
    CMatrix basis;                     // channels x (channels - num_sources), orthonormal columns
    std::vector<double> eigenvalues;   // all eigenvalues, nonincreasing

    CMatrix projector() const { return basis * basis.adjoint(); }
};

struct RootMusicResult {
    cdouble selected_root;
    std::vector<cdouble> all_roots;
    std::optional<double> wrapped_phase;  // eta_p in (-pi, pi], groups only
    std::optional<double> angle_deg;      // theta_F, FD only
};

/// Group p's ambiguous DOA hypotheses, sorted ascending.
struct CandidateSet {
    std::size_t group = 0;
    std::vector<double> angles_deg;
    std::vector<int> ambiguity_indices;

    std::size_t size() const { return angles_deg.size(); }
    bool empty() const { return angles_deg.empty(); }
};

/// R = (1/H) sum_n y(n) y(n)^H.
CMatrix sample_covariance(const SnapshotSet& snapshots);

/// Eigenvectors of the (dim - num_sources) smallest eigenvalues of a Hermitian matrix.
NoiseSubspace noise_subspace(const CMatrix& covariance, int num_sources = 1);

/// Ascending coefficients of z^(n-1) * sum_{i1,i2} B_{i1 i2} z^(i2 - i1), degree 2(n-1).
std::vector<cdouble> root_music_polynomial(const CMatrix& projector);

/// Coarse FD angle. Picks the root inside the closed unit disk with the largest
/// modulus (ties: smaller |arg z|) among those that map to a real angle.
RootMusicResult fd_root_music(const NoiseSubspace& subspace, const ArrayGeometry& geometry,
                              RootMethod method = RootMethod::Aberth);

/// Wrapped virtual-array phase eta_p of group p from its K_p-channel noise subspace.
RootMusicResult group_root_music(const NoiseSubspace& subspace, const ArrayGeometry& geometry,
                                 std::size_t group, RootMethod method = RootMethod::Aberth);

/// All q with x_q = lambda (eta + 2 pi q) / (2 pi M_p d) in [-1, 1], mapped through arcsin.
CandidateSet expand_candidates(double wrapped_phase, const ArrayGeometry& geometry, std::size_t group);

}  // namespace h2ad
