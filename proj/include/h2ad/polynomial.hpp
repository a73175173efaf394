#pragma once

#include "h2ad/types.hpp"

#include <span>
#include <vector>

namespace h2ad {

enum class RootMethod {
    Aberth,     // simultaneous Aberth-Ehrlich iteration, O(n^2) per sweep
    Companion,  // eigenvalues of the companion matrix (reference path)
};

/// All roots of sum_k coeffs[k] z^k (ascending degree). Trailing zero
/// coefficients are trimmed first; throws NumericalError for the zero polynomial.
///
/// The Aberth path falls back to the companion matrix if any root misses the
/// residual bound |p(z)| <= 1e-6 ||c|| max(1, |z|)^deg.
std::vector<cdouble> solve_polynomial_roots(std::span<const cdouble> coeffs,
                                            RootMethod method = RootMethod::Aberth);

/// Horner evaluation, ascending coefficients.
cdouble evaluate_polynomial(std::span<const cdouble> coeffs, cdouble z);

/// Residual bound used by solve_polynomial_roots.
bool root_within_residual_bound(std::span<const cdouble> coeffs, cdouble root);

}  // namespace h2ad
