#include "h2ad/polynomial.hpp"

#include "h2ad/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace h2ad {

namespace {

constexpr int kMaxSweeps = 200;
constexpr double kResidualTolerance = 1e-6;

inline cdouble reciprocal(cdouble z) { return std::conj(z) / std::norm(z); }

struct HornerPair {
    cdouble value;
    cdouble derivative;
};

HornerPair horner(std::span<const cdouble> c, cdouble z) {
    cdouble p = c.back();
    cdouble dp = 0.0;
    for (std::size_t k = c.size() - 1; k-- > 0;) {
        dp = dp * z + p;
        p = p * z + c[k];
    }
    return {p, dp};
}

// Same as horner() over the reversed coefficients, i.e. evaluates z^n p(1/z).
HornerPair horner_reversed(std::span<const cdouble> c, cdouble w) {
    cdouble q = c.front();
    cdouble dq = 0.0;
    for (std::size_t k = 1; k < c.size(); ++k) {
        dq = dq * w + q;
        q = q * w + c[k];
    }
    return {q, dq};
}

// p(z) / p'(z); evaluated through the reversed polynomial outside the unit disk
// so that high degrees do not overflow.
cdouble newton_ratio(std::span<const cdouble> c, cdouble z) {
    const double n = static_cast<double>(c.size() - 1);
    if (std::norm(z) <= 1.0) {
        const auto [p, dp] = horner(c, z);
        if (dp == cdouble(0.0)) return p == cdouble(0.0) ? cdouble(0.0) : cdouble(std::numeric_limits<double>::infinity());
        return p / dp;
    }
    const cdouble w = reciprocal(z);
    const auto [q, dq] = horner_reversed(c, w);
    const cdouble denom = n * q - w * dq;
    if (denom == cdouble(0.0)) return q == cdouble(0.0) ? cdouble(0.0) : cdouble(std::numeric_limits<double>::infinity());
    return z * q / denom;
}

double coeff_norm(std::span<const cdouble> c) {
    double s = 0.0;
    for (const auto& v : c) s += std::norm(v);
    return std::sqrt(s);
}

std::vector<cdouble> companion_roots(std::span<const cdouble> c) {
    const auto n = static_cast<Eigen::Index>(c.size() - 1);
    CMatrix companion = CMatrix::Zero(n, n);
    for (Eigen::Index i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
    const cdouble lead = c.back();
    for (Eigen::Index i = 0; i < n; ++i) companion(i, n - 1) = -c[static_cast<std::size_t>(i)] / lead;
    Eigen::ComplexEigenSolver<CMatrix> solver(companion, false);
    if (solver.info() != Eigen::Success) throw NumericalError("companion eigenvalue iteration did not converge");
    const CVector& ev = solver.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

std::vector<cdouble> aberth_roots(std::span<const cdouble> c) {
    const std::size_t n = c.size() - 1;
    const double radius = std::pow(std::abs(c.front() / c.back()), 1.0 / static_cast<double>(n));
    std::vector<cdouble> z(n);
    for (std::size_t k = 0; k < n; ++k)
        z[k] = std::polar(radius, 2.0 * kPi * (static_cast<double>(k) + 0.25) / static_cast<double>(n) + 0.4);

    std::vector<char> done(n, 0);
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        std::size_t active = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (done[i]) continue;
            const cdouble ratio = newton_ratio(c, z[i]);
            cdouble repulsion = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) repulsion += reciprocal(z[i] - z[j]);
            const cdouble step = ratio / (1.0 - ratio * repulsion);
            if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) continue;
            z[i] -= step;
            if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(z[i])))
                done[i] = 1;
            else
                ++active;
        }
        if (active == 0) break;
    }
    return z;
}

}  // namespace

cdouble evaluate_polynomial(std::span<const cdouble> coeffs, cdouble z) {
    if (coeffs.empty()) return 0.0;
    return horner(coeffs, z).value;
}

bool root_within_residual_bound(std::span<const cdouble> coeffs, cdouble root) {
    if (coeffs.empty()) return true;
    const double bound = kResidualTolerance * coeff_norm(coeffs);
    if (!std::isfinite(root.real()) || !std::isfinite(root.imag())) return false;
    // |p(z)| / max(1,|z|)^deg; outside the disk that is |z^-n p(z)| = |q(1/z)|.
    if (std::norm(root) <= 1.0) return std::abs(horner(coeffs, root).value) <= bound;
    return std::abs(horner_reversed(coeffs, reciprocal(root)).value) <= bound;
}

std::vector<cdouble> solve_polynomial_roots(std::span<const cdouble> coeffs, RootMethod method) {
    std::size_t hi = coeffs.size();
    while (hi > 0 && coeffs[hi - 1] == cdouble(0.0)) --hi;
    if (hi == 0) throw NumericalError("cannot root the zero polynomial");
    std::size_t lo = 0;
    while (coeffs[lo] == cdouble(0.0)) ++lo;

    std::vector<cdouble> roots(lo, cdouble(0.0));
    const std::span<const cdouble> core = coeffs.subspan(lo, hi - lo);
    const std::size_t degree = core.size() - 1;
    if (degree == 0) return roots;
    if (degree == 1) {
        roots.push_back(-core[0] / core[1]);
        return roots;
    }

    std::vector<cdouble> found;
    if (method == RootMethod::Aberth) {
        found = aberth_roots(core);
        const bool ok = std::all_of(found.begin(), found.end(),
                                    [&](cdouble z) { return root_within_residual_bound(core, z); });
        if (!ok) found = companion_roots(core);
    } else {
        found = companion_roots(core);
    }
    roots.insert(roots.end(), found.begin(), found.end());
    return roots;
}

}  // namespace h2ad
