#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "adec/errors.hpp"
#include "adec/linalg.hpp"
#include "adec/operators.hpp"

namespace adec {

/// A unitarily generated frame: Hermitian generator Omega, unit base
/// vector phi0, frame length m. Rows of the analysis operator are
/// (U_{j/m} phi0)* with U_t = exp(2*pi*i*Omega*t).
struct FrameSpec {
    std::size_t k = 0;
    CMatrix omega;
    std::vector<cplx> phi0;
    std::size_t m = 0;

    /// Convenience constructor for diagonal generators.
    static FrameSpec diagonal(const std::vector<double>& eigenvalues,
                              std::vector<cplx> base, std::size_t m) {
        FrameSpec s;
        s.k = eigenvalues.size();
        s.omega = CMatrix(s.k, s.k);
        for (std::size_t i = 0; i < s.k; ++i) s.omega(i, i) = eigenvalues[i];
        s.phi0 = std::move(base);
        s.m = m;
        return s;
    }
};

/// Materialized analysis operator plus the cached eigendecomposition of
/// the generator (the eigenbasis B diagonalizes every U_t).
struct AnalysisOperator {
    CMatrix phi;  // m x k
    FrameSpec spec;
    HermEig gen;  // eigenvalues ascending, eigenvectors as columns of B
};

/// Diagonal factor matrices of the decimation analysis:
///   C = B diag(1 / (1 - e^{2 pi i lambda_s / m})) B*
///   D = B diag(1 - e^{2 pi i rho lambda_s / m}) B*
/// plus the base row phi0* entering the residual terms.
struct FrameFactors {
    CMatrix c_tilde;
    CMatrix d_tilde;
    CMatrix phi0_row;  // 1 x k
};

inline AnalysisOperator build_ugf(const FrameSpec& spec) {
    if (spec.omega.rows() != spec.k || spec.omega.cols() != spec.k)
        throw Error("build_ugf: generator must be k x k");
    if (spec.phi0.size() != spec.k) throw Error("build_ugf: base vector must have k entries");
    if (spec.m < 1) throw Error("build_ugf: frame length must be positive");
    if (std::abs(vec_norm2(spec.phi0) - 1.0) > tol::unit_norm)
        throw BadBaseVector("build_ugf: base vector is not unit norm");

    AnalysisOperator op;
    op.spec = spec;
    op.gen = herm_eig(spec.omega);  // throws NotHermitian for bad generators

    const std::size_t k = spec.k;
    const std::size_t m = spec.m;
    const CMatrix& b = op.gen.eigenvectors;
    // w = B* phi0 once; row j = (B diag(e^{2 pi i lambda j/m}) w)*.
    std::vector<cplx> w(k, cplx{0.0, 0.0});
    for (std::size_t s = 0; s < k; ++s) {
        cplx acc{0.0, 0.0};
        for (std::size_t i = 0; i < k; ++i) acc += std::conj(b(i, s)) * spec.phi0[i];
        w[s] = acc;
    }

    op.phi = CMatrix(m, k);
    for (std::size_t j = 1; j <= m; ++j) {
        std::vector<cplx> dw(k);
        for (std::size_t s = 0; s < k; ++s) {
            const double theta = 2.0 * std::numbers::pi * op.gen.eigenvalues[s] *
                                 static_cast<double>(j) / static_cast<double>(m);
            dw[s] = std::polar(1.0, theta) * w[s];
        }
        for (std::size_t i = 0; i < k; ++i) {
            cplx acc{0.0, 0.0};
            for (std::size_t s = 0; s < k; ++s) acc += b(i, s) * dw[s];
            op.phi(j - 1, i) = std::conj(acc);
        }
    }
    return op;
}

namespace detail {

/// Checks the integer-eigenvalue hypothesis: every lambda_s within
/// tol::integer_eigen of a nonzero integer in [-eta/2, eta/2]. Returns
/// an empty string on success, otherwise the violated clause.
inline std::string eigen_hypothesis_violation(const HermEig& gen, std::size_t eta) {
    for (double lam : gen.eigenvalues) {
        const double rounded = std::round(lam);
        if (std::abs(lam - rounded) > tol::integer_eigen)
            return "eigenvalues of the generator must be integers";
        if (rounded == 0.0) return "eigenvalues of the generator must be nonzero";
        if (2.0 * std::abs(rounded) > static_cast<double>(eta) + tol::integer_eigen)
            return "eigenvalues must lie in [-eta/2, eta/2]";
    }
    return {};
}

inline CMatrix eigen_scaled(const CMatrix& b, const std::vector<cplx>& diag) {
    const std::size_t k = b.rows();
    CMatrix bd(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t s = 0; s < k; ++s) bd(i, s) = b(i, s) * diag[s];
    return bd * b.adjoint();
}

}  // namespace detail

inline FrameFactors frame_factors(const AnalysisOperator& op, const DecimationPlan& plan) {
    if (plan.m != op.spec.m) throw Error("frame_factors: plan and frame length disagree");
    const std::size_t k = op.spec.k;
    const double m = static_cast<double>(plan.m);

    for (double lam : op.gen.eigenvalues) {
        const double frac = lam / m - std::round(lam / m);
        if (std::abs(frac) * m < tol::integer_eigen)
            throw ZeroEigenvalue("frame_factors: eigenvalue congruent to 0 mod m");
    }
    if (const std::string why = detail::eigen_hypothesis_violation(op.gen, plan.eta);
        !why.empty())
        throw HypothesisViolated("frame_factors: " + why);

    std::vector<cplx> cdiag(k), ddiag(k);
    for (std::size_t s = 0; s < k; ++s) {
        const double lam = op.gen.eigenvalues[s];
        cdiag[s] = 1.0 / (1.0 - std::polar(1.0, 2.0 * std::numbers::pi * lam / m));
        ddiag[s] = 1.0 - std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(plan.rho) *
                                             lam / m);
    }

    FrameFactors f;
    f.c_tilde = detail::eigen_scaled(op.gen.eigenvectors, cdiag);
    f.d_tilde = detail::eigen_scaled(op.gen.eigenvectors, ddiag);
    f.phi0_row = CMatrix(1, k);
    for (std::size_t i = 0; i < k; ++i) f.phi0_row(0, i) = std::conj(op.spec.phi0[i]);
    return f;
}

/// C_phi0 = min_s |<phi0, v_s>|^2 over the generator eigenvectors.
inline double lower_frame_const(const AnalysisOperator& op) {
    const std::size_t k = op.spec.k;
    double cmin = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < k; ++s) {
        cplx acc{0.0, 0.0};
        for (std::size_t i = 0; i < k; ++i)
            acc += std::conj(op.gen.eigenvectors(i, s)) * op.spec.phi0[i];
        cmin = std::min(cmin, std::norm(acc));
    }
    if (!(cmin > tol::degenerate_base))
        throw DegenerateBase("lower_frame_const: base vector orthogonal to an eigenvector");
    return cmin;
}

/// Frame bounds (A, B) of the rows of E: A = sigma_min^2, B = sigma_max^2.
inline std::pair<double, double> frame_bounds(const CMatrix& e) {
    if (e.rows() < e.cols()) throw Error("frame_bounds: fewer rows than columns");
    const double upper = spectral_norm(e);
    const double b = upper * upper;
    const double a = sigma_min_sq(e);
    if (a < tol::rank_rel * b) throw RankDeficient("frame_bounds: rows do not form a frame");
    return {a, b};
}

}  // namespace adec
