#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "adec/errors.hpp"
#include "adec/frames.hpp"
#include "adec/linalg.hpp"
#include "adec/operators.hpp"
#include "adec/quantizer.hpp"

namespace adec {

enum class Scheme { adapted, alternative };

/// Realized decimation operators for one plan:
///   scaled = rho^r A_r as an exact integer matrix (eta x m),
///   a_r    = scaled / rho^r,
///   a_phi  = A_r Phi (eta x k),
///   dual   = (A_r Phi)^dagger A_r (k x m).
struct DecimationOperators {
    DecimationPlan plan;
    Scheme scheme;
    IntMatrix scaled;
    CMatrix a_r;
    CMatrix a_phi;
    CMatrix dual;
};

/// Measured vs. proven quantities for one non-overloaded run.
struct BoundReport {
    double err;        // ||x - F q||_2
    double bound;      // (4/(k eta C)) (pi^2 eta)^r ||u||_inf rho^{-r}
    double lfb;        // sigma_min^2(A Phi)
    double lfb_bound;  // k C (2/pi)^{2r}
    double var;        // col_norm_sum((A Phi)* Delta^{(eta), r})
    double var_bound;  // 2^{2r+2} eta^{r-1}
    double u_inf;      // max_n |u_n|
};

namespace detail {

inline void check_main_hypotheses(const AnalysisOperator& op, const DecimationPlan& plan,
                                  bool require_eta_3rk) {
    if (plan.m != op.spec.m)
        throw HypothesisViolated("decimation: plan length does not match the frame");
    if (require_eta_3rk &&
        plan.eta < 3 * static_cast<std::size_t>(plan.r) * op.spec.k)
        throw HypothesisViolated("decimation: eta >= 3 r k fails");
    if (const std::string why = eigen_hypothesis_violation(op.gen, plan.eta); !why.empty())
        throw HypothesisViolated("decimation: " + why);
    // Throws DegenerateBase when min_s |<phi0, v_s>|^2 vanishes.
    try {
        lower_frame_const(op);
    } catch (const DegenerateBase&) {
        throw HypothesisViolated("decimation: C_phi0 = min_s |<phi0, v_s>|^2 > 0 fails");
    }
}

inline DecimationOperators finish_operators(const AnalysisOperator& op,
                                            const DecimationPlan& plan, Scheme scheme,
                                            IntMatrix scaled) {
    DecimationOperators ops{plan, scheme, std::move(scaled), {}, {}, {}};
    const double divisor = std::pow(static_cast<double>(plan.rho), plan.r);
    ops.a_r = ops.scaled.to_cmatrix(divisor);
    ops.a_phi = ops.a_r * op.phi;
    ops.dual = pinv(ops.a_phi) * ops.a_r;  // pinv throws RankDeficient
    return ops;
}

}  // namespace detail

/// Adapted decimation A_r = rho^{-r} D_rho dbar_rho^r Delta^{-r}.
inline DecimationOperators adapted(const DecimationPlan& plan, const AnalysisOperator& op) {
    detail::check_main_hypotheses(op, plan, /*require_eta_3rk=*/true);
    IntMatrix scaled = sub_sample(plan.m, plan.rho);
    const IntMatrix dbar = dbar_rho(plan.m, plan.rho);
    for (int i = 0; i < plan.r; ++i) scaled = scaled * dbar;
    scaled = scaled * delta_inv_pow(plan.m, plan.r);
    return detail::finish_operators(op, plan, Scheme::adapted, std::move(scaled));
}

/// Alternative decimation D_rho S_rho^r, defined for orders 1 and 2 only.
/// Coincides with the adapted operator at r = 1.
inline DecimationOperators alternative(const DecimationPlan& plan, const AnalysisOperator& op) {
    if (plan.r > 2) throw UnsupportedOrder("alternative: only orders 1 and 2 are covered");
    detail::check_main_hypotheses(op, plan, /*require_eta_3rk=*/false);
    // rho^r D_rho S_rho^r = D_rho (dbar_rho Delta^{-1})^r, exactly integer.
    const IntMatrix step = dbar_rho(plan.m, plan.rho) * delta_inv(plan.m);
    IntMatrix scaled = sub_sample(plan.m, plan.rho);
    for (int i = 0; i < plan.r; ++i) scaled = scaled * step;
    return detail::finish_operators(op, plan, Scheme::alternative, std::move(scaled));
}

/// V-dual (V Phi)^dagger V of an analysis operator.
inline CMatrix v_dual(const CMatrix& v, const CMatrix& phi) {
    return pinv(v * phi) * v;
}

/// Block matrix of the beta dual: k rows, each row carrying
/// [beta^{-1}, ..., beta^{-m/k}] on its own block of columns.
inline CMatrix beta_v_matrix(double beta, std::size_t m, std::size_t k) {
    if (k < 1 || m % k != 0) throw Error("beta_v_matrix: k must divide m");
    if (!(beta > 1.0)) throw Error("beta_v_matrix: beta must exceed 1");
    const std::size_t block = m / k;
    CMatrix v(k, m);
    for (std::size_t row = 0; row < k; ++row)
        for (std::size_t j = 0; j < block; ++j)
            v(row, row * block + j) = std::pow(beta, -static_cast<double>(j + 1));
    return v;
}

inline std::vector<cplx> reconstruct(const CMatrix& dual, const std::vector<cplx>& q) {
    return dual.apply(q);
}

namespace detail {

inline BoundReport make_report(const std::vector<cplx>& x, const AnalysisOperator& op,
                               const DecimationPlan& plan, const QuantizationOutput& quant,
                               const DecimationOperators& ops) {
    const double k = static_cast<double>(op.spec.k);
    const double eta = static_cast<double>(plan.eta);
    const double rho = static_cast<double>(plan.rho);
    const int r = plan.r;
    const double c_phi0 = lower_frame_const(op);

    BoundReport rep{};
    rep.u_inf = vec_norm_inf(quant.u);

    const std::vector<cplx> xhat = ops.dual.apply(quant.q);
    double err2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) err2 += std::norm(x[i] - xhat[i]);
    rep.err = std::sqrt(err2);

    rep.bound = 4.0 / (k * eta * c_phi0) *
                std::pow(std::numbers::pi * std::numbers::pi * eta, r) * rep.u_inf /
                std::pow(rho, r);
    rep.lfb = sigma_min_sq(ops.a_phi);
    rep.lfb_bound = k * c_phi0 * std::pow(2.0 / std::numbers::pi, 2 * r);
    rep.var = col_norm_sum(ops.a_phi.adjoint() * delta_pow(plan.eta, r).to_cmatrix());
    rep.var_bound = std::pow(2.0, 2 * r + 2) * std::pow(eta, r - 1);
    return rep;
}

}  // namespace detail

/// Reconstruction plus every inequality of the error analysis, measured
/// against its proven bound.
inline BoundReport bound_report(const std::vector<cplx>& x, const AnalysisOperator& op,
                                const DecimationPlan& plan, const QuantizationOutput& quant,
                                const DecimationOperators& ops) {
    if (quant.overloaded)
        throw OverloadedInput("bound_report: quantizer overloaded, bounds are void");
    if (x.size() != op.spec.k || quant.q.size() != plan.m)
        throw Error("bound_report: dimension mismatch");
    return detail::make_report(x, op, plan, quant, ops);
}

/// Relative Frobenius residual of the expansion
///   D [Phi D~^r C~^r + sum_j dbar^{r-j} 1 phi0* D~^j C~^r
///                    - dbar^r sum_j Delta^{-j} 1 phi0* C~^{r-j}]
/// against rho^r A_r Phi assembled directly. Accepts r = 0, where both
/// sides reduce to D_rho Phi.
inline double expansion_check(const AnalysisOperator& op, std::size_t rho, int r) {
    if (r < 0) throw Error("expansion_check: negative order");
    const std::size_t m = op.spec.m;
    const std::size_t k = op.spec.k;
    if (rho < 1 || m % rho != 0) throw InvalidBlock("expansion_check: rho must divide m");

    const CMatrix sub = sub_sample(m, rho).to_cmatrix();
    const CMatrix dbar = dbar_rho(m, rho).to_cmatrix();
    const CMatrix lhs =
        (sub_sample(m, rho) * dbar_rho_pow(m, rho, r) * delta_inv_pow(m, r)).to_cmatrix() *
        op.phi;

    // Frame factors need a valid plan; for r = 0 only the diagonals matter
    // and any r >= 1 plan produces the same C~, D~.
    const DecimationPlan factors_plan(std::max(r, 1), m, rho);
    const FrameFactors f = frame_factors(op, factors_plan);

    CMatrix ones_phi0 = CMatrix::ones_column(m) * f.phi0_row;  // m x k

    std::vector<CMatrix> cpow(static_cast<std::size_t>(r) + 1);
    std::vector<CMatrix> dpow(static_cast<std::size_t>(r) + 1);
    cpow[0] = CMatrix::identity(k);
    dpow[0] = CMatrix::identity(k);
    for (int i = 1; i <= r; ++i) {
        cpow[static_cast<std::size_t>(i)] = cpow[static_cast<std::size_t>(i - 1)] * f.c_tilde;
        dpow[static_cast<std::size_t>(i)] = dpow[static_cast<std::size_t>(i - 1)] * f.d_tilde;
    }

    CMatrix inner = op.phi * (dpow[static_cast<std::size_t>(r)] * cpow[static_cast<std::size_t>(r)]);
    for (int j = 0; j <= r - 1; ++j) {
        const CMatrix term = dbar_rho_pow(m, rho, r - j).to_cmatrix() * ones_phi0 *
                             (dpow[static_cast<std::size_t>(j)] * cpow[static_cast<std::size_t>(r)]);
        inner = inner + term;
    }
    if (r >= 1) {
        CMatrix tail(m, k);
        for (int j = 0; j <= r - 1; ++j) {
            const CMatrix term = delta_inv_pow(m, j).to_cmatrix() * ones_phi0 *
                                 cpow[static_cast<std::size_t>(r - j)];
            tail = tail + term;
        }
        inner = inner - dbar_rho_pow(m, rho, r).to_cmatrix() * tail;
    }
    const CMatrix rhs = sub * inner;

    const double scale = std::max(lhs.frobenius(), 1e-300);
    return (lhs - rhs).frobenius() / scale;
}

inline double expansion_check(const AnalysisOperator& op, const DecimationPlan& plan) {
    return expansion_check(op, plan.rho, plan.r);
}

/// min_s |sin(pi lambda_s / eta)| / (rho |sin(pi lambda_s / m)|); the
/// eigen-scalar whose lower bound 2/pi drives the frame-bound estimate.
inline double dc_lb_min_ratio(const AnalysisOperator& op, const DecimationPlan& plan) {
    double best = std::numeric_limits<double>::infinity();
    for (double lam : op.gen.eigenvalues) {
        const double num = std::abs(std::sin(std::numbers::pi * lam / static_cast<double>(plan.eta)));
        const double den = static_cast<double>(plan.rho) *
                           std::abs(std::sin(std::numbers::pi * lam / static_cast<double>(plan.m)));
        best = std::min(best, num / den);
    }
    return best;
}

}  // namespace adec
