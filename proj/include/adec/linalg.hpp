#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "adec/errors.hpp"

namespace adec {

using cplx = std::complex<double>;

/// Central tolerance table. Every numeric threshold used by the library
/// lives here so contracts stay consistent across modules.
namespace tol {
inline constexpr double hermitian_rel = 1e-12;   // ||M - M*||_F <= rel * ||M||_F
inline constexpr double eig_residual = 1e-10;    // eigendecomposition residuals
inline constexpr double rank_rel = 1e-12;        // sigma_min / sigma_max rank cutoff
inline constexpr double pinv_cond_switch = 1e8;  // Cholesky -> eigensolve fallback
inline constexpr double dual_identity = 1e-9;    // ||F*Phi - I||
inline constexpr double unit_norm = 1e-12;       // base vector normalization
inline constexpr double degenerate_base = 1e-12; // min_s |<phi0,v_s>|^2 cutoff
inline constexpr double integer_eigen = 1e-9;    // eigenvalue integrality at plan binding
inline constexpr double lemma_rel = 1e-9;        // matrix-identity checks, relative Frobenius
inline constexpr double expansion_rel = 1e-8;    // decimation expansion residual
inline constexpr double bound_slack = 1e-9;      // slack on proven inequalities
inline constexpr double jacobi_off = 1e-13;      // off-diagonal stop, relative
inline constexpr int jacobi_max_sweeps = 64;
}  // namespace tol

/// Dense complex matrix, row-major, double precision.
class CMatrix {
public:
    CMatrix() = default;

    CMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), a_(rows * cols, cplx{0.0, 0.0}) {}

    /// Builds from explicit entries, enforcing the finiteness invariant.
    static CMatrix from(std::size_t rows, std::size_t cols, std::vector<cplx> entries) {
        if (entries.size() != rows * cols)
            throw Error("CMatrix::from: entry count does not match rows*cols");
        CMatrix m;
        m.rows_ = rows;
        m.cols_ = cols;
        m.a_ = std::move(entries);
        if (!m.all_finite()) throw Error("CMatrix::from: non-finite entry");
        return m;
    }

    static CMatrix identity(std::size_t n) {
        CMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    /// All-ones column, m x 1.
    static CMatrix ones_column(std::size_t m) {
        CMatrix v(m, 1);
        for (std::size_t i = 0; i < m; ++i) v(i, 0) = 1.0;
        return v;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    cplx& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    const std::vector<cplx>& data() const { return a_; }

    bool all_finite() const {
        for (const cplx& z : a_)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
        return true;
    }

    CMatrix adjoint() const {
        CMatrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = std::conj((*this)(i, j));
        return t;
    }

    CMatrix operator*(const CMatrix& rhs) const {
        if (cols_ != rhs.rows_) throw Error("CMatrix::operator*: dimension mismatch");
        CMatrix out(rows_, rhs.cols_);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t t = 0; t < cols_; ++t) {
                const cplx x = (*this)(i, t);
                if (x == cplx{0.0, 0.0}) continue;
                for (std::size_t j = 0; j < rhs.cols_; ++j) out(i, j) += x * rhs(t, j);
            }
        }
        return out;
    }

    CMatrix operator+(const CMatrix& rhs) const {
        if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
            throw Error("CMatrix::operator+: dimension mismatch");
        CMatrix out = *this;
        for (std::size_t i = 0; i < a_.size(); ++i) out.a_[i] += rhs.a_[i];
        return out;
    }

    CMatrix operator-(const CMatrix& rhs) const {
        if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
            throw Error("CMatrix::operator-: dimension mismatch");
        CMatrix out = *this;
        for (std::size_t i = 0; i < a_.size(); ++i) out.a_[i] -= rhs.a_[i];
        return out;
    }

    CMatrix scaled(cplx factor) const {
        CMatrix out = *this;
        for (cplx& z : out.a_) z *= factor;
        return out;
    }

    std::vector<cplx> apply(const std::vector<cplx>& v) const {
        if (v.size() != cols_) throw Error("CMatrix::apply: dimension mismatch");
        std::vector<cplx> out(rows_, cplx{0.0, 0.0});
        for (std::size_t i = 0; i < rows_; ++i) {
            cplx acc{0.0, 0.0};
            for (std::size_t j = 0; j < cols_; ++j) acc += (*this)(i, j) * v[j];
            out[i] = acc;
        }
        return out;
    }

    double frobenius() const {
        double s = 0.0;
        for (const cplx& z : a_) s += std::norm(z);
        return std::sqrt(s);
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> a_;
};

inline double vec_norm2(const std::vector<cplx>& v) {
    double s = 0.0;
    for (const cplx& z : v) s += std::norm(z);
    return std::sqrt(s);
}

inline double vec_norm_inf(const std::vector<cplx>& v) {
    double s = 0.0;
    for (const cplx& z : v) s = std::max(s, std::abs(z));
    return s;
}

/// Largest |Re| or |Im| over all entries (component sup norm).
inline double vec_comp_inf(const std::vector<cplx>& v) {
    double s = 0.0;
    for (const cplx& z : v) s = std::max({s, std::abs(z.real()), std::abs(z.imag())});
    return s;
}

/// Hermitian eigendecomposition: M = V diag(lambda) V*, lambda ascending,
/// V unitary with eigenvectors as columns.
struct HermEig {
    std::vector<double> eigenvalues;
    CMatrix eigenvectors;
};

namespace detail {

inline double off_diagonal_norm(const CMatrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
}

}  // namespace detail

/// Cyclic Jacobi eigensolver for Hermitian matrices. Unconditionally
/// convergent at the dimensions this library targets (k <= a few dozen).
inline HermEig herm_eig(const CMatrix& m) {
    const std::size_t n = m.rows();
    if (n != m.cols()) throw NotHermitian("herm_eig: matrix not square");
    const double norm_m = m.frobenius();
    {
        const CMatrix skew = m - m.adjoint();
        if (skew.frobenius() > tol::hermitian_rel * std::max(norm_m, 1e-300) &&
            skew.frobenius() > 0.0)
            throw NotHermitian("herm_eig: ||M - M*|| exceeds tolerance");
    }

    CMatrix a = m;
    CMatrix v = CMatrix::identity(n);
    const double stop = tol::jacobi_off * std::max(1.0, norm_m);

    bool converged = detail::off_diagonal_norm(a) <= stop;
    for (int sweep = 0; sweep < tol::jacobi_max_sweeps && !converged; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const cplx apq = a(p, q);
                const double beta = std::abs(apq);
                if (beta <= 1e-300) continue;
                const cplx phase = apq / beta;
                const double alpha = a(p, p).real();
                const double gamma = a(q, q).real();
                const double tau = (gamma - alpha) / (2.0 * beta);
                const double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                              : -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                // Column update B = A * R, rotation in the (p, q) plane.
                for (std::size_t i = 0; i < n; ++i) {
                    const cplx aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * std::conj(phase) * aiq;
                    a(i, q) = s * phase * aip + c * aiq;
                }
                // Row update A' = R* B.
                for (std::size_t j = 0; j < n; ++j) {
                    const cplx apj = a(p, j), aqj = a(q, j);
                    a(p, j) = c * apj - s * phase * aqj;
                    a(q, j) = s * std::conj(phase) * apj + c * aqj;
                }
                a(p, q) = cplx{0.0, 0.0};
                a(q, p) = cplx{0.0, 0.0};
                a(p, p) = cplx{a(p, p).real(), 0.0};
                a(q, q) = cplx{a(q, q).real(), 0.0};
                // Eigenvector accumulation V <- V * R.
                for (std::size_t i = 0; i < n; ++i) {
                    const cplx vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * std::conj(phase) * viq;
                    v(i, q) = s * phase * vip + c * viq;
                }
            }
        }
        converged = detail::off_diagonal_norm(a) <= stop;
    }
    if (!converged) throw NoConvergence("herm_eig: Jacobi sweep budget exhausted");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return a(x, x).real() < a(y, y).real(); });

    HermEig out;
    out.eigenvalues.resize(n);
    out.eigenvectors = CMatrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.eigenvalues[j] = a(order[j], order[j]).real();
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = v(i, order[j]);
    }
    return out;
}

namespace detail {

/// Cholesky factor (lower, real positive diagonal) of a Hermitian
/// positive-definite matrix. Returns false if a pivot degenerates.
inline bool cholesky(const CMatrix& g, CMatrix& l) {
    const std::size_t n = g.rows();
    l = CMatrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = g(j, j).real();
        for (std::size_t t = 0; t < j; ++t) d -= std::norm(l(j, t));
        if (!(d > 0.0)) return false;
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            cplx s = g(i, j);
            for (std::size_t t = 0; t < j; ++t) s -= l(i, t) * std::conj(l(j, t));
            l(i, j) = s / ljj;
        }
    }
    return true;
}

/// Solves (L L*) X = B in place of B given the Cholesky factor L.
inline void cholesky_solve(const CMatrix& l, CMatrix& b) {
    const std::size_t n = l.rows();
    for (std::size_t col = 0; col < b.cols(); ++col) {
        // Forward: L y = b
        for (std::size_t i = 0; i < n; ++i) {
            cplx s = b(i, col);
            for (std::size_t t = 0; t < i; ++t) s -= l(i, t) * b(t, col);
            b(i, col) = s / l(i, i).real();
        }
        // Backward: L* x = y
        for (std::size_t ii = n; ii-- > 0;) {
            cplx s = b(ii, col);
            for (std::size_t t = ii + 1; t < n; ++t) s -= std::conj(l(t, ii)) * b(t, col);
            b(ii, col) = s / l(ii, ii).real();
        }
    }
}

/// Eigenvalues of M* M (ascending, clamped at zero).
inline HermEig gram_eig(const CMatrix& m) {
    CMatrix g = m.adjoint() * m;
    // Symmetrize to wash out rounding before the Hermitian solve.
    g = (g + g.adjoint()).scaled(0.5);
    return herm_eig(g);
}

}  // namespace detail

/// Moore-Penrose pseudoinverse (M* M)^{-1} M* for full column rank M.
/// Normal equations with Cholesky; falls back to an eigensolve of M* M
/// when the condition number exceeds tol::pinv_cond_switch.
inline CMatrix pinv(const CMatrix& m) {
    const std::size_t k = m.cols();
    if (k == 0) throw RankDeficient("pinv: empty matrix");
    HermEig ge = detail::gram_eig(m);
    const double lam_max = std::max(ge.eigenvalues.back(), 0.0);
    const double lam_min = std::max(ge.eigenvalues.front(), 0.0);
    const double smax = std::sqrt(lam_max);
    const double smin = std::sqrt(lam_min);
    if (!(smin > tol::rank_rel * smax) || smax == 0.0)
        throw RankDeficient("pinv: smallest singular value below threshold");

    const CMatrix mh = m.adjoint();
    if (smax / smin > tol::pinv_cond_switch) {
        // (M* M)^{-1} = V diag(1/lambda) V*
        const std::size_t n = ge.eigenvalues.size();
        CMatrix vs(n, n);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i)
                vs(i, j) = ge.eigenvectors(i, j) / ge.eigenvalues[j];
        return (vs * ge.eigenvectors.adjoint()) * mh;
    }

    CMatrix g = m.adjoint() * m;
    g = (g + g.adjoint()).scaled(0.5);
    CMatrix l;
    if (!detail::cholesky(g, l)) throw RankDeficient("pinv: Gram matrix not positive definite");
    CMatrix x = mh;
    detail::cholesky_solve(l, x);
    return x;
}

/// Largest singular value.
inline double spectral_norm(const CMatrix& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    HermEig ge = detail::gram_eig(m);
    return std::sqrt(std::max(ge.eigenvalues.back(), 0.0));
}

/// Smallest eigenvalue of M* M, i.e. the lower frame bound of the rows-
/// as-frame reading of M.
inline double sigma_min_sq(const CMatrix& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    HermEig ge = detail::gram_eig(m);
    return std::max(ge.eigenvalues.front(), 0.0);
}

/// Sum of column 2-norms; an upper bound for the (inf,2) operator norm.
inline double col_norm_sum(const CMatrix& m) {
    double total = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m.rows(); ++i) s += std::norm(m(i, j));
        total += std::sqrt(s);
    }
    return total;
}

}  // namespace adec
