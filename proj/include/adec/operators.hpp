#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

#include "adec/errors.hpp"
#include "adec/linalg.hpp"

namespace adec {

/// Dense integer matrix with exact (overflow-checked) arithmetic. The
/// difference/decimation operator family is built here and stays integer
/// until the frame/quantizer boundary.
class IntMatrix {
public:
    IntMatrix() = default;

    IntMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), a_(rows * cols, 0) {}

    static IntMatrix identity(std::size_t n) {
        IntMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    std::int64_t& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    const std::int64_t& operator()(std::size_t i, std::size_t j) const {
        return a_[i * cols_ + j];
    }

    bool operator==(const IntMatrix& rhs) const {
        return rows_ == rhs.rows_ && cols_ == rhs.cols_ && a_ == rhs.a_;
    }

    IntMatrix operator*(const IntMatrix& rhs) const {
        if (cols_ != rhs.rows_) throw Error("IntMatrix::operator*: dimension mismatch");
        IntMatrix out(rows_, rhs.cols_);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t j = 0; j < rhs.cols_; ++j) {
                __int128 acc = 0;
                for (std::size_t t = 0; t < cols_; ++t)
                    acc += static_cast<__int128>((*this)(i, t)) * rhs(t, j);
                out(i, j) = narrow(acc);
            }
        }
        return out;
    }

    IntMatrix operator-(const IntMatrix& rhs) const {
        if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
            throw Error("IntMatrix::operator-: dimension mismatch");
        IntMatrix out = *this;
        for (std::size_t i = 0; i < a_.size(); ++i) out.a_[i] -= rhs.a_[i];
        return out;
    }

    IntMatrix scaled(std::int64_t f) const {
        IntMatrix out = *this;
        for (std::int64_t& v : out.a_)
            v = narrow(static_cast<__int128>(v) * f);
        return out;
    }

    /// Exact integer matrix-vector product in 128-bit accumulation.
    std::vector<__int128> apply_exact(const std::vector<std::int64_t>& v) const {
        if (v.size() != cols_) throw Error("IntMatrix::apply_exact: dimension mismatch");
        std::vector<__int128> out(rows_, 0);
        for (std::size_t i = 0; i < rows_; ++i) {
            __int128 acc = 0;
            for (std::size_t j = 0; j < cols_; ++j)
                acc += static_cast<__int128>((*this)(i, j)) * v[j];
            out[i] = acc;
        }
        return out;
    }

    std::vector<std::int64_t> apply(const std::vector<std::int64_t>& v) const {
        std::vector<__int128> wide = apply_exact(v);
        std::vector<std::int64_t> out(wide.size());
        for (std::size_t i = 0; i < wide.size(); ++i) out[i] = narrow(wide[i]);
        return out;
    }

    /// Converts to floating point with an optional scalar divisor.
    CMatrix to_cmatrix(double divisor = 1.0) const {
        CMatrix out(rows_, cols_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j)
                out(i, j) = static_cast<double>((*this)(i, j)) / divisor;
        return out;
    }

    static std::int64_t narrow(__int128 v) {
        if (v > static_cast<__int128>(INT64_MAX) || v < static_cast<__int128>(INT64_MIN))
            throw Overflow("IntMatrix: entry exceeds 64-bit range");
        return static_cast<std::int64_t>(v);
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::int64_t> a_;
};

/// Integer matrix together with a common positive denominator.
struct RatMatrix {
    IntMatrix num;
    std::int64_t den = 1;
};

/// Backward difference: unit diagonal, -1 subdiagonal.
inline IntMatrix delta(std::size_t m) {
    IntMatrix d(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        d(i, i) = 1;
        if (i > 0) d(i, i - 1) = -1;
    }
    return d;
}

/// Inverse of the backward difference: lower triangular all-ones
/// (cumulative sum).
inline IntMatrix delta_inv(std::size_t m) {
    IntMatrix d(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j <= i; ++j) d(i, j) = 1;
    return d;
}

/// Delta^r. Row n carries (-1)^l binom(r, l) at column n-l.
inline IntMatrix delta_pow(std::size_t m, int r) {
    if (r < 0) throw Error("delta_pow: negative order");
    IntMatrix out = IntMatrix::identity(m);
    const IntMatrix d = delta(m);
    for (int i = 0; i < r; ++i) out = out * d;
    return out;
}

/// Delta^{-r}, built from the closed form (Delta^{-r})_{l,s} =
/// binom(l-s+r-1, r-1) for l >= s, assembled by Pascal additions so
/// overflow is detected.
inline IntMatrix delta_inv_pow(std::size_t m, int r) {
    if (r < 0) throw Error("delta_inv_pow: negative order");
    if (r == 0) return IntMatrix::identity(m);
    IntMatrix out(m, m);
    if (m == 0) return out;
    // Toeplitz: entry (l, s) depends on l - s only. Start from the r = 1
    // column (all ones) and cumulative-sum r-1 times.
    std::vector<std::int64_t> col(m, 1);
    for (int pow = 2; pow <= r; ++pow)
        for (std::size_t i = 1; i < m; ++i) {
            std::int64_t s;
            if (__builtin_add_overflow(col[i], col[i - 1], &s))
                throw Overflow("delta_inv_pow: binomial exceeds 64-bit range");
            col[i] = s;
        }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j <= i; ++j) out(i, j) = col[i - j];
    return out;
}

/// Step-rho backward difference with cyclic wrap. Row t (1-indexed):
/// e_t - e_{t-rho} for t > rho, e_t alone for t = rho, e_t - e_{m+t-rho}
/// for t < rho. Integer entries, no 1/rho factor.
inline IntMatrix dbar_rho(std::size_t m, std::size_t rho) {
    if (rho < 1 || rho > m) throw InvalidBlock("dbar_rho: need 1 <= rho <= m");
    IntMatrix d(m, m);
    for (std::size_t t = 1; t <= m; ++t) {
        d(t - 1, t - 1) += 1;
        if (t > rho)
            d(t - 1, t - rho - 1) -= 1;
        else if (t < rho)
            d(t - 1, m + t - rho - 1) -= 1;
    }
    return d;
}

/// dbar_rho to the r-th power.
inline IntMatrix dbar_rho_pow(std::size_t m, std::size_t rho, int r) {
    if (r < 0) throw Error("dbar_rho_pow: negative order");
    IntMatrix out = IntMatrix::identity(m);
    const IntMatrix d = dbar_rho(m, rho);
    for (int i = 0; i < r; ++i) out = out * d;
    return out;
}

/// Sub-sampling operator selecting rows rho, 2*rho, ..., m.
inline IntMatrix sub_sample(std::size_t m, std::size_t rho) {
    if (rho < 1 || m % rho != 0) throw InvalidBlock("sub_sample: rho must divide m");
    const std::size_t eta = m / rho;
    IntMatrix d(eta, m);
    for (std::size_t l = 1; l <= eta; ++l) d(l - 1, l * rho - 1) = 1;
    return d;
}

/// Averaging operator S_rho = S_rho^+ - S_rho^-, returned exactly as
/// integers over the common denominator rho. Rows l >= rho average the
/// rho preceding entries; rows l < rho carry -1/rho on columns
/// l+1 .. m-rho+l.
inline RatMatrix s_rho(std::size_t m, std::size_t rho) {
    if (rho < 1 || rho > m) throw InvalidBlock("s_rho: need 1 <= rho <= m");
    RatMatrix out;
    out.num = IntMatrix(m, m);
    out.den = static_cast<std::int64_t>(rho);
    for (std::size_t l = 1; l <= m; ++l) {
        if (l >= rho) {
            for (std::size_t j = l - (rho - 1); j <= l; ++j) out.num(l - 1, j - 1) += 1;
        } else {
            for (std::size_t j = l + 1; j <= m - rho + l; ++j) out.num(l - 1, j - 1) -= 1;
        }
    }
    return out;
}

/// Auxiliary double sequence: a_{0,s} = [s >= 1]; a_{l,s} = sum_{j<=s} a_{l-1,j}.
inline std::int64_t a_seq(int l, std::int64_t s) {
    if (l < 0) throw Error("a_seq: negative level");
    if (s <= 0) return 0;
    std::vector<std::int64_t> row(static_cast<std::size_t>(s), 1);
    for (int lev = 1; lev <= l; ++lev)
        for (std::size_t i = 1; i < row.size(); ++i) {
            std::int64_t sum;
            if (__builtin_add_overflow(row[i], row[i - 1], &sum))
                throw Overflow("a_seq: value exceeds 64-bit range");
            row[i] = sum;
        }
    return row.back();
}

/// Decimation parameters: order r, frame length m, block size rho,
/// compressed dimension eta = m / rho.
struct DecimationPlan {
    int r;
    std::size_t m;
    std::size_t rho;
    std::size_t eta;

    DecimationPlan(int order, std::size_t frame_len, std::size_t block)
        : r(order), m(frame_len), rho(block), eta(0) {
        if (r < 1) throw InvalidBlock("DecimationPlan: order r must be >= 1");
        if (rho < 1) throw InvalidBlock("DecimationPlan: block size rho must be >= 1");
        if (m < 1 || m % rho != 0) throw InvalidBlock("DecimationPlan: rho must divide m");
        eta = m / rho;
    }
};

}  // namespace adec
