#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "adec/errors.hpp"
#include "adec/linalg.hpp"

namespace adec {

/// Mid-rise uniform quantizer of gap delta and length 2L: real levels
/// (2j+1) delta/2 for -L <= j <= L-1 (no zero level); the complex
/// alphabet is the product set A0 + i A0.
struct Alphabet {
    double delta;
    std::int64_t L;

    Alphabet(double gap, std::int64_t half_length) : delta(gap), L(half_length) {
        if (!(delta > 0.0)) throw Error("Alphabet: gap must be positive");
        if (L < 1) throw Error("Alphabet: half-length must be >= 1");
    }

    double level(std::int64_t j) const {
        return (2.0 * static_cast<double>(j) + 1.0) * delta / 2.0;
    }

    /// Largest representable magnitude per real component.
    double range() const { return static_cast<double>(L) * delta; }
};

/// Result of scalar quantization: level indices per channel plus an
/// overload indicator.
struct LevelPair {
    std::int64_t re;
    std::int64_t im;
    bool overloaded;
};

namespace detail {

inline std::int64_t q0_channel(double x, const Alphabet& a, bool& overload) {
    if (!std::isfinite(x)) {
        overload = true;
        return x > 0.0 ? a.L - 1 : -a.L;
    }
    if (x > a.range() || x < -a.range()) overload = true;
    // Cell [j delta, (j+1) delta) maps to level (2j+1) delta/2; ties at
    // cell boundaries land on the level above (toward positive).
    const double f = std::floor(x / a.delta);
    if (f >= static_cast<double>(a.L)) return a.L - 1;
    if (f < static_cast<double>(-a.L)) return -a.L;
    return static_cast<std::int64_t>(f);
}

inline std::int64_t binomial(int n, int l) {
    std::int64_t c = 1;
    for (int i = 1; i <= l; ++i) c = c * (n - l + i) / i;
    return c;
}

}  // namespace detail

/// Nearest-level scalar quantizer, applied per real component.
inline LevelPair q0(cplx v, const Alphabet& alphabet) {
    LevelPair out{0, 0, false};
    out.re = detail::q0_channel(v.real(), alphabet, out.overloaded);
    out.im = detail::q0_channel(v.imag(), alphabet, out.overloaded);
    return out;
}

/// Output of the greedy r-th order scheme. The defining identity
/// y - q = Delta^r u holds with u_n = 0 for n <= 0; when no overload
/// occurred, |Re u| and |Im u| stay within delta/2 componentwise.
struct QuantizationOutput {
    std::vector<std::int64_t> levels_re;
    std::vector<std::int64_t> levels_im;
    std::vector<cplx> q;
    std::vector<cplx> u;
    int r = 1;
    double delta = 1.0;
    std::int64_t L = 1;
    bool overloaded = false;
};

/// Greedy r-th order scheme:
///   w_n = sum_{l=1..r} (-1)^{l+1} binom(r,l) u_{n-l}
///   q_n = Q0(w_n + y_n),  u_n = w_n + y_n - q_n.
inline QuantizationOutput sigma_delta(const std::vector<cplx>& y, int r,
                                      const Alphabet& alphabet) {
    if (r < 1) throw Error("sigma_delta: order must be >= 1");
    if (r > 62) throw Error("sigma_delta: order too large");
    if (y.empty()) throw Error("sigma_delta: empty input");

    const std::size_t m = y.size();
    QuantizationOutput out;
    out.r = r;
    out.delta = alphabet.delta;
    out.L = alphabet.L;
    out.levels_re.resize(m);
    out.levels_im.resize(m);
    out.q.resize(m);
    out.u.resize(m);

    std::vector<double> coeff(static_cast<std::size_t>(r) + 1, 0.0);
    for (int l = 1; l <= r; ++l)
        coeff[static_cast<std::size_t>(l)] =
            (l % 2 == 1 ? 1.0 : -1.0) * static_cast<double>(detail::binomial(r, l));

    for (std::size_t n = 0; n < m; ++n) {
        cplx w{0.0, 0.0};
        for (int l = 1; l <= r && static_cast<std::size_t>(l) <= n; ++l)
            w += coeff[static_cast<std::size_t>(l)] * out.u[n - static_cast<std::size_t>(l)];
        const cplx target = w + y[n];
        const LevelPair lp = q0(target, alphabet);
        out.levels_re[n] = lp.re;
        out.levels_im[n] = lp.im;
        out.overloaded = out.overloaded || lp.overloaded;
        out.q[n] = cplx{alphabet.level(lp.re), alphabet.level(lp.im)};
        out.u[n] = target - out.q[n];
    }
    return out;
}

/// Sufficient stability certificate for the greedy scheme:
///   L delta - max_n max(|Re y_n|, |Im y_n|) - (2^r - 1) delta / 2.
/// Nonnegative return guarantees no overload and |u| <= delta/2 per
/// component.
inline double stability_margin(const std::vector<cplx>& y, int r, const Alphabet& alphabet) {
    if (r < 1 || r > 62) throw Error("stability_margin: order out of range");
    const double carry = (std::ldexp(1.0, r) - 1.0) * alphabet.delta / 2.0;
    return alphabet.range() - vec_comp_inf(y) - carry;
}

}  // namespace adec
