#pragma once

#include <stdexcept>
#include <string>

namespace adec {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// herm_eig precondition failure: input is not Hermitian within tolerance.
struct NotHermitian : Error {
    using Error::Error;
};

/// Iterative eigensolver exceeded its sweep budget.
struct NoConvergence : Error {
    using Error::Error;
};

/// Matrix does not have full column rank (smallest singular value below
/// the relative threshold); for decimation this signals A_r*Phi failed
/// to be a frame.
struct RankDeficient : Error {
    using Error::Error;
};

/// Decimation block size incompatible with the vector length.
struct InvalidBlock : Error {
    using Error::Error;
};

/// Base vector of a unitarily generated frame is not unit norm.
struct BadBaseVector : Error {
    using Error::Error;
};

/// A generator eigenvalue is congruent to 0 mod m, so 1 - e^{2*pi*i*l/m}
/// vanishes and the diagonal frame factors are undefined.
struct ZeroEigenvalue : Error {
    using Error::Error;
};

/// min_s |<phi0, v_s>|^2 is numerically zero.
struct DegenerateBase : Error {
    using Error::Error;
};

/// A hypothesis of the decimation scheme does not hold; the message names
/// the violated clause.
struct HypothesisViolated : Error {
    using Error::Error;
};

/// Alternative decimation is only defined for orders 1 and 2.
struct UnsupportedOrder : Error {
    using Error::Error;
};

/// Quantization overloaded; error bounds are void.
struct OverloadedInput : Error {
    using Error::Error;
};

/// Integer arithmetic exceeded the representable range.
struct Overflow : Error {
    using Error::Error;
};

/// Encoded block failed structural validation.
struct Malformed : Error {
    using Error::Error;
};

/// Decoded integer exceeds the advertised range bound.
struct RangeViolation : Error {
    using Error::Error;
};

/// Decay fit requested with fewer than three distinct block sizes.
struct InsufficientPoints : Error {
    using Error::Error;
};

/// Experiment configuration is invalid.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace adec
