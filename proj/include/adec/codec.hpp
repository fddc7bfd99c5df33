#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <vector>

#include "adec/errors.hpp"
#include "adec/linalg.hpp"
#include "adec/operators.hpp"
#include "adec/quantizer.hpp"

namespace adec {

/// Bitstream layout (all multi-byte header integers little-endian):
///   magic "ADEC" | version 0x01 | m u32 | rho u32 | L u32 | r u8 | b u8
///   | delta f64 | payload
/// The payload holds eta entries, each a (re, im) pair of b-bit
/// two's-complement integers, bits packed MSB-first and zero-padded to a
/// byte boundary. Entry value = numerator * delta / 2.
struct EncodedBlock {
    std::uint32_t m = 0;
    std::uint32_t rho = 1;
    std::uint32_t L = 1;
    std::uint8_t r = 1;
    std::uint8_t bits_per_int = 1;
    double delta = 1.0;
    std::vector<std::int64_t> num_re;
    std::vector<std::int64_t> num_im;

    std::size_t eta() const { return rho == 0 ? 0 : m / rho; }
    std::size_t payload_bits() const { return 2 * eta() * bits_per_int; }

    /// Decoded complex entries, exactly numerator * delta / 2.
    std::vector<cplx> values() const {
        std::vector<cplx> out(eta());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = cplx{static_cast<double>(num_re[i]) * delta / 2.0,
                          static_cast<double>(num_im[i]) * delta / 2.0};
        return out;
    }
};

namespace detail {

inline constexpr char kMagic[4] = {'A', 'D', 'E', 'C'};
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kHeaderBytes = 4 + 1 + 4 + 4 + 4 + 1 + 1 + 8;

/// Safe numerator envelope 2 L (2m)^r + 2^r m; Overflow when it cannot
/// be represented.
inline std::int64_t numerator_range(std::uint64_t m, std::uint64_t L, int r) {
    const __int128 lim = static_cast<__int128>(INT64_MAX);
    __int128 pow = 1;
    for (int i = 0; i < r; ++i) {
        pow *= static_cast<__int128>(2 * m);
        if (pow > lim) throw Overflow("codec: (2m)^r exceeds 64-bit range");
    }
    __int128 two_r = 1;
    for (int i = 0; i < r; ++i) two_r *= 2;
    const __int128 range = 2 * static_cast<__int128>(L) * pow + two_r * static_cast<__int128>(m);
    if (range > lim) throw Overflow("codec: numerator range exceeds 64-bit range");
    return static_cast<std::int64_t>(range);
}

inline int width_for_range(std::int64_t n_max) {
    // Smallest b with 2^b >= 2 n_max + 1; fits [-n_max, n_max] in b-bit
    // two's complement.
    unsigned __int128 x = 2 * static_cast<unsigned __int128>(n_max);
    int b = 0;
    while (x > 0) {
        ++b;
        x >>= 1;
    }
    return b == 0 ? 1 : b;
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
}

class BitWriter {
public:
    explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}

    void put(std::uint64_t value, int bits) {
        for (int i = bits - 1; i >= 0; --i) {
            const bool bit = (value >> i) & 1u;
            if (fill_ == 0) out_.push_back(0);
            if (bit) out_.back() |= static_cast<std::uint8_t>(1u << (7 - fill_));
            fill_ = (fill_ + 1) % 8;
        }
    }

private:
    std::vector<std::uint8_t>& out_;
    int fill_ = 0;
};

class BitReader {
public:
    BitReader(const std::uint8_t* p, std::size_t nbytes) : p_(p), nbytes_(nbytes) {}

    std::uint64_t get(int bits) {
        std::uint64_t v = 0;
        for (int i = 0; i < bits; ++i) {
            const std::size_t byte = pos_ / 8;
            if (byte >= nbytes_) throw Malformed("codec: payload truncated");
            const int off = static_cast<int>(pos_ % 8);
            v = (v << 1) | ((p_[byte] >> (7 - off)) & 1u);
            ++pos_;
        }
        return v;
    }

    std::size_t consumed_bits() const { return pos_; }

private:
    const std::uint8_t* p_;
    std::size_t nbytes_;
    std::size_t pos_ = 0;
};

inline std::uint64_t twos_complement(std::int64_t v, int bits) {
    const std::uint64_t mask = bits >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << bits) - 1);
    return static_cast<std::uint64_t>(v) & mask;
}

inline std::int64_t sign_extend(std::uint64_t v, int bits) {
    if (bits >= 64) return static_cast<std::int64_t>(v);
    const std::uint64_t sign = std::uint64_t{1} << (bits - 1);
    if (v & sign) v |= ~((std::uint64_t{1} << bits) - 1);
    return static_cast<std::int64_t>(v);
}

}  // namespace detail

/// Encodes the decimated samples rho^r A_r q exactly. Numerators are the
/// integer matrix rho^r A_r applied to the odd level numerators 2j + 1.
inline EncodedBlock encode(const QuantizationOutput& quant, const DecimationPlan& plan) {
    if (quant.q.size() != plan.m) throw Error("encode: sample length does not match plan");
    if (quant.r != plan.r) throw Error("encode: quantization order does not match plan");
    if (plan.m > UINT32_MAX || plan.rho > UINT32_MAX ||
        static_cast<std::uint64_t>(quant.L) > UINT32_MAX || plan.r > 255)
        throw Overflow("encode: header field out of range");

    IntMatrix scaled = sub_sample(plan.m, plan.rho);
    const IntMatrix dbar = dbar_rho(plan.m, plan.rho);
    for (int i = 0; i < plan.r; ++i) scaled = scaled * dbar;
    scaled = scaled * delta_inv_pow(plan.m, plan.r);

    std::vector<std::int64_t> odd_re(plan.m), odd_im(plan.m);
    for (std::size_t i = 0; i < plan.m; ++i) {
        odd_re[i] = 2 * quant.levels_re[i] + 1;
        odd_im[i] = 2 * quant.levels_im[i] + 1;
    }

    EncodedBlock block;
    block.m = static_cast<std::uint32_t>(plan.m);
    block.rho = static_cast<std::uint32_t>(plan.rho);
    block.L = static_cast<std::uint32_t>(quant.L);
    block.r = static_cast<std::uint8_t>(plan.r);
    block.delta = quant.delta;

    const std::int64_t n_max =
        detail::numerator_range(plan.m, static_cast<std::uint64_t>(quant.L), plan.r);
    block.bits_per_int = static_cast<std::uint8_t>(detail::width_for_range(n_max));

    block.num_re = scaled.apply(odd_re);
    block.num_im = scaled.apply(odd_im);
    for (std::size_t i = 0; i < plan.eta; ++i) {
        if (block.num_re[i] > n_max || block.num_re[i] < -n_max || block.num_im[i] > n_max ||
            block.num_im[i] < -n_max)
            throw Overflow("encode: numerator exceeds the advertised range");
    }
    return block;
}

/// Serializes a block to the wire format.
inline std::vector<std::uint8_t> to_bytes(const EncodedBlock& block) {
    std::vector<std::uint8_t> out;
    out.reserve(detail::kHeaderBytes + (block.payload_bits() + 7) / 8);
    for (char c : detail::kMagic) out.push_back(static_cast<std::uint8_t>(c));
    out.push_back(detail::kVersion);
    detail::put_u32(out, block.m);
    detail::put_u32(out, block.rho);
    detail::put_u32(out, block.L);
    out.push_back(block.r);
    out.push_back(block.bits_per_int);
    const std::uint64_t dbits = std::bit_cast<std::uint64_t>(block.delta);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(dbits >> (8 * i)));

    detail::BitWriter writer(out);
    const int b = block.bits_per_int;
    for (std::size_t i = 0; i < block.eta(); ++i) {
        writer.put(detail::twos_complement(block.num_re[i], b), b);
        writer.put(detail::twos_complement(block.num_im[i], b), b);
    }
    return out;
}

/// Parses and validates a wire-format block.
inline EncodedBlock from_bytes(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < detail::kHeaderBytes) throw Malformed("codec: header truncated");
    for (int i = 0; i < 4; ++i)
        if (bytes[static_cast<std::size_t>(i)] != static_cast<std::uint8_t>(detail::kMagic[i]))
            throw Malformed("codec: bad magic");
    if (bytes[4] != detail::kVersion) throw Malformed("codec: unsupported version");

    EncodedBlock block;
    block.m = detail::get_u32(&bytes[5]);
    block.rho = detail::get_u32(&bytes[9]);
    block.L = detail::get_u32(&bytes[13]);
    block.r = bytes[17];
    block.bits_per_int = bytes[18];
    std::uint64_t dbits = 0;
    for (int i = 0; i < 8; ++i)
        dbits |= static_cast<std::uint64_t>(bytes[19 + static_cast<std::size_t>(i)]) << (8 * i);
    block.delta = std::bit_cast<double>(dbits);

    if (block.rho == 0 || (block.m % block.rho) != 0)
        throw Malformed("codec: block size does not divide length");
    if (block.r < 1 || block.bits_per_int < 1 || block.bits_per_int > 64)
        throw Malformed("codec: invalid header field");
    if (!(block.delta > 0.0) || !std::isfinite(block.delta))
        throw Malformed("codec: invalid gap");
    if (block.L < 1) throw Malformed("codec: invalid alphabet length");

    const std::size_t payload_bytes = (block.payload_bits() + 7) / 8;
    if (bytes.size() != detail::kHeaderBytes + payload_bytes)
        throw Malformed("codec: payload length mismatch");

    const std::int64_t n_max = detail::numerator_range(block.m, block.L, block.r);
    const std::size_t eta = block.eta();
    block.num_re.resize(eta);
    block.num_im.resize(eta);
    detail::BitReader reader(bytes.data() + detail::kHeaderBytes, payload_bytes);
    const int b = block.bits_per_int;
    for (std::size_t i = 0; i < eta; ++i) {
        block.num_re[i] = detail::sign_extend(reader.get(b), b);
        block.num_im[i] = detail::sign_extend(reader.get(b), b);
        if (block.num_re[i] > n_max || block.num_re[i] < -n_max || block.num_im[i] > n_max ||
            block.num_im[i] < -n_max)
            throw RangeViolation("codec: numerator exceeds the range bound");
    }
    // Trailing pad bits must be zero.
    std::size_t bit = reader.consumed_bits();
    for (; bit < payload_bytes * 8; ++bit) {
        const std::uint8_t byte = bytes[detail::kHeaderBytes + bit / 8];
        if ((byte >> (7 - bit % 8)) & 1u) throw Malformed("codec: nonzero padding");
    }
    return block;
}

inline std::vector<cplx> decode(const EncodedBlock& block) { return block.values(); }

/// Total bit budget 2 eta r log2(2m) + 2 eta log2(2L).
inline double bit_budget(const DecimationPlan& plan, std::int64_t L) {
    const double eta = static_cast<double>(plan.eta);
    return 2.0 * eta * plan.r * std::log2(2.0 * static_cast<double>(plan.m)) +
           2.0 * eta * std::log2(2.0 * static_cast<double>(L));
}

}  // namespace adec
