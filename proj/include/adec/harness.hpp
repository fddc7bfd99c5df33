#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "adec/codec.hpp"
#include "adec/decimation.hpp"
#include "adec/errors.hpp"
#include "adec/frames.hpp"
#include "adec/linalg.hpp"
#include "adec/operators.hpp"
#include "adec/quantizer.hpp"

namespace adec {

/// Deterministic RNG: raw mt19937_64 words mapped to doubles, so streams
/// do not depend on standard-library distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * std::numbers::pi * u2);
        have_spare_ = true;
        return mag * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Uniform draw from the complex ball of the given radius in C^k.
    std::vector<cplx> complex_ball(std::size_t k, double radius) {
        std::vector<cplx> x(k);
        double norm2 = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double re = normal(), im = normal();
            x[i] = cplx{re, im};
            norm2 += re * re + im * im;
        }
        const double norm = std::sqrt(norm2);
        const double scale =
            norm > 0.0 ? radius * std::pow(uniform(), 1.0 / (2.0 * static_cast<double>(k))) / norm
                       : 0.0;
        for (cplx& z : x) z *= scale;
        return x;
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

struct SignalSource {
    std::vector<cplx> x;  // non-empty = explicit signal
    std::uint64_t seed = 1;
    double max_magnitude = 0.0;  // <= 0: derive from the stability margin
};

struct ExperimentConfig {
    std::size_t k = 1;
    std::vector<double> eigenvalues;
    CMatrix eigenvectors;  // optional; k x k unitary
    bool has_eigenvectors = false;
    std::vector<cplx> phi0;
    std::size_t eta = 6;
    std::vector<int> orders;
    std::vector<std::size_t> rhos;
    double delta = 0.25;
    std::int64_t L = 8;
    SignalSource signal;
    std::string scheme = "adapted";
    double beta = 1.5;
    std::string output = "sweep.csv";
    unsigned parallelism = 1;
};

struct ExperimentRecord {
    std::size_t k = 0, m = 0, rho = 0, eta = 0;
    int r = 0;
    std::int64_t L = 0;
    double delta = 0.0;
    std::string scheme;
    double u_inf = 0.0, err = 0.0, err_bound = 0.0;
    double lfb = 0.0, lfb_bound = 0.0, var = 0.0, var_bound = 0.0;
    double bits_actual = 0.0, bits_formula = 0.0;
    bool overloaded = false;
    std::string status = "ok";
};

struct SweepResult {
    std::vector<ExperimentRecord> records;
    std::vector<cplx> x;
    double signal_radius = 0.0;
};

// ---------------------------------------------------------------------------
// Configuration parsing
// ---------------------------------------------------------------------------

namespace detail {

inline cplx json_to_cplx(const nlohmann::json& j) {
    if (j.is_number()) return cplx{j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return cplx{j[0].get<double>(), j[1].get<double>()};
    throw ConfigError("config: complex values must be numbers or [re, im] pairs");
}

inline nlohmann::json cplx_to_json(cplx z) {
    return nlohmann::json::array({z.real(), z.imag()});
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    try {
        cfg.k = j.at("k").get<std::size_t>();
        if (cfg.k < 1) throw ConfigError("config: k must be >= 1");

        cfg.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
        if (cfg.eigenvalues.size() != cfg.k)
            throw ConfigError("config: eigenvalues must have k entries");

        if (j.contains("eigenvectors")) {
            const auto& rows = j.at("eigenvectors");
            if (!rows.is_array() || rows.size() != cfg.k)
                throw ConfigError("config: eigenvectors must be a k x k matrix");
            cfg.eigenvectors = CMatrix(cfg.k, cfg.k);
            for (std::size_t i = 0; i < cfg.k; ++i) {
                if (!rows[i].is_array() || rows[i].size() != cfg.k)
                    throw ConfigError("config: eigenvectors must be a k x k matrix");
                for (std::size_t c = 0; c < cfg.k; ++c)
                    cfg.eigenvectors(i, c) = detail::json_to_cplx(rows[i][c]);
            }
            const CMatrix gram = cfg.eigenvectors.adjoint() * cfg.eigenvectors;
            if ((gram - CMatrix::identity(cfg.k)).frobenius() >
                1e-10 * std::sqrt(static_cast<double>(cfg.k)))
                throw ConfigError("config: eigenvector matrix is not unitary");
            cfg.has_eigenvectors = true;
        }

        const auto& p0 = j.at("phi0");
        if (p0.is_string() && p0.get<std::string>() == "uniform") {
            cfg.phi0.assign(cfg.k, cplx{1.0 / std::sqrt(static_cast<double>(cfg.k)), 0.0});
        } else if (p0.is_array()) {
            for (const auto& e : p0) cfg.phi0.push_back(detail::json_to_cplx(e));
            if (cfg.phi0.size() != cfg.k) throw ConfigError("config: phi0 must have k entries");
        } else {
            throw ConfigError("config: phi0 must be \"uniform\" or a list");
        }

        cfg.eta = j.at("eta").get<std::size_t>();
        if (cfg.eta < 1) throw ConfigError("config: eta must be >= 1");
        cfg.orders = j.at("orders").get<std::vector<int>>();
        cfg.rhos = j.at("rhos").get<std::vector<std::size_t>>();

        const auto& alpha = j.at("alphabet");
        cfg.delta = alpha.at("delta").get<double>();
        cfg.L = alpha.at("L").get<std::int64_t>();
        if (!(cfg.delta > 0.0) || cfg.L < 1) throw ConfigError("config: invalid alphabet");

        if (j.contains("signal")) {
            const auto& sig = j.at("signal");
            if (sig.contains("x"))
                for (const auto& e : sig.at("x")) cfg.signal.x.push_back(detail::json_to_cplx(e));
            if (!cfg.signal.x.empty() && cfg.signal.x.size() != cfg.k)
                throw ConfigError("config: explicit signal must have k entries");
            if (sig.contains("seed")) cfg.signal.seed = sig.at("seed").get<std::uint64_t>();
            if (sig.contains("max_magnitude"))
                cfg.signal.max_magnitude = sig.at("max_magnitude").get<double>();
        }

        if (j.contains("scheme")) cfg.scheme = j.at("scheme").get<std::string>();
        if (cfg.scheme != "adapted" && cfg.scheme != "alternative" && cfg.scheme != "beta" &&
            cfg.scheme != "canonical")
            throw ConfigError("config: scheme must be adapted|alternative|beta|canonical");
        if (j.contains("beta")) cfg.beta = j.at("beta").get<double>();
        if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
        if (j.contains("parallelism")) cfg.parallelism = j.at("parallelism").get<unsigned>();
        if (cfg.parallelism < 1) cfg.parallelism = 1;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

namespace detail {

inline FrameSpec spec_for(const ExperimentConfig& cfg, std::size_t m) {
    if (cfg.has_eigenvectors) {
        FrameSpec s;
        s.k = cfg.k;
        CMatrix lam(cfg.k, cfg.k);
        for (std::size_t i = 0; i < cfg.k; ++i) lam(i, i) = cfg.eigenvalues[i];
        s.omega = cfg.eigenvectors * lam * cfg.eigenvectors.adjoint();
        s.phi0 = cfg.phi0;
        s.m = m;
        return s;
    }
    return FrameSpec::diagonal(cfg.eigenvalues, cfg.phi0, m);
}

/// Radius that keeps the greedy scheme inside its stability certificate
/// for every order in the grid (||y||_comp <= ||x||_2 for unit rows).
inline double stable_radius(const ExperimentConfig& cfg) {
    if (cfg.signal.max_magnitude > 0.0) return cfg.signal.max_magnitude;
    int rmax = 1;
    for (int r : cfg.orders) rmax = std::max(rmax, r);
    const double margin = static_cast<double>(cfg.L) * cfg.delta -
                          (std::ldexp(1.0, rmax) - 1.0) * cfg.delta / 2.0;
    if (!(margin > 0.0))
        throw ConfigError("config: alphabet too small for a stable run at the largest order");
    return 0.9 * margin;
}

inline double raw_storage_bits(std::size_t m, std::int64_t L) {
    return 2.0 * static_cast<double>(m) *
           std::ceil(std::log2(2.0 * static_cast<double>(L)));
}

inline ExperimentRecord evaluate_point(const ExperimentConfig& cfg, int r, std::size_t rho,
                                       const std::vector<cplx>& x) {
    ExperimentRecord rec;
    rec.k = cfg.k;
    rec.rho = rho;
    rec.eta = cfg.eta;
    rec.m = rho * cfg.eta;
    rec.r = r;
    rec.L = cfg.L;
    rec.delta = cfg.delta;
    rec.scheme = cfg.scheme;

    try {
        const DecimationPlan plan(r, rec.m, rho);
        const AnalysisOperator op = build_ugf(spec_for(cfg, rec.m));
        const Alphabet alphabet(cfg.delta, cfg.L);
        const std::vector<cplx> y = op.phi.apply(x);
        const QuantizationOutput quant = sigma_delta(y, r, alphabet);
        rec.overloaded = quant.overloaded;
        rec.u_inf = vec_norm_inf(quant.u);

        if (cfg.scheme == "adapted" || cfg.scheme == "alternative") {
            const DecimationOperators ops =
                cfg.scheme == "adapted" ? adapted(plan, op) : alternative(plan, op);
            const BoundReport rep = detail::make_report(x, op, plan, quant, ops);
            rec.err = rep.err;
            rec.err_bound = rep.bound;
            rec.lfb = rep.lfb;
            rec.lfb_bound = rep.lfb_bound;
            rec.var = rep.var;
            rec.var_bound = rep.var_bound;
            const EncodedBlock block = encode(quant, plan);
            rec.bits_actual = static_cast<double>(block.payload_bits());
            rec.bits_formula = bit_budget(plan, cfg.L);
        } else {
            const CMatrix v = cfg.scheme == "beta" ? beta_v_matrix(cfg.beta, rec.m, cfg.k)
                                                   : CMatrix::identity(rec.m);
            const CMatrix dual = v_dual(v, op.phi);
            const std::vector<cplx> xhat = dual.apply(quant.q);
            double err2 = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) err2 += std::norm(x[i] - xhat[i]);
            rec.err = std::sqrt(err2);
            rec.lfb = sigma_min_sq(v * op.phi);
            // No decimation: q is stored raw, and no bound is claimed.
            rec.bits_actual = raw_storage_bits(rec.m, cfg.L);
            rec.bits_formula = 2.0 * static_cast<double>(rec.m) *
                               std::log2(2.0 * static_cast<double>(cfg.L));
        }
    } catch (const Error& e) {
        rec.status = std::string("skipped: ") + e.what();
    }
    return rec;
}

inline std::string csv_escape(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n') c = ';';
    return s;
}

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

/// Runs the full (orders x rhos) grid. Hypothesis violations are recorded
/// as skipped rows, never aborting the sweep; grid points are evaluated
/// in parallel up to cfg.parallelism and merged in grid order.
inline SweepResult run_sweep(const ExperimentConfig& cfg) {
    SweepResult result;
    if (!cfg.signal.x.empty()) {
        result.x = cfg.signal.x;
        result.signal_radius = vec_norm2(result.x);
    } else {
        result.signal_radius = detail::stable_radius(cfg);
        Rng rng(cfg.signal.seed);
        result.x = rng.complex_ball(cfg.k, result.signal_radius);
    }

    struct Point {
        int r;
        std::size_t rho;
    };
    std::vector<Point> points;
    for (int r : cfg.orders)
        for (std::size_t rho : cfg.rhos) points.push_back({r, rho});

    result.records.resize(points.size());
    const unsigned workers =
        std::min<unsigned>(cfg.parallelism, std::max<std::size_t>(points.size(), 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < points.size(); ++i)
            result.records[i] = detail::evaluate_point(cfg, points[i].r, points[i].rho, result.x);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < points.size(); i = next.fetch_add(1))
                    result.records[i] =
                        detail::evaluate_point(cfg, points[i].r, points[i].rho, result.x);
            });
        for (std::thread& t : pool) t.join();
    }
    return result;
}

inline std::string to_csv(const std::vector<ExperimentRecord>& records) {
    std::string out =
        "k,m,rho,eta,r,L,delta,scheme,u_inf,err,err_bound,lfb,lfb_bound,var,var_bound,"
        "bits_actual,bits_formula,overloaded,status\n";
    for (const ExperimentRecord& r : records) {
        out += std::to_string(r.k) + ',' + std::to_string(r.m) + ',' + std::to_string(r.rho) +
               ',' + std::to_string(r.eta) + ',' + std::to_string(r.r) + ',' +
               std::to_string(r.L) + ',' + detail::fmt_double(r.delta) + ',' + r.scheme + ',' +
               detail::fmt_double(r.u_inf) + ',' + detail::fmt_double(r.err) + ',' +
               detail::fmt_double(r.err_bound) + ',' + detail::fmt_double(r.lfb) + ',' +
               detail::fmt_double(r.lfb_bound) + ',' + detail::fmt_double(r.var) + ',' +
               detail::fmt_double(r.var_bound) + ',' + detail::fmt_double(r.bits_actual) + ',' +
               detail::fmt_double(r.bits_formula) + ',' + (r.overloaded ? "1" : "0") + ',' +
               detail::csv_escape(r.status) + '\n';
    }
    return out;
}

/// Parses a CSV produced by to_csv back into records (fields needed by
/// fit_decay and the summary).
inline std::vector<ExperimentRecord> from_csv(const std::string& text) {
    std::vector<ExperimentRecord> records;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error("from_csv: empty input");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cell;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                cell.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        cell.push_back(cur);
        if (cell.size() != 19) throw Error("from_csv: malformed row");
        ExperimentRecord r;
        r.k = std::stoull(cell[0]);
        r.m = std::stoull(cell[1]);
        r.rho = std::stoull(cell[2]);
        r.eta = std::stoull(cell[3]);
        r.r = std::stoi(cell[4]);
        r.L = std::stoll(cell[5]);
        r.delta = std::stod(cell[6]);
        r.scheme = cell[7];
        r.u_inf = std::stod(cell[8]);
        r.err = std::stod(cell[9]);
        r.err_bound = std::stod(cell[10]);
        r.lfb = std::stod(cell[11]);
        r.lfb_bound = std::stod(cell[12]);
        r.var = std::stod(cell[13]);
        r.var_bound = std::stod(cell[14]);
        r.bits_actual = std::stod(cell[15]);
        r.bits_formula = std::stod(cell[16]);
        r.overloaded = cell[17] == "1";
        r.status = cell[18];
        records.push_back(std::move(r));
    }
    return records;
}

// ---------------------------------------------------------------------------
// Decay fitting
// ---------------------------------------------------------------------------

/// Least-squares slope of log2(err) against log2(rho), one slope per
/// order present in the records. Skipped and overloaded rows are ignored.
inline std::map<int, double> fit_decay(const std::vector<ExperimentRecord>& records) {
    std::map<int, std::map<std::size_t, double>> groups;  // r -> rho -> err
    for (const ExperimentRecord& rec : records) {
        if (rec.status != "ok" || rec.overloaded || !(rec.err > 0.0)) continue;
        groups[rec.r][rec.rho] = rec.err;
    }
    if (groups.empty()) throw InsufficientPoints("fit_decay: no usable rows");
    std::map<int, double> slopes;
    for (const auto& [r, pts] : groups) {
        if (pts.size() < 3)
            throw InsufficientPoints("fit_decay: need >= 3 distinct rho at order " +
                                     std::to_string(r));
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        const double n = static_cast<double>(pts.size());
        for (const auto& [rho, err] : pts) {
            const double lx = std::log2(static_cast<double>(rho));
            const double ly = std::log2(err);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
        }
        slopes[r] = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    return slopes;
}

// ---------------------------------------------------------------------------
// Verification suite
// ---------------------------------------------------------------------------

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

enum class VerifyLevel { quick, full };

struct VerifyOptions {
    VerifyLevel level = VerifyLevel::full;
    /// Debug hook: negates dbar_rho inside the twist-scale check, which
    /// must then fail (negative control).
    bool flip_dbar_sign = false;
};

struct VerifyReport {
    std::vector<CheckResult> checks;

    bool all_pass() const {
        for (const CheckResult& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

namespace detail {

inline std::vector<double> grid_eigenvalues(std::size_t k) {
    return k == 1 ? std::vector<double>{1.0} : std::vector<double>{1.0, -1.0};
}

inline std::vector<cplx> grid_phi0(std::size_t k) {
    return std::vector<cplx>(k, cplx{1.0 / std::sqrt(static_cast<double>(k)), 0.0});
}

inline AnalysisOperator grid_frame(std::size_t k, std::size_t m) {
    return build_ugf(FrameSpec::diagonal(grid_eigenvalues(k), grid_phi0(k), m));
}

inline std::int64_t binom64(std::int64_t n, std::int64_t l) {
    if (l < 0 || l > n) return 0;
    std::int64_t c = 1;
    for (std::int64_t i = 1; i <= l; ++i) c = c * (n - l + i) / i;
    return c;
}

struct LemmaResiduals {
    double c_lemma;
    double d_lemma;
};

/// Relative Frobenius residuals of the two factorization identities:
///   Delta^{-1} Phi = (Phi - 1 phi0*) C~
///   dbar_rho Phi  = Phi D~ + dbar_rho 1 phi0*
inline LemmaResiduals lemma_residuals(const AnalysisOperator& op, const DecimationPlan& plan) {
    const FrameFactors f = frame_factors(op, plan);
    const std::size_t m = op.spec.m;
    const CMatrix ones_phi0 = CMatrix::ones_column(m) * f.phi0_row;

    const CMatrix lhs_c = delta_inv(m).to_cmatrix() * op.phi;
    const CMatrix rhs_c = (op.phi - ones_phi0) * f.c_tilde;
    const CMatrix dbar = dbar_rho(m, plan.rho).to_cmatrix();
    const CMatrix lhs_d = dbar * op.phi;
    const CMatrix rhs_d = op.phi * f.d_tilde + dbar * ones_phi0;

    LemmaResiduals out;
    out.c_lemma = (lhs_c - rhs_c).frobenius() / std::max(lhs_c.frobenius(), 1e-300);
    out.d_lemma = (lhs_d - rhs_d).frobenius() / std::max(lhs_d.frobenius(), 1e-300);
    return out;
}

struct GridPoint {
    std::size_t k;
    int r;
    std::size_t eta;
    std::size_t rho;
};

/// The lemma grid: k in {1,2}, r in {1,2,3}, eta in {3rk, 6rk}, rho in {2,4,8}.
inline std::vector<GridPoint> lemma_grid() {
    std::vector<GridPoint> g;
    for (std::size_t k : {std::size_t{1}, std::size_t{2}})
        for (int r : {1, 2, 3})
            for (std::size_t scale : {std::size_t{3}, std::size_t{6}})
                for (std::size_t rho : {std::size_t{2}, std::size_t{4}, std::size_t{8}})
                    g.push_back({k, r, scale * static_cast<std::size_t>(r) * k, rho});
    return g;
}

/// The frame/variation bound grid: r in {1,2,3}, k in {1,2},
/// eta = 3rk * {1,2}, rho in {2,4,8,16}.
inline std::vector<GridPoint> bound_grid() {
    std::vector<GridPoint> g;
    for (int r : {1, 2, 3})
        for (std::size_t k : {std::size_t{1}, std::size_t{2}})
            for (std::size_t scale : {std::size_t{1}, std::size_t{2}})
                for (std::size_t rho : {std::size_t{2}, std::size_t{4}, std::size_t{8},
                                        std::size_t{16}})
                    g.push_back({k, r, 3 * static_cast<std::size_t>(r) * k * scale, rho});
    return g;
}

}  // namespace detail

/// Runs the named invariant checks of every module and reports
/// machine-readable pass/fail per check. Check failures (including
/// unexpected exceptions) become report entries; verify never throws.
inline VerifyReport verify(const VerifyOptions& options = {}) {
    VerifyReport report;
    auto add = [&report](const std::string& name, bool pass, const std::string& detail) {
        report.checks.push_back({name, pass, detail});
    };
    auto guarded = [&report](const std::string& name, const std::function<void()>& body) {
        try {
            body();
        } catch (const std::exception& e) {
            report.checks.push_back({name, false, std::string("exception: ") + e.what()});
        }
    };

    // --- integer-exact checks (quick level) -------------------------------
    guarded("twist_scale", [&] {
        bool pass = true;
        std::string note = "D_rho dbar = Delta^(eta) D_rho, exact";
        for (std::size_t rho = 1; rho <= 8 && pass; ++rho)
            for (std::size_t eta = 1; eta <= 12 && pass; ++eta) {
                const std::size_t m = rho * eta;
                IntMatrix dbar = dbar_rho(m, rho);
                if (options.flip_dbar_sign) dbar = dbar.scaled(-1);
                if (!(sub_sample(m, rho) * dbar == delta(eta) * sub_sample(m, rho))) {
                    pass = false;
                    note = "mismatch at rho=" + std::to_string(rho) +
                           " eta=" + std::to_string(eta);
                }
            }
        add("twist_scale", pass, note);
    });
    guarded("alt_vs_ada", [&] {
        bool pass = true;
        std::string note = "dbar Delta^{-1} = rho S_rho, exact";
        for (std::size_t rho = 1; rho <= 8 && pass; ++rho)
            for (std::size_t eta = 1; eta <= 12 && pass; ++eta) {
                const std::size_t m = rho * eta;
                const RatMatrix s = s_rho(m, rho);
                if (!(dbar_rho(m, rho) * delta_inv(m) == s.num) ||
                    s.den != static_cast<std::int64_t>(rho)) {
                    pass = false;
                    note = "mismatch at rho=" + std::to_string(rho) +
                           " eta=" + std::to_string(eta);
                }
            }
        add("alt_vs_ada", pass, note);
    });
    guarded("delta_pow_binomial", [&] {
        bool pass = true;
        for (std::size_t m = 1; m <= 12 && pass; ++m)
            for (int r = 0; r <= 4 && pass; ++r) {
                const IntMatrix d = delta_pow(m, r);
                for (std::size_t n = 1; n <= m && pass; ++n)
                    for (std::size_t s = 1; s <= m && pass; ++s) {
                        const std::int64_t l = static_cast<std::int64_t>(n) -
                                               static_cast<std::int64_t>(s);
                        const std::int64_t want =
                            (l < 0 || l > r) ? 0
                                             : (l % 2 == 0 ? 1 : -1) * detail::binom64(r, l);
                        if (d(n - 1, s - 1) != want) pass = false;
                    }
            }
        add("delta_pow_binomial", pass, "rows follow (-1)^l binom(r,l)");
    });
    guarded("a_seq", [&] {
        bool pass = true;
        for (int l = 0; l <= 4 && pass; ++l)
            for (std::int64_t s = 1; s <= 20 && pass; ++s)
                if (a_seq(l, s) != detail::binom64(s + l - 1, l)) pass = false;
        // And the operator form (Delta^{-j} 1)_l = a_{j,l}.
        for (int j = 0; j <= 3 && pass; ++j)
            for (std::size_t m = 1; m <= 12 && pass; ++m) {
                const IntMatrix dj = delta_inv_pow(m, j);
                std::vector<std::int64_t> ones(m, 1);
                const std::vector<std::int64_t> v = dj.apply(ones);
                for (std::size_t l = 1; l <= m; ++l)
                    if (v[l - 1] != a_seq(j, static_cast<std::int64_t>(l))) pass = false;
            }
        add("a_seq", pass, "closed form binom(s+l-1, l) and (Delta^{-j}1)_l = a_{j,l}");
    });
    guarded("recursivity", [&] {
        bool pass = true;
        for (int r : {1, 2, 3})
            for (std::size_t rho : {std::size_t{2}, std::size_t{4}})
                for (std::size_t eta : {std::size_t{6}, std::size_t{12}}) {
                    const std::size_t m = rho * eta;
                    const IntMatrix scaled = sub_sample(m, rho) * dbar_rho_pow(m, rho, r) *
                                             delta_inv_pow(m, r);
                    for (std::size_t s = 1; s <= eta; ++s)
                        for (std::size_t jj = s * rho + 1; jj <= m; ++jj)
                            if (scaled(s - 1, jj - 1) != 0) pass = false;
                }
        add("recursivity", pass, "rho^r A_r is block lower-triangular, exact");
    });

    if (options.level == VerifyLevel::quick) return report;

    // --- floating-point lemma identities ----------------------------------
    guarded("lemma_identities", [&] {
        double worst_c = 0.0, worst_d = 0.0, worst_e = 0.0;
        for (const detail::GridPoint& g : detail::lemma_grid()) {
            const std::size_t m = g.rho * g.eta;
            const AnalysisOperator op = detail::grid_frame(g.k, m);
            const DecimationPlan plan(g.r, m, g.rho);
            const detail::LemmaResiduals res = detail::lemma_residuals(op, plan);
            worst_c = std::max(worst_c, res.c_lemma);
            worst_d = std::max(worst_d, res.d_lemma);
            worst_e = std::max(worst_e, expansion_check(op, plan));
        }
        add("c_lemma", worst_c <= tol::lemma_rel, "max residual " + detail::fmt_double(worst_c));
        add("d_lemma", worst_d <= tol::lemma_rel, "max residual " + detail::fmt_double(worst_d));
        add("deci_expansion", worst_e <= tol::expansion_rel,
            "max residual " + detail::fmt_double(worst_e));
    });

    // --- spectral bounds ---------------------------------------------------
    guarded("dc_lb", [&] {
        bool pass = true;
        double worst = std::numeric_limits<double>::infinity();
        const double floor_val = 2.0 / std::numbers::pi;
        for (const detail::GridPoint& g : detail::bound_grid()) {
            const std::size_t m = g.rho * g.eta;
            const AnalysisOperator op = detail::grid_frame(g.k, m);
            const DecimationPlan plan(g.r, m, g.rho);
            const double ratio = dc_lb_min_ratio(op, plan);
            worst = std::min(worst, ratio);
            if (ratio < floor_val - 1e-10) pass = false;
            const FrameFactors f = frame_factors(op, plan);
            const CMatrix dc =
                (f.d_tilde * f.c_tilde).scaled(1.0 / static_cast<double>(plan.rho));
            if (std::sqrt(sigma_min_sq(dc)) < floor_val - 1e-10) pass = false;
        }
        add("dc_lb", pass, "min eigen-ratio " + detail::fmt_double(worst) + " vs 2/pi");
    });
    guarded("frame_and_variation_bounds", [&] {
        bool lfb_pass = true, var_pass = true;
        double lfb_worst = std::numeric_limits<double>::infinity();
        double var_worst = 0.0;
        for (const detail::GridPoint& g : detail::bound_grid()) {
            const std::size_t m = g.rho * g.eta;
            const AnalysisOperator op = detail::grid_frame(g.k, m);
            const DecimationPlan plan(g.r, m, g.rho);
            const DecimationOperators ops = adapted(plan, op);
            const double c = lower_frame_const(op);
            const double lfb = sigma_min_sq(ops.a_phi);
            const double lfb_bound = static_cast<double>(g.k) * c *
                                     std::pow(2.0 / std::numbers::pi, 2 * g.r);
            lfb_worst = std::min(lfb_worst, lfb / lfb_bound);
            if (lfb < lfb_bound - tol::bound_slack) lfb_pass = false;
            const double var =
                col_norm_sum(ops.a_phi.adjoint() * delta_pow(plan.eta, plan.r).to_cmatrix());
            const double var_bound = std::pow(2.0, 2 * g.r + 2) *
                                     std::pow(static_cast<double>(g.eta), g.r - 1);
            var_worst = std::max(var_worst, var / var_bound);
            if (var > var_bound + tol::bound_slack) var_pass = false;
        }
        add("lower_frame_bound", lfb_pass,
            "min lfb/bound ratio " + detail::fmt_double(lfb_worst));
        add("variation_bound", var_pass,
            "max var/bound ratio " + detail::fmt_double(var_worst));
    });

    // --- randomized error-bound, chain, and bit-rate checks ----------------
    guarded("randomized_runs", [&] {
        Rng rng(20240901);
        const Alphabet alphabet(0.25, 8);
        bool err_pass = true, chain_pass = true, law_pass = true, law2_pass = true;
        bool roundtrip_pass = true, budget_pass = true, ident_pass = true;
        double max_usage = 0.0;
        int runs = 0;
        for (const detail::GridPoint& g : detail::lemma_grid()) {
            const std::size_t m = g.rho * g.eta;
            const AnalysisOperator op = detail::grid_frame(g.k, m);
            const DecimationPlan plan(g.r, m, g.rho);
            const DecimationOperators ops = adapted(plan, op);
            const double radius =
                0.9 * (alphabet.range() - (std::ldexp(1.0, g.r) - 1.0) * alphabet.delta / 2.0);
            for (int trial = 0; trial < 2; ++trial, ++runs) {
                const std::vector<cplx> x = rng.complex_ball(g.k, radius);
                const std::vector<cplx> y = op.phi.apply(x);
                const QuantizationOutput quant = sigma_delta(y, g.r, alphabet);
                if (quant.overloaded) continue;
                const BoundReport rep = bound_report(x, op, plan, quant, ops);
                max_usage = std::max(max_usage, rep.err / rep.bound);
                if (rep.err > rep.bound) err_pass = false;

                // Error chain: ||x - Fq|| = rho^{-r} ||(A Phi)^dagger
                // Delta^(eta),r D_rho u||.
                std::vector<cplx> du(plan.eta);
                for (std::size_t l = 1; l <= plan.eta; ++l) du[l - 1] = quant.u[l * plan.rho - 1];
                const std::vector<cplx> dru = delta_pow(plan.eta, plan.r).to_cmatrix().apply(du);
                const std::vector<cplx> chain = pinv(ops.a_phi).apply(dru);
                const double chain_err =
                    vec_norm2(chain) / std::pow(static_cast<double>(plan.rho), plan.r);
                if (std::abs(chain_err - rep.err) > 1e-9 * std::max(1.0, rep.err))
                    chain_pass = false;

                const EncodedBlock block = encode(quant, plan);
                const EncodedBlock back = from_bytes(to_bytes(block));
                const std::vector<std::int64_t> direct_re =
                    ops.scaled.apply([&] {
                        std::vector<std::int64_t> v(plan.m);
                        for (std::size_t i = 0; i < plan.m; ++i)
                            v[i] = 2 * quant.levels_re[i] + 1;
                        return v;
                    }());
                if (back.num_re != direct_re || back.num_im != block.num_im)
                    roundtrip_pass = false;

                const double budget = bit_budget(plan, alphabet.L);
                if (static_cast<double>(block.payload_bits()) >
                    budget + 4.0 * static_cast<double>(plan.eta))
                    budget_pass = false;

                const double per = budget / (2.0 * static_cast<double>(plan.eta));
                const double lhs = std::exp2(-per);
                const double rhs = std::pow(2.0 * static_cast<double>(plan.m), -g.r) /
                                   (2.0 * static_cast<double>(alphabet.L));
                if (std::abs(lhs - rhs) > 1e-12 * rhs) ident_pass = false;

                const double c = lower_frame_const(op);
                const double kk = static_cast<double>(g.k), ee = static_cast<double>(g.eta);
                const double coeff = 8.0 * static_cast<double>(alphabet.L) / (kk * ee * c);
                const double law =
                    coeff * std::pow(2.0 * std::numbers::pi * std::numbers::pi, g.r) *
                    rep.u_inf * lhs;
                const double law2 =
                    coeff *
                    std::pow(2.0 * std::numbers::pi * std::numbers::pi * ee * ee, g.r) *
                    rep.u_inf * lhs;
                if (rep.err > law) law_pass = false;
                if (rep.err > law2) law2_pass = false;
            }
        }
        add("error_bound", err_pass,
            "max err/bound " + detail::fmt_double(max_usage) + " over " +
                std::to_string(runs) + " runs");
        add("error_chain", chain_pass, "direct error equals the decimated-u route");
        add("codec_roundtrip", roundtrip_pass, "decode(encode(q)) = rho^r A_r q, exact");
        add("codec_budget", budget_pass, "payload bits <= formula + 4 eta");
        add("bitrate_identity", ident_pass, "2^{-R/(2 eta)} = (2m)^{-r} / (2L)");
        add("bitrate_law", law_pass,
            "err <= (8L/(k eta C)) (2 pi^2)^r u_inf 2^{-R/(2 eta)}");
        add("bitrate_law_eta2", law2_pass,
            "err <= (8L/(k eta C)) (2 pi^2 eta^2)^r u_inf 2^{-R/(2 eta)}");
    });

    // --- stability property -------------------------------------------------
    guarded("stability", [&] {
        Rng rng(77);
        bool pass = true;
        for (int trial = 0; trial < 200; ++trial) {
            const int r = 1 + static_cast<int>(rng.uniform() * 3.0);
            const std::size_t m = 4 + static_cast<std::size_t>(rng.uniform() * 60.0);
            const Alphabet alphabet(0.125 + rng.uniform(), 2 + (trial % 7));
            const double margin_cap =
                alphabet.range() - (std::ldexp(1.0, r) - 1.0) * alphabet.delta / 2.0;
            if (margin_cap <= 0.0) continue;
            std::vector<cplx> y(m);
            for (cplx& z : y)
                z = cplx{(2.0 * rng.uniform() - 1.0) * margin_cap,
                         (2.0 * rng.uniform() - 1.0) * margin_cap};
            if (stability_margin(y, r, alphabet) < 0.0) continue;
            const QuantizationOutput quant = sigma_delta(y, r, alphabet);
            if (quant.overloaded) pass = false;
            for (const cplx& u : quant.u)
                if (std::abs(u.real()) > alphabet.delta / 2.0 + 1e-12 ||
                    std::abs(u.imag()) > alphabet.delta / 2.0 + 1e-12)
                    pass = false;
        }
        add("stability", pass, "margin >= 0 implies |u| <= delta/2 per component");
    });

    // --- alternative vs adapted --------------------------------------------
    guarded("alt_vs_ada_operators", [&] {
        bool eq_pass = true, diff_pass = true, bound_pass = true;
        for (std::size_t rho : {std::size_t{2}, std::size_t{4}, std::size_t{8}}) {
            const std::size_t eta = 6;
            const std::size_t m = rho * eta;
            const AnalysisOperator op = detail::grid_frame(1, m);
            const DecimationPlan p1(1, m, rho);
            const DecimationPlan p2(2, m, rho);
            const DecimationOperators ada1 = adapted(p1, op);
            const DecimationOperators alt1 = alternative(p1, op);
            if (!(ada1.scaled == alt1.scaled)) eq_pass = false;
            const DecimationOperators ada2 = adapted(p2, op);
            const DecimationOperators alt2 = alternative(p2, op);
            double max_diff = 0.0;
            for (std::size_t i = 0; i < eta; ++i)
                for (std::size_t j = 0; j < m; ++j)
                    max_diff = std::max(max_diff, std::abs(ada2.a_r(i, j) - alt2.a_r(i, j)));
            if (max_diff <= 1e-6) diff_pass = false;

            Rng rng(400 + rho);
            const Alphabet alphabet(0.25, 8);
            const std::vector<cplx> x = rng.complex_ball(1, 1.0);
            const std::vector<cplx> y = op.phi.apply(x);
            for (const DecimationOperators* ops : {&ada2, &alt2}) {
                const QuantizationOutput quant = sigma_delta(y, 2, alphabet);
                if (quant.overloaded) continue;
                const BoundReport rep = bound_report(x, op, p2, quant, *ops);
                if (rep.err > rep.bound) bound_pass = false;
            }
        }
        add("alt_equals_ada_r1", eq_pass, "operators coincide exactly at r = 1");
        add("alt_differs_ada_r2", diff_pass, "operators differ at r = 2");
        add("alt_error_bounds", bound_pass, "both schemes meet the error bound at r = 2");
    });

    // --- decay witness (reduced grid keeps verify fast) ---------------------
    guarded("decay_slope", [&] {
        bool pass = true;
        std::string detail_str;
        const Alphabet alphabet(0.25, 8);
        for (int r : {1, 2}) {
            std::vector<ExperimentRecord> records;
            Rng rng(9000 + r);
            const double radius =
                0.9 * (alphabet.range() - (std::ldexp(1.0, r) - 1.0) * alphabet.delta / 2.0);
            const std::vector<cplx> x = rng.complex_ball(1, radius);
            for (std::size_t rho : {std::size_t{2}, std::size_t{4}, std::size_t{8},
                                    std::size_t{16}}) {
                const std::size_t eta = 6;
                const std::size_t m = rho * eta;
                const AnalysisOperator op = detail::grid_frame(1, m);
                const DecimationPlan plan(r, m, rho);
                const DecimationOperators ops = adapted(plan, op);
                const std::vector<cplx> y = op.phi.apply(x);
                const QuantizationOutput quant = sigma_delta(y, r, alphabet);
                ExperimentRecord rec;
                rec.r = r;
                rec.rho = rho;
                rec.status = "ok";
                rec.overloaded = quant.overloaded;
                const BoundReport rep = bound_report(x, op, plan, quant, ops);
                rec.err = rep.err;
                records.push_back(rec);
            }
            const std::map<int, double> slopes = fit_decay(records);
            const double slope = slopes.at(r);
            detail_str += "r=" + std::to_string(r) + " slope " + detail::fmt_double(slope) + " ";
            if (slope > -(static_cast<double>(r) - 0.25)) pass = false;
        }
        add("decay_slope", pass, detail_str);
    });

    // --- duals --------------------------------------------------------------
    guarded("v_duals", [&] {
        bool pass = true;
        const AnalysisOperator op = detail::grid_frame(1, 8);
        const CMatrix fv = v_dual(beta_v_matrix(1.5, 8, 1), op.phi);
        const CMatrix id_beta = fv * op.phi;
        if ((id_beta - CMatrix::identity(1)).frobenius() > tol::dual_identity) pass = false;
        const CMatrix fc = v_dual(CMatrix::identity(8), op.phi);
        if ((fc * op.phi - CMatrix::identity(1)).frobenius() > tol::dual_identity) pass = false;
        add("v_duals", pass, "beta and canonical duals satisfy F Phi = I");
    });

    return report;
}

inline nlohmann::json verify_to_json(const VerifyReport& report) {
    nlohmann::json checks = nlohmann::json::object();
    for (const CheckResult& c : report.checks)
        checks[c.name] = nlohmann::json{{"pass", c.pass}, {"detail", c.detail}};
    return nlohmann::json{{"checks", checks}, {"all_pass", report.all_pass()}};
}

// ---------------------------------------------------------------------------
// Sweep summary and SVG
// ---------------------------------------------------------------------------

inline nlohmann::json sweep_summary(const SweepResult& result) {
    bool err_ok = true, lfb_ok = true, var_ok = true;
    double max_usage = 0.0;
    double min_slack = std::numeric_limits<double>::infinity();
    std::size_t ok_rows = 0, skipped = 0;
    for (const ExperimentRecord& r : result.records) {
        if (r.status != "ok") {
            ++skipped;
            continue;
        }
        ++ok_rows;
        if (r.overloaded) continue;
        if (r.err_bound > 0.0) {
            if (r.err > r.err_bound) err_ok = false;
            max_usage = std::max(max_usage, r.err / r.err_bound);
            min_slack = std::min(min_slack, r.err_bound - r.err);
        }
        if (r.lfb_bound > 0.0 && r.lfb < r.lfb_bound - tol::bound_slack) lfb_ok = false;
        if (r.var_bound > 0.0 && r.var > r.var_bound + tol::bound_slack) var_ok = false;
    }
    nlohmann::json slopes = nlohmann::json::object();
    std::map<int, std::set<std::size_t>> distinct;
    for (const ExperimentRecord& r : result.records)
        if (r.status == "ok" && !r.overloaded && r.err > 0.0) distinct[r.r].insert(r.rho);
    std::vector<ExperimentRecord> fitable;
    for (const ExperimentRecord& r : result.records)
        if (r.status == "ok" && distinct[r.r].size() >= 3) fitable.push_back(r);
    if (!fitable.empty())
        for (const auto& [r, slope] : fit_decay(fitable)) slopes[std::to_string(r)] = slope;

    return nlohmann::json{
        {"checks",
         {{"err_le_bound", err_ok}, {"lfb_ge_bound", lfb_ok}, {"var_le_bound", var_ok}}},
        {"slopes", slopes},
        {"max_bound_usage", max_usage},
        {"min_bound_slack", std::isfinite(min_slack) ? min_slack : 0.0},
        {"signal_radius", result.signal_radius},
        {"rows_ok", ok_rows},
        {"rows_skipped", skipped}};
}

/// Minimal static SVG: log2(err) against log2(rho), one polyline per order.
inline std::string sweep_svg(const std::vector<ExperimentRecord>& records) {
    std::map<int, std::vector<std::pair<double, double>>> series;
    for (const ExperimentRecord& r : records)
        if (r.status == "ok" && !r.overloaded && r.err > 0.0)
            series[r.r].push_back({std::log2(static_cast<double>(r.rho)), std::log2(r.err)});
    const double w = 640.0, h = 480.0, pad = 48.0;
    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    bool first = true;
    for (const auto& [r, pts] : series)
        for (const auto& [x, y] : pts) {
            if (first) {
                xmin = xmax = x;
                ymin = ymax = y;
                first = false;
            }
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmax - xmin < 1e-9) xmax = xmin + 1.0;
    if (ymax - ymin < 1e-9) ymax = ymin + 1.0;
    auto sx = [&](double x) { return pad + (x - xmin) / (xmax - xmin) * (w - 2 * pad); };
    auto sy = [&](double y) { return h - pad - (y - ymin) / (ymax - ymin) * (h - 2 * pad); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<line x1=\"" << pad << "\" y1=\"" << h - pad << "\" x2=\"" << w - pad << "\" y2=\""
        << h - pad << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\""
        << h - pad << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << w / 2 << "\" y=\"" << h - 12
        << "\" text-anchor=\"middle\" font-size=\"12\">log2 rho</text>\n";
    svg << "<text x=\"14\" y=\"" << h / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 " << h / 2
        << ")\">log2 err</text>\n";
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    std::size_t ci = 0;
    for (const auto& [r, pts] : series) {
        const char* color = colors[ci % 5];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : pts) svg << sx(x) << ',' << sy(y) << ' ';
        svg << "\"/>\n";
        for (const auto& [x, y] : pts)
            svg << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"2.5\" fill=\""
                << color << "\"/>\n";
        svg << "<text x=\"" << w - pad + 4 << "\" y=\"" << pad + 14.0 * static_cast<double>(ci)
            << "\" font-size=\"12\" fill=\"" << color << "\">r=" << r << "</text>\n";
        ++ci;
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace adec
