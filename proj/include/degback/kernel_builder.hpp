#pragma once

// Backstepping kernel k(x,y) = Σₙ ψₙ(x)φₙ(y) with ψₙ = φₙ − cₙξ̃ₙ.
//
// ξ̃ₙ solves the shifted eigen-equation (x^α ξ')' + (λₙ−λ)ξ = 0 with the same
// normalization as φₙ:
//   λₙ > λ:  ξ̃ₙ(x) = √(2κ) x^{(1−α)/2} J_ν(μₙ x^κ)/J_ν'(jₙ),  μₙ = √(λₙ−λ)/κ
//   λₙ < λ:  ξ̃ₙ(x) = √(2κ) x^{(1−α)/2} I_ν(mₙ x^κ)/J_ν'(jₙ),  mₙ = √(λ−λₙ)/κ
// Integrating (x^α ξ̃ₙ')'φ_k − ξ̃ₙ(x^α φ_k')' by parts gives
//   G[k][n] = ⟨ξ̃ₙ, φ_k⟩ = −φ_k'(1) βₙ / (λ_k − λₙ + λ),  βₙ = ξ̃ₙ(1),
// on both branches. The coefficients solve Σₙ φₙ'(1) cₙ G[k][n] = φ_k'(1).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "degback/errors.hpp"
#include "degback/spectral_basis.hpp"
#include "degback/special_functions.hpp"

namespace degback {

struct DecayConfig {
    double lambda = 5.0;
    double resonance_margin = 5e-6;

    static DecayConfig with_default_margin(double lambda) { return {lambda, 1e-6 * lambda}; }

    void validate() const {
        if (!std::isfinite(lambda) || lambda < 0.0) throw ConfigError("lambda", "must be finite and >= 0");
        if (!std::isfinite(resonance_margin) || resonance_margin < 0.0) {
            throw ConfigError("resonance_margin", "must be finite and >= 0");
        }
    }
};

/// Number of modes the resonance scan must cover for a truncation N.
inline int required_check_modes(int n_modes, double lambda) {
    return n_modes + static_cast<int>(std::ceil(std::sqrt(std::max(lambda, 0.0))));
}

enum class ResonanceKind { none, eigenvalue, difference, sum };

inline const char* to_string(ResonanceKind kind) {
    switch (kind) {
        case ResonanceKind::eigenvalue: return "lambda = lambda_n";
        case ResonanceKind::difference: return "lambda = lambda_n - lambda_k";
        case ResonanceKind::sum: return "lambda = lambda_n + lambda_k";
        default: return "none";
    }
}

struct NonResonanceReport {
    bool pass = true;
    double min_distance = std::numeric_limits<double>::infinity();
    int n = 0;
    int k = 0;  // 0 for the single-eigenvalue family
    ResonanceKind kind = ResonanceKind::none;
    double effective_margin = 0.0;
    double suggested_lambda = 0.0;  // equals lambda when pass
};

namespace detail {

/// Distances of λ to λₙ, to λₙ−λ_k (n > k) and to λₙ+λ_k (n ≥ k). The first
/// two are the zeros of the Gram denominators λ_k − λₙ + λ; the third is the
/// condition as usually stated.
inline NonResonanceReport scan_resonances(const std::vector<EigenMode>& modes, double lambda, double margin) {
    NonResonanceReport r;
    r.effective_margin = std::max(margin, 1e-12 * std::max(1.0, lambda));
    auto consider = [&](double value, int n, int k, ResonanceKind kind) {
        const double dist = std::abs(lambda - value);
        if (dist < r.min_distance) {
            r.min_distance = dist;
            r.n = n;
            r.k = k;
            r.kind = kind;
        }
    };
    for (std::size_t i = 0; i < modes.size(); ++i) {
        consider(modes[i].lambda, modes[i].n, 0, ResonanceKind::eigenvalue);
        for (std::size_t l = 0; l <= i; ++l) {
            if (l < i) consider(modes[i].lambda - modes[l].lambda, modes[i].n, modes[l].n, ResonanceKind::difference);
            consider(modes[i].lambda + modes[l].lambda, modes[i].n, modes[l].n, ResonanceKind::sum);
        }
    }
    r.pass = !(r.min_distance < r.effective_margin);
    r.suggested_lambda = lambda;
    return r;
}

}  // namespace detail

/// Non-resonance scan over `modes`. On failure the report carries the
/// offending pair and the closest admissible λ on a grid of spacing
/// 2·effective_margin.
inline NonResonanceReport check_nonresonance(const std::vector<EigenMode>& modes, const DecayConfig& config) {
    config.validate();
    NonResonanceReport r = detail::scan_resonances(modes, config.lambda, config.resonance_margin);
    if (r.pass) return r;
    const double step = 2.0 * r.effective_margin;
    for (int i = 1; i <= 1000000; ++i) {
        for (const double candidate : {config.lambda + i * step, config.lambda - i * step}) {
            if (candidate < 0.0) continue;
            if (detail::scan_resonances(modes, candidate, config.resonance_margin).pass) {
                r.suggested_lambda = candidate;
                return r;
            }
        }
    }
    r.suggested_lambda = std::numeric_limits<double>::quiet_NaN();
    return r;
}

inline std::string format_resonance_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline void require_nonresonance(const std::vector<EigenMode>& modes, const DecayConfig& config) {
    const NonResonanceReport r = check_nonresonance(modes, config);
    if (r.pass) return;
    std::string what = "resonance: " + std::string(to_string(r.kind)) + " with n=" + std::to_string(r.n);
    if (r.k) what += ", k=" + std::to_string(r.k);
    what += ", distance " + format_resonance_number(r.min_distance) + " < margin " +
            format_resonance_number(r.effective_margin) + "; try lambda = " + format_resonance_number(r.suggested_lambda);
    throw ResonanceError(what, r.n, r.k, r.min_distance, r.suggested_lambda);
}

// ---------------------------------------------------------------------------
// Per-mode quantities

inline constexpr double kTaylorEpsilonLimit = 0.5;
inline constexpr int kTaylorTerms = 30;

namespace detail {

struct ShiftedZeroSeries {
    double s;  // J_ν(j−ε)/J_ν'(j) = Σ_{m≥1} (−ε)^m c_m/m!
    double t;  // the part of s from m ≥ 3
};

/// Taylor expansion of J_ν about a zero j, normalized by J_ν'(j):
/// c_m = J^{(m)}(j)/J'(j), c₁ = 1, c₂ = −1/j.
inline ShiftedZeroSeries shifted_zero_series(BesselOrder order, double j, double eps) {
    const std::vector<double> d = bessel_j_derivatives(order, j, kTaylorTerms);
    ShiftedZeroSeries out{0.0, 0.0};
    double scale = 1.0;  // (−ε)^m / m!
    for (int m = 1; m <= kTaylorTerms; ++m) {
        scale *= -eps / m;
        const double c = m == 1 ? 1.0 : (m == 2 ? -1.0 / j : d[static_cast<std::size_t>(m)] / d[1]);
        const double term = scale * c;
        out.s += term;
        if (m >= 3) out.t += term;
        if (m >= 3 && std::abs(term) < 1e-18 * std::abs(out.s)) break;
    }
    return out;
}

}  // namespace detail

/// εₙ = jₙ − √(λₙ−λ)/κ, written as (λ/κ²)/(jₙ + √(jₙ² − λ/κ²)) to avoid
/// cancellation. Absent when λₙ < λ.
inline std::optional<double> epsilon_n(const EigenMode& mode, const DegenerateParams& params, const DecayConfig& config) {
    if (mode.lambda < config.lambda) return std::nullopt;
    const double shift = config.lambda / (params.kappa * params.kappa);
    const double j = mode.zero;
    return shift / (j + std::sqrt(std::max(j * j - shift, 0.0)));
}

/// J_ν(μₙ)/J_ν'(jₙ), or I_ν(mₙ)/J_ν'(jₙ) when λₙ < λ.
inline double boundary_ratio(const EigenMode& mode, const DegenerateParams& params, const DecayConfig& config) {
    const BesselOrder order = params.order();
    if (const auto eps = epsilon_n(mode, params, config)) {
        if (*eps < kTaylorEpsilonLimit) return detail::shifted_zero_series(order, mode.zero, *eps).s;
        return bessel_j(order, mode.zero - *eps) / mode.jprime;
    }
    const double m = std::sqrt(config.lambda - mode.lambda) / params.kappa;
    return bessel_i(order, m) / mode.jprime;
}

/// βₙ = ξ̃ₙ(1).
inline double beta(const EigenMode& mode, const DegenerateParams& params, const DecayConfig& config) {
    return std::sqrt(2.0 * params.kappa) * boundary_ratio(mode, params, config);
}

inline double xi_tilde_eval(const EigenMode& mode, const DegenerateParams& params, const DecayConfig& config, double x) {
    detail::require_unit_interval(x, "xi_tilde_eval");
    const BesselOrder order = params.order();
    const double amp = std::sqrt(2.0 * params.kappa) / mode.jprime * std::pow(x, 0.5 * (1.0 - params.alpha));
    const double xk = std::pow(x, params.kappa);
    if (const auto eps = epsilon_n(mode, params, config)) return amp * bessel_j(order, (mode.zero - *eps) * xk);
    const double m = std::sqrt(config.lambda - mode.lambda) / params.kappa;
    return amp * bessel_i(order, m * xk);
}

inline double gram_entry(const EigenMode& row, const EigenMode& col, const DegenerateParams& params,
                         const DecayConfig& config) {
    const double denom = row.lambda - col.lambda + config.lambda;
    if (denom == 0.0) {
        throw ResonanceError("gram_entry: vanishing denominator", col.n, row.n, 0.0, config.lambda);
    }
    return -row.boundary_trace * beta(col, params, config) / denom;
}

/// 1 − G[n][n]. For small εₙ this is evaluated from the Taylor remainder:
///   1 − G = −2ε/(2j−ε) + (2j/(2j−ε))·T(ε)/ε,  T(ε) = Σ_{m≥3} (−ε)^m c_m/m!
/// which has no leading-order cancellation.
inline double gram_diagonal_defect(const EigenMode& mode, const DegenerateParams& params, const DecayConfig& config) {
    if (config.lambda == 0.0) return 0.0;
    if (const auto eps = epsilon_n(mode, params, config); eps && *eps < kTaylorEpsilonLimit) {
        const double e = *eps;
        const double j = mode.zero;
        const double t = detail::shifted_zero_series(params.order(), j, e).t;
        return -2.0 * e / (2.0 * j - e) + (2.0 * j / (2.0 * j - e)) * t / e;
    }
    return 1.0 - gram_entry(mode, mode, params, config);
}

struct GramOptions {
    /// Negative-control hook: every entry uses the boundary trace of the
    /// next row, an off-by-one indexing bug. Never set outside verification.
    bool off_by_one_sabotage = false;
};

inline Eigen::MatrixXd gram_matrix(const std::vector<EigenMode>& modes, const DegenerateParams& params,
                                   const DecayConfig& config, GramOptions options = {}) {
    const auto n_modes = static_cast<Eigen::Index>(modes.size());
    if (config.lambda == 0.0) return Eigen::MatrixXd::Identity(n_modes, n_modes);
    Eigen::MatrixXd g(n_modes, n_modes);
    std::vector<double> b(modes.size());
    for (std::size_t n = 0; n < modes.size(); ++n) b[n] = beta(modes[n], params, config);
    for (Eigen::Index k = 0; k < n_modes; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        double trace = modes[uk].boundary_trace;
        if (options.off_by_one_sabotage) trace = modes[std::min(uk + 1, modes.size() - 1)].boundary_trace;
        for (Eigen::Index n = 0; n < n_modes; ++n) {
            const auto un = static_cast<std::size_t>(n);
            if (k == n && !options.off_by_one_sabotage) {
                g(k, n) = 1.0 - gram_diagonal_defect(modes[un], params, config);
                continue;
            }
            const double denom = modes[uk].lambda - modes[un].lambda + config.lambda;
            if (denom == 0.0) throw ResonanceError("gram_matrix: vanishing denominator", modes[un].n, modes[uk].n, 0.0, config.lambda);
            g(k, n) = -trace * b[un] / denom;
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Coefficient system

inline constexpr double kConditionThreshold = 1e12;

struct KernelData {
    DegenerateParams params{0.5};
    DecayConfig config;
    std::vector<EigenMode> modes;
    std::vector<std::optional<double>> eps;
    std::vector<double> beta;
    std::vector<double> diag_defect;  // 1 − G[n][n]
    std::vector<double> d;
    std::vector<double> c;     // 1 + d
    std::vector<double> psi1;  // ψₙ(1) = −cₙβₙ
    Eigen::MatrixXd gram;
    double condition_estimate = 1.0;
    double tail_norm = 0.0;  // Σ_{n>N/2} dₙ²

    int truncation() const { return static_cast<int>(modes.size()); }
};

/// Solves Σₙ φₙ'(1) dₙ G[k][n] = Σₙ φₙ'(1)(δ_kn − G[k][n]), k = 1..N, by LU
/// with partial pivoting and one step of iterative refinement.
inline KernelData solve_coefficients(const std::vector<EigenMode>& modes, const Eigen::MatrixXd& gram,
                                     const DegenerateParams& params, const DecayConfig& config) {
    const auto n_modes = static_cast<Eigen::Index>(modes.size());
    if (gram.rows() != n_modes || gram.cols() != n_modes) throw DomainError("solve_coefficients: gram size mismatch");

    KernelData out;
    out.params = params;
    out.config = config;
    out.modes = modes;
    out.gram = gram;

    Eigen::VectorXd trace(n_modes);
    for (Eigen::Index n = 0; n < n_modes; ++n) trace(n) = modes[static_cast<std::size_t>(n)].boundary_trace;

    for (const EigenMode& m : modes) {
        out.eps.push_back(epsilon_n(m, params, config));
        out.beta.push_back(config.lambda == 0.0 ? 0.0 : beta(m, params, config));
        out.diag_defect.push_back(gram_diagonal_defect(m, params, config));
    }

    Eigen::VectorXd d = Eigen::VectorXd::Zero(n_modes);
    if (config.lambda != 0.0) {
        const Eigen::MatrixXd a = gram * trace.asDiagonal();
        Eigen::VectorXd rhs(n_modes);
        for (Eigen::Index k = 0; k < n_modes; ++k) {
            double s = trace(k) * out.diag_defect[static_cast<std::size_t>(k)];
            for (Eigen::Index n = 0; n < n_modes; ++n) {
                if (n != k) s -= gram(k, n) * trace(n);
            }
            rhs(k) = s;
        }
        const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
        const double rcond = lu.rcond();
        out.condition_estimate = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
        if (!(out.condition_estimate < kConditionThreshold)) {
            throw IllConditionedError("solve_coefficients: condition estimate above threshold", out.condition_estimate);
        }
        d = lu.solve(rhs);
        d += lu.solve(rhs - a * d);
        if (!d.allFinite()) throw IllConditionedError("solve_coefficients: non-finite solution", out.condition_estimate);
    }

    for (Eigen::Index n = 0; n < n_modes; ++n) {
        const auto un = static_cast<std::size_t>(n);
        out.d.push_back(d(n));
        out.c.push_back(1.0 + d(n));
        out.psi1.push_back(-out.c[un] * out.beta[un]);
        if (2 * (n + 1) > n_modes) out.tail_norm += d(n) * d(n);
    }
    return out;
}

/// Non-resonance check on N + ceil(√λ) modes, Gram assembly and coefficient
/// solve for truncation N.
inline KernelData build_kernel(const DegenerateParams& params, const DecayConfig& config, int n_modes,
                               GramOptions options = {}) {
    config.validate();
    const auto check_modes = build_modes(params, required_check_modes(n_modes, config.lambda));
    require_nonresonance(check_modes, config);
    const std::vector<EigenMode> modes(check_modes.begin(), check_modes.begin() + n_modes);
    return solve_coefficients(modes, gram_matrix(modes, params, config, options), params, config);
}

// ---------------------------------------------------------------------------
// Kernel evaluation and norms

inline double psi_eval(const KernelData& data, int n, double x) {
    const EigenMode& m = data.modes.at(static_cast<std::size_t>(n - 1));
    return eval_phi(m, data.params, x) - data.c[static_cast<std::size_t>(n - 1)] * xi_tilde_eval(m, data.params, data.config, x);
}

inline double kernel_eval(const KernelData& data, double x, double y) {
    double s = 0.0;
    for (const EigenMode& m : data.modes) s += psi_eval(data, m.n, x) * eval_phi(m, data.params, y);
    return s;
}

/// ‖ξ̃ₙ‖² from the Lommel integrals ∫₀¹ y J_ν(μy)² dy, ∫₀¹ y I_ν(my)² dy.
inline double xi_tilde_norm_sq(const EigenMode& mode, const DegenerateParams& params, const DecayConfig& config) {
    const BesselOrder order = params.order();
    const double nu = params.nu;
    const double jp2 = mode.jprime * mode.jprime;
    if (config.lambda == 0.0) return 1.0;
    if (const auto eps = epsilon_n(mode, params, config)) {
        const double mu = mode.zero - *eps;
        const double j = bessel_j(order, mu);
        const double jp = bessel_j_prime(order, mu);
        return ((1.0 - nu * nu / (mu * mu)) * j * j + jp * jp) / jp2;
    }
    const double m = std::sqrt(config.lambda - mode.lambda) / params.kappa;
    const double i = bessel_i(order, m);
    const double ip = bessel_i_prime(order, m);
    return ((1.0 + nu * nu / (m * m)) * i * i - ip * ip) / jp2;
}

/// ‖φₙ − ξ̃ₙ‖² = 1 − 2G[n][n] + ‖ξ̃ₙ‖².
inline double phi_minus_xi_norm_sq(const KernelData& data, int n) {
    const auto un = static_cast<std::size_t>(n - 1);
    const double xi2 = xi_tilde_norm_sq(data.modes[un], data.params, data.config);
    return 2.0 * data.diag_defect[un] - 1.0 + xi2;
}

/// ‖ψₙ‖² with ψₙ = (φₙ − ξ̃ₙ) − dₙξ̃ₙ.
inline double psi_norm_sq(const KernelData& data, int n) {
    const auto un = static_cast<std::size_t>(n - 1);
    const double xi2 = xi_tilde_norm_sq(data.modes[un], data.params, data.config);
    const double diff2 = 2.0 * data.diag_defect[un] - 1.0 + xi2;
    const double cross = (1.0 - data.diag_defect[un]) - xi2;  // ⟨φₙ − ξ̃ₙ, ξ̃ₙ⟩
    const double dn = data.d[un];
    return diff2 - 2.0 * dn * cross + dn * dn * xi2;
}

/// ‖k‖²_{L²((0,1)²)} = Σₙ ‖ψₙ‖².
inline double kernel_norm_sq(const KernelData& data) {
    double s = 0.0;
    for (int n = 1; n <= data.truncation(); ++n) s += psi_norm_sq(data, n);
    return s;
}

/// Truncation indicator ‖ψ_N‖·‖φ_N‖ = ‖ψ_N‖.
inline double truncation_indicator(const KernelData& data) {
    return std::sqrt(std::max(psi_norm_sq(data, data.truncation()), 0.0));
}

}  // namespace degback
