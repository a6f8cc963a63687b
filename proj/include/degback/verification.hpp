#pragma once

// Property battery run by `degback verify`. Every gate compares one measured
// quantity with a pinned threshold; `anchor` names the identity or estimate
// the gate certifies.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "degback/closed_loop_sim.hpp"
#include "degback/fredholm_transform.hpp"
#include "degback/io.hpp"
#include "degback/kernel_builder.hpp"
#include "degback/quadrature.hpp"
#include "degback/spectral_basis.hpp"
#include "degback/special_functions.hpp"

namespace degback {

struct Gate {
    std::string name;
    std::string anchor;
    bool passed = false;
    bool applicable = true;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

/// max over n ∈ (N/2, N] of `values` divided by max over n ∈ [N/4, N/2]
/// (1-based n). A ratio near one means n ↦ values[n] has levelled off.
inline double tail_growth_ratio(const std::vector<double>& values) {
    const std::size_t n = values.size();
    double head = 0.0;
    double tail = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        const double v = std::abs(values[i - 1]);
        if (4 * i >= n && 2 * i <= n) head = std::max(head, v);
        if (2 * i > n) tail = std::max(tail, v);
    }
    return head > 0.0 ? tail / head : (tail > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
}

/// min over n ∈ [N/4, N] divided by max over the same range.
inline double profile_floor_ratio(const std::vector<double>& values) {
    const std::size_t n = values.size();
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        if (4 * i < n) continue;
        lo = std::min(lo, std::abs(values[i - 1]));
        hi = std::max(hi, std::abs(values[i - 1]));
    }
    return hi > 0.0 ? lo / hi : 0.0;
}

inline constexpr double kHalfOrderTol = 1e-10;
inline constexpr double kOdeResidualTol = 1e-9;
inline constexpr double kZeroResidualTol = 1e-12;
inline constexpr double kOrthonormalityTol = 1e-8;
inline constexpr double kLiftingTol = 1e-8;
inline constexpr double kGramOracleTol = 1e-8;
inline constexpr double kProfileGrowthTol = 1.05;
inline constexpr double kProfileFloorTol = 0.25;
inline constexpr double kTbTol = 1e-8;
inline constexpr double kOperatorIdentityTol = 1e-6;
inline constexpr double kSpectrumTol = 1e-3;
inline constexpr double kRateFraction = 0.95;
inline constexpr double kConstantSlack = 1.1;
inline constexpr double kConjugacyTol = 1e-4;

struct VerifyOptions {
    double alpha = 0.5;
    double lambda = 5.0;
    double resonance_margin = 5e-6;
    int n_modes = 64;
    SimConfig sim;
    std::uint64_t seed = 20240611;
    bool sabotage_gram = false;
};

struct VerifyReport {
    std::vector<Gate> gates;
    nlohmann::json diagnostics = nlohmann::json::object();

    bool all_passed() const {
        for (const auto& g : gates) {
            if (!g.passed) return false;
        }
        return true;
    }

    std::vector<std::string> failed() const {
        std::vector<std::string> out;
        for (const auto& g : gates) {
            if (!g.passed) out.push_back(g.name);
        }
        return out;
    }
};

namespace detail {

inline Gate max_gate(std::string name, std::string anchor, double value, double threshold, std::string detail = {}) {
    return {std::move(name), std::move(anchor), value <= threshold, true, value, threshold, std::move(detail)};
}

inline Gate skipped_gate(std::string name, std::string anchor, std::string why) {
    return {std::move(name), std::move(anchor), true, false, 0.0, 0.0, std::move(why)};
}

inline Gate not_run_gate(std::string name, std::string anchor, std::string why) {
    return {std::move(name), std::move(anchor), false, false, 0.0, 0.0, std::move(why)};
}

}  // namespace detail

inline double half_order_closed_form_error() {
    const BesselOrder half(0.5);
    double err = 0.0;
    for (int i = 0; i <= 490; ++i) {
        const double x = 0.1 + 0.1 * i;
        const double pref = std::sqrt(2.0 / (std::numbers::pi * x));
        err = std::max(err, std::abs(bessel_j(half, x) - pref * std::sin(x)));
        err = std::max(err, std::abs(bessel_i(half, x) - pref * std::sinh(x)) / (pref * std::sinh(x)));
    }
    return err;
}

namespace detail {

/// J_ν'' by term-wise differentiation of the power series (x ≤ 2).
inline double series_second_derivative(double nu, double x) {
    double s = 0.0;
    for (int m = 0; m < 40; ++m) {
        const double p = 2.0 * m + nu;
        s += (m % 2 ? -1.0 : 1.0) * p * (p - 1.0) * std::exp(p * std::log(0.5 * x) - std::lgamma(m + 1.0) - std::lgamma(m + nu + 1.0));
    }
    return s / (x * x);
}

}  // namespace detail

/// max |x²J'' + xJ' + (x²−ν²)J| / (1+x²) over random ν ∈ (0, 1/2], x ∈ [0.1, 50].
/// J'' comes from the differentiated series for x ≤ 2 and from a five-point
/// stencil beyond, so the residual does not reduce to the ODE identity.
inline double bessel_ode_residual(std::uint64_t seed, int points) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < points; ++i) {
        const BesselOrder order(0.5 * (1.0 - unit(rng)));
        const double x = 0.1 + 49.9 * unit(rng);
        const double v = order.value();
        const double j0 = bessel_j(order, x);
        double j2 = 0.0;
        if (x <= 2.0) {
            j2 = detail::series_second_derivative(v, x);
        } else {
            const double h = 0.01;
            j2 = (-bessel_j(order, x + 2 * h) + 16 * bessel_j(order, x + h) - 30 * j0 + 16 * bessel_j(order, x - h) -
                  bessel_j(order, x - 2 * h)) /
                 (12 * h * h);
        }
        const double res = x * x * j2 + x * bessel_j_prime(order, x) + (x * x - v * v) * j0;
        worst = std::max(worst, std::abs(res) / (1.0 + x * x));
    }
    return worst;
}

inline VerifyReport run_verification(const VerifyOptions& opt) {
    VerifyReport rep;
    const DegenerateParams params(opt.alpha);
    const DecayConfig decay{opt.lambda, opt.resonance_margin};
    const int n_modes = opt.n_modes;
    const BesselOrder order = params.order();

    rep.gates.push_back(detail::max_gate("bessel_half_order_closed_form", "J and I of order 1/2 against sin and sinh",
                                         half_order_closed_form_error(), kHalfOrderTol));
    rep.gates.push_back(detail::max_gate("bessel_ode_residual", "Bessel differential equation on random (nu, x)",
                                         bessel_ode_residual(opt.seed, 1000), kOdeResidualTol));

    {
        const int count = std::max(200, required_check_modes(n_modes, opt.lambda));
        double worst = 0.0;
        bool ordered = true;
        double prev = 0.0;
        for (const auto& z : bessel_zeros(order, count)) {
            worst = std::max(worst, std::abs(bessel_j(order, z.value)));
            ordered = ordered && z.value > prev;
            prev = z.value;
        }
        Gate g = detail::max_gate("bessel_zeros", "zeros of J_nu refined from the McMahon expansion", worst, kZeroResidualTol,
                                  ordered ? "strictly increasing" : "ordering violated");
        g.passed = g.passed && ordered;
        rep.gates.push_back(g);
    }

    const int n_check = required_check_modes(n_modes, opt.lambda);
    const std::vector<EigenMode> check_modes = build_modes(params, n_check);
    const std::vector<EigenMode> modes(check_modes.begin(), check_modes.begin() + n_modes);

    {
        const int m = std::min(n_modes, 32);
        std::vector<RealFunction> phis;
        for (int i = 0; i < m; ++i) {
            const EigenMode mode = modes[static_cast<std::size_t>(i)];
            phis.push_back([mode, params](double x) { return eval_phi(mode, params, x); });
        }
        const auto q = gram_by_quadrature(phis, phis, params.kappa, 1e-12);
        double worst = 0.0;
        for (int k = 0; k < m; ++k) {
            for (int n = 0; n < m; ++n) worst = std::max(worst, std::abs(q[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)] - (k == n ? 1.0 : 0.0)));
        }
        rep.gates.push_back(detail::max_gate("eigenbasis_orthonormality", "orthonormality of the eigenfunctions phi_n",
                                             worst, kOrthonormalityTol));

        const std::vector<RealFunction> lift{[a = params.alpha](double x) { return std::pow(x, 1.0 - a); }};
        const auto b = gram_by_quadrature(lift, phis, params.kappa, 1e-12);
        double worst_b = 0.0;
        for (int n = 0; n < m; ++n) {
            worst_b = std::max(worst_b, std::abs(b[0][static_cast<std::size_t>(n)] - lifting_coefficient(modes[static_cast<std::size_t>(n)])));
        }
        rep.gates.push_back(detail::max_gate("lifting_coefficients", "b_n = -phi_n'(1)/lambda_n for b(x) = x^(1-alpha)",
                                             worst_b, kLiftingTol));
    }

    const NonResonanceReport nr = check_nonresonance(check_modes, decay);
    {
        Gate g;
        g.name = "nonresonance";
        g.anchor = "lambda avoids lambda_n, lambda_n - lambda_k and lambda_n + lambda_k";
        g.passed = nr.pass;
        g.value = nr.min_distance;
        g.threshold = nr.effective_margin;
        if (!nr.pass) {
            g.detail = std::string(to_string(nr.kind)) + " at n=" + std::to_string(nr.n) + ", k=" + std::to_string(nr.k) +
                       "; suggested lambda " + format_resonance_number(nr.suggested_lambda);
        }
        rep.gates.push_back(g);
    }

    const char* kernel_gates[][2] = {
        {"gram_oracle", "closed-form Gram entries against quadrature"},
        {"diagonal_defect_decay", "n^2 |1 - G_nn| bounded"},
        {"boundary_value_decay", "n |beta_n| bounded, n^(3/2) |J_nu(mu_n)| bounded above and below"},
        {"quadratic_closeness", "n^2 ||phi_n - xi_n||^2 bounded"},
        {"epsilon_asymptotics", "n^2 |2 j_n kappa^2 eps_n / lambda - 1| bounded"},
        {"tb_identity", "sum_n <psi_n, phi_k> phi_n'(1) = 0 for k <= N"},
        {"operator_identity", "T (A + BK) = (A - lambda I) T on the leading half block"},
        {"spectrum_shift", "eigenvalues of the closed loop equal -(lambda_k + lambda)"},
        {"transform_invertibility", "sigma_min(T) > 0 and T T^-1 = I"},
        {"closed_loop_decay", "fitted rate >= 0.95 (lambda_1 + lambda)"},
        {"decay_constant", "C(lambda) <= 1.1 cond(T)"},
        {"conjugacy", "T u(t) = v(t) along trajectories"},
    };
    if (!nr.pass) {
        for (const auto& kg : kernel_gates) rep.gates.push_back(detail::not_run_gate(kg[0], kg[1], "not run: resonance"));
        return rep;
    }

    const Eigen::MatrixXd gram = gram_matrix(modes, params, decay, GramOptions{opt.sabotage_gram});
    {
        const int m = std::min(n_modes, 16);
        std::vector<RealFunction> phis;
        std::vector<RealFunction> xis;
        for (int i = 0; i < m; ++i) {
            const EigenMode mode = modes[static_cast<std::size_t>(i)];
            phis.push_back([mode, params](double x) { return eval_phi(mode, params, x); });
            xis.push_back([mode, params, decay](double x) { return xi_tilde_eval(mode, params, decay, x); });
        }
        const auto q = gram_by_quadrature(phis, xis, params.kappa, 1e-12);
        double worst = 0.0;
        for (int k = 0; k < m; ++k) {
            for (int n = 0; n < m; ++n) worst = std::max(worst, std::abs(q[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)] - gram(k, n)));
        }
        rep.gates.push_back(detail::max_gate(kernel_gates[0][0], kernel_gates[0][1], worst, kGramOracleTol));
    }

    const KernelData kd = solve_coefficients(modes, gram, params, decay);
    if (opt.lambda == 0.0) {
        for (int i = 1; i <= 4; ++i) {
            rep.gates.push_back(detail::skipped_gate(kernel_gates[i][0], kernel_gates[i][1], "not applicable at lambda = 0"));
        }
    } else {
        std::vector<double> defect, nbeta, close, jmu, epsr;
        for (int n = 1; n <= n_modes; ++n) {
            const auto un = static_cast<std::size_t>(n - 1);
            const EigenMode& m = modes[un];
            defect.push_back(double(n) * n * kd.diag_defect[un]);
            nbeta.push_back(n * kd.beta[un]);
            close.push_back(double(n) * n * phi_minus_xi_norm_sq(kd, n));
            jmu.push_back(std::pow(n, 1.5) * boundary_ratio(m, params, decay) * m.jprime);
            const auto e = kd.eps[un];
            epsr.push_back(e ? double(n) * n * (*e * 2.0 * m.zero * params.kappa * params.kappa / opt.lambda - 1.0) : 0.0);
        }
        rep.gates.push_back(detail::max_gate(kernel_gates[1][0], kernel_gates[1][1], tail_growth_ratio(defect), kProfileGrowthTol,
                                             "ratio of sup over (N/2,N] to sup over [N/4,N/2]"));
        {
            const double growth = std::max(tail_growth_ratio(nbeta), tail_growth_ratio(jmu));
            const double floor = profile_floor_ratio(jmu);
            Gate g = detail::max_gate(kernel_gates[2][0], kernel_gates[2][1], growth, kProfileGrowthTol,
                                      "floor ratio of n^(3/2)|J_nu(mu_n)| = " + format_double(floor));
            g.passed = g.passed && floor >= kProfileFloorTol;
            rep.gates.push_back(g);
        }
        rep.gates.push_back(detail::max_gate(kernel_gates[3][0], kernel_gates[3][1], tail_growth_ratio(close), kProfileGrowthTol));
        rep.gates.push_back(detail::max_gate(kernel_gates[4][0], kernel_gates[4][1], tail_growth_ratio(epsr), kProfileGrowthTol));
    }

    const TransformSystem sys = assemble(kd);
    rep.gates.push_back(detail::max_gate(kernel_gates[5][0], kernel_gates[5][1], tb_residual(sys).cwiseAbs().maxCoeff(), kTbTol));
    rep.gates.push_back(detail::max_gate(kernel_gates[6][0], kernel_gates[6][1], operator_identity_residual(sys), kOperatorIdentityTol));
    const auto spectrum = closed_loop_spectrum(sys);
    rep.gates.push_back(detail::max_gate(kernel_gates[7][0], kernel_gates[7][1], spectrum_match_error(sys, spectrum), kSpectrumTol));
    {
        const double inv_err =
            (sys.T * sys.T_inv - Eigen::MatrixXd::Identity(n_modes, n_modes)).cwiseAbs().maxCoeff();
        Gate g = detail::max_gate(kernel_gates[8][0], kernel_gates[8][1], inv_err, 1e-10 * n_modes,
                                  "sigma_min = " + format_double(sys.sigma_min));
        g.passed = g.passed && sys.sigma_min > 0.0;
        rep.gates.push_back(g);
    }

    const ConjugacyReport conj = conjugate_check(sys, default_initial_condition(n_modes), opt.sim);
    const double target_rate = sys.lambdas(0) + opt.lambda;
    {
        Gate g;
        g.name = kernel_gates[9][0];
        g.anchor = kernel_gates[9][1];
        g.value = conj.closed_loop.fitted_rate;
        g.threshold = kRateFraction * target_rate;
        g.passed = g.value >= g.threshold;
        g.detail = "lambda_1 + lambda = " + format_double(target_rate);
        rep.gates.push_back(g);
    }
    rep.gates.push_back(detail::max_gate(kernel_gates[10][0], kernel_gates[10][1], conj.closed_loop.C_estimate,
                                         kConstantSlack * sys.condition_number()));
    rep.gates.push_back(detail::max_gate(kernel_gates[11][0], kernel_gates[11][1], conj.max_deviation, kConjugacyTol));

    // Reported, not gated: the finite-section coefficients converge at O(1/N)
    // with a boundary layer near n = N, so neither quantity meets a fixed
    // tolerance at desk-scale truncations.
    {
        double head = 0.0;
        for (int n = 0; n < n_modes / 2; ++n) head += kd.d[static_cast<std::size_t>(n)] * kd.d[static_cast<std::size_t>(n)];
        rep.diagnostics["d_tail_ratio"] = json_number(head > 0.0 ? kd.tail_norm / head : 0.0);
        if (opt.lambda > 0.0) {
            const KernelData fine = build_kernel(params, decay, 2 * n_modes);
            double change = 0.0;
            for (int n = 0; n < n_modes / 2; ++n) {
                change = std::max(change, std::abs(fine.d[static_cast<std::size_t>(n)] - kd.d[static_cast<std::size_t>(n)]));
            }
            rep.diagnostics["d_refinement_change"] = json_number(change);
        }
        rep.diagnostics["condition_estimate"] = json_number(kd.condition_estimate);
        rep.diagnostics["kernel_l2_norm_sq"] = json_number(kernel_norm_sq(kd));
        rep.diagnostics["sigma_min"] = json_number(sys.sigma_min);
        rep.diagnostics["sigma_max"] = json_number(sys.sigma_max);
        rep.diagnostics["sigma_min_tilde"] = json_number(sys.sigma_min_tilde);
        rep.diagnostics["frobenius_C"] = json_number(frobenius_norm_C(sys));
    }
    return rep;
}

inline nlohmann::json to_json(const VerifyReport& rep) {
    nlohmann::json gates = nlohmann::json::array();
    for (const auto& g : rep.gates) {
        gates.push_back({{"name", g.name},
                         {"anchor", g.anchor},
                         {"passed", g.passed},
                         {"applicable", g.applicable},
                         {"value", json_number(g.value)},
                         {"threshold", json_number(g.threshold)},
                         {"detail", g.detail}});
    }
    return {{"all_passed", rep.all_passed()}, {"failed", rep.failed()}, {"gates", gates}, {"diagnostics", rep.diagnostics}};
}

inline std::string to_text(const VerifyReport& rep) {
    std::string out;
    for (const auto& g : rep.gates) {
        out += g.passed ? "PASS  " : "FAIL  ";
        out += g.name + "  [" + g.anchor + "]";
        if (g.applicable) out += "  value=" + format_double(g.value) + " threshold=" + format_double(g.threshold);
        if (!g.detail.empty()) out += "  (" + g.detail + ")";
        out += '\n';
    }
    out += rep.all_passed() ? "all gates passed\n" : "failed gates:";
    if (!rep.all_passed()) {
        for (const auto& name : rep.failed()) out += " " + name;
        out += '\n';
    }
    return out;
}

}  // namespace degback
