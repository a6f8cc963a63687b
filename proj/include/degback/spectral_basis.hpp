#pragma once

// Eigenpairs of A u = (x^α u_x)_x on (0,1) with u(0) = u(1) = 0:
//   φₙ(x) = √(2κ)/J_ν'(jₙ) · x^{(1−α)/2} J_ν(jₙ x^κ),   λₙ = (κ jₙ)²,
// where ν = (1−α)/(2−α), κ = (2−α)/2 and jₙ is the n-th zero of J_ν.

#include <cmath>
#include <string>
#include <vector>

#include "degback/errors.hpp"
#include "degback/quadrature.hpp"
#include "degback/special_functions.hpp"

namespace degback {

struct DegenerateParams {
    explicit DegenerateParams(double alpha_) : alpha(alpha_) {
        if (!std::isfinite(alpha_) || alpha_ < 0.0 || alpha_ >= 1.0) {
            throw DomainError("alpha must lie in [0, 1), got " + std::to_string(alpha_));
        }
        nu = (1.0 - alpha) / (2.0 - alpha);
        kappa = (2.0 - alpha) / 2.0;
    }

    BesselOrder order() const { return BesselOrder(nu); }

    double alpha;
    double nu;
    double kappa;
};

struct EigenMode {
    int n;
    double zero;            // j_{ν,n}
    double lambda;          // (κ j)²
    double jprime;          // J_ν'(j), signed
    double boundary_trace;  // φₙ'(1) = √(2κ) κ j
};

inline std::vector<EigenMode> build_modes(const DegenerateParams& params, int count) {
    if (count < 1) throw DomainError("build_modes requires N >= 1");
    const BesselOrder order = params.order();
    const double k = params.kappa;
    std::vector<EigenMode> modes;
    modes.reserve(static_cast<std::size_t>(count));
    for (const BesselZero& z : bessel_zeros(order, count)) {
        const double j = z.value;
        modes.push_back({z.index, j, k * k * j * j, bessel_j_prime(order, j), std::sqrt(2.0 * k) * k * j});
    }
    return modes;
}

namespace detail {
inline void require_unit_interval(double x, const char* what) {
    if (!(x > 0.0 && x <= 1.0)) throw DomainError(std::string(what) + " requires x in (0, 1]");
}
}  // namespace detail

inline double eval_phi(const EigenMode& mode, const DegenerateParams& params, double x) {
    detail::require_unit_interval(x, "eval_phi");
    const double amp = std::sqrt(2.0 * params.kappa) / mode.jprime;
    return amp * std::pow(x, 0.5 * (1.0 - params.alpha)) * bessel_j(params.order(), mode.zero * std::pow(x, params.kappa));
}

inline double eval_phi_prime(const EigenMode& mode, const DegenerateParams& params, double x) {
    detail::require_unit_interval(x, "eval_phi_prime");
    const double a = 0.5 * (1.0 - params.alpha);
    const double k = params.kappa;
    const double arg = mode.zero * std::pow(x, k);
    const BesselOrder order = params.order();
    const double amp = std::sqrt(2.0 * k) / mode.jprime;
    return amp * (a * std::pow(x, a - 1.0) * bessel_j(order, arg) +
                  std::pow(x, a) * bessel_j_prime(order, arg) * mode.zero * k * std::pow(x, k - 1.0));
}

/// bₙ = ⟨x^{1−α}, φₙ⟩. Since (x^α φₙ')' = −λₙφₙ and (x^α b')' = 0, two
/// integrations by parts leave only the boundary term: bₙ = −φₙ'(1)/λₙ.
inline double lifting_coefficient(const EigenMode& mode) { return -mode.boundary_trace / mode.lambda; }

struct HardyPoincare {
    double lhs;  // ∫ f²
    double rhs;  // 4/(1−α)² ∫ x^α f'²
};

/// Both sides of the Hardy–Poincaré inequality for f with f(0) = f(1) = 0.
template <class F, class Fp>
HardyPoincare hardy_poincare_check(F&& f, Fp&& fprime, const DegenerateParams& params, double tol = 1e-10) {
    const double a = params.alpha;
    const double lhs = integrate_unit([&](double x) { return f(x) * f(x); }, params.kappa, tol);
    const double energy = integrate_unit(
        [&](double x) {
            const double d = fprime(x);
            return std::pow(x, a) * d * d;
        },
        params.kappa, tol);
    return {lhs, 4.0 / ((1.0 - a) * (1.0 - a)) * energy};
}

/// Modal coefficients ⟨f, φₙ⟩ by quadrature.
template <class F>
std::vector<double> project_onto_modes(F&& f, const std::vector<EigenMode>& modes, const DegenerateParams& params,
                                       double tol = 1e-10) {
    std::vector<double> coeffs;
    coeffs.reserve(modes.size());
    for (const EigenMode& m : modes) {
        coeffs.push_back(inner_product_quadrature(f, [&](double x) { return eval_phi(m, params, x); }, params.kappa, tol));
    }
    return coeffs;
}

}  // namespace degback
