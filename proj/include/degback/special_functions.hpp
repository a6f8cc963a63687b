#pragma once

// Bessel functions of the first kind J_ν, modified Bessel functions I_ν and
// the positive zeros j_{ν,n}, for real fractional order 0 < ν ≤ 1/2.
//
// Evaluation regimes for J_ν (all in IEEE double):
//   x ≤ 2        power series
//   2 < x < 25   Miller backward recurrence, normalized by the Neumann sum
//                (x/2)^ν = Σ_k (ν+2k) Γ(ν+k)/k! · J_{ν+2k}(x)
//   x ≥ 25       Hankel asymptotic expansion (P, Q series)
// Every regime also yields J_{ν+1}, from which J_ν' = (ν/x)J_ν − J_{ν+1}.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "degback/errors.hpp"

namespace degback {

/// Order ν of a Bessel function, restricted to 0 < ν ≤ 1/2.
class BesselOrder {
public:
    explicit BesselOrder(double nu) : nu_(nu) {
        if (!std::isfinite(nu) || nu <= 0.0 || nu > 0.5) {
            throw DomainError("Bessel order must satisfy 0 < nu <= 1/2, got " + std::to_string(nu));
        }
    }
    double value() const noexcept { return nu_; }

private:
    double nu_;
};

struct BesselZero {
    BesselOrder order;
    int index;
    double value;
};

namespace detail {

inline constexpr double kSeriesLimit = 2.0;
inline constexpr double kAsymptoticLimit = 25.0;

/// J_μ(x) and J_{μ+1}(x).
struct BesselPair {
    double j;
    double j_next;
};

/// I_μ(x) and I_{μ+1}(x).
struct ModifiedPair {
    double i;
    double i_next;
};

inline BesselPair j_series(double nu, double x) {
    if (x == 0.0) return {0.0, 0.0};
    const double half = 0.5 * x;
    const double q = half * half;
    double term = std::exp(nu * std::log(half) - std::lgamma(nu + 1.0));
    double term1 = term * half / (nu + 1.0);
    double sum = term;
    double sum1 = term1;
    for (int m = 0; m < 200; ++m) {
        term *= -q / ((m + 1.0) * (m + 1.0 + nu));
        term1 *= -q / ((m + 1.0) * (m + 2.0 + nu));
        sum += term;
        sum1 += term1;
        if (m > q && std::abs(term) <= 1e-17 * std::abs(sum) && std::abs(term1) <= 1e-17 * std::abs(sum1)) break;
    }
    return {sum, sum1};
}

inline BesselPair j_miller(double nu, double x) {
    if (x <= 0.0) throw DomainError("j_miller requires x > 0");
    const int start = static_cast<int>(x) + 40;

    // g_i = Γ(ν+i)/i!
    std::vector<double> g(static_cast<std::size_t>(start / 2 + 2));
    g[0] = std::tgamma(nu);
    for (std::size_t i = 0; i + 1 < g.size(); ++i) g[i + 1] = g[i] * (nu + static_cast<double>(i)) / (i + 1.0);

    double f_above = 0.0;  // f_{k+1}
    double f = 1e-30;      // f_k
    double norm = (start % 2 == 0) ? (nu + start) * g[static_cast<std::size_t>(start / 2)] * f : 0.0;
    double f1 = 0.0;
    for (int k = start; k >= 1; --k) {
        const double f_below = 2.0 * (nu + k) / x * f - f_above;
        f_above = f;
        f = f_below;
        const int idx = k - 1;
        if (idx == 1) f1 = f;
        if (idx % 2 == 0) norm += (nu + idx) * g[static_cast<std::size_t>(idx / 2)] * f;
        if (std::abs(f) > 1e250) {
            f *= 1e-250;
            f_above *= 1e-250;
            norm *= 1e-250;
            f1 *= 1e-250;
        }
    }
    const double scale = std::exp(nu * std::log(0.5 * x)) / norm;
    return {f * scale, f1 * scale};
}

inline BesselPair j_hankel(double nu, double x) {
    auto eval = [x](double mu) {
        const double four_mu2 = 4.0 * mu * mu;
        double p = 1.0;
        double q = 0.0;
        double a = 1.0;
        double prev = std::numeric_limits<double>::infinity();
        for (int k = 1; k < 80; ++k) {
            const double odd = 2.0 * k - 1.0;
            a *= (four_mu2 - odd * odd) / (8.0 * k * x);
            const double mag = std::abs(a);
            if (mag > prev) break;  // asymptotic series started to diverge
            prev = mag;
            const double sign = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
            if (k % 2 == 0) {
                p += sign * a;
            } else {
                q += sign * a;
            }
            if (mag < 1e-18) break;
        }
        // cos/sin of χ = x − (μ/2 + 1/4)π expanded so that x enters exactly
        const double phase = (0.5 * mu + 0.25) * std::numbers::pi;
        const double cx = std::cos(x);
        const double sx = std::sin(x);
        const double cp = std::cos(phase);
        const double sp = std::sin(phase);
        const double cos_chi = cx * cp + sx * sp;
        const double sin_chi = sx * cp - cx * sp;
        return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * cos_chi - q * sin_chi);
    };
    return {eval(nu), eval(nu + 1.0)};
}

inline BesselPair j_pair(double nu, double x) {
    if (!(x >= 0.0)) throw DomainError("Bessel J requires x >= 0");
    if (x <= kSeriesLimit) return j_series(nu, x);
    if (x < kAsymptoticLimit) return j_miller(nu, x);
    return j_hankel(nu, x);
}

inline ModifiedPair i_series(double nu, double x) {
    if (x == 0.0) return {0.0, 0.0};
    const double half = 0.5 * x;
    const double q = half * half;
    double term = std::exp(nu * std::log(half) - std::lgamma(nu + 1.0));
    double term1 = term * half / (nu + 1.0);
    double sum = term;
    double sum1 = term1;
    for (int m = 0; m < 1000; ++m) {
        term *= q / ((m + 1.0) * (m + 1.0 + nu));
        term1 *= q / ((m + 1.0) * (m + 2.0 + nu));
        sum += term;
        sum1 += term1;
        if (m > half && term <= 1e-17 * sum && term1 <= 1e-17 * sum1) break;
    }
    return {sum, sum1};
}

inline ModifiedPair i_asymptotic(double nu, double x) {
    auto eval = [x](double mu) {
        const double four_mu2 = 4.0 * mu * mu;
        double sum = 1.0;
        double a = 1.0;
        double prev = std::numeric_limits<double>::infinity();
        for (int k = 1; k < 80; ++k) {
            const double odd = 2.0 * k - 1.0;
            a *= -(four_mu2 - odd * odd) / (8.0 * k * x);
            if (std::abs(a) > prev) break;
            prev = std::abs(a);
            sum += a;
            if (prev < 1e-18) break;
        }
        return std::exp(x) / std::sqrt(2.0 * std::numbers::pi * x) * sum;
    };
    return {eval(nu), eval(nu + 1.0)};
}

inline constexpr double kModifiedAsymptoticLimit = 50.0;

inline ModifiedPair i_pair(double nu, double x) {
    if (!(x >= 0.0)) throw DomainError("Bessel I requires x >= 0");
    if (x <= kModifiedAsymptoticLimit) return i_series(nu, x);
    return i_asymptotic(nu, x);
}

}  // namespace detail

inline double bessel_j(BesselOrder order, double x) { return detail::j_pair(order.value(), x).j; }

/// J_ν'(x); +∞ at x = 0 since J_ν ~ x^ν with ν < 1.
inline double bessel_j_prime(BesselOrder order, double x) {
    const double nu = order.value();
    if (x == 0.0) return std::numeric_limits<double>::infinity();
    const auto [j, j1] = detail::j_pair(nu, x);
    return nu / x * j - j1;
}

/// J_ν''(x) from the Bessel ODE; x must be positive.
inline double bessel_j_second(BesselOrder order, double x) {
    if (!(x > 0.0)) throw DomainError("bessel_j_second requires x > 0");
    const double nu = order.value();
    const auto [j, j1] = detail::j_pair(nu, x);
    const double jp = nu / x * j - j1;
    return -jp / x - (1.0 - nu * nu / (x * x)) * j;
}

/// Derivatives J_ν^{(m)}(x), m = 0..m_max, obtained by differentiating
/// x²y'' + xy' + (x²−ν²)y = 0 repeatedly:
///   x²y^{(m+2)} = −[(2m+1)x y^{(m+1)} + (m²+x²−ν²)y^{(m)} + 2mx y^{(m−1)} + m(m−1)y^{(m−2)}]
inline std::vector<double> bessel_j_derivatives(BesselOrder order, double x, int m_max) {
    if (!(x > 0.0)) throw DomainError("bessel_j_derivatives requires x > 0");
    const double nu = order.value();
    const auto [j, j1] = detail::j_pair(nu, x);
    std::vector<double> d(static_cast<std::size_t>(std::max(m_max, 1) + 1), 0.0);
    d[0] = j;
    d[1] = nu / x * j - j1;
    const double x2 = x * x;
    for (int m = 0; m + 2 <= m_max; ++m) {
        const auto um = static_cast<std::size_t>(m);
        double acc = (2.0 * m + 1.0) * x * d[um + 1] + (m * m + x2 - nu * nu) * d[um];
        if (m >= 1) acc += 2.0 * m * x * d[um - 1];
        if (m >= 2) acc += m * (m - 1.0) * d[um - 2];
        d[um + 2] = -acc / x2;
    }
    d.resize(static_cast<std::size_t>(m_max + 1));
    return d;
}

inline double bessel_i(BesselOrder order, double x) { return detail::i_pair(order.value(), x).i; }

inline double bessel_i_prime(BesselOrder order, double x) {
    const double nu = order.value();
    if (x == 0.0) return std::numeric_limits<double>::infinity();
    const auto [i, i1] = detail::i_pair(nu, x);
    return nu / x * i + i1;
}

/// McMahon's two-term expansion j ≈ b − (4ν²−1)/(8b), b = π(n + ν/2 − 1/4).
inline double mcmahon_guess(BesselOrder order, int n) {
    const double nu = order.value();
    const double b = std::numbers::pi * (n + 0.5 * nu - 0.25);
    return b - (4.0 * nu * nu - 1.0) / (8.0 * b);
}

/// n-th positive zero of J_ν. Newton from the McMahon guess, safeguarded by
/// bisection inside the bracket [guess − 1/2, guess + 1/2]; the brackets of
/// consecutive n are disjoint because zero spacing is ≥ π for ν ≤ 1/2.
inline BesselZero bessel_zero(BesselOrder order, int n) {
    if (n < 1) throw DomainError("bessel_zero requires n >= 1");
    const double nu = order.value();
    const double guess = mcmahon_guess(order, n);
    double lo = guess - 0.5;
    double hi = guess + 0.5;
    const double f_lo = detail::j_pair(nu, lo).j;
    const double f_hi = detail::j_pair(nu, hi).j;
    if (f_lo * f_hi > 0.0) {
        throw ConvergenceError("bessel_zero: no sign change around McMahon guess for n=" + std::to_string(n));
    }
    double x = guess;
    bool converged = false;
    for (int iter = 0; iter < 100; ++iter) {
        const auto [j, j1] = detail::j_pair(nu, x);
        if (j == 0.0) {
            converged = true;
            break;
        }
        if ((j > 0.0) == (f_lo > 0.0)) {
            lo = x;
        } else {
            hi = x;
        }
        const double jp = nu / x * j - j1;
        double next = x - j / jp;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double step = std::abs(next - x);
        x = next;
        if (step <= 4.0 * std::numeric_limits<double>::epsilon() * x) {
            converged = true;
            break;
        }
    }
    if (!converged || std::abs(detail::j_pair(nu, x).j) > 1e-12) {
        throw ConvergenceError("bessel_zero: refinement failed for n=" + std::to_string(n));
    }
    return {order, n, x};
}

inline std::vector<BesselZero> bessel_zeros(BesselOrder order, int count) {
    std::vector<BesselZero> zeros;
    zeros.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int n = 1; n <= count; ++n) zeros.push_back(bessel_zero(order, n));
    return zeros;
}

}  // namespace degback
