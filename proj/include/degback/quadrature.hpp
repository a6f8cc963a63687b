#pragma once

// Composite Gauss–Legendre quadrature on (0,1) after the substitution y = x^κ.
// With x = y^{1/κ} the Jacobian is (1/κ) y^{1/κ−1}, and eigenfunction products
// such as φₙφ_k become y·(analytic) in y, so the rule is nearly exact for them.
// The first panel is additionally split geometrically toward y = 0 for the
// remaining power-type singularities (x^α weights, derivatives): a term
// y^{s−1} leaves an error of order (innermost width)^s, so the grading runs
// deep enough for s down to about 0.2.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "degback/errors.hpp"

namespace degback {

struct GaussRule {
    std::vector<double> nodes;  // on [−1, 1]
    std::vector<double> weights;
};

inline GaussRule gauss_legendre(int n) {
    if (n < 1) throw DomainError("gauss_legendre requires n >= 1");
    GaussRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        rule.nodes[static_cast<std::size_t>(i)] = -z;
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = z;
        rule.weights[static_cast<std::size_t>(i)] = w;
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    return rule;
}

/// Nodes x_i ∈ (0,1) and weights w_i (Jacobian included) so that
/// ∫₀¹ f(x) dx ≈ Σ w_i f(x_i).
struct QuadratureRule {
    std::vector<double> x;
    std::vector<double> w;

    template <class F>
    double integrate(F&& f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * f(x[i]);
        return s;
    }

    /// Σ w_i a_i b_i for values already tabulated on the nodes.
    double dot(const std::vector<double>& a, const std::vector<double>& b) const {
        double s = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * a[i] * b[i];
        return s;
    }
};

inline constexpr int kPointsPerPanel = 16;
inline constexpr int kGradingLevels = 72;  // innermost panel width ≈ 5e−60 · panel width
inline constexpr double kGradingRatio = 0.15;

inline QuadratureRule graded_rule(double kappa, int panels) {
    if (!(kappa > 0.0)) throw DomainError("graded_rule requires kappa > 0");
    if (panels < 1) throw DomainError("graded_rule requires panels >= 1");
    static const GaussRule gl = gauss_legendre(kPointsPerPanel);

    std::vector<double> breaks;
    const double h = 1.0 / panels;
    breaks.push_back(0.0);
    for (int l = kGradingLevels; l >= 1; --l) breaks.push_back(h * std::pow(kGradingRatio, l));
    for (int p = 1; p <= panels; ++p) breaks.push_back(p * h);

    QuadratureRule rule;
    const double inv_kappa = 1.0 / kappa;
    rule.x.reserve(breaks.size() * gl.nodes.size());
    rule.w.reserve(breaks.size() * gl.nodes.size());
    for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
        const double a = breaks[b];
        const double c = breaks[b + 1];
        const double mid = 0.5 * (a + c);
        const double half = 0.5 * (c - a);
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
            const double y = mid + half * gl.nodes[i];
            rule.x.push_back(std::pow(y, inv_kappa));
            rule.w.push_back(half * gl.weights[i] * inv_kappa * std::pow(y, inv_kappa - 1.0));
        }
    }
    return rule;
}

inline constexpr int kMinPanels = 4;
inline constexpr int kMaxPanels = 2048;

/// ∫₀¹ f(x) dx, doubling the panel count until successive results differ by
/// less than tol·max(1, |I|).
template <class F>
double integrate_unit(F&& f, double kappa, double tol = 1e-10) {
    double previous = graded_rule(kappa, kMinPanels).integrate(f);
    for (int panels = 2 * kMinPanels; panels <= kMaxPanels; panels *= 2) {
        const double current = graded_rule(kappa, panels).integrate(f);
        if (std::abs(current - previous) < tol * std::max(1.0, std::abs(current))) return current;
        previous = current;
    }
    throw ConvergenceError("integrate_unit: no convergence with " + std::to_string(kMaxPanels) + " panels");
}

/// ∫₀¹ f g dx.
template <class F, class G>
double inner_product_quadrature(F&& f, G&& g, double kappa, double tol = 1e-10) {
    return integrate_unit([&](double x) { return f(x) * g(x); }, kappa, tol);
}

using RealFunction = std::function<double(double)>;

/// Matrix of inner products ⟨rows[k], cols[n]⟩, tabulating every function once
/// per rule. Accepted once the whole matrix changes by less than tol between
/// consecutive panel doublings.
inline std::vector<std::vector<double>> gram_by_quadrature(const std::vector<RealFunction>& rows,
                                                           const std::vector<RealFunction>& cols, double kappa,
                                                           double tol = 1e-10, int start_panels = 8) {
    auto tabulate = [](const QuadratureRule& rule, const std::vector<RealFunction>& fs) {
        std::vector<std::vector<double>> values(fs.size(), std::vector<double>(rule.x.size()));
        for (std::size_t k = 0; k < fs.size(); ++k) {
            for (std::size_t i = 0; i < rule.x.size(); ++i) values[k][i] = fs[k](rule.x[i]);
        }
        return values;
    };
    auto assemble = [&](int panels) {
        const QuadratureRule rule = graded_rule(kappa, panels);
        const auto r = tabulate(rule, rows);
        const auto c = tabulate(rule, cols);
        std::vector<std::vector<double>> m(rows.size(), std::vector<double>(cols.size()));
        for (std::size_t k = 0; k < rows.size(); ++k) {
            for (std::size_t n = 0; n < cols.size(); ++n) m[k][n] = rule.dot(r[k], c[n]);
        }
        return m;
    };
    auto previous = assemble(start_panels);
    for (int panels = 2 * start_panels; panels <= kMaxPanels; panels *= 2) {
        auto current = assemble(panels);
        double change = 0.0;
        double scale = 1.0;
        for (std::size_t k = 0; k < current.size(); ++k) {
            for (std::size_t n = 0; n < current[k].size(); ++n) {
                change = std::max(change, std::abs(current[k][n] - previous[k][n]));
                scale = std::max(scale, std::abs(current[k][n]));
            }
        }
        if (change < tol * scale) return current;
        previous = std::move(current);
    }
    throw ConvergenceError("gram_by_quadrature: no convergence with " + std::to_string(kMaxPanels) + " panels");
}

}  // namespace degback
