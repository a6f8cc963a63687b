#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "degback/quadrature.hpp"
#include "test_support.hpp"

using namespace degback;
using degback::testing::Gen;

TEST(GaussLegendre, ExactForPolynomialsUpToDegree2nMinus1) {
    for (const int n : {1, 2, 5, 16}) {
        const GaussRule r = gauss_legendre(n);
        double wsum = 0.0;
        for (const double w : r.weights) wsum += w;
        EXPECT_NEAR(wsum, 2.0, 1e-14);
        for (int p = 0; p <= 2 * n - 1; ++p) {
            double s = 0.0;
            for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], p);
            const double exact = p % 2 ? 0.0 : 2.0 / (p + 1);
            EXPECT_NEAR(s, exact, 1e-14) << "n=" << n << " p=" << p;
        }
    }
}

TEST(GaussLegendre, NodesSymmetricAndSorted) {
    const GaussRule r = gauss_legendre(16);
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
        EXPECT_NEAR(r.nodes[i], -r.nodes[r.nodes.size() - 1 - i], 1e-15);
        if (i) {
            EXPECT_LT(r.nodes[i - 1], r.nodes[i]);
        }
    }
    EXPECT_THROW(gauss_legendre(0), DomainError);
}

TEST(Quadrature, UnitInnerProduct) {
    for (const double kappa : {1.0, 0.875, 0.75, 0.55}) {
        EXPECT_NEAR(inner_product_quadrature([](double) { return 1.0; }, [](double) { return 1.0; }, kappa), 1.0, 1e-13);
    }
}

// Property: ∫₀¹ x^p dx = 1/(p+1) for random power-type singularities p > −1.
TEST(Quadrature, PowerSingularities) {
    Gen gen(21);
    for (int i = 0; i < 100; ++i) {
        const double alpha = gen.uniform(0.0, 0.95);
        const double kappa = (2.0 - alpha) / 2.0;
        const double p = gen.uniform(-0.75, 3.0);
        const double got = integrate_unit([p](double x) { return std::pow(x, p); }, kappa);
        EXPECT_NEAR(got, 1.0 / (p + 1.0), 1e-9 / (p + 1.0)) << "p=" << p << " kappa=" << kappa;
    }
}

TEST(Quadrature, OscillatoryAgainstSimpson) {
    const auto f = [](double x) { return std::sin(40.0 * x) * std::sqrt(x); };
    const double ref = degback::testing::simpson(f, 1e-12, 1.0, 200000) +
                       0.0;  // the missing [0, 1e-12] piece is below 1e-18
    EXPECT_NEAR(integrate_unit(f, 0.75), ref, 1e-10);
}

TEST(Quadrature, NonConvergenceIsReported) {
    const auto f = [](double x) { return std::sin(1e7 * x); };
    EXPECT_THROW(integrate_unit(f, 1.0, 1e-14), ConvergenceError);
}

TEST(Quadrature, GramHelperMatchesScalarQuadrature) {
    std::vector<RealFunction> rows{[](double x) { return x; }, [](double x) { return std::cos(3 * x); }};
    std::vector<RealFunction> cols{[](double x) { return std::sqrt(x); }, [](double x) { return 1.0 - x; }};
    const auto g = gram_by_quadrature(rows, cols, 0.8);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        for (std::size_t n = 0; n < cols.size(); ++n) {
            EXPECT_NEAR(g[k][n], inner_product_quadrature(rows[k], cols[n], 0.8), 1e-12);
        }
    }
    EXPECT_NEAR(g[0][0], 0.4, 1e-13);
    EXPECT_NEAR(g[0][1], 1.0 / 6.0, 1e-13);
}

TEST(Quadrature, RuleNodesInsideUnitInterval) {
    const QuadratureRule r = graded_rule(0.75, 4);
    ASSERT_EQ(r.x.size(), r.w.size());
    double wsum = 0.0;
    for (std::size_t i = 0; i < r.x.size(); ++i) {
        EXPECT_GT(r.x[i], 0.0);
        EXPECT_LT(r.x[i], 1.0);
        EXPECT_GT(r.w[i], 0.0);
        wsum += r.w[i];
    }
    EXPECT_NEAR(wsum, 1.0, 1e-13);
    EXPECT_THROW(graded_rule(0.0, 4), DomainError);
    EXPECT_THROW(graded_rule(1.0, 0), DomainError);
}
