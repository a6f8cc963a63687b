#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "degback/exports.hpp"
#include "degback/kernel_builder.hpp"
#include "degback/verification.hpp"
#include "test_support.hpp"

using namespace degback;
using degback::testing::Gen;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<RealFunction> phi_functions(const std::vector<EigenMode>& modes, const DegenerateParams& p) {
    std::vector<RealFunction> out;
    for (const auto& m : modes) out.push_back([m, p](double x) { return eval_phi(m, p, x); });
    return out;
}

std::vector<RealFunction> xi_functions(const std::vector<EigenMode>& modes, const DegenerateParams& p, const DecayConfig& c) {
    std::vector<RealFunction> out;
    for (const auto& m : modes) out.push_back([m, p, c](double x) { return xi_tilde_eval(m, p, c, x); });
    return out;
}

}  // namespace

TEST(DecayConfig, Validation) {
    EXPECT_NO_THROW((DecayConfig{0.0, 0.0}.validate()));
    EXPECT_THROW((DecayConfig{-1.0, 0.0}.validate()), ConfigError);
    EXPECT_THROW((DecayConfig{std::nan(""), 0.0}.validate()), ConfigError);
    EXPECT_THROW((DecayConfig{5.0, -1e-3}.validate()), ConfigError);
    EXPECT_DOUBLE_EQ(DecayConfig::with_default_margin(20.0).resonance_margin, 2e-5);
    EXPECT_EQ(required_check_modes(64, 5.0), 67);
    EXPECT_EQ(required_check_modes(64, 0.0), 64);
}

TEST(NonResonance, ExactEigenvalueFails) {
    const DegenerateParams p(0.0);
    const auto modes = build_modes(p, 10);
    const auto r = check_nonresonance(modes, {kPi * kPi, 1e-6});
    EXPECT_FALSE(r.pass);
    EXPECT_EQ(r.kind, ResonanceKind::eigenvalue);
    EXPECT_EQ(r.n, 1);
    EXPECT_EQ(r.k, 0);
    EXPECT_LT(r.min_distance, 1e-12);
    EXPECT_TRUE(detail::scan_resonances(modes, r.suggested_lambda, 1e-6).pass);
    EXPECT_LE(std::abs(r.suggested_lambda - kPi * kPi), 2.1e-6);
}

// Brute force over λₙ = n²π², n, k ≤ 50, written without the library's scan.
TEST(NonResonance, ClassicalBruteForceMargin) {
    const auto modes = build_modes(DegenerateParams(0.0), 50);
    const double lambda = 5.0;
    double best = 1e300;
    for (int n = 1; n <= 50; ++n) {
        const double ln = n * n * kPi * kPi;
        best = std::min(best, std::abs(lambda - ln));
        for (int k = 1; k <= 50; ++k) {
            const double lk = k * k * kPi * kPi;
            best = std::min(best, std::abs(lambda - (ln + lk)));
            if (k < n) best = std::min(best, std::abs(lambda - (ln - lk)));
        }
    }
    const auto r = check_nonresonance(modes, {lambda, 5e-6});
    EXPECT_TRUE(r.pass);
    EXPECT_NEAR(r.min_distance, best, 1e-9);
    EXPECT_NEAR(r.min_distance, kPi * kPi - 5.0, 1e-9);
    EXPECT_DOUBLE_EQ(r.suggested_lambda, lambda);
}

TEST(NonResonance, JustBelowDifferenceReportsDistance) {
    const auto modes = build_modes(DegenerateParams(0.0), 10);
    const double diff = modes[1].lambda - modes[0].lambda;
    const double lambda = diff - 3e-7;
    const auto r = check_nonresonance(modes, {lambda, 1e-6});
    EXPECT_FALSE(r.pass);
    EXPECT_EQ(r.kind, ResonanceKind::difference);
    EXPECT_EQ(r.n, 2);
    EXPECT_EQ(r.k, 1);
    EXPECT_NEAR(r.min_distance, std::abs(lambda - diff), 1e-12);
    EXPECT_DOUBLE_EQ(r.effective_margin, 1e-6);
}

TEST(NonResonance, SumFamilyDetected) {
    const auto modes = build_modes(DegenerateParams(0.5), 10);
    const double sum = modes[2].lambda + modes[0].lambda;
    const auto r = check_nonresonance(modes, {sum, 1e-6});
    EXPECT_FALSE(r.pass);
    EXPECT_EQ(r.kind, ResonanceKind::sum);
}

// The round-off floor rejects exact coincidences even with a zero margin.
TEST(NonResonance, ZeroMarginStillRejectsExactResonance) {
    const auto modes = build_modes(DegenerateParams(0.5), 10);
    EXPECT_FALSE(check_nonresonance(modes, {modes[3].lambda, 0.0}).pass);
    EXPECT_TRUE(check_nonresonance(modes, {5.0, 0.0}).pass);
}

TEST(NonResonance, BuildKernelThrowsWithPair) {
    try {
        build_kernel(DegenerateParams(0.0), {kPi * kPi, 1e-6}, 16);
        FAIL() << "expected ResonanceError";
    } catch (const ResonanceError& e) {
        EXPECT_EQ(e.n, 1);
        EXPECT_LT(e.distance, 1e-12);
        EXPECT_NE(std::string(e.what()).find("try lambda"), std::string::npos);
    }
}

// Property: random λ away from every family passes, and λ placed on a
// random member of a family fails.
TEST(NonResonance, RandomFamilies) {
    Gen gen(51);
    for (int i = 0; i < 40; ++i) {
        const DegenerateParams p(gen.uniform(0.0, 0.9));
        const auto modes = build_modes(p, 20);
        const int n = gen.integer(2, 10);
        const int k = gen.integer(1, n - 1);
        const double target = i % 3 == 0 ? modes[n - 1].lambda
                                         : (i % 3 == 1 ? modes[n - 1].lambda - modes[k - 1].lambda
                                                       : modes[n - 1].lambda + modes[k - 1].lambda);
        const auto r = check_nonresonance(modes, {target + 1e-8, 1e-6});
        EXPECT_FALSE(r.pass) << i;
        EXPECT_LE(r.min_distance, 1e-8 * (1 + 1e-6) + 1e-12 * target);
    }
}

TEST(Epsilon, ClassicalCaseExact) {
    const DegenerateParams p(0.0);
    const auto m = build_modes(p, 10)[9];
    const double eps = *epsilon_n(m, p, {5.0, 1e-6});
    const long double pi = std::numbers::pi_v<long double>;
    const long double exact = 10.0L * pi - std::sqrt(100.0L * pi * pi - 5.0L);
    EXPECT_NEAR(eps, static_cast<double>(exact), 1e-15);
    // ε = ℓ(1 + ℓ/(2j) + ℓ²/(2j²) + …) with ℓ = λ/(2j), j = 10π
    const double j = 10.0 * kPi;
    const double lead = 5.0 / (2.0 * j);
    EXPECT_NEAR(eps, lead, 1.1 * lead * lead / (2.0 * j));
    EXPECT_NEAR(eps, lead * (1.0 + lead / (2.0 * j) + lead * lead / (2.0 * j * j)), 2e-9);
}

TEST(Epsilon, LeadingBehaviourAndAbsence) {
    const DegenerateParams p(0.5);
    const DecayConfig c{20.0, 2e-5};
    const auto modes = build_modes(p, 64);
    EXPECT_FALSE(epsilon_n(modes[0], p, c).has_value());
    // ε/lead = 2/(1+√(1−x)), x = 2·lead/j; the expansion is used once x ≤ 1/4
    for (std::size_t i = 3; i < modes.size(); ++i) {
        const double e = *epsilon_n(modes[i], p, c);
        EXPECT_GT(e, 0.0);
        const double lead = c.lambda / (2.0 * modes[i].zero * p.kappa * p.kappa);
        // ε − lead = lead²/(2j) + O(j^{-5}) after expanding the square root
        EXPECT_NEAR(e / lead - 1.0, lead / (2.0 * modes[i].zero), 2.0 * std::pow(lead / modes[i].zero, 2)) << i;
    }
    EXPECT_EQ(*epsilon_n(modes[5], p, {0.0, 0.0}), 0.0);
}

// Oracle: ⟨ξ̃ₙ, φ_k⟩ by graded Gauss quadrature for all (n, k) ≤ 16.
TEST(Gram, ClosedFormMatchesQuadrature) {
    for (const double a : {0.0, 0.5}) {
        for (const double lambda : {5.0, 20.0}) {
            const DegenerateParams p(a);
            const DecayConfig c = DecayConfig::with_default_margin(lambda);
            const auto modes = build_modes(p, 16);
            const auto g = gram_matrix(modes, p, c);
            const auto q = gram_by_quadrature(phi_functions(modes, p), xi_functions(modes, p, c), p.kappa, 1e-12);
            for (int k = 0; k < 16; ++k) {
                for (int n = 0; n < 16; ++n) EXPECT_NEAR(g(k, n), q[k][n], 1e-8) << a << " " << lambda << " k=" << k << " n=" << n;
            }
        }
    }
}

// The I-branch (λₙ < λ) for several low modes at once.
TEST(Gram, ModifiedBranchMatchesQuadrature) {
    const DegenerateParams p(0.25);
    const DecayConfig c{60.0, 6e-5};
    const auto modes = build_modes(p, 6);
    ASSERT_FALSE(epsilon_n(modes[1], p, c).has_value());
    const auto g = gram_matrix(modes, p, c);
    const auto q = gram_by_quadrature(phi_functions(modes, p), xi_functions(modes, p, c), p.kappa, 1e-12);
    for (int k = 0; k < 6; ++k) {
        for (int n = 0; n < 6; ++n) EXPECT_NEAR(g(k, n), q[k][n], 1e-8 * std::max(1.0, std::abs(q[k][n])));
    }
}

TEST(Gram, TaylorDefectMatchesDirectWhereBothAreAccurate) {
    const DegenerateParams p(0.0);
    const DecayConfig c{5.0, 5e-6};
    for (const auto& m : build_modes(p, 8)) {
        const double e = *epsilon_n(m, p, c);
        if (e >= kTaylorEpsilonLimit || e < 0.1) continue;
        EXPECT_NEAR(gram_diagonal_defect(m, p, c), 1.0 - gram_entry(m, m, p, c), 1e-12) << m.n;
    }
}

TEST(Gram, DiagonalDefectAgainstQuadratureAtHighModes) {
    const DegenerateParams p(0.5);
    const DecayConfig c{5.0, 5e-6};
    const auto modes = build_modes(p, 48);
    for (const int n : {24, 48}) {
        const auto& m = modes[n - 1];
        const double q = inner_product_quadrature([&](double x) { return eval_phi(m, p, x); },
                                                  [&](double x) { return xi_tilde_eval(m, p, c, x); }, p.kappa, 1e-13);
        EXPECT_NEAR(gram_diagonal_defect(m, p, c), 1.0 - q, 1e-9) << n;
    }
}

TEST(Gram, DiagonalDefectIsQuadratic) {
    const DegenerateParams p(0.5);
    const DecayConfig c{5.0, 5e-6};
    std::vector<double> scaled;
    for (const auto& m : build_modes(p, 64)) scaled.push_back(double(m.n) * m.n * std::abs(gram_diagonal_defect(m, p, c)));
    EXPECT_LE(tail_growth_ratio(scaled), kProfileGrowthTol);
    EXPECT_LT(scaled.back(), 10.0);
}

// |⟨φₙ−ξ̃ₙ, φ_k⟩|·√(λₙ/λ_k)·|k²−n²| stays bounded, k ≠ n.
TEST(Gram, OffDiagonalDecay) {
    const DegenerateParams p(0.5);
    const DecayConfig c{5.0, 5e-6};
    auto worst = [&](int n_modes) {
        const auto modes = build_modes(p, n_modes);
        const auto g = gram_matrix(modes, p, c);
        double w = 0.0;
        for (int k = 0; k < n_modes; ++k) {
            for (int n = 0; n < n_modes; ++n) {
                if (k == n) continue;
                const double scale = std::sqrt(modes[n].lambda / modes[k].lambda) * std::abs(double((k + 1) * (k + 1) - (n + 1) * (n + 1)));
                w = std::max(w, std::abs(g(k, n)) * scale);
            }
        }
        return w;
    };
    const double w32 = worst(32);
    const double w64 = worst(64);
    EXPECT_LE(w64, 1.05 * w32);
    EXPECT_LT(w64, 100.0);
}

TEST(Gram, IdentityAtZeroLambdaAndSabotage) {
    const DegenerateParams p(0.5);
    const auto modes = build_modes(p, 8);
    EXPECT_TRUE(gram_matrix(modes, p, {0.0, 0.0}).isIdentity(0.0));
    const DecayConfig c{5.0, 5e-6};
    const auto good = gram_matrix(modes, p, c);
    const auto bad = gram_matrix(modes, p, c, GramOptions{true});
    EXPECT_GT((good - bad).cwiseAbs().maxCoeff(), 1e-2);
    EXPECT_DOUBLE_EQ(good(7, 0), bad(7, 0));
}

TEST(XiTilde, BoundaryLimitsAndDomain) {
    const DegenerateParams p(0.5);
    const DecayConfig c{5.0, 5e-6};
    const auto modes = build_modes(p, 20);
    for (const auto& m : modes) {
        EXPECT_NEAR(xi_tilde_eval(m, p, c, 1.0), beta(m, p, c), 1e-12);
        EXPECT_LT(std::abs(xi_tilde_eval(m, p, c, 1e-12)), 1e-4);
        const DecayConfig tiny{1e-12, 0.0};
        for (double x = 0.05; x < 1.0; x += 0.19) EXPECT_NEAR(xi_tilde_eval(m, p, tiny, x), eval_phi(m, p, x), 1e-9);
    }
    EXPECT_THROW(xi_tilde_eval(modes[0], p, c, 0.0), DomainError);
    EXPECT_THROW(xi_tilde_eval(modes[0], p, c, 1.5), DomainError);
}

TEST(XiTilde, BetaIsOrderOneOverN) {
    const DegenerateParams p(0.5);
    const DecayConfig c{5.0, 5e-6};
    std::vector<double> nb;
    for (const auto& m : build_modes(p, 64)) {
        const double b = beta(m, p, c);
        nb.push_back(m.n * std::abs(b));
        if (m.n < 4) continue;
        const double lead = -std::sqrt(2.0 * p.kappa) * *epsilon_n(m, p, c);
        EXPECT_NEAR(b / lead, 1.0, *epsilon_n(m, p, c) / m.zero + 1e-12) << m.n;
    }
    EXPECT_LE(tail_growth_ratio(nb), kProfileGrowthTol);
    EXPECT_GE(profile_floor_ratio(nb), kProfileFloorTol);
}

TEST(XiTilde, NormsAgainstQuadrature) {
    const DegenerateParams p(0.5);
    const DecayConfig c{20.0, 2e-5};
    for (const auto& m : build_modes(p, 6)) {
        const double q = inner_product_quadrature([&](double x) { return xi_tilde_eval(m, p, c, x); },
                                                  [&](double x) { return xi_tilde_eval(m, p, c, x); }, p.kappa, 1e-12);
        EXPECT_NEAR(xi_tilde_norm_sq(m, p, c), q, 1e-9 * std::max(1.0, q)) << m.n;
    }
}

TEST(Coefficients, ExactRelations) {
    const KernelData kd = build_kernel(DegenerateParams(0.5), {5.0, 5e-6}, 32);
    ASSERT_EQ(kd.truncation(), 32);
    double tail = 0.0;
    for (std::size_t n = 0; n < 32; ++n) {
        EXPECT_EQ(kd.c[n], 1.0 + kd.d[n]);
        EXPECT_EQ(kd.psi1[n], -kd.c[n] * kd.beta[n]);
        if (n >= 16) tail += kd.d[n] * kd.d[n];
    }
    EXPECT_DOUBLE_EQ(kd.tail_norm, tail);
    EXPECT_LT(kd.condition_estimate, kConditionThreshold);
    EXPECT_GT(kd.condition_estimate, 1.0);
}

TEST(Coefficients, ZeroLambdaGivesIdentity) {
    const KernelData kd = build_kernel(DegenerateParams(0.3), {0.0, 0.0}, 16);
    for (std::size_t n = 0; n < 16; ++n) {
        EXPECT_EQ(kd.d[n], 0.0);
        EXPECT_EQ(kd.c[n], 1.0);
        EXPECT_EQ(kd.psi1[n], 0.0);
        EXPECT_EQ(kd.diag_defect[n], 0.0);
    }
    EXPECT_EQ(kernel_norm_sq(kd), 0.0);
}

// The solved system holds row by row: Σₙ φₙ'(1) dₙ G[k][n] = φ_k'(1)·δ_k − Σ_{n≠k} φₙ'(1) G[k][n].
TEST(Coefficients, SolvedSystemResidual) {
    const DegenerateParams p(0.25);
    const DecayConfig c{12.0, 1.2e-5};
    const KernelData kd = build_kernel(p, c, 48);
    for (int k = 0; k < 48; ++k) {
        double lhs = 0.0, rhs = kd.modes[k].boundary_trace * kd.diag_defect[k];
        for (int n = 0; n < 48; ++n) {
            lhs += kd.modes[n].boundary_trace * kd.d[n] * kd.gram(k, n);
            if (n != k) rhs -= kd.modes[n].boundary_trace * kd.gram(k, n);
        }
        EXPECT_NEAR(lhs, rhs, 1e-9 * kd.modes[k].boundary_trace) << k;
    }
}

TEST(Coefficients, SmallLambdaGivesSmallCorrection) {
    const KernelData kd = build_kernel(DegenerateParams(0.5), {1e-6, 0.0}, 16);
    for (double d : kd.d) EXPECT_LT(std::abs(d), 1e-5);
}

TEST(Coefficients, GramSizeMismatch) {
    const DegenerateParams p(0.5);
    const auto modes = build_modes(p, 4);
    EXPECT_THROW(solve_coefficients(modes, Eigen::MatrixXd::Identity(3, 3), p, {5.0, 0.0}), DomainError);
}

TEST(Kernel, VanishesAtLeftEndpoint) {
    const KernelData kd = build_kernel(DegenerateParams(0.5), {5.0, 5e-6}, 16);
    for (double y = 0.05; y < 1.0; y += 0.15) {
        const double far = std::abs(kernel_eval(kd, 0.5, y)) + 1.0;
        EXPECT_LT(std::abs(kernel_eval(kd, 1e-12, y)), 1e-4 * far);
    }
}

TEST(Kernel, PsiNormsAgainstQuadrature) {
    const KernelData kd = build_kernel(DegenerateParams(0.5), {5.0, 5e-6}, 16);
    for (const int n : {1, 3, 8, 16}) {
        const auto f = [&](double x) { return psi_eval(kd, n, x); };
        const double q = inner_product_quadrature(f, f, kd.params.kappa, 1e-12);
        EXPECT_NEAR(psi_norm_sq(kd, n), q, 1e-9 * std::max(1.0, q)) << n;
        const auto dphi = [&](double x) { return eval_phi(kd.modes[n - 1], kd.params, x) - xi_tilde_eval(kd.modes[n - 1], kd.params, kd.config, x); };
        EXPECT_NEAR(phi_minus_xi_norm_sq(kd, n), inner_product_quadrature(dphi, dphi, kd.params.kappa, 1e-13), 1e-10) << n;
    }
    EXPECT_NEAR(truncation_indicator(kd), std::sqrt(psi_norm_sq(kd, 16)), 0.0);
}

// ‖ψₙ‖² ≤ C(1/n² + dₙ²): the ratio stays bounded over n ≤ 64.
TEST(Kernel, PsiNormEnvelope) {
    const KernelData kd = build_kernel(DegenerateParams(0.5), {5.0, 5e-6}, 64);
    double worst = 0.0;
    double total = 0.0;
    for (int n = 1; n <= 64; ++n) {
        const double psi = psi_norm_sq(kd, n);
        EXPECT_GE(psi, -1e-12);
        const double d = kd.d[n - 1];
        worst = std::max(worst, psi / (1.0 / (double(n) * n) + d * d));
        total += psi;
    }
    EXPECT_LT(worst, 10.0);
    EXPECT_NEAR(kernel_norm_sq(kd), total, 1e-12 * total);
}

TEST(Kernel, QuadraticClosenessProfile) {
    const KernelData kd = build_kernel(DegenerateParams(0.5), {5.0, 5e-6}, 64);
    std::vector<double> scaled;
    for (int n = 1; n <= 64; ++n) scaled.push_back(double(n) * n * phi_minus_xi_norm_sq(kd, n));
    EXPECT_LE(tail_growth_ratio(scaled), kProfileGrowthTol);
}

// |ψₙ(1)| ≤ C|cₙ|εₙ: since βₙ ≈ −√(2κ)εₙ the ratio tends to √(2κ).
TEST(Kernel, PsiAtOneIsSquareSummable) {
    const KernelData kd = build_kernel(DegenerateParams(0.5), {5.0, 5e-6}, 64);
    const double s = std::sqrt(2.0 * kd.params.kappa);
    for (int n = 1; n <= 64; ++n) {
        EXPECT_NEAR(psi_eval(kd, n, 1.0), kd.psi1[n - 1], 1e-12);
        if (n < 4) continue;
        const double ratio = std::abs(kd.psi1[n - 1]) / (std::abs(kd.c[n - 1]) * *kd.eps[n - 1]);
        EXPECT_NEAR(ratio, s, 0.1 * s) << n;
    }
}

TEST(Exports, KernelModesTable) {
    const KernelData kd = build_kernel(DegenerateParams(0.5), {5.0, 5e-6}, 4);
    const CsvWriter csv = kernel_modes_table(kd);
    EXPECT_EQ(csv.rows(), 4u);
    EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "n,eps_n,beta_n,d_n,c_n,psi1_n");
    const CsvWriter grid = kernel_grid_table(kd, 5);
    EXPECT_EQ(grid.rows(), 25u);
}
