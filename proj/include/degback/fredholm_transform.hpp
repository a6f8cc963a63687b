#pragma once

// Modal realization of the transform T f = f − ∫₀¹ k(·,y) f(y) dy on
// span{φ₁..φ_N}: T[k][n] = δ_kn − ⟨ψₙ, φ_k⟩ = cₙ G[k][n].
//
// The boundary control enters the modal equations through g_k = φ_k'(1):
//   a_k' = −λ_k a_k − φ_k'(1) U,   U = Σₙ ψₙ(1) aₙ,
// so the closed loop is a' = M a with M = −Λ − g pᵀ, pₙ = ψₙ(1).

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "degback/errors.hpp"
#include "degback/kernel_builder.hpp"

namespace degback {

struct TransformSystem {
    int n_modes = 0;
    double lambda = 0.0;
    Eigen::VectorXd lambdas;  // λ_k
    Eigen::MatrixXd T;
    Eigen::MatrixXd T_inv;    // export and diagnostics only; solves go through `lu`
    Eigen::MatrixXd T_tilde;  // G
    Eigen::MatrixXd C;        // G·diag(d)
    Eigen::VectorXd p;        // ψₙ(1)
    Eigen::VectorXd g;        // φ_k'(1)
    std::vector<double> diag_defect;
    std::vector<double> d;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    double sigma_min_tilde = 0.0;

    double condition_number() const { return sigma_max / sigma_min; }
};

inline TransformSystem assemble(const KernelData& kernel) {
    TransformSystem sys;
    const int n = kernel.truncation();
    sys.n_modes = n;
    sys.lambda = kernel.config.lambda;
    sys.lambdas.resize(n);
    sys.p.resize(n);
    sys.g.resize(n);
    for (int i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        sys.lambdas(i) = kernel.modes[ui].lambda;
        sys.p(i) = kernel.psi1[ui];
        sys.g(i) = kernel.modes[ui].boundary_trace;
    }
    const Eigen::Map<const Eigen::VectorXd> dv(kernel.d.data(), n);
    sys.d = kernel.d;
    sys.diag_defect = kernel.diag_defect;
    sys.T_tilde = kernel.gram;
    sys.C = kernel.gram * dv.asDiagonal();
    sys.T = sys.T_tilde + sys.C;

    sys.lu.compute(sys.T);
    sys.T_inv = sys.lu.solve(Eigen::MatrixXd::Identity(n, n));

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.T);
    sys.sigma_max = svd.singularValues()(0);
    sys.sigma_min = svd.singularValues()(n - 1);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd_tilde(sys.T_tilde);
    sys.sigma_min_tilde = svd_tilde.singularValues()(n - 1);
    return sys;
}

/// Feedback value U = Kf = Σ pₙ aₙ for f = Σ aₙφₙ.
inline double apply_K(const TransformSystem& sys, const Eigen::VectorXd& a) {
    if (a.size() != sys.n_modes) throw DomainError("apply_K: coefficient vector has wrong length");
    return sys.p.dot(a);
}

/// r_k / φ_k'(1) with r_k = Σₙ ⟨ψₙ, φ_k⟩ φₙ'(1). The diagonal term uses
/// 1 − c_k G[k][k] = δ_k − d_k + d_k δ_k, δ_k = 1 − G[k][k], to keep the
/// residual free of cancellation.
inline Eigen::VectorXd tb_residual(const TransformSystem& sys) {
    const int n = sys.n_modes;
    Eigen::VectorXd r(n);
    for (int k = 0; k < n; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        const double defect = sys.diag_defect[uk];
        const double dk = sys.d[uk];
        double s = sys.g(k) * (defect - dk + dk * defect);
        for (int m = 0; m < n; ++m) {
            if (m != k) s -= sys.T(k, m) * sys.g(m);
        }
        r(k) = s / sys.g(k);
    }
    return r;
}

inline Eigen::MatrixXd closed_loop_matrix(const TransformSystem& sys) {
    Eigen::MatrixXd m = -sys.g * sys.p.transpose();
    m.diagonal() -= sys.lambdas;
    return m;
}

/// ‖(T M − (−Λ − λI) T)_{h×h}‖_F / (‖T‖₂ · max_{k≤h} λ_k), h = N/2.
inline double operator_identity_residual(const TransformSystem& sys) {
    const int h = std::max(sys.n_modes / 2, 1);
    const Eigen::MatrixXd m = closed_loop_matrix(sys);
    const Eigen::MatrixXd lhs = sys.T * m;
    Eigen::VectorXd shift = -(sys.lambdas.array() + sys.lambda).matrix();
    const Eigen::MatrixXd rhs = shift.asDiagonal() * sys.T;
    const double scale = sys.sigma_max * sys.lambdas.head(h).maxCoeff();
    return (lhs - rhs).topLeftCorner(h, h).norm() / scale;
}

/// Eigenvalues of M ordered by decreasing real part (slowest first).
inline std::vector<std::complex<double>> closed_loop_spectrum(const TransformSystem& sys) {
    const Eigen::EigenSolver<Eigen::MatrixXd> es(closed_loop_matrix(sys), false);
    if (es.info() != Eigen::Success) throw ConvergenceError("closed_loop_spectrum: eigensolver failed");
    std::vector<std::complex<double>> ev(es.eigenvalues().begin(), es.eigenvalues().end());
    std::sort(ev.begin(), ev.end(), [](auto a, auto b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    return ev;
}

/// max over the slowest N/2 eigenvalues of |μ_k + λ_k + λ| / (λ_k + λ).
inline double spectrum_match_error(const TransformSystem& sys, const std::vector<std::complex<double>>& spectrum) {
    const int h = std::max(sys.n_modes / 2, 1);
    double err = 0.0;
    for (int k = 0; k < h; ++k) {
        const double target = sys.lambdas(k) + sys.lambda;
        err = std::max(err, std::abs(spectrum[static_cast<std::size_t>(k)] + target) / target);
    }
    return err;
}

inline double frobenius_norm_C(const TransformSystem& sys) { return sys.C.norm(); }

}  // namespace degback
