#pragma once

// Tables and summaries written by the command-line tool.

#include <complex>
#include <vector>

#include "json.hpp"

#include "degback/closed_loop_sim.hpp"
#include "degback/fredholm_transform.hpp"
#include "degback/io.hpp"
#include "degback/kernel_builder.hpp"
#include "degback/spectral_basis.hpp"

namespace degback {

inline CsvWriter modes_table(const std::vector<EigenMode>& modes) {
    CsvWriter csv({"n", "j_nu_n", "lambda_n", "jprime", "boundary_trace"});
    for (const auto& m : modes) csv.add_row({static_cast<long long>(m.n), m.zero, m.lambda, m.jprime, m.boundary_trace});
    return csv;
}

inline CsvWriter kernel_modes_table(const KernelData& kd) {
    CsvWriter csv({"n", "eps_n", "beta_n", "d_n", "c_n", "psi1_n"});
    for (std::size_t i = 0; i < kd.modes.size(); ++i) {
        const double eps = kd.eps[i] ? *kd.eps[i] : std::numeric_limits<double>::quiet_NaN();
        csv.add_row({static_cast<long long>(kd.modes[i].n), eps, kd.beta[i], kd.d[i], kd.c[i], kd.psi1[i]});
    }
    return csv;
}

/// k(x, y) on the uniform grid x_i = i/points, y_j = j/points, i, j = 1..points.
inline CsvWriter kernel_grid_table(const KernelData& kd, int points) {
    CsvWriter csv({"x", "y", "k"});
    const int n = kd.truncation();
    std::vector<double> grid;
    for (int i = 1; i <= points; ++i) grid.push_back(static_cast<double>(i) / points);
    // ψₙ and φₙ tabulated once per grid point
    std::vector<std::vector<double>> psi(grid.size(), std::vector<double>(static_cast<std::size_t>(n)));
    std::vector<std::vector<double>> phi(grid.size(), std::vector<double>(static_cast<std::size_t>(n)));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (int m = 1; m <= n; ++m) {
            psi[i][static_cast<std::size_t>(m - 1)] = psi_eval(kd, m, grid[i]);
            phi[i][static_cast<std::size_t>(m - 1)] = eval_phi(kd.modes[static_cast<std::size_t>(m - 1)], kd.params, grid[i]);
        }
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t j = 0; j < grid.size(); ++j) {
            double s = 0.0;
            for (std::size_t m = 0; m < static_cast<std::size_t>(n); ++m) s += psi[i][m] * phi[j][m];
            csv.add_row({grid[i], grid[j], s});
        }
    }
    return csv;
}

inline CsvWriter matrix_table(const Eigen::MatrixXd& m) {
    CsvWriter csv({"k", "n", "value"});
    for (Eigen::Index k = 0; k < m.rows(); ++k) {
        for (Eigen::Index n = 0; n < m.cols(); ++n) csv.add_row({static_cast<long long>(k + 1), static_cast<long long>(n + 1), m(k, n)});
    }
    return csv;
}

inline CsvWriter spectrum_table(const TransformSystem& sys, const std::vector<std::complex<double>>& spectrum) {
    CsvWriter csv({"index", "real", "imag", "target"});
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        const double target = -(sys.lambdas(static_cast<Eigen::Index>(i)) + sys.lambda);
        csv.add_row({static_cast<long long>(i + 1), spectrum[i].real(), spectrum[i].imag(), target});
    }
    return csv;
}

inline CsvWriter residual_table(const TransformSystem& sys) {
    CsvWriter csv({"k", "tb_residual_rel"});
    const Eigen::VectorXd r = tb_residual(sys);
    for (Eigen::Index k = 0; k < r.size(); ++k) csv.add_row({static_cast<long long>(k + 1), r(k)});
    return csv;
}

inline CsvWriter trajectory_table(const Trajectory& traj) {
    std::vector<std::string> header{"t", "l2_norm", "control"};
    const std::size_t shown = traj.coeffs.empty() ? 0 : std::min<std::size_t>(8, static_cast<std::size_t>(traj.coeffs.front().size()));
    for (std::size_t i = 1; i <= shown; ++i) header.push_back("a" + std::to_string(i));
    CsvWriter csv(header);
    for (std::size_t s = 0; s < traj.times.size(); ++s) {
        std::vector<CsvCell> row{traj.times[s], traj.l2_norm[s], traj.control[s]};
        for (std::size_t i = 0; i < shown; ++i) row.emplace_back(traj.coeffs[s](static_cast<Eigen::Index>(i)));
        csv.add_row(std::move(row));
    }
    return csv;
}

inline nlohmann::json transform_summary(const KernelData& kd, const TransformSystem& sys) {
    const auto spectrum = closed_loop_spectrum(sys);
    const double identity_err = (sys.T * sys.T_inv - Eigen::MatrixXd::Identity(sys.n_modes, sys.n_modes)).cwiseAbs().maxCoeff();
    return {{"alpha", kd.params.alpha},
            {"nu", kd.params.nu},
            {"kappa", kd.params.kappa},
            {"lambda", kd.config.lambda},
            {"resonance_margin", kd.config.resonance_margin},
            {"n_modes", kd.truncation()},
            {"condition_estimate", json_number(kd.condition_estimate)},
            {"d_tail_norm", json_number(kd.tail_norm)},
            {"kernel_l2_norm_sq", json_number(kernel_norm_sq(kd))},
            {"truncation_indicator", json_number(truncation_indicator(kd))},
            {"sigma_min", json_number(sys.sigma_min)},
            {"sigma_max", json_number(sys.sigma_max)},
            {"sigma_min_tilde", json_number(sys.sigma_min_tilde)},
            {"frobenius_C", json_number(frobenius_norm_C(sys))},
            {"inverse_residual", json_number(identity_err)},
            {"tb_residual_max", json_number(tb_residual(sys).cwiseAbs().maxCoeff())},
            {"operator_identity_residual", json_number(operator_identity_residual(sys))},
            {"spectrum_match_error", json_number(spectrum_match_error(sys, spectrum))}};
}

inline nlohmann::json simulation_summary(const TransformSystem& sys, const ConjugacyReport& conj) {
    const double target_rate = sys.lambdas(0) + sys.lambda;
    return {{"n_modes", sys.n_modes},
            {"lambda", sys.lambda},
            {"lambda_1", sys.lambdas(0)},
            {"fitted_rate", json_number(conj.closed_loop.fitted_rate)},
            {"target_model_rate", json_number(target_rate)},
            {"nominal_rate", json_number(sys.lambda)},
            {"target_fitted_rate", json_number(conj.target.fitted_rate)},
            {"C_estimate", json_number(conj.closed_loop.C_estimate)},
            {"cond_T", json_number(sys.condition_number())},
            {"conjugacy_deviation", json_number(conj.max_deviation)}};
}

}  // namespace degback
