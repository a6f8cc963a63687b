#pragma once

// Time integration of the modal closed loop a' = M a and of the target system
// v_k' = −(λ_k + λ) v_k, plus decay-rate fitting.
//
// Integrator: two-stage SDIRK with γ = 1 − √2/2 (second order, L-stable, so
// the fast modes with λ_N/λ₁ ~ N² are damped rather than reflected as the
// trapezoidal rule would). Both stages share the factorization of I − γhM.
// Each output interval dt is split into 2^L equal steps; every step is
// checked by step doubling and L is raised until the relative local error
// estimate ‖y_{h/2,h/2} − y_h‖/3 is below the tolerance.

#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "degback/errors.hpp"
#include "degback/fredholm_transform.hpp"

namespace degback {

struct SimConfig {
    double t_final = 2.0;
    double dt = 0.01;
    double integrator_tol = 1e-8;
    double fit_start = 0.5;
    double fit_end = 1.5;

    void validate() const {
        if (!(t_final > 0.0) || !std::isfinite(t_final)) throw ConfigError("t_final", "must be positive");
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt", "must be positive");
        if (!(integrator_tol > 0.0) || !(integrator_tol < 1.0)) throw ConfigError("tol", "must lie in (0, 1)");
        if (!(fit_start > 0.0)) throw ConfigError("fit_start", "must be positive");
        if (!(fit_end > fit_start)) throw ConfigError("fit_end", "must exceed fit_start");
        if (fit_end > t_final) throw ConfigError("fit_end", "must not exceed t_final");
        if (dt > (fit_end - fit_start) / 50.0) throw ConfigError("dt", "must be at most (fit_end - fit_start)/50");
    }
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> coeffs;
    std::vector<double> l2_norm;
    std::vector<double> control;
    double fitted_rate = 0.0;
    double fit_intercept = 0.0;
    double C_estimate = 0.0;
};

struct DecayFit {
    double rate;
    double intercept;    // b in log‖a(t)‖ ≈ b − rate·t
    double C_estimate;   // e^b / ‖a(0)‖
};

/// Least-squares fit of log l2_norm over samples with fit_start ≤ t ≤ fit_end.
inline DecayFit fit_decay_rate(const Trajectory& traj, double fit_start, double fit_end) {
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double t = traj.times[i];
        if (t < fit_start - 1e-12 || t > fit_end + 1e-12) continue;
        const double v = traj.l2_norm[i];
        if (!(v > std::numeric_limits<double>::min()) || !std::isfinite(v)) {
            throw DomainError("fit_decay_rate: underflowed or invalid norm at t=" + std::to_string(t));
        }
        const double y = std::log(v);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        ++count;
    }
    if (count < 2) throw DomainError("fit_decay_rate: fewer than two samples in the fit window");
    const double denom = count * stt - st * st;
    const double slope = (count * sty - st * sy) / denom;
    const double intercept = (sy - slope * st) / count;
    const double norm0 = traj.l2_norm.empty() ? 1.0 : traj.l2_norm.front();
    return {-slope, intercept, std::exp(intercept) / norm0};
}

namespace detail {

inline constexpr int kMaxRefinementLevel = 24;

class Sdirk2 {
public:
    explicit Sdirk2(const Eigen::MatrixXd& m) : m_(m) {}

    Eigen::VectorXd step(const Eigen::VectorXd& y, double h, int level) {
        const auto& lu = factor(h, level);
        const Eigen::VectorXd k1 = lu.solve(m_ * y);
        const Eigen::VectorXd k2 = lu.solve(m_ * (y + h * (1.0 - kGamma) * k1));
        return y + h * ((1.0 - kGamma) * k1 + kGamma * k2);
    }

private:
    static constexpr double kGamma = 1.0 - 0.70710678118654752440;

    const Eigen::PartialPivLU<Eigen::MatrixXd>& factor(double h, int level) {
        auto it = cache_.find(level);
        if (it == cache_.end()) {
            const auto n = m_.rows();
            it = cache_.emplace(level, Eigen::PartialPivLU<Eigen::MatrixXd>(Eigen::MatrixXd::Identity(n, n) - kGamma * h * m_)).first;
        }
        return it->second;
    }

    Eigen::MatrixXd m_;
    std::map<int, Eigen::PartialPivLU<Eigen::MatrixXd>> cache_;
};

}  // namespace detail

/// Samples of a' = M a at t = 0, dt, 2dt, …, t_final. Substeps have length
/// dt/2^L. Each one is taken once with h and twice with h/2; the difference
/// bounds the local error of the half-step result relative to the state. A
/// substep over tolerance is retried one level finer; after a substep below
/// tol/8 the level coarsens when the position allows it. The accepted value
/// is the Richardson combination two + (two − big)/3, which is third order and
/// whose amplification factor stays within [−1, 1] on the negative real axis.
inline std::vector<Eigen::VectorXd> integrate_linear(const Eigen::MatrixXd& m, const Eigen::VectorXd& a0,
                                                     const SimConfig& cfg, std::vector<double>* times = nullptr,
                                                     double stiffness_ratio = 0.0) {
    cfg.validate();
    detail::Sdirk2 stepper(m);
    const int samples = static_cast<int>(std::llround(cfg.t_final / cfg.dt));
    std::vector<Eigen::VectorXd> out{a0};
    if (times) *times = {0.0};
    Eigen::VectorXd y = a0;
    int level = 0;
    for (int s = 1; s <= samples; ++s) {
        long long pos = 0;  // substeps of the current level done in this interval
        while (pos < (1LL << level)) {
            const double h = cfg.dt / static_cast<double>(1LL << level);
            const Eigen::VectorXd big = stepper.step(y, h, level);
            const Eigen::VectorXd half = stepper.step(y, 0.5 * h, level + 1);
            const Eigen::VectorXd two = stepper.step(half, 0.5 * h, level + 1);
            const double scale = std::max(two.norm(), std::numeric_limits<double>::min());
            const double err = (two - big).norm() / 3.0 / scale;
            if (err > cfg.integrator_tol) {
                if (++level > detail::kMaxRefinementLevel) {
                    char msg[160];
                    std::snprintf(msg, sizeof msg,
                                  "integrator: tolerance %g unreachable at t=%g; stiffness ratio lambda_N/lambda_1 = %g",
                                  cfg.integrator_tol, (s - 1) * cfg.dt + static_cast<double>(pos) * h, stiffness_ratio);
                    throw ConvergenceError(msg);
                }
                pos *= 2;
                continue;
            }
            y = two + (two - big) / 3.0;
            ++pos;
            if (err < cfg.integrator_tol / 8.0 && level > 0 && pos % 2 == 0) {
                --level;
                pos /= 2;
            }
        }
        out.push_back(y);
        if (times) times->push_back(s * cfg.dt);
    }
    return out;
}

inline Trajectory make_trajectory(std::vector<double> times, std::vector<Eigen::VectorXd> coeffs,
                                  const Eigen::VectorXd& feedback_row, const SimConfig& cfg) {
    Trajectory traj;
    traj.times = std::move(times);
    traj.coeffs = std::move(coeffs);
    for (const auto& a : traj.coeffs) {
        traj.l2_norm.push_back(a.norm());
        traj.control.push_back(feedback_row.size() ? feedback_row.dot(a) : 0.0);
    }
    const DecayFit fit = fit_decay_rate(traj, cfg.fit_start, cfg.fit_end);
    traj.fitted_rate = fit.rate;
    traj.fit_intercept = fit.intercept;
    traj.C_estimate = fit.C_estimate;
    return traj;
}

inline Trajectory simulate_closed_loop(const TransformSystem& sys, const Eigen::VectorXd& u0, const SimConfig& cfg) {
    if (u0.size() != sys.n_modes) throw DomainError("simulate_closed_loop: initial vector has wrong length");
    std::vector<double> times;
    const double ratio = sys.lambdas(sys.n_modes - 1) / sys.lambdas(0);
    auto coeffs = integrate_linear(closed_loop_matrix(sys), u0, cfg, &times, ratio);
    return make_trajectory(std::move(times), std::move(coeffs), sys.p, cfg);
}

/// Exact solution v_k(t) = v_k(0) e^{−(λ_k+λ)t}.
inline Trajectory simulate_target(const Eigen::VectorXd& lambdas, double lambda, const Eigen::VectorXd& v0,
                                  const SimConfig& cfg) {
    cfg.validate();
    if (v0.size() != lambdas.size()) throw DomainError("simulate_target: initial vector has wrong length");
    const int samples = static_cast<int>(std::llround(cfg.t_final / cfg.dt));
    std::vector<double> times;
    std::vector<Eigen::VectorXd> coeffs;
    for (int s = 0; s <= samples; ++s) {
        const double t = s * cfg.dt;
        times.push_back(t);
        coeffs.push_back((v0.array() * (-(lambdas.array() + lambda) * t).exp()).matrix());
    }
    return make_trajectory(std::move(times), std::move(coeffs), Eigen::VectorXd(), cfg);
}

struct ConjugacyReport {
    double max_deviation;  // max_t ‖T a(t) − v(t)‖ / ‖v(t)‖
    Trajectory closed_loop;
    Trajectory target;
};

/// Runs the closed loop from u0 and the target from T u0 and compares T a(t)
/// with v(t) at every sample in [0, t_final].
inline ConjugacyReport conjugate_check(const TransformSystem& sys, const Eigen::VectorXd& u0, const SimConfig& cfg) {
    Trajectory u = simulate_closed_loop(sys, u0, cfg);
    Trajectory v = simulate_target(sys.lambdas, sys.lambda, sys.T * u0, cfg);
    double worst = 0.0;
    for (std::size_t i = 0; i < u.times.size(); ++i) {
        const double dev = (sys.T * u.coeffs[i] - v.coeffs[i]).norm() / v.l2_norm[i];
        worst = std::max(worst, dev);
    }
    return {worst, std::move(u), std::move(v)};
}

/// aₙ = 1/n, the coefficients of Σₙ φₙ/n.
inline Eigen::VectorXd default_initial_condition(int n_modes) {
    Eigen::VectorXd a(n_modes);
    for (int n = 0; n < n_modes; ++n) a(n) = 1.0 / (n + 1);
    return a;
}

}  // namespace degback
