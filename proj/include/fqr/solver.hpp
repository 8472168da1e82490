#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "fqr/errors.hpp"
#include "fqr/funcdata.hpp"
#include "fqr/stats.hpp"

namespace fqr {

/// Tilted absolute loss l_a(u) = |u| + (2a-1)u; a = 1/2 is the absolute value
/// (conditional median), general a in (0,1) targets the a-quantile.
struct CheckLoss {
    double alpha;

    explicit CheckLoss(double a) : alpha(a) {
        if (!(a > 0.0 && a < 1.0)) throw config_error("quantile order alpha must be in (0,1)");
    }
};

inline double check_loss(const CheckLoss& loss, double u) {
    return std::abs(u) + (2.0 * loss.alpha - 1.0) * u;
}

/// Penalized empirical risk: (1/n) sum_i l_a(y_i - (A theta)_i) + rho theta'G theta.
inline double objective(const Eigen::VectorXd& theta, const Eigen::MatrixXd& A,
                        const Eigen::VectorXd& y, double rho, const Eigen::MatrixXd& G,
                        const CheckLoss& loss) {
    if (theta.size() != A.cols() || y.size() != A.rows() || G.rows() != theta.size() ||
        G.cols() != theta.size())
        throw config_error("objective: inconsistent dimensions");
    const Eigen::VectorXd r = y - A * theta;
    double risk = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) risk += check_loss(loss, r[i]);
    risk /= static_cast<double>(A.rows());
    return risk + rho * theta.dot(G * theta);
}

/// Epsilon-smoothing schedule and stopping rule for the reweighted solver.
/// epsilon_init/epsilon_final are relative to the response scale (median
/// absolute deviation of y, fallback 1 when it vanishes).
struct SolverConfig {
    double epsilon_init = 1.0;
    double epsilon_final = 1e-8;
    double epsilon_decay = 0.1;
    int max_outer = 30;
    int max_inner = 100;
    double tol = 1e-10;

    void validate() const {
        if (!(epsilon_init > 0.0) || !(epsilon_final > 0.0))
            throw config_error("solver epsilon values must be > 0");
        if (epsilon_final > epsilon_init)
            throw config_error("solver epsilon_final must be <= epsilon_init");
        if (!(epsilon_decay > 0.0 && epsilon_decay < 1.0))
            throw config_error("solver epsilon_decay must be in (0,1)");
        if (max_outer < 1 || max_inner < 1) throw config_error("solver iteration caps must be >= 1");
        if (!(tol > 0.0)) throw config_error("solver tolerance must be > 0");
    }
};

struct FitDiagnostics {
    std::vector<double> objective_trace;  // exact objective at the end of each epsilon stage
    std::vector<std::vector<double>> smoothed_traces;  // smoothed objective per inner iteration
    bool converged = false;
    int iterations = 0;  // total inner iterations
    double final_epsilon = 0.0;
    double lambda_min = 0.0;
    bool lambda_min_warning = false;
};

namespace detail {

inline double smoothed_objective(const Eigen::VectorXd& r, double eps, double alpha, double n,
                                 double penalty_term) {
    double risk = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i)
        risk += std::sqrt(r[i] * r[i] + eps * eps) + (2.0 * alpha - 1.0) * r[i];
    return risk / n + penalty_term;
}

} // namespace detail

/// Minimize the penalized check-loss criterion over spline coefficients by
/// iteratively reweighted least squares on an epsilon-smoothed objective.
///
/// Smoothing replaces |u| with sqrt(u^2 + eps^2):
///   J_eps(theta) = (1/n) sum_i [ sqrt(r_i^2 + eps^2) + (2a-1) r_i ] + rho theta'G theta,
/// with r = y - A theta. With weights w_i = 1 / sqrt(r_i^2 + eps^2) at the
/// current residuals, sqrt(u^2+eps^2) <= (u^2+eps^2) w_i/2 + 1/(2 w_i) with
/// equality at r_i, so minimizing the quadratic surrogate solves
///   ( (1/n) A'WA + 2 rho G ) theta = (1/n) A'W y + ((2a-1)/n) A' 1,
/// and each inner solve cannot increase J_eps (majorize-minimize). The
/// epsilon ladder decays geometrically; the subgradient oracle is the
/// independent check that the scheme reaches the exact minimum.
inline std::pair<Eigen::VectorXd, FitDiagnostics> irls_fit(const PenalizedSystem& system,
                                                           const Eigen::VectorXd& y,
                                                           const CheckLoss& loss,
                                                           const SolverConfig& config = {}) {
    config.validate();
    if (y.size() != system.design.rows())
        throw config_error("response length does not match design matrix rows");
    const Eigen::MatrixXd& A = system.design;
    const Eigen::MatrixXd& G = system.penalty;
    const double n = static_cast<double>(A.rows());
    const double alpha = loss.alpha;

    FitDiagnostics diag;
    diag.lambda_min = system.lambda_min;
    diag.lambda_min_warning = system.near_singular;

    std::vector<double> yv(y.data(), y.data() + y.size());
    double scale = mad(yv);
    if (scale == 0.0) scale = 1.0;
    const double eps_final = config.epsilon_final * scale;

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(A.cols());
    const Eigen::VectorXd col_ones_proj = A.colwise().sum();  // A' 1
    double eps = config.epsilon_init * scale;
    bool last_stage_converged = false;

    for (int outer = 0; outer < config.max_outer; ++outer) {
        Eigen::VectorXd r = y - A * theta;
        double j_prev = detail::smoothed_objective(r, eps, alpha, n, system.rho * theta.dot(G * theta));
        diag.smoothed_traces.emplace_back();
        diag.smoothed_traces.back().push_back(j_prev);
        bool stage_converged = false;
        for (int inner = 0; inner < config.max_inner; ++inner) {
            Eigen::VectorXd w(r.size());
            for (Eigen::Index i = 0; i < r.size(); ++i) w[i] = 1.0 / std::sqrt(r[i] * r[i] + eps * eps);
            Eigen::MatrixXd M = (A.transpose() * w.asDiagonal() * A) / n + 2.0 * system.rho * G;
            Eigen::VectorXd b = (A.transpose() * (w.asDiagonal() * y)) / n +
                                ((2.0 * alpha - 1.0) / n) * col_ones_proj;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
            Eigen::VectorXd candidate = ldlt.solve(b);
            bool singular = ldlt.info() != Eigen::Success || !candidate.allFinite();
            if (!singular && system.rho == 0.0) {
                // Rank-deficient designs are only fatal without penalization;
                // with rho > 0 the graded weights can push pivot ratios to
                // machine level while the solve stays usable.
                const double dmax = ldlt.vectorD().cwiseAbs().maxCoeff();
                const double dmin = ldlt.vectorD().cwiseAbs().minCoeff();
                singular = !(dmax > 0.0) || dmin <= 1e-14 * dmax;
            }
            if (singular)
                throw numerical_error(
                    "singular inner linear system (rank-deficient design with rho = 0)");
            theta = std::move(candidate);
            ++diag.iterations;
            r = y - A * theta;
            const double j_new =
                detail::smoothed_objective(r, eps, alpha, n, system.rho * theta.dot(G * theta));
            diag.smoothed_traces.back().push_back(j_new);
            if (std::abs(j_prev - j_new) <= config.tol * (1.0 + std::abs(j_prev))) {
                stage_converged = true;
                j_prev = j_new;
                break;
            }
            j_prev = j_new;
        }
        diag.objective_trace.push_back(objective(theta, A, y, system.rho, G, loss));
        diag.final_epsilon = eps;
        if (eps <= eps_final) {
            last_stage_converged = stage_converged;
            break;
        }
        eps = std::max(eps * config.epsilon_decay, eps_final);
    }
    diag.converged = last_stage_converged;
    return {std::move(theta), std::move(diag)};
}

/// Independent slow oracle: subgradient descent on the exact nonsmooth
/// objective with step c/sqrt(t), c = 1/(1 + max design row norm), keeping the
/// best iterate. Test-only companion to irls_fit.
inline Eigen::VectorXd subgradient_oracle(const PenalizedSystem& system, const Eigen::VectorXd& y,
                                          const CheckLoss& loss, std::int64_t iterations = 200000) {
    if (iterations < 1) throw config_error("oracle iteration count must be >= 1");
    const Eigen::MatrixXd& A = system.design;
    const Eigen::MatrixXd& G = system.penalty;
    const double n = static_cast<double>(A.rows());
    const double tilt = 2.0 * loss.alpha - 1.0;
    const double c = 1.0 / (1.0 + A.rowwise().norm().maxCoeff());

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(A.cols());
    Eigen::VectorXd best = theta;
    double best_obj = objective(theta, A, y, system.rho, G, loss);
    Eigen::VectorXd s(A.rows());
    for (std::int64_t t = 1; t <= iterations; ++t) {
        const Eigen::VectorXd r = y - A * theta;
        for (Eigen::Index i = 0; i < r.size(); ++i) {
            const double sign = r[i] > 0.0 ? 1.0 : (r[i] < 0.0 ? -1.0 : 0.0);
            s[i] = sign + tilt;
        }
        const Eigen::VectorXd grad = -(A.transpose() * s) / n + 2.0 * system.rho * (G * theta);
        theta -= (c / std::sqrt(static_cast<double>(t))) * grad;
        const double obj = objective(theta, A, y, system.rho, G, loss);
        if (obj < best_obj) {
            best_obj = obj;
            best = theta;
        }
    }
    return best;
}

} // namespace fqr
