#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fqr/errors.hpp"
#include "fqr/funcdata.hpp"
#include "fqr/random.hpp"
#include "fqr/stats.hpp"

namespace fqr {

enum class CovariateLaw { brownian, karhunen_loeve };
enum class NoiseKind { gaussian, student_t, exponential };
enum class PsiKind { sine, quadratic, cubic };

inline std::string to_string(CovariateLaw law) {
    return law == CovariateLaw::brownian ? "brownian" : "karhunen_loeve";
}
inline std::string to_string(NoiseKind noise) {
    switch (noise) {
        case NoiseKind::gaussian: return "gaussian";
        case NoiseKind::student_t: return "student_t";
        default: return "exponential";
    }
}
inline std::string to_string(PsiKind psi) {
    switch (psi) {
        case PsiKind::sine: return "sine";
        case PsiKind::quadratic: return "quadratic";
        default: return "cubic";
    }
}

inline CovariateLaw parse_covariate_law(const std::string& s) {
    if (s == "brownian") return CovariateLaw::brownian;
    if (s == "karhunen_loeve" || s == "kl") return CovariateLaw::karhunen_loeve;
    throw config_error("unknown covariate law '" + s + "'");
}
inline NoiseKind parse_noise_kind(const std::string& s) {
    if (s == "gaussian") return NoiseKind::gaussian;
    if (s == "student_t") return NoiseKind::student_t;
    if (s == "exponential") return NoiseKind::exponential;
    throw config_error("unknown noise kind '" + s + "'");
}
inline PsiKind parse_psi_kind(const std::string& s) {
    if (s == "sine") return PsiKind::sine;
    if (s == "quadratic") return PsiKind::quadratic;
    if (s == "cubic") return PsiKind::cubic;
    throw config_error("unknown coefficient function '" + s + "'");
}

/// Library of true coefficient functions for synthetic data.
inline double psi_value(PsiKind kind, double t) {
    switch (kind) {
        case PsiKind::sine: return std::sin(2.0 * std::numbers::pi * t);
        case PsiKind::quadratic: return t * (1.0 - t);
        default: return 10.0 * t * (t - 0.5) * (t - 1.0);
    }
}

/// Monte Carlo generation recipe. The noise is shifted so that its
/// alpha-quantile is exactly zero, making the linear quantile model hold for
/// the target order. The seed fully determines the dataset.
struct SimConfig {
    Eigen::Index n = 100;
    int grid_size = 101;
    CovariateLaw covariate = CovariateLaw::brownian;
    int kl_terms = 50;
    PsiKind psi_true = PsiKind::quadratic;
    NoiseKind noise = NoiseKind::gaussian;
    double sigma = 1.0;        // scale of gaussian / exponential noise
    int student_df = 3;
    double alpha = 0.5;
    std::uint64_t seed = 0;

    void validate() const {
        if (n < 1) throw config_error("simulation size n must be >= 1");
        if (grid_size < 2) throw config_error("simulation grid needs >= 2 points");
        if (kl_terms < 1) throw config_error("Karhunen-Loeve expansion needs >= 1 term");
        if (!(sigma >= 0.0)) throw config_error("noise scale must be >= 0");
        if (student_df < 1) throw config_error("student_t degrees of freedom must be >= 1");
        if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("alpha must be in (0,1)");
    }
};

/// Shift making the alpha-quantile of the raw noise distribution zero.
inline double noise_quantile_shift(const SimConfig& cfg) {
    switch (cfg.noise) {
        case NoiseKind::gaussian: return cfg.sigma * normal_quantile(cfg.alpha);
        case NoiseKind::student_t:
            return cfg.sigma * student_t_quantile(cfg.alpha, static_cast<double>(cfg.student_df));
        default: return cfg.sigma * (-std::log1p(-cfg.alpha));
    }
}

/// One noise draw, already quantile-shifted.
inline double draw_noise(const SimConfig& cfg, double shift, std::mt19937_64& rng) {
    double raw;
    switch (cfg.noise) {
        case NoiseKind::gaussian: raw = cfg.sigma * standard_normal(rng); break;
        case NoiseKind::student_t: {
            const double z = standard_normal(rng);
            double chi2 = 0.0;
            for (int j = 0; j < cfg.student_df; ++j) {
                const double g = standard_normal(rng);
                chi2 += g * g;
            }
            raw = cfg.sigma * z / std::sqrt(chi2 / static_cast<double>(cfg.student_df));
            break;
        }
        default: raw = cfg.sigma * (-std::log1p(-uniform01(rng))); break;
    }
    return raw - shift;
}

namespace detail {

inline void brownian_path(std::mt19937_64& rng, const std::vector<double>& grid, double* out) {
    out[0] = grid[0] == 0.0 ? 0.0 : std::sqrt(grid[0]) * standard_normal(rng);
    for (std::size_t j = 1; j < grid.size(); ++j)
        out[j] = out[j - 1] + std::sqrt(grid[j] - grid[j - 1]) * standard_normal(rng);
}

// Brownian eigenpairs: lambda_j = ((j - 1/2) pi)^-2, phi_j = sqrt(2) sin((j-1/2) pi t).
// Coefficients are uniform on (-sqrt3, sqrt3): unit variance and bounded paths.
inline void karhunen_loeve_path(std::mt19937_64& rng, const std::vector<double>& grid, int terms,
                                double* out) {
    std::fill(out, out + grid.size(), 0.0);
    for (int j = 1; j <= terms; ++j) {
        const double freq = (static_cast<double>(j) - 0.5) * std::numbers::pi;
        const double amp = std::sqrt(3.0) * (2.0 * uniform01(rng) - 1.0) * std::numbers::sqrt2 / freq;
        for (std::size_t a = 0; a < grid.size(); ++a) out[a] += amp * std::sin(freq * grid[a]);
    }
}

} // namespace detail

struct SimulatedData {
    FunctionalDataset dataset;        // uncentered draws
    std::vector<double> psi_values;   // true coefficient function on the grid
    double noise_shift = 0.0;
};

/// Generate n covariate paths on a uniform grid and responses
/// y_i = <psi, X_i> (trapezoid) + shifted noise.
inline SimulatedData simulate_dataset(const SimConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(splitmix64(cfg.seed));
    std::vector<double> grid(static_cast<std::size_t>(cfg.grid_size));
    for (int j = 0; j < cfg.grid_size; ++j)
        grid[static_cast<std::size_t>(j)] = static_cast<double>(j) / static_cast<double>(cfg.grid_size - 1);

    std::vector<double> psi(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) psi[j] = psi_value(cfg.psi_true, grid[j]);

    const std::vector<double> w = trapezoid_weights(grid);
    const double shift = noise_quantile_shift(cfg);

    Eigen::MatrixXd X(cfg.n, cfg.grid_size);
    Eigen::VectorXd y(cfg.n);
    std::vector<double> path(grid.size());
    for (Eigen::Index i = 0; i < cfg.n; ++i) {
        if (cfg.covariate == CovariateLaw::brownian)
            detail::brownian_path(rng, grid, path.data());
        else
            detail::karhunen_loeve_path(rng, grid, cfg.kl_terms, path.data());
        double signal = 0.0;
        for (std::size_t j = 0; j < grid.size(); ++j) {
            X(i, static_cast<Eigen::Index>(j)) = path[j];
            signal += w[j] * psi[j] * path[j];
        }
        y[i] = signal + draw_noise(cfg, shift, rng);
    }
    return SimulatedData{FunctionalDataset(grid, std::move(X), std::move(y)), std::move(psi), shift};
}

/// Squared covariance-operator semi-norm <Gamma_X u, u> for a known covariate
/// law, evaluated on grid samples of u.
///
/// Brownian motion (K(s,t) = min(s,t); the law is mean zero, so no mean
/// subtraction enters): treating u as piecewise linear on the grid,
///   <Gamma u, u> = 2 int_0^1 u(s) V(s) ds  with  V(s) = int_0^s t u(t) dt,
/// and both integrals are evaluated exactly per interval, which keeps the
/// diagonal kink of K from degrading the rule.
/// Karhunen-Loeve laws use the spectral form sum_j lambda_j <phi_j, u>^2.
inline double law_seminorm_sq(const std::vector<double>& u, const std::vector<double>& grid,
                              CovariateLaw law, int kl_terms = 50) {
    if (u.size() != grid.size()) throw data_error("grid lengths differ");
    if (grid.size() < 2) throw config_error("seminorm grid needs >= 2 points");
    if (law == CovariateLaw::karhunen_loeve) {
        const std::vector<double> w = trapezoid_weights(grid);
        double total = 0.0;
        for (int j = 1; j <= kl_terms; ++j) {
            const double freq = (static_cast<double>(j) - 0.5) * std::numbers::pi;
            double ip = 0.0;
            for (std::size_t a = 0; a < grid.size(); ++a)
                ip += w[a] * std::numbers::sqrt2 * std::sin(freq * grid[a]) * u[a];
            total += ip * ip / (freq * freq);
        }
        return total;
    }
    // V at the left node of each interval, then exact integration of the
    // quartic u(s) * V(s) per interval with 3-point Gauss-Legendre.
    const GaussLegendre gl(3);
    double total = 0.0;
    double v_left = 0.0;
    for (std::size_t a = 0; a + 1 < grid.size(); ++a) {
        const double s0 = grid[a], s1 = grid[a + 1], h = s1 - s0;
        const double u0 = u[a], u1 = u[a + 1];
        const auto u_at = [&](double s) { return u0 + (u1 - u0) * (s - s0) / h; };
        const auto v_at = [&](double s) {
            // int_{s0}^{s} t u(t) dt for the linear piece, in closed form
            const double du = (u1 - u0) / h;
            const double c0 = u0 - du * s0;
            return v_left + c0 * (s * s - s0 * s0) / 2.0 + du * (s * s * s - s0 * s0 * s0) / 3.0;
        };
        for (std::size_t g = 0; g < gl.nodes.size(); ++g) {
            const double s = 0.5 * (s0 + s1) + 0.5 * h * gl.nodes[g];
            total += 0.5 * h * gl.weights[g] * u_at(s) * v_at(s);
        }
        v_left = v_at(s1);
    }
    // Exact value is a squared semi-norm; clamp roundoff-negative results.
    return std::max(0.0, 2.0 * total);
}

/// Squared semi-norm of (psi_hat - psi_true) under the known covariate law.
inline double theoretical_seminorm_error(const std::vector<double>& psi_hat,
                                         const std::vector<double>& psi_true,
                                         const std::vector<double>& grid, CovariateLaw law,
                                         int kl_terms = 50) {
    if (psi_hat.size() != psi_true.size()) throw data_error("grid lengths differ");
    std::vector<double> diff(psi_hat.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = psi_hat[i] - psi_true[i];
    return law_seminorm_sq(diff, grid, law, kl_terms);
}

} // namespace fqr
