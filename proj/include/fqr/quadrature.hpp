#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "fqr/errors.hpp"

namespace fqr {

enum class QuadratureRule { trapezoid, simpson };

inline std::string to_string(QuadratureRule rule) {
    return rule == QuadratureRule::trapezoid ? "trapezoid" : "simpson";
}

inline QuadratureRule parse_quadrature_rule(const std::string& name) {
    if (name == "trapezoid") return QuadratureRule::trapezoid;
    if (name == "simpson") return QuadratureRule::simpson;
    throw config_error("unknown quadrature rule '" + name + "' (expected trapezoid or simpson)");
}

inline bool grid_is_uniform(const std::vector<double>& grid, double rel_tol = 1e-9) {
    if (grid.size() < 2) return true;
    const double h = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (std::abs((grid[i] - grid[i - 1]) - h) > rel_tol * std::max(1.0, std::abs(h))) return false;
    }
    return true;
}

/// Composite trapezoid weights for an arbitrary strictly increasing grid.
inline std::vector<double> trapezoid_weights(const std::vector<double>& grid) {
    if (grid.size() < 2) throw config_error("quadrature grid needs at least 2 points");
    std::vector<double> w(grid.size(), 0.0);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double h = grid[i + 1] - grid[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    return w;
}

/// Composite Simpson weights; requires a uniform grid with an even interval count.
inline std::vector<double> simpson_weights(const std::vector<double>& grid) {
    if (grid.size() < 3) throw config_error("simpson rule needs at least 3 grid points");
    if ((grid.size() - 1) % 2 != 0) throw config_error("simpson rule needs an even number of intervals");
    if (!grid_is_uniform(grid)) throw config_error("simpson rule needs a uniform grid");
    const double h = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
    std::vector<double> w(grid.size(), 0.0);
    for (std::size_t i = 0; i + 2 < grid.size(); i += 2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    return w;
}

inline std::vector<double> quadrature_weights(QuadratureRule rule, const std::vector<double>& grid) {
    return rule == QuadratureRule::trapezoid ? trapezoid_weights(grid) : simpson_weights(grid);
}

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence. Exact for polynomials of degree <= 2n-1.
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussLegendre(int n) {
        if (n < 1) throw config_error("Gauss-Legendre order must be >= 1");
        nodes.resize(n);
        weights.resize(n);
        const int half = (n + 1) / 2;
        for (int i = 0; i < half; ++i) {
            // Tricomi initial guess for the i-th positive root.
            double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0, p1 = x;
                for (int j = 2; j <= n; ++j) {
                    const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            const double w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if (n % 2 == 1) nodes[n / 2] = 0.0;
    }
};

} // namespace fqr
