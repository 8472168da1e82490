#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fqr/errors.hpp"
#include "fqr/quadrature.hpp"

namespace fqr {

/// Normalized B-spline basis of degree q on k equal subintervals of [0,1],
/// clamped at the boundary (each boundary knot repeated q+1 times), spanning
/// the k+q dimensional space of degree-q splines with k-1 interior knots.
///
/// Values at interior knots follow the right-limit convention (left limit at
/// t = 1), which only matters for discontinuous bases (q = 0).
class SplineBasis {
public:
    SplineBasis(int degree, int intervals) : degree_(degree), intervals_(intervals) {
        if (degree < 0) throw config_error("spline degree must be >= 0");
        if (intervals < 1) throw config_error("number of subintervals must be >= 1");
        dim_ = intervals + degree;
        knots_.resize(static_cast<std::size_t>(dim_ + degree + 1));
        for (int i = 0; i <= degree; ++i) knots_[i] = 0.0;
        for (int j = 1; j < intervals; ++j)
            knots_[degree + j] = static_cast<double>(j) / static_cast<double>(intervals);
        for (int i = dim_; i <= dim_ + degree; ++i) knots_[i] = 1.0;
    }

    int degree() const { return degree_; }
    int intervals() const { return intervals_; }
    int dim() const { return dim_; }
    const std::vector<double>& knots() const { return knots_; }

    /// All dim basis function values at t; at most degree+1 are nonzero and
    /// they sum to one (partition of unity).
    Eigen::VectorXd eval(double t) const {
        check_domain(t);
        const int span = find_span(t);
        return scatter(span, values_in_span(span, t));
    }

    /// Values of the order-d derivatives of all basis functions at t.
    Eigen::VectorXd eval_deriv(double t, int order) const {
        check_domain(t);
        if (order < 0 || order > degree_)
            throw config_error("derivative order must be in [0, degree]");
        const int span = find_span(t);
        return scatter(span, derivs_in_span(span, t, order));
    }

    /// Value of the spline with coefficient vector theta at t.
    double eval_spline(const Eigen::VectorXd& theta, double t) const {
        check_domain(t);
        if (theta.size() != dim_)
            throw config_error("coefficient vector has length " + std::to_string(theta.size()) +
                               ", basis dimension is " + std::to_string(dim_));
        const int span = find_span(t);
        const std::vector<double> vals = values_in_span(span, t);
        double s = 0.0;
        for (int r = 0; r <= degree_; ++r) s += theta[span - degree_ + r] * vals[static_cast<std::size_t>(r)];
        return s;
    }

    /// Gram matrix of order-m derivatives, [G]_jl = integral of B_j^(m) B_l^(m)
    /// over [0,1]. Assembled span by span with (degree+1)-point Gauss-Legendre,
    /// exact for the piecewise-polynomial integrand of degree 2(degree-m).
    Eigen::MatrixXd penalty_matrix(int m) const {
        if (m < 1 || m > degree_)
            throw config_error("penalty order must satisfy 1 <= m <= degree");
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(dim_, dim_);
        const GaussLegendre gl(degree_ + 1);
        for (int s = 0; s < intervals_; ++s) {
            const double a = knots_[static_cast<std::size_t>(degree_ + s)];
            const double b = knots_[static_cast<std::size_t>(degree_ + s + 1)];
            const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
            const int span = degree_ + s;
            for (std::size_t g = 0; g < gl.nodes.size(); ++g) {
                const double t = mid + half * gl.nodes[g];
                const double wt = half * gl.weights[g];
                const std::vector<double> d = derivs_in_span(span, t, m);
                for (int r = 0; r <= degree_; ++r) {
                    for (int c = 0; c <= degree_; ++c) {
                        G(span - degree_ + r, span - degree_ + c) +=
                            wt * d[static_cast<std::size_t>(r)] * d[static_cast<std::size_t>(c)];
                    }
                }
            }
        }
        return 0.5 * (G + G.transpose());
    }

    /// Least-squares projection of f onto the spline space over a fine
    /// equispaced grid (default 2048 points); the workhorse behind the
    /// sup-error decay checks.
    Eigen::VectorXd approximate(const std::function<double(double)>& f, int grid_size = 2048) const {
        if (grid_size < dim_) throw config_error("approximation grid smaller than basis dimension");
        Eigen::MatrixXd F(grid_size, dim_);
        Eigen::VectorXd y(grid_size);
        for (int i = 0; i < grid_size; ++i) {
            const double t = static_cast<double>(i) / static_cast<double>(grid_size - 1);
            F.row(i) = eval(t).transpose();
            y[i] = f(t);
        }
        return F.colPivHouseholderQr().solve(y);
    }

    /// Basis values sampled on a grid for quadrature, as a grid.size() x dim
    /// matrix. At a grid point that coincides with a knot the value is the mean
    /// of the one-sided limits, so nodal quadrature rules integrate the jump of
    /// a discontinuous (q = 0) basis correctly; for q >= 1 this equals eval().
    Eigen::MatrixXd sample_for_quadrature(const std::vector<double>& grid) const {
        Eigen::MatrixXd B(static_cast<Eigen::Index>(grid.size()), dim_);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double t = grid[i];
            check_domain(t);
            const int right = find_span(t);
            const int left = find_span_left(t);
            Eigen::VectorXd v = scatter(right, values_in_span(right, t));
            if (left != right) v = 0.5 * (v + scatter(left, values_in_span(left, t)));
            B.row(static_cast<Eigen::Index>(i)) = v.transpose();
        }
        return B;
    }

    /// Index of the knot span containing t under the right-limit convention
    /// (left limit at t = 1); always in [degree, dim-1].
    int find_span(double t) const {
        const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
        return clamp_span(static_cast<int>(it - knots_.begin()) - 1);
    }

private:
    int find_span_left(double t) const {
        const auto it = std::lower_bound(knots_.begin(), knots_.end(), t);
        return clamp_span(static_cast<int>(it - knots_.begin()) - 1);
    }

    int clamp_span(int s) const { return std::clamp(s, degree_, dim_ - 1); }

    void check_domain(double t) const {
        if (!(t >= 0.0 && t <= 1.0))
            throw config_error("evaluation point " + std::to_string(t) + " outside [0,1]");
    }

    // Cox-de Boor triangle: values of the degree+1 basis functions that are
    // nonzero on the given span, evaluated as that span's polynomial pieces.
    std::vector<double> values_in_span(int span, double t) const {
        const int q = degree_;
        std::vector<double> vals(static_cast<std::size_t>(q + 1), 0.0);
        std::vector<double> left(static_cast<std::size_t>(q + 1)), right(static_cast<std::size_t>(q + 1));
        vals[0] = 1.0;
        for (int j = 1; j <= q; ++j) {
            left[static_cast<std::size_t>(j)] = t - knots_[static_cast<std::size_t>(span + 1 - j)];
            right[static_cast<std::size_t>(j)] = knots_[static_cast<std::size_t>(span + j)] - t;
            double saved = 0.0;
            for (int r = 0; r < j; ++r) {
                const double temp = vals[static_cast<std::size_t>(r)] /
                                    (right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)]);
                vals[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
                saved = left[static_cast<std::size_t>(j - r)] * temp;
            }
            vals[static_cast<std::size_t>(j)] = saved;
        }
        return vals;
    }

    // Banded derivative recurrence: order-d derivatives of the nonzero basis
    // functions on the span, via the knot-difference triangle.
    std::vector<double> derivs_in_span(int span, double t, int d) const {
        const int q = degree_;
        if (d == 0) return values_in_span(span, t);
        const auto idx = [q](int r, int c) { return static_cast<std::size_t>(r * (q + 1) + c); };
        std::vector<double> ndu(static_cast<std::size_t>((q + 1) * (q + 1)), 0.0);
        std::vector<double> left(static_cast<std::size_t>(q + 1)), right(static_cast<std::size_t>(q + 1));
        ndu[idx(0, 0)] = 1.0;
        for (int j = 1; j <= q; ++j) {
            left[static_cast<std::size_t>(j)] = t - knots_[static_cast<std::size_t>(span + 1 - j)];
            right[static_cast<std::size_t>(j)] = knots_[static_cast<std::size_t>(span + j)] - t;
            double saved = 0.0;
            for (int r = 0; r < j; ++r) {
                ndu[idx(j, r)] = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
                const double temp = ndu[idx(r, j - 1)] / ndu[idx(j, r)];
                ndu[idx(r, j)] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
                saved = left[static_cast<std::size_t>(j - r)] * temp;
            }
            ndu[idx(j, j)] = saved;
        }
        std::vector<double> ders(static_cast<std::size_t>(q + 1), 0.0);
        std::vector<double> a(static_cast<std::size_t>(2 * (q + 1)), 0.0);
        for (int r = 0; r <= q; ++r) {
            int s1 = 0, s2 = 1;
            std::fill(a.begin(), a.end(), 0.0);
            a[0] = 1.0;
            double der_val = 0.0;
            for (int kk = 1; kk <= d; ++kk) {
                der_val = 0.0;
                const int rk = r - kk, pk = q - kk;
                if (r >= kk) {
                    a[static_cast<std::size_t>(s2 * (q + 1))] =
                        a[static_cast<std::size_t>(s1 * (q + 1))] / ndu[idx(pk + 1, rk)];
                    der_val = a[static_cast<std::size_t>(s2 * (q + 1))] * ndu[idx(rk, pk)];
                }
                const int j1 = (rk >= -1) ? 1 : -rk;
                const int j2 = (r - 1 <= pk) ? kk - 1 : q - r;
                for (int j = j1; j <= j2; ++j) {
                    a[static_cast<std::size_t>(s2 * (q + 1) + j)] =
                        (a[static_cast<std::size_t>(s1 * (q + 1) + j)] -
                         a[static_cast<std::size_t>(s1 * (q + 1) + j - 1)]) /
                        ndu[idx(pk + 1, rk + j)];
                    der_val += a[static_cast<std::size_t>(s2 * (q + 1) + j)] * ndu[idx(rk + j, pk)];
                }
                if (r <= pk) {
                    a[static_cast<std::size_t>(s2 * (q + 1) + kk)] =
                        -a[static_cast<std::size_t>(s1 * (q + 1) + kk - 1)] / ndu[idx(pk + 1, r)];
                    der_val += a[static_cast<std::size_t>(s2 * (q + 1) + kk)] * ndu[idx(r, pk)];
                }
                std::swap(s1, s2);
            }
            ders[static_cast<std::size_t>(r)] = der_val;
        }
        double factor = static_cast<double>(q);
        for (int kk = 2; kk <= d; ++kk) factor *= static_cast<double>(q - kk + 1);
        for (auto& v : ders) v *= factor;
        return ders;
    }

    Eigen::VectorXd scatter(int span, const std::vector<double>& local) const {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
        for (int r = 0; r <= degree_; ++r) out[span - degree_ + r] = local[static_cast<std::size_t>(r)];
        return out;
    }

    int degree_;
    int intervals_;
    int dim_;
    std::vector<double> knots_;
};

inline SplineBasis make_basis(int degree, int intervals) { return SplineBasis(degree, intervals); }

} // namespace fqr
