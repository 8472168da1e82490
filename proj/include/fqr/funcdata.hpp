#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "fqr/bspline.hpp"
#include "fqr/errors.hpp"
#include "fqr/quadrature.hpp"

namespace fqr {

/// One curve observed at discretization points of [0,1].
struct CurveSample {
    std::vector<double> grid;
    std::vector<double> values;

    void validate() const {
        if (grid.size() != values.size()) throw data_error("curve grid and value lengths differ");
        if (grid.size() < 2) throw data_error("curve needs at least 2 grid points");
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (!(grid[i] >= 0.0 && grid[i] <= 1.0))
                throw data_error("grid point " + std::to_string(grid[i]) + " outside [0,1]");
            if (i > 0 && !(grid[i] > grid[i - 1]))
                throw data_error("grid not strictly increasing at position " + std::to_string(i + 1));
        }
    }
};

/// n curves on one shared grid plus n scalar responses. Centering subtracts the
/// pointwise sample mean from every curve and records it.
class FunctionalDataset {
public:
    FunctionalDataset(std::vector<double> grid, Eigen::MatrixXd curves, Eigen::VectorXd responses,
                      std::vector<std::string> ids = {})
        : grid_(std::move(grid)), curves_(std::move(curves)), responses_(std::move(responses)),
          ids_(std::move(ids)) {
        if (curves_.rows() < 1) throw data_error("dataset needs at least one curve");
        if (curves_.cols() != static_cast<Eigen::Index>(grid_.size()))
            throw data_error("curve length does not match grid length");
        if (responses_.size() != curves_.rows())
            throw data_error("response count (" + std::to_string(responses_.size()) +
                             ") does not match curve count (" + std::to_string(curves_.rows()) + ")");
        CurveSample probe{grid_, std::vector<double>(grid_.size(), 0.0)};
        probe.validate();
        if (ids_.empty()) {
            ids_.reserve(static_cast<std::size_t>(curves_.rows()));
            for (Eigen::Index i = 0; i < curves_.rows(); ++i) ids_.push_back(std::to_string(i + 1));
        }
        if (ids_.size() != static_cast<std::size_t>(curves_.rows()))
            throw data_error("id count does not match curve count");
    }

    Eigen::Index n() const { return curves_.rows(); }
    Eigen::Index grid_size() const { return curves_.cols(); }
    const std::vector<double>& grid() const { return grid_; }
    const Eigen::MatrixXd& curves() const { return curves_; }
    const Eigen::VectorXd& responses() const { return responses_; }
    const std::vector<std::string>& ids() const { return ids_; }
    bool centered() const { return centered_; }

    const std::vector<double>& mean_curve() const {
        if (!centered_) throw config_error("mean curve only stored after centering");
        return mean_curve_;
    }

    CurveSample curve(Eigen::Index i) const {
        std::vector<double> vals(static_cast<std::size_t>(curves_.cols()));
        for (Eigen::Index j = 0; j < curves_.cols(); ++j) vals[static_cast<std::size_t>(j)] = curves_(i, j);
        return CurveSample{grid_, std::move(vals)};
    }

    friend FunctionalDataset center_curves(const FunctionalDataset& ds);

private:
    std::vector<double> grid_;
    Eigen::MatrixXd curves_;
    Eigen::VectorXd responses_;
    std::vector<std::string> ids_;
    bool centered_ = false;
    std::vector<double> mean_curve_;
};

/// Subtract the pointwise sample mean from every curve; responses untouched.
inline FunctionalDataset center_curves(const FunctionalDataset& ds) {
    if (ds.centered()) throw config_error("dataset already centered");
    FunctionalDataset out = ds;
    const Eigen::RowVectorXd mean = out.curves_.colwise().mean();
    out.curves_.rowwise() -= mean;
    out.mean_curve_.assign(mean.data(), mean.data() + mean.size());
    out.centered_ = true;
    return out;
}

inline void check_same_grid(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw data_error("grid lengths differ");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) throw data_error("grids differ at position " + std::to_string(i + 1));
}

/// Quadrature approximation of the L2 inner product of a curve with function
/// values given on the same grid.
inline double inner_product(const CurveSample& curve, const std::vector<double>& fvals,
                            QuadratureRule rule) {
    curve.validate();
    if (fvals.size() != curve.grid.size()) throw data_error("grid lengths differ");
    const std::vector<double> w = quadrature_weights(rule, curve.grid);
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * curve.values[i] * fvals[i];
    return s;
}

/// Pseudo-design matrix: A(i, j) is the quadrature inner product of curve i
/// with basis function j sampled on the shared grid. Warns (via the out-flag)
/// when the dataset is uncentered, but proceeds.
inline Eigen::MatrixXd design_matrix(const FunctionalDataset& ds, const SplineBasis& basis,
                                     QuadratureRule rule, bool* uncentered_warning = nullptr) {
    if (uncentered_warning) *uncentered_warning = !ds.centered();
    const std::vector<double> w = quadrature_weights(rule, ds.grid());
    const Eigen::MatrixXd B = basis.sample_for_quadrature(ds.grid());
    Eigen::VectorXd wv = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    return ds.curves() * wv.asDiagonal() * B;
}

/// Inner products of one curve with every basis function, by the same sampled
/// quadrature as design_matrix (so predictions match design rows exactly).
inline Eigen::VectorXd curve_basis_inner_products(const CurveSample& curve, const SplineBasis& basis,
                                                  QuadratureRule rule) {
    curve.validate();
    const std::vector<double> w = quadrature_weights(rule, curve.grid);
    const Eigen::MatrixXd B = basis.sample_for_quadrature(curve.grid);
    Eigen::VectorXd cw(static_cast<Eigen::Index>(w.size()));
    for (std::size_t i = 0; i < w.size(); ++i) cw[static_cast<Eigen::Index>(i)] = w[i] * curve.values[i];
    return B.transpose() * cw;
}

/// Design matrix, empirical Gram matrix, roughness penalty and their penalized
/// assembly, with the smallest eigenvalue of the assembled matrix as the
/// conditioning diagnostic.
struct PenalizedSystem {
    Eigen::MatrixXd design;     // n x dim
    Eigen::MatrixXd gram;       // (1/n) A'A
    Eigen::MatrixXd penalty;    // derivative Gram matrix
    double rho = 0.0;
    Eigen::MatrixXd assembled;  // gram + rho * penalty
    double lambda_min = 0.0;
    bool near_singular = false;

    Eigen::Index n() const { return design.rows(); }
    Eigen::Index dim() const { return design.cols(); }
};

inline PenalizedSystem assemble_system(Eigen::MatrixXd A, Eigen::MatrixXd G, double rho) {
    if (rho < 0.0) throw config_error("penalization parameter must be >= 0");
    if (G.rows() != A.cols() || G.cols() != A.cols())
        throw config_error("penalty matrix dimension does not match design matrix");
    PenalizedSystem sys;
    const double n = static_cast<double>(A.rows());
    sys.design = std::move(A);
    sys.gram = (sys.design.transpose() * sys.design) / n;
    sys.gram = 0.5 * (sys.gram + sys.gram.transpose().eval());
    sys.penalty = std::move(G);
    sys.rho = rho;
    sys.assembled = sys.gram + rho * sys.penalty;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.assembled, Eigen::EigenvaluesOnly);
    sys.lambda_min = es.eigenvalues()(0);
    // Empirical proxy for a well-conditioned penalized Gram matrix; the fit is
    // unreliable below this threshold.
    sys.near_singular = sys.lambda_min < 1e-10 * (1.0 + sys.assembled.trace());
    return sys;
}

} // namespace fqr
