#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "fqr/bspline.hpp"
#include "fqr/errors.hpp"
#include "fqr/funcdata.hpp"
#include "fqr/random.hpp"
#include "fqr/solver.hpp"

namespace fqr {

/// Everything needed to fit one conditional-quantile model. With auto_k_rho
/// set, the basis size and penalty follow the asymptotic recipe
/// k = round(n^(1/(4p+1))), rho = n^(-2p/(4p+1)) for smoothness p.
struct FitConfig {
    double alpha = 0.5;
    int degree = 3;
    int intervals = 8;
    int penalty_order = 2;
    double rho = 1e-4;
    QuadratureRule quadrature = QuadratureRule::trapezoid;
    SolverConfig solver;
    bool auto_k_rho = false;
    int smoothness_p = 2;
    bool intercept = false;  // opt-in unpenalized intercept; off by default

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("alpha must be in (0,1)");
        if (degree < 0) throw config_error("degree must be >= 0");
        if (intervals < 1) throw config_error("intervals must be >= 1");
        if (penalty_order < 1 || penalty_order > degree)
            throw config_error("penalty order must satisfy 1 <= m <= degree");
        if (rho < 0.0) throw config_error("rho must be >= 0");
        if (auto_k_rho && (smoothness_p < penalty_order || smoothness_p > degree))
            throw config_error("auto rule needs penalty order <= p <= degree");
        solver.validate();
    }
};

inline int auto_intervals(Eigen::Index n, int p) {
    const double k = std::round(std::pow(static_cast<double>(n), 1.0 / (4.0 * p + 1.0)));
    return std::max(1, static_cast<int>(k));
}

inline double auto_rho(Eigen::Index n, int p) {
    return std::pow(static_cast<double>(n), -2.0 * p / (4.0 * p + 1.0));
}

/// A fitted conditional-quantile model: the spline coefficient function, the
/// training centering curve, and the solver diagnostics.
struct QuantileModel {
    SplineBasis basis;
    Eigen::VectorXd theta_hat;
    double alpha = 0.5;
    double rho = 0.0;
    int penalty_order = 1;
    double intercept = 0.0;
    std::vector<double> grid;
    std::vector<double> mean_curve;
    QuadratureRule quadrature = QuadratureRule::trapezoid;
    FitDiagnostics diagnostics;
};

/// Fit the penalized spline quantile model. Curves are centered first (unless
/// the dataset already is); the training mean is stored so predictions center
/// new curves identically.
inline QuantileModel fit(const FunctionalDataset& dataset, const FitConfig& config) {
    config.validate();
    FitConfig cfg = config;
    if (cfg.auto_k_rho) {
        cfg.intervals = auto_intervals(dataset.n(), cfg.smoothness_p);
        cfg.rho = auto_rho(dataset.n(), cfg.smoothness_p);
    }
    const FunctionalDataset centered = dataset.centered() ? dataset : center_curves(dataset);

    SplineBasis basis(cfg.degree, cfg.intervals);
    Eigen::MatrixXd A = design_matrix(centered, basis, cfg.quadrature);
    Eigen::MatrixXd G = basis.penalty_matrix(cfg.penalty_order);
    if (cfg.intercept) {
        // Unpenalized intercept: extra all-ones design column, zero penalty.
        A.conservativeResize(Eigen::NoChange, A.cols() + 1);
        A.col(A.cols() - 1).setOnes();
        Eigen::MatrixXd Gx = Eigen::MatrixXd::Zero(G.rows() + 1, G.cols() + 1);
        Gx.topLeftCorner(G.rows(), G.cols()) = G;
        G = std::move(Gx);
    }
    PenalizedSystem system = assemble_system(std::move(A), std::move(G), cfg.rho);
    auto [theta, diag] = irls_fit(system, centered.responses(), CheckLoss(cfg.alpha), cfg.solver);

    QuantileModel model{basis,
                        cfg.intercept ? Eigen::VectorXd(theta.head(basis.dim())) : theta,
                        cfg.alpha,
                        cfg.rho,
                        cfg.penalty_order,
                        cfg.intercept ? theta[theta.size() - 1] : 0.0,
                        centered.grid(),
                        centered.mean_curve(),
                        cfg.quadrature,
                        std::move(diag)};
    return model;
}

/// Conditional-quantile prediction <Psi_hat, x - training mean> (+ intercept).
inline double predict(const QuantileModel& model, const CurveSample& curve) {
    check_same_grid(curve.grid, model.grid);
    CurveSample centered = curve;
    for (std::size_t i = 0; i < centered.values.size(); ++i) centered.values[i] -= model.mean_curve[i];
    const Eigen::VectorXd ip = curve_basis_inner_products(centered, model.basis, model.quadrature);
    return ip.dot(model.theta_hat) + model.intercept;
}

/// Pointwise values of the fitted coefficient function on out_grid.
inline std::vector<double> coefficient_function(const QuantileModel& model,
                                                const std::vector<double>& out_grid) {
    std::vector<double> vals(out_grid.size());
    for (std::size_t i = 0; i < out_grid.size(); ++i)
        vals[i] = model.basis.eval_spline(model.theta_hat, out_grid[i]);
    return vals;
}

/// Squared empirical semi-norm (1/n) sum_i <u, X_i>^2 over the dataset's
/// curves, the sample analogue of the covariance-operator semi-norm.
inline double empirical_seminorm_sq(const FunctionalDataset& ds, const std::vector<double>& fvals,
                                    QuadratureRule rule = QuadratureRule::trapezoid) {
    if (fvals.size() != ds.grid().size()) throw data_error("grid lengths differ");
    const std::vector<double> w = quadrature_weights(rule, ds.grid());
    Eigen::VectorXd wf(static_cast<Eigen::Index>(fvals.size()));
    for (std::size_t i = 0; i < fvals.size(); ++i) wf[static_cast<Eigen::Index>(i)] = w[i] * fvals[i];
    const Eigen::VectorXd ip = ds.curves() * wf;
    return ip.squaredNorm() / static_cast<double>(ds.n());
}

namespace detail {

inline FunctionalDataset subset(const FunctionalDataset& ds, const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), ds.grid_size());
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    std::vector<std::string> ids;
    ids.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        X.row(static_cast<Eigen::Index>(i)) = ds.curves().row(rows[i]);
        y[static_cast<Eigen::Index>(i)] = ds.responses()[rows[i]];
        ids.push_back(ds.ids()[static_cast<std::size_t>(rows[i])]);
    }
    return FunctionalDataset(ds.grid(), std::move(X), std::move(y), std::move(ids));
}

} // namespace detail

/// K-fold cross-validation over a rho grid, minimizing held-out mean check
/// loss; exact ties break toward the larger (smoother) rho. Fold membership is
/// a seeded shuffle, so the selection is reproducible.
inline double select_rho(const FunctionalDataset& dataset, const FitConfig& config,
                         const std::vector<double>& rho_grid, int folds, std::uint64_t seed = 0) {
    if (rho_grid.empty()) throw config_error("rho grid must be nonempty");
    if (folds < 2 || folds > dataset.n()) throw config_error("folds must satisfy 2 <= folds <= n");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(dataset.n()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(splitmix64(seed));
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }

    const CheckLoss loss(config.alpha);
    double best_rho = rho_grid.front();
    double best_loss = std::numeric_limits<double>::infinity();
    std::vector<double> sorted_grid = rho_grid;
    std::sort(sorted_grid.begin(), sorted_grid.end());
    for (const double rho : sorted_grid) {
        double total = 0.0;
        Eigen::Index total_count = 0;
        for (int f = 0; f < folds; ++f) {
            std::vector<Eigen::Index> train_rows, test_rows;
            for (std::size_t i = 0; i < order.size(); ++i) {
                (static_cast<int>(i % static_cast<std::size_t>(folds)) == f ? test_rows : train_rows)
                    .push_back(order[i]);
            }
            if (train_rows.empty() || test_rows.empty()) throw config_error("degenerate fold split");
            FitConfig fold_cfg = config;
            fold_cfg.auto_k_rho = false;
            fold_cfg.rho = rho;
            const QuantileModel model = fit(detail::subset(dataset, train_rows), fold_cfg);
            for (const Eigen::Index i : test_rows) {
                total += check_loss(loss, dataset.responses()[i] - predict(model, dataset.curve(i)));
                ++total_count;
            }
        }
        const double mean_loss = total / static_cast<double>(total_count);
        if (mean_loss <= best_loss) {  // <= prefers the larger rho on exact ties
            best_loss = mean_loss;
            best_rho = rho;
        }
    }
    return best_rho;
}

} // namespace fqr
