#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fqr/estimator.hpp"
#include "fqr/model_io.hpp"
#include "fqr/random.hpp"
#include "fqr/simulate.hpp"

using namespace fqr;

namespace {

SimulatedData small_sim(std::uint64_t seed, Eigen::Index n = 50) {
    SimConfig cfg;
    cfg.n = n;
    cfg.grid_size = 51;
    cfg.psi_true = PsiKind::sine;
    cfg.sigma = 0.3;
    cfg.seed = seed;
    return simulate_dataset(cfg);
}

FitConfig small_fit_config() {
    FitConfig cfg;
    cfg.degree = 3;
    cfg.intervals = 4;
    cfg.penalty_order = 2;
    cfg.rho = 1e-3;
    return cfg;
}

} // namespace

TEST_CASE("fit configuration validation") {
    const SimulatedData sim = small_sim(61);
    SECTION("alpha on the boundary rejected") {
        FitConfig cfg = small_fit_config();
        cfg.alpha = 0.0;
        CHECK_THROWS_AS(fit(sim.dataset, cfg), config_error);
    }
    SECTION("penalty order above the degree rejected") {
        FitConfig cfg = small_fit_config();
        cfg.penalty_order = 4;
        CHECK_THROWS_AS(fit(sim.dataset, cfg), config_error);
    }
    SECTION("auto rule needs m <= p <= q") {
        FitConfig cfg = small_fit_config();
        cfg.auto_k_rho = true;
        cfg.smoothness_p = 5;
        CHECK_THROWS_AS(fit(sim.dataset, cfg), config_error);
        cfg.smoothness_p = 1;  // below the penalty order
        CHECK_THROWS_AS(fit(sim.dataset, cfg), config_error);
    }
    SECTION("asymptotic recipe values") {
        CHECK(auto_intervals(800, 2) == 2);
        CHECK(auto_rho(800, 2) == Catch::Approx(std::pow(800.0, -4.0 / 9.0)));
    }
}

TEST_CASE("fit and predict") {
    const SimulatedData sim = small_sim(67);
    const QuantileModel model = fit(sim.dataset, small_fit_config());

    SECTION("simulated fit converges with diagnostics") {
        CHECK(model.diagnostics.converged);
        CHECK(model.theta_hat.size() == model.basis.dim());
        CHECK(model.diagnostics.lambda_min > 0.0);
    }
    SECTION("the training mean curve predicts zero") {
        CHECK(std::abs(predict(model, CurveSample{model.grid, model.mean_curve})) < 1e-12);
    }
    SECTION("zero coefficients predict zero everywhere") {
        QuantileModel zeroed = model;
        zeroed.theta_hat.setZero();
        CHECK(predict(zeroed, sim.dataset.curve(3)) == 0.0);
    }
    SECTION("training predictions equal the design rows") {
        const FunctionalDataset centered = center_curves(sim.dataset);
        const Eigen::MatrixXd A = design_matrix(centered, model.basis, model.quadrature);
        for (Eigen::Index i = 0; i < 10; ++i) {
            const double via_design = A.row(i).dot(model.theta_hat);
            CHECK(std::abs(predict(model, sim.dataset.curve(i)) - via_design) < 1e-10);
        }
    }
    SECTION("grid mismatch rejected") {
        std::vector<double> other_grid(31);
        for (int j = 0; j <= 30; ++j) other_grid[static_cast<std::size_t>(j)] = j / 30.0;
        CHECK_THROWS_AS(predict(model, CurveSample{other_grid, std::vector<double>(31, 0.0)}),
                        data_error);
    }
    SECTION("prediction is linear at fixed centering") {
        const CurveSample x1 = sim.dataset.curve(0);
        const CurveSample x2 = sim.dataset.curve(1);
        const double a = 0.7, b = -1.3;
        CurveSample combo = x1;
        for (std::size_t j = 0; j < combo.values.size(); ++j)
            combo.values[j] =
                a * x1.values[j] + b * x2.values[j] - (a + b - 1.0) * model.mean_curve[j];
        const double lhs = predict(model, combo);
        const double rhs = a * predict(model, x1) + b * predict(model, x2);
        CHECK(std::abs(lhs - rhs) < 1e-10);
    }
    SECTION("refitting identical inputs is bit-for-bit reproducible") {
        const QuantileModel again = fit(sim.dataset, small_fit_config());
        CHECK(again.theta_hat == model.theta_hat);
    }
}

TEST_CASE("coefficient function") {
    const SimulatedData sim = small_sim(71, 30);
    QuantileModel model = fit(sim.dataset, small_fit_config());
    SECTION("all-ones coefficients evaluate to one") {
        model.theta_hat.setOnes();
        for (const double v : coefficient_function(model, {0.0, 0.25, 0.5, 1.0}))
            CHECK(v == Catch::Approx(1.0).margin(1e-14));
    }
    SECTION("zero coefficients evaluate to zero") {
        model.theta_hat.setZero();
        for (const double v : coefficient_function(model, {0.1, 0.9})) CHECK(v == 0.0);
    }
    SECTION("matches pointwise spline evaluation") {
        const std::vector<double> vals = coefficient_function(model, model.grid);
        for (std::size_t j = 0; j < model.grid.size(); ++j)
            CHECK(vals[j] == model.basis.eval_spline(model.theta_hat, model.grid[j]));
    }
    SECTION("out-of-domain points rejected") {
        CHECK_THROWS_AS(coefficient_function(model, {0.5, 1.5}), config_error);
    }
}

TEST_CASE("empirical semi-norm") {
    const SimulatedData sim = small_sim(73, 40);
    SECTION("zero function") {
        CHECK(empirical_seminorm_sq(sim.dataset, std::vector<double>(51, 0.0)) == 0.0);
    }
    SECTION("single normalized curve") {
        std::vector<double> grid(21);
        for (int j = 0; j <= 20; ++j) grid[static_cast<std::size_t>(j)] = j / 20.0;
        Eigen::MatrixXd X = Eigen::MatrixXd::Constant(1, 21, 1.0);
        const FunctionalDataset ds(grid, X, Eigen::VectorXd::Zero(1));
        // <u, X_1> = 1 for u == X_1 == 1, so the semi-norm square is 1
        CHECK(empirical_seminorm_sq(ds, std::vector<double>(21, 1.0)) == Catch::Approx(1.0));
    }
    SECTION("agrees with the gram quadratic form on splines") {
        const SplineBasis basis(2, 4);
        const Eigen::MatrixXd A = design_matrix(center_curves(sim.dataset), basis,
                                                QuadratureRule::trapezoid);
        const PenalizedSystem sys = assemble_system(A, basis.penalty_matrix(1), 0.0);
        std::mt19937_64 rng(79);
        const FunctionalDataset centered = center_curves(sim.dataset);
        for (int trial = 0; trial < 10; ++trial) {
            Eigen::VectorXd theta(basis.dim());
            for (int j = 0; j < basis.dim(); ++j) theta[j] = standard_normal(rng);
            std::vector<double> u(centered.grid().size());
            const Eigen::MatrixXd B = basis.sample_for_quadrature(centered.grid());
            for (std::size_t j = 0; j < u.size(); ++j)
                u[j] = B.row(static_cast<Eigen::Index>(j)).dot(theta);
            const double lhs = empirical_seminorm_sq(centered, u);
            const double rhs = theta.dot(sys.gram * theta);
            CHECK(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(rhs)));
        }
    }
    SECTION("grid mismatch rejected") {
        CHECK_THROWS_AS(empirical_seminorm_sq(sim.dataset, std::vector<double>(11, 1.0)), data_error);
    }
}

TEST_CASE("regularization path") {
    SECTION("fitted roughness is nonincreasing in rho") {
        const SimulatedData sim = small_sim(83, 60);
        const SplineBasis basis(3, 4);
        const Eigen::MatrixXd G = basis.penalty_matrix(2);
        double prev = std::numeric_limits<double>::infinity();
        for (const double rho : {1e-6, 1e-4, 1e-2, 1.0, 100.0}) {
            FitConfig cfg = small_fit_config();
            cfg.rho = rho;
            const QuantileModel model = fit(sim.dataset, cfg);
            const double roughness = model.theta_hat.dot(G * model.theta_hat);
            CHECK(roughness <= prev + 1e-10);
            prev = roughness;
        }
    }
}

TEST_CASE("cross-validated rho selection") {
    SECTION("singleton grid returns its element") {
        const SimulatedData sim = small_sim(89, 20);
        CHECK(select_rho(sim.dataset, small_fit_config(), {0.125}, 4, 1) == 0.125);
    }
    SECTION("degenerate folds rejected") {
        const SimulatedData sim = small_sim(97, 12);
        CHECK_THROWS_AS(select_rho(sim.dataset, small_fit_config(), {0.1}, 1, 1), config_error);
        CHECK_THROWS_AS(select_rho(sim.dataset, small_fit_config(), {0.1}, 13, 1), config_error);
    }
    SECTION("identical seeds select identically") {
        const SimulatedData sim = small_sim(101, 24);
        const std::vector<double> grid{1e-5, 1e-2, 10.0};
        const double first = select_rho(sim.dataset, small_fit_config(), grid, 4, 7);
        const double second = select_rho(sim.dataset, small_fit_config(), grid, 4, 7);
        CHECK(first == second);
    }
    SECTION("pure-noise responses favor heavy smoothing") {
        // High-capacity basis on rough curves: held-out check loss punishes the
        // near-interpolating fit, so cross-validation should land on a large rho.
        int smooth_wins = 0;
        for (int rep = 0; rep < 50; ++rep) {
            std::mt19937_64 rng(mix_seed(904, 0, static_cast<std::uint64_t>(rep)));
            std::vector<double> grid(41);
            for (int j = 0; j <= 40; ++j) grid[static_cast<std::size_t>(j)] = j / 40.0;
            Eigen::MatrixXd X(24, 41);
            Eigen::VectorXd y(24);
            for (int i = 0; i < 24; ++i) {
                for (int j = 0; j <= 40; ++j) X(i, j) = standard_normal(rng);
                y[i] = standard_normal(rng);  // noise only, independent of X
            }
            const FunctionalDataset ds(grid, X, y);
            FitConfig cfg = small_fit_config();
            cfg.intervals = 20;
            cfg.penalty_order = 1;
            const double rho =
                select_rho(ds, cfg, {1e-6, 1e2, 1e6}, 4, static_cast<std::uint64_t>(rep));
            smooth_wins += rho >= 1e2;
        }
        CHECK(smooth_wins >= 40);  // >= 80% of 50 replications
    }
}

TEST_CASE("model serialization") {
    const SimulatedData sim = small_sim(103, 35);
    FitConfig cfg = small_fit_config();
    cfg.alpha = 0.75;
    const QuantileModel model = fit(sim.dataset, cfg);
    SECTION("numeric fields round-trip bit-exactly") {
        const QuantileModel back = model_from_json(model_to_json(model));
        CHECK(back.theta_hat == model.theta_hat);
        CHECK(back.mean_curve == model.mean_curve);
        CHECK(back.grid == model.grid);
        CHECK(back.alpha == model.alpha);
        CHECK(back.rho == model.rho);
        CHECK(back.basis.knots() == model.basis.knots());
        for (Eigen::Index i = 0; i < 5; ++i)
            CHECK(predict(back, sim.dataset.curve(i)) == predict(model, sim.dataset.curve(i)));
    }
    SECTION("text round trip through dump/parse") {
        const auto j = nlohmann::json::parse(model_to_json(model).dump());
        const QuantileModel back = model_from_json(j);
        CHECK(back.theta_hat == model.theta_hat);
    }
}

TEST_CASE("unpenalized intercept") {
    // Shifted responses with a centered functional signal: the intercept
    // should absorb the shift that the no-intercept model cannot represent.
    const SimulatedData sim = small_sim(107, 80);
    FunctionalDataset shifted(sim.dataset.grid(), sim.dataset.curves(),
                              sim.dataset.responses().array() + 5.0);
    FitConfig cfg = small_fit_config();
    cfg.intercept = true;
    const QuantileModel model = fit(shifted, cfg);
    CHECK(model.theta_hat.size() == model.basis.dim());
    CHECK(std::abs(model.intercept - 5.0) < 0.5);
    FitConfig plain_cfg = small_fit_config();
    const QuantileModel plain = fit(shifted, plain_cfg);
    // in-sample check loss should improve with the intercept
    const CheckLoss loss(cfg.alpha);
    double with_b = 0.0, without_b = 0.0;
    for (Eigen::Index i = 0; i < shifted.n(); ++i) {
        with_b += check_loss(loss, shifted.responses()[i] - predict(model, shifted.curve(i)));
        without_b += check_loss(loss, shifted.responses()[i] - predict(plain, shifted.curve(i)));
    }
    CHECK(with_b < without_b);
}
