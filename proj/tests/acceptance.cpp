// Acceptance suite: end-to-end checks of the estimator's contracts, printed
// one pass/fail line per criterion. Returns nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "fqr/bspline.hpp"
#include "fqr/estimator.hpp"
#include "fqr/experiments.hpp"
#include "fqr/random.hpp"
#include "fqr/simulate.hpp"
#include "fqr/solver.hpp"
#include "fqr/stats.hpp"

using namespace fqr;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s  criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", number, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double exact_objective(const PenalizedSystem& sys, const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& y, const CheckLoss& loss) {
    return objective(theta, sys.design, y, sys.rho, sys.penalty, loss);
}

// --- criterion 1: IRLS objective within 1e-5 relative of the subgradient oracle
void criterion_oracle_equivalence() {
    const double rhos[3] = {0.0, 0.01, 1.0};
    const double alphas[3] = {0.1, 0.5, 0.9};
    double worst = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
        std::mt19937_64 rng(splitmix64(1000 + static_cast<std::uint64_t>(inst)));
        const int dim = 4 + static_cast<int>(rng() % 5);        // dim <= 8
        const int n = dim + 10 + static_cast<int>(rng() % 30);  // n <= 50
        const SplineBasis basis(2, dim - 2);
        Eigen::MatrixXd A(n, dim);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < dim; ++j) A(i, j) = standard_normal(rng);
            y[i] = standard_normal(rng);
        }
        const double rho = rhos[inst % 3];
        const CheckLoss loss(alphas[(inst / 3) % 3]);
        const PenalizedSystem sys = assemble_system(A, basis.penalty_matrix(1), rho);
        const auto [theta, diag] = irls_fit(sys, y, loss);
        const Eigen::VectorXd oracle = subgradient_oracle(sys, y, loss, 2000000);
        const double ji = exact_objective(sys, theta, y, loss);
        const double jo = exact_objective(sys, oracle, y, loss);
        worst = std::max(worst, std::abs(ji - jo) / std::abs(jo));
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "worst relative gap %.3g over 20 instances, tolerance 1e-5", worst);
    report(1, "oracle equivalence", worst <= 1e-5, buf);
}

// --- criterion 2: constant curves reduce the fit to the empirical quantile
void criterion_quantile_reduction() {
    const int n = 201;
    std::mt19937_64 rng(splitmix64(77));
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = 3.0 * standard_normal(rng) + 0.5;
    std::vector<double> grid(41);
    for (int j = 0; j <= 40; ++j) grid[static_cast<std::size_t>(j)] = j / 40.0;
    const FunctionalDataset ds(grid, Eigen::MatrixXd::Constant(n, 41, 1.0), y);
    const SplineBasis basis(1, 3);
    const Eigen::MatrixXd A = design_matrix(ds, basis, QuadratureRule::trapezoid);
    const PenalizedSystem sys = assemble_system(A, basis.penalty_matrix(1), 1e-10);
    double worst = 0.0;
    for (const double alpha : {0.25, 0.5, 0.75}) {
        const auto [theta, diag] = irls_fit(sys, y, CheckLoss(alpha));
        const double fitted = (A * theta)(0);
        const double target = empirical_quantile(std::vector<double>(y.data(), y.data() + n), alpha);
        worst = std::max(worst, std::abs(fitted - target));
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "worst |prediction - empirical quantile| = %.3g, tolerance 1e-3",
                  worst);
    report(2, "quantile reduction with constant curves", worst <= 1e-3, buf);
}

// --- criterion 3: penalty nullspace dimension and quadrature exactness
void criterion_penalty_correctness() {
    bool pass = true;
    std::string detail;
    for (const auto& [q, m] : std::vector<std::pair<int, int>>{{2, 1}, {3, 1}, {3, 2}, {3, 3}}) {
        for (const int k : {4, 16}) {
            const SplineBasis basis(q, k);
            const Eigen::MatrixXd G = basis.penalty_matrix(m);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
            const double mx = es.eigenvalues().maxCoeff();
            int nullity = 0;
            for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
                if (es.eigenvalues()[i] < 1e-10 * mx) ++nullity;
            if (nullity != m) {
                pass = false;
                detail = "nullity " + std::to_string(nullity) + " != m=" + std::to_string(m);
            }
            // 1e5-point oracle for theta' G theta. The top-order integrand
            // (m == q) is piecewise constant, which the midpoint rule
            // integrates exactly; lower orders are continuous and use the
            // composite trapezoid.
            std::mt19937_64 rng(splitmix64(static_cast<std::uint64_t>(q * 100 + m * 10 + k)));
            Eigen::VectorXd theta(basis.dim());
            for (int j = 0; j < basis.dim(); ++j) theta[j] = standard_normal(rng);
            const double quad_form = theta.dot(G * theta);
            const int points = 100000;
            double oracle = 0.0;
            if (m == q) {
                for (int i = 0; i < points; ++i) {
                    const double t = (i + 0.5) / points;
                    const double v = theta.dot(basis.eval_deriv(t, m));
                    oracle += v * v / points;
                }
            } else {
                double prev = 0.0;
                for (int i = 0; i <= points; ++i) {
                    const double t = static_cast<double>(i) / points;
                    const double v = theta.dot(basis.eval_deriv(t, m));
                    if (i > 0) oracle += 0.5 * (prev + v * v) / points;
                    prev = v * v;
                }
            }
            if (std::abs(quad_form - oracle) > 1e-6 * std::abs(oracle)) {
                pass = false;
                detail = "quadrature form off by " +
                         std::to_string(std::abs(quad_form - oracle) / std::abs(oracle));
            }
        }
    }
    if (pass) detail = "nullspace dims and 1e5-point integration oracle agree at 1e-6 relative";
    report(3, "penalty correctness", pass, detail);
}

// --- criterion 4: spline approximation sup-error decay
void criterion_approximation_rate() {
    std::vector<double> ks, errs;
    for (const int k : {4, 8, 16, 32}) {
        const SplineBasis basis(3, k);
        const Eigen::VectorXd theta =
            basis.approximate([](double t) { return std::sin(2.0 * std::numbers::pi * t); });
        double sup = 0.0;
        for (int i = 0; i <= 4096; ++i) {
            const double t = i / 4096.0;
            sup = std::max(sup,
                           std::abs(basis.eval_spline(theta, t) - std::sin(2.0 * std::numbers::pi * t)));
        }
        ks.push_back(k);
        errs.push_back(sup);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        const double x = std::log(ks[i]), y = std::log(errs[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(ks.size());
    const double slope = (sxy - sx * sy / n) / (sxx - sx * sx / n);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "log-log slope %.3f, required <= -3.5 (theoretical -4)", slope);
    report(4, "spline approximation rate", slope <= -3.5, buf);
}

// --- criterion 5: Monte Carlo error decay under the asymptotic recipe
void criterion_convergence_rate() {
    SimConfig base;
    base.alpha = 0.5;
    base.sigma = 0.5;
    base.noise = NoiseKind::gaussian;
    base.covariate = CovariateLaw::brownian;
    base.psi_true = PsiKind::sine;
    base.seed = 20240801;
    FitConfig fc;
    fc.degree = 3;
    fc.penalty_order = 2;
    fc.smoothness_p = 2;
    const RateReport r = rate_experiment(base, {100, 200, 400, 800}, 20, fc, 4);
    bool decreasing = true;
    for (std::size_t i = 1; i < r.rows.size(); ++i)
        if (!(r.rows[i].mean_err_n < r.rows[i - 1].mean_err_n)) decreasing = false;
    const bool slope_ok = r.slope >= -1.0 && r.slope <= -0.2;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "slope %.3f in [-1.0,-0.2] (theoretical -0.444), errors %s decreasing", r.slope,
                  decreasing ? "strictly" : "NOT");
    report(5, "convergence-rate experiment", decreasing && slope_ok, buf);
}

// --- criterion 6: out-of-sample coverage
void criterion_coverage() {
    bool pass = true;
    std::ostringstream detail;
    for (const double alpha : {0.1, 0.5, 0.9}) {
        int within = 0;
        for (std::uint64_t s = 1; s <= 5; ++s) {
            SimConfig cfg;
            cfg.n = 1000;
            cfg.alpha = alpha;
            cfg.sigma = 0.5;
            cfg.psi_true = PsiKind::sine;
            cfg.seed = mix_seed(606, static_cast<std::uint64_t>(alpha * 1000), s);
            FitConfig fc;
            fc.degree = 3;
            fc.penalty_order = 2;
            fc.smoothness_p = 2;
            fc.auto_k_rho = true;
            const CoverageResult r = coverage_experiment(cfg, 1000, fc);
            within += std::abs(r.coverage - alpha) <= 0.04;
        }
        detail << "alpha " << alpha << ": " << within << "/5  ";
        if (within < 4) pass = false;
    }
    report(6, "out-of-sample coverage within +-0.04", pass, detail.str() + "(need >= 4/5 each)");
}

// --- criterion 7: module invariant suites
void criterion_invariants() {
    bool pass = true;
    std::string failed;

    {  // partition of unity
        std::mt19937_64 rng(1);
        for (int trial = 0; trial < 10000 && pass; ++trial) {
            const SplineBasis b(static_cast<int>(rng() % 5), 1 + static_cast<int>(rng() % 24));
            if (std::abs(b.eval(uniform01(rng)).sum() - 1.0) >= 1e-12) {
                pass = false;
                failed = "partition of unity";
            }
        }
    }
    {  // objective convexity
        std::mt19937_64 rng(2);
        const SplineBasis basis(3, 4);
        Eigen::MatrixXd A(25, basis.dim());
        Eigen::VectorXd y(25);
        for (int i = 0; i < 25; ++i) {
            for (int j = 0; j < basis.dim(); ++j) A(i, j) = standard_normal(rng);
            y[i] = standard_normal(rng);
        }
        const Eigen::MatrixXd G = basis.penalty_matrix(2);
        const CheckLoss loss(0.7);
        for (int trial = 0; trial < 500 && pass; ++trial) {
            Eigen::VectorXd t1(basis.dim()), t2(basis.dim());
            for (int j = 0; j < basis.dim(); ++j) {
                t1[j] = standard_normal(rng);
                t2[j] = standard_normal(rng);
            }
            const double lam = uniform01(rng);
            const double lhs = objective(lam * t1 + (1 - lam) * t2, A, y, 0.05, G, loss);
            const double rhs =
                lam * objective(t1, A, y, 0.05, G, loss) + (1 - lam) * objective(t2, A, y, 0.05, G, loss);
            if (lhs > rhs + 1e-12) {
                pass = false;
                failed = "objective convexity";
            }
        }
    }
    {  // smoothed-objective monotonicity within epsilon stages
        std::mt19937_64 rng(3);
        const SplineBasis basis(3, 5);
        Eigen::MatrixXd A(40, basis.dim());
        Eigen::VectorXd y(40);
        for (int i = 0; i < 40; ++i) {
            for (int j = 0; j < basis.dim(); ++j) A(i, j) = standard_normal(rng);
            y[i] = standard_normal(rng);
        }
        const PenalizedSystem sys = assemble_system(A, basis.penalty_matrix(2), 0.01);
        const auto [theta, diag] = irls_fit(sys, y, CheckLoss(0.2));
        for (const auto& stage : diag.smoothed_traces) {
            for (std::size_t i = 1; i < stage.size(); ++i) {
                if (stage[i] > stage[i - 1] + 1e-12 * (1.0 + std::abs(stage[i - 1]))) {
                    pass = false;
                    failed = "smoothed-objective monotonicity";
                }
            }
        }
    }
    {  // lambda_min monotone in rho
        std::mt19937_64 rng(4);
        const SplineBasis basis(2, 4);
        Eigen::MatrixXd A(15, basis.dim());
        for (int i = 0; i < 15; ++i)
            for (int j = 0; j < basis.dim(); ++j) A(i, j) = standard_normal(rng);
        const Eigen::MatrixXd G = basis.penalty_matrix(1);
        double prev = -1.0;
        for (const double rho : {0.0, 1e-4, 1e-2, 1e-1, 1.0, 10.0}) {
            const double lam = assemble_system(A, G, rho).lambda_min;
            if (lam < prev - 1e-10) {
                pass = false;
                failed = "lambda_min monotonicity";
            }
            prev = lam;
        }
    }
    {  // prediction bilinearity
        SimConfig cfg;
        cfg.n = 30;
        cfg.grid_size = 41;
        cfg.seed = 5;
        const SimulatedData sim = simulate_dataset(cfg);
        FitConfig fc;
        fc.degree = 3;
        fc.intervals = 4;
        fc.penalty_order = 2;
        fc.rho = 1e-3;
        const QuantileModel model = fit(sim.dataset, fc);
        const CurveSample x1 = sim.dataset.curve(0), x2 = sim.dataset.curve(1);
        const double a = 1.7, b = -0.4;
        CurveSample combo = x1;
        for (std::size_t j = 0; j < combo.values.size(); ++j)
            combo.values[j] = a * x1.values[j] + b * x2.values[j] - (a + b - 1.0) * model.mean_curve[j];
        const double lhs = predict(model, combo);
        const double rhs = a * predict(model, x1) + b * predict(model, x2);
        if (std::abs(lhs - rhs) >= 1e-10) {
            pass = false;
            failed = "prediction bilinearity";
        }
    }
    report(7, "invariant suites", pass,
           pass ? "partition of unity, convexity, monotonicity, lambda_min, bilinearity"
                : "failed: " + failed);
}

// --- criterion 8: byte-identical rates output for a fixed seed
void criterion_determinism() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("fqr_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const std::string flags =
        " rates --p 2 --ns 50,100,200,400 --reps 10 --seed 7 --sigma 0.5 --alpha 0.5 --jobs 3 --out ";
    const std::string cli = FQR_CLI_PATH;
    const auto run = [&](const std::string& prefix) {
        const std::string cmd = cli + flags + (dir / prefix).string() + " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return status != -1 && WEXITSTATUS(status) == 0;
    };
    const auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    bool pass = run("a") && run("b");
    if (pass) {
        const std::string a_csv = slurp(dir / "a.csv"), b_csv = slurp(dir / "b.csv");
        pass = !a_csv.empty() && a_csv == b_csv && slurp(dir / "a.json") == slurp(dir / "b.json");
    }
    fs::remove_all(dir);
    report(8, "rates determinism (byte-identical CSV)", pass,
           pass ? "two seeded runs byte-identical" : "outputs differ or runs failed");
}

} // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    criterion_oracle_equivalence();
    criterion_quantile_reduction();
    criterion_penalty_correctness();
    criterion_approximation_rate();
    criterion_convergence_rate();
    criterion_coverage();
    criterion_invariants();
    criterion_determinism();
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%d/8 criteria passed in %.1f s\n", 8 - g_failures, dt);
    return g_failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
