#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fqr/csv.hpp"
#include "fqr/errors.hpp"
#include "fqr/estimator.hpp"
#include "fqr/simulate.hpp"

namespace fqr {

struct RateRow {
    Eigen::Index n = 0;
    int reps_used = 0;
    int reps_excluded = 0;  // replications dropped for non-convergence
    double mean_err_n = 0.0;
    double se_n = 0.0;
    double mean_err_2 = 0.0;
    double se_2 = 0.0;
};

/// Per-n Monte Carlo errors plus the fitted log-log slope of the empirical
/// semi-norm error against n, with its least-squares standard error.
struct RateReport {
    std::vector<RateRow> rows;
    double slope = 0.0;
    double slope_se = 0.0;
    double slope_2 = 0.0;
};

namespace detail {

struct SlopeFit {
    double slope = 0.0;
    double se = 0.0;
};

// Least squares of log(err) on log(n).
inline SlopeFit loglog_slope(const std::vector<double>& ns, const std::vector<double>& errs) {
    const std::size_t m = ns.size();
    double sx = 0.0, sy = 0.0;
    std::vector<double> lx(m), ly(m);
    for (std::size_t i = 0; i < m; ++i) {
        lx[i] = std::log(ns[i]);
        ly[i] = std::log(errs[i]);
        sx += lx[i];
        sy += ly[i];
    }
    const double mx = sx / static_cast<double>(m), my = sy / static_cast<double>(m);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    SlopeFit fit;
    fit.slope = sxy / sxx;
    if (m > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double r = ly[i] - my - fit.slope * (lx[i] - mx);
            rss += r * r;
        }
        fit.se = std::sqrt(rss / (static_cast<double>(m) - 2.0) / sxx);
    }
    return fit;
}

// Run fn(index) for index in [0, count) on up to `jobs` threads. Results must
// be written to per-index slots so the reduction is order-independent.
template <typename Fn>
inline void parallel_for(int count, int jobs, Fn fn) {
    jobs = std::max(1, std::min(jobs, count));
    if (jobs == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace detail

/// One Monte Carlo replication of the full pipeline: simulate, fit with the
/// asymptotic k/rho recipe, and measure both error semi-norms against truth.
struct ReplicationResult {
    bool converged = false;
    double err_n = 0.0;
    double err_2 = 0.0;
};

inline ReplicationResult run_replication(const SimConfig& cfg, const FitConfig& fit_template) {
    const SimulatedData sim = simulate_dataset(cfg);
    FitConfig fc = fit_template;
    fc.alpha = cfg.alpha;
    fc.auto_k_rho = true;
    const QuantileModel model = fit(sim.dataset, fc);
    const std::vector<double> psi_hat = coefficient_function(model, sim.dataset.grid());
    std::vector<double> diff(psi_hat.size());
    for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = psi_hat[j] - sim.psi_values[j];
    ReplicationResult out;
    out.converged = model.diagnostics.converged;
    out.err_n = empirical_seminorm_sq(sim.dataset, diff, fc.quadrature);
    out.err_2 = law_seminorm_sq(diff, sim.dataset.grid(), cfg.covariate, cfg.kl_terms);
    return out;
}

/// Error decay experiment over increasing sample sizes with the asymptotic
/// k/rho recipe. Per-replication seeds derive from (base seed, n, index), so
/// reports are reproducible and independent of the degree of parallelism.
inline RateReport rate_experiment(const SimConfig& base, const std::vector<Eigen::Index>& ns,
                                  int reps, const FitConfig& fit_template, int jobs = 1) {
    if (ns.size() < 4) throw config_error("rate experiment needs at least 4 sample sizes");
    for (std::size_t i = 1; i < ns.size(); ++i)
        if (!(ns[i] > ns[i - 1])) throw config_error("sample sizes must be increasing");
    if (reps < 10) throw config_error("rate experiment needs at least 10 replications");
    fit_template.validate();

    RateReport report;
    std::vector<double> used_ns, used_err_n, used_err_2;
    for (const Eigen::Index n : ns) {
        std::vector<ReplicationResult> results(static_cast<std::size_t>(reps));
        detail::parallel_for(reps, jobs, [&](int rep) {
            SimConfig cfg = base;
            cfg.n = n;
            cfg.seed = mix_seed(base.seed, static_cast<std::uint64_t>(n),
                                static_cast<std::uint64_t>(rep));
            results[static_cast<std::size_t>(rep)] = run_replication(cfg, fit_template);
        });
        RateRow row;
        row.n = n;
        double s1 = 0.0, s2 = 0.0, q1 = 0.0, q2 = 0.0;
        for (const auto& r : results) {
            if (!r.converged) {
                ++row.reps_excluded;
                continue;
            }
            ++row.reps_used;
            s1 += r.err_n;
            s2 += r.err_2;
            q1 += r.err_n * r.err_n;
            q2 += r.err_2 * r.err_2;
        }
        if (row.reps_used == 0) throw numerical_error("all replications failed at n = " + std::to_string(n));
        const double m = static_cast<double>(row.reps_used);
        row.mean_err_n = s1 / m;
        row.mean_err_2 = s2 / m;
        if (row.reps_used > 1) {
            row.se_n = std::sqrt(std::max(0.0, (q1 - m * row.mean_err_n * row.mean_err_n) / (m - 1.0)) / m);
            row.se_2 = std::sqrt(std::max(0.0, (q2 - m * row.mean_err_2 * row.mean_err_2) / (m - 1.0)) / m);
        }
        report.rows.push_back(row);
        used_ns.push_back(static_cast<double>(n));
        used_err_n.push_back(row.mean_err_n);
        used_err_2.push_back(row.mean_err_2);
    }
    report.slope = detail::loglog_slope(used_ns, used_err_n).slope;
    report.slope_se = detail::loglog_slope(used_ns, used_err_n).se;
    report.slope_2 = detail::loglog_slope(used_ns, used_err_2).slope;
    return report;
}

/// Out-of-sample quantile coverage: fit on n training pairs, report the
/// fraction of m fresh pairs with y at or below the predicted quantile. The
/// tie counts are reported separately for noise-free edge cases.
struct CoverageResult {
    double coverage = 0.0;   // fraction with y <= prediction
    int count_le = 0;
    int count_lt = 0;
    int m = 0;
    bool converged = false;
};

inline CoverageResult coverage_experiment(const SimConfig& train_cfg, int m,
                                          const FitConfig& fit_template) {
    if (m < 100) throw config_error("coverage experiment needs at least 100 test pairs");
    const SimulatedData train = simulate_dataset(train_cfg);
    FitConfig fc = fit_template;
    fc.alpha = train_cfg.alpha;
    const QuantileModel model = fit(train.dataset, fc);

    SimConfig test_cfg = train_cfg;
    test_cfg.n = m;
    test_cfg.seed = mix_seed(train_cfg.seed, 0x7e57u, 1);
    const SimulatedData test = simulate_dataset(test_cfg);

    CoverageResult out;
    out.m = m;
    out.converged = model.diagnostics.converged;
    for (Eigen::Index i = 0; i < test.dataset.n(); ++i) {
        const double pred = predict(model, test.dataset.curve(i));
        const double yi = test.dataset.responses()[i];
        if (yi <= pred) ++out.count_le;
        if (yi < pred) ++out.count_lt;
    }
    out.coverage = static_cast<double>(out.count_le) / static_cast<double>(m);
    return out;
}

inline void write_rate_csv(std::ostream& out, const RateReport& report) {
    out << "n,reps_used,mean_err_n,se_n,mean_err_2,se_2\n";
    for (const auto& row : report.rows) {
        out << row.n << "," << row.reps_used << "," << csv::format_number(row.mean_err_n) << ","
            << csv::format_number(row.se_n) << "," << csv::format_number(row.mean_err_2) << ","
            << csv::format_number(row.se_2) << "\n";
    }
}

inline nlohmann::json rate_report_to_json(const RateReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : report.rows) {
        rows.push_back({{"n", row.n},
                        {"reps_used", row.reps_used},
                        {"reps_excluded", row.reps_excluded},
                        {"mean_err_n", row.mean_err_n},
                        {"se_n", row.se_n},
                        {"mean_err_2", row.mean_err_2},
                        {"se_2", row.se_2}});
    }
    return nlohmann::json{{"slope", report.slope},
                          {"slope_stderr", report.slope_se},
                          {"slope_theoretical_norm", report.slope_2},
                          {"rows", rows}};
}

inline nlohmann::json coverage_to_json(const CoverageResult& r, const SimConfig& cfg) {
    return nlohmann::json{{"alpha", cfg.alpha}, {"n_train", cfg.n},       {"n_test", r.m},
                          {"coverage", r.coverage}, {"count_le", r.count_le}, {"count_lt", r.count_lt},
                          {"converged", r.converged}, {"seed", cfg.seed}};
}

} // namespace fqr
