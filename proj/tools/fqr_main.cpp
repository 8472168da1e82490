// Command-line front end for the functional quantile regression library:
// fit / predict over CSV+JSON files, synthetic data generation, and the
// Monte Carlo rate and coverage experiments.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fqr/csv.hpp"
#include "fqr/errors.hpp"
#include "fqr/estimator.hpp"
#include "fqr/experiments.hpp"
#include "fqr/model_io.hpp"
#include "fqr/simulate.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    return parts;
}

std::vector<double> parse_double_list(const std::string& s, const std::string& flag) {
    std::vector<double> out;
    for (const auto& p : split_list(s)) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(p, &pos));
            if (pos != p.size()) throw std::invalid_argument(p);
        } catch (const std::exception&) {
            throw fqr::config_error(flag + ": cannot parse '" + p + "' as a number");
        }
    }
    if (out.empty()) throw fqr::config_error(flag + ": empty list");
    return out;
}

std::vector<Eigen::Index> parse_index_list(const std::string& s, const std::string& flag) {
    std::vector<Eigen::Index> out;
    for (const double v : parse_double_list(s, flag)) {
        if (v < 1 || v != std::floor(v)) throw fqr::config_error(flag + ": expected positive integers");
        out.push_back(static_cast<Eigen::Index>(v));
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw fqr::data_error("cannot write output file '" + path + "'");
    out << content;
}

// Expands `--config file.json` into ordinary flag tokens placed right after
// the subcommand name; explicit command-line flags win because every option
// takes the last occurrence.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw fqr::config_error("--config needs a file path");
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                       args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (path.empty()) return args;
    std::ifstream in(path);
    if (!in) throw fqr::data_error("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw fqr::data_error("config file '" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw fqr::data_error("config file must hold a JSON object of flag values");
    std::vector<std::string> injected;
    for (const auto& [key, value] : j.items()) {
        const std::string flag = "--" + key;
        if (value.is_boolean()) {
            injected.push_back(flag + (value.get<bool>() ? "=true" : "=false"));
        } else if (value.is_string()) {
            injected.push_back(flag);
            injected.push_back(value.get<std::string>());
        } else if (value.is_number()) {
            injected.push_back(flag);
            injected.push_back(fqr::csv::format_number(value.get<double>()));
        } else if (value.is_array()) {
            std::string joined;
            for (const auto& item : value) {
                if (!joined.empty()) joined += ",";
                joined += item.is_string() ? item.get<std::string>()
                                           : fqr::csv::format_number(item.get<double>());
            }
            injected.push_back(flag);
            injected.push_back(joined);
        } else {
            throw fqr::data_error("config key '" + key + "' has an unsupported value type");
        }
    }
    if (args.empty()) return injected;
    args.insert(args.begin() + 1, injected.begin(), injected.end());
    return args;
}

struct CommonFitFlags {
    double alpha = 0.5;
    int degree = 3;
    int intervals = 8;
    int penalty_order = 2;
    double rho = 1e-4;
    std::string quadrature = "trapezoid";
    bool auto_k_rho = false;
    int p = 2;
    bool intercept = false;
};

void add_fit_flags(CLI::App* cmd, CommonFitFlags& flags, bool with_alpha = true) {
    if (with_alpha) cmd->add_option("--alpha", flags.alpha, "quantile order in (0,1)");
    cmd->add_option("--k", flags.intervals, "number of spline subintervals");
    cmd->add_option("--degree", flags.degree, "spline degree");
    cmd->add_option("--m", flags.penalty_order, "derivative order of the roughness penalty");
    cmd->add_option("--rho", flags.rho, "penalization parameter");
    cmd->add_option("--quadrature", flags.quadrature, "inner-product rule: trapezoid or simpson");
    cmd->add_flag("--auto", flags.auto_k_rho, "choose k and rho from n via the asymptotic recipe");
    cmd->add_option("--p", flags.p, "smoothness order used by --auto");
    cmd->add_flag("--intercept", flags.intercept, "add an unpenalized intercept");
}

fqr::FitConfig to_fit_config(const CommonFitFlags& flags) {
    fqr::FitConfig cfg;
    cfg.alpha = flags.alpha;
    cfg.degree = flags.degree;
    cfg.intervals = flags.intervals;
    cfg.penalty_order = flags.penalty_order;
    cfg.rho = flags.rho;
    cfg.quadrature = fqr::parse_quadrature_rule(flags.quadrature);
    cfg.auto_k_rho = flags.auto_k_rho;
    cfg.smoothness_p = flags.p;
    cfg.intercept = flags.intercept;
    return cfg;
}

struct SimFlags {
    Eigen::Index n = 200;
    int grid_points = 101;
    std::string covariate = "brownian";
    int kl_terms = 50;
    std::string psi = "quadratic";
    std::string noise = "gaussian";
    double sigma = 1.0;
    int df = 3;
    double alpha = 0.5;
    std::uint64_t seed = 0;
};

void add_sim_flags(CLI::App* cmd, SimFlags& flags, bool with_n) {
    if (with_n) cmd->add_option("--n", flags.n, "number of curve/response pairs");
    cmd->add_option("--grid-points", flags.grid_points, "size of the uniform sampling grid");
    cmd->add_option("--covariate", flags.covariate, "covariate law: brownian or karhunen_loeve");
    cmd->add_option("--kl-terms", flags.kl_terms, "terms of the Karhunen-Loeve expansion");
    cmd->add_option("--psi", flags.psi, "true coefficient function: sine, quadratic or cubic");
    cmd->add_option("--noise", flags.noise, "noise family: gaussian, student_t or exponential");
    cmd->add_option("--sigma", flags.sigma, "noise scale");
    cmd->add_option("--df", flags.df, "student_t degrees of freedom");
    cmd->add_option("--alpha", flags.alpha, "quantile order in (0,1)");
    cmd->add_option("--seed", flags.seed, "random seed");
}

fqr::SimConfig to_sim_config(const SimFlags& flags) {
    fqr::SimConfig cfg;
    cfg.n = flags.n;
    cfg.grid_size = flags.grid_points;
    cfg.covariate = fqr::parse_covariate_law(flags.covariate);
    cfg.kl_terms = flags.kl_terms;
    cfg.psi_true = fqr::parse_psi_kind(flags.psi);
    cfg.noise = fqr::parse_noise_kind(flags.noise);
    cfg.sigma = flags.sigma;
    cfg.student_df = flags.df;
    cfg.alpha = flags.alpha;
    cfg.seed = flags.seed;
    return cfg;
}

int run(std::vector<std::string> args) {
    CLI::App app{"Penalized spline estimation of conditional quantiles for curve-valued covariates"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);

    // fit ------------------------------------------------------------------
    auto* fit_cmd = app.add_subcommand("fit", "fit a quantile model from curves and responses");
    std::string fit_curves, fit_responses, fit_out, fit_rho_grid;
    CommonFitFlags fit_flags;
    int fit_folds = 5;
    std::uint64_t fit_seed = 0;
    bool allow_nonconverged = false;
    fit_cmd->add_option("--curves", fit_curves, "curves CSV")->required();
    fit_cmd->add_option("--responses", fit_responses, "responses CSV")->required();
    fit_cmd->add_option("--out", fit_out, "output model JSON path")->required();
    add_fit_flags(fit_cmd, fit_flags);
    fit_cmd->add_option("--rho-grid", fit_rho_grid, "rho candidates for cross-validation");
    fit_cmd->add_option("--folds", fit_folds, "cross-validation folds");
    fit_cmd->add_option("--seed", fit_seed, "seed for cross-validation fold shuffling");
    fit_cmd->add_flag("--allow-nonconverged", allow_nonconverged,
                      "exit 0 even if the solver did not converge");

    // predict --------------------------------------------------------------
    auto* predict_cmd = app.add_subcommand("predict", "predict quantiles for new curves");
    std::string pred_model, pred_curves, pred_out;
    predict_cmd->add_option("--model", pred_model, "model JSON from fit")->required();
    predict_cmd->add_option("--curves", pred_curves, "curves CSV on the training grid")->required();
    predict_cmd->add_option("--out", pred_out, "output CSV path")->required();

    // simulate ---------------------------------------------------------------
    auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic dataset with known truth");
    SimFlags sim_flags;
    std::string sim_out;
    add_sim_flags(sim_cmd, sim_flags, true);
    sim_cmd->add_option("--out", sim_out, "output prefix (.curves.csv, .responses.csv, .truth.json)")
        ->required();

    // rates ------------------------------------------------------------------
    auto* rates_cmd = app.add_subcommand("rates", "Monte Carlo error-decay experiment");
    SimFlags rates_sim;
    CommonFitFlags rates_fit;
    std::string rates_ns = "100,200,400,800", rates_out;
    int rates_reps = 20, rates_jobs = 1;
    add_sim_flags(rates_cmd, rates_sim, false);
    add_fit_flags(rates_cmd, rates_fit, false);  // --alpha comes from the simulation flags
    rates_cmd->add_option("--ns", rates_ns, "comma-separated sample sizes (>= 4, increasing)");
    rates_cmd->add_option("--reps", rates_reps, "replications per sample size");
    rates_cmd->add_option("--jobs", rates_jobs, "parallel replications");
    rates_cmd->add_option("--out", rates_out, "output prefix (.csv and .json)")->required();

    // coverage ---------------------------------------------------------------
    auto* cov_cmd = app.add_subcommand("coverage", "out-of-sample quantile coverage experiment");
    SimFlags cov_sim;
    CommonFitFlags cov_fit;
    std::string cov_out;
    int cov_m = 1000, cov_jobs = 1;
    add_sim_flags(cov_cmd, cov_sim, true);
    add_fit_flags(cov_cmd, cov_fit, false);  // --alpha comes from the simulation flags
    cov_cmd->add_option("--test-size", cov_m, "number of fresh test pairs");
    cov_cmd->add_option("--jobs", cov_jobs, "accepted for symmetry; coverage runs one fit");
    cov_cmd->add_option("--out", cov_out, "output JSON path")->required();

    // Route --help to the requested subcommand's flag grammar.
    args = expand_config(std::move(args));
    for (const auto& a : args) {
        if (a == "--help" || a == "-h") {
            CLI::App* target = &app;
            if (!args.empty()) {
                for (CLI::App* sub : app.get_subcommands(nullptr)) {
                    if (sub->get_name() == args.front()) {
                        target = sub;
                        break;
                    }
                }
            }
            std::cout << target->help();
            return kExitOk;
        }
    }
    try {
        std::vector<const char*> argv;
        argv.push_back("fqr");
        for (const auto& a : args) argv.push_back(a.c_str());
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    if (fit_cmd->parsed()) {
        if (fit_flags.auto_k_rho && fit_cmd->count("--p") == 0)
            throw fqr::config_error("--auto requires --p");
        const fqr::FunctionalDataset dataset = fqr::load_dataset_files(fit_curves, fit_responses);
        fqr::FitConfig cfg = to_fit_config(fit_flags);
        if (fit_cmd->count("--rho-grid") > 0) {
            const std::vector<double> grid = parse_double_list(fit_rho_grid, "--rho-grid");
            cfg.rho = fqr::select_rho(dataset, cfg, grid, fit_folds, fit_seed);
            std::cout << "cross-validated rho: " << cfg.rho << "\n";
        }
        const fqr::QuantileModel model = fqr::fit(dataset, cfg);
        if (!model.diagnostics.converged && !allow_nonconverged)
            throw fqr::numerical_error("solver did not converge (rerun with --allow-nonconverged to keep)");
        fqr::save_model(model, fit_out);
        std::cout << "fit: n=" << dataset.n() << " alpha=" << model.alpha
                  << " k=" << model.basis.intervals() << " degree=" << model.basis.degree()
                  << " m=" << model.penalty_order << " rho=" << model.rho << "\n"
                  << "solver: converged=" << (model.diagnostics.converged ? "yes" : "no")
                  << " iterations=" << model.diagnostics.iterations
                  << " lambda_min=" << model.diagnostics.lambda_min
                  << (model.diagnostics.lambda_min_warning ? " (near-singular warning)" : "") << "\n"
                  << "model written to " << fit_out << "\n";
        return kExitOk;
    }

    if (predict_cmd->parsed()) {
        const fqr::QuantileModel model = fqr::load_model(pred_model);
        std::ifstream curves_in(pred_curves);
        if (!curves_in) throw fqr::data_error("cannot open curves file '" + pred_curves + "'");
        const fqr::csv::CurvesFile curves = fqr::csv::read_curves(curves_in);
        fqr::check_same_grid(curves.grid, model.grid);
        std::string out;
        out += "id,quantile_prediction\n";
        for (std::size_t i = 0; i < curves.rows.size(); ++i) {
            const double pred = fqr::predict(model, fqr::CurveSample{curves.grid, curves.rows[i]});
            out += curves.ids[i] + "," + fqr::csv::format_number(pred) + "\n";
        }
        write_text_file(pred_out, out);
        std::cout << "predicted " << curves.rows.size() << " curves at alpha=" << model.alpha
                  << "; written to " << pred_out << "\n";
        return kExitOk;
    }

    if (sim_cmd->parsed()) {
        const fqr::SimConfig cfg = to_sim_config(sim_flags);
        const fqr::SimulatedData sim = fqr::simulate_dataset(cfg);
        std::ostringstream curves_os, responses_os;
        fqr::write_curves(curves_os, sim.dataset);
        fqr::write_responses(responses_os, sim.dataset);
        write_text_file(sim_out + ".curves.csv", curves_os.str());
        write_text_file(sim_out + ".responses.csv", responses_os.str());
        nlohmann::json truth{{"psi", fqr::to_string(cfg.psi_true)},
                             {"psi_values", sim.psi_values},
                             {"grid", sim.dataset.grid()},
                             {"covariate", fqr::to_string(cfg.covariate)},
                             {"noise", fqr::to_string(cfg.noise)},
                             {"sigma", cfg.sigma},
                             {"alpha", cfg.alpha},
                             {"noise_shift", sim.noise_shift},
                             {"seed", cfg.seed}};
        write_text_file(sim_out + ".truth.json", truth.dump(2) + "\n");
        std::cout << "simulated n=" << cfg.n << " curves on " << cfg.grid_size
                  << " grid points (law: " << fqr::to_string(cfg.covariate)
                  << ", noise: " << fqr::to_string(cfg.noise) << ")\n"
                  << "written to " << sim_out << ".curves.csv / .responses.csv / .truth.json\n";
        return kExitOk;
    }

    if (rates_cmd->parsed()) {
        const fqr::SimConfig base = to_sim_config(rates_sim);
        fqr::FitConfig fc = to_fit_config(rates_fit);
        fc.auto_k_rho = true;
        const std::vector<Eigen::Index> ns = parse_index_list(rates_ns, "--ns");
        const fqr::RateReport report = fqr::rate_experiment(base, ns, rates_reps, fc, rates_jobs);
        std::ostringstream csv_os;
        fqr::write_rate_csv(csv_os, report);
        write_text_file(rates_out + ".csv", csv_os.str());
        write_text_file(rates_out + ".json", fqr::rate_report_to_json(report).dump(2) + "\n");
        std::cout << "rates: " << report.rows.size() << " sample sizes x " << rates_reps
                  << " replications\n";
        for (const auto& row : report.rows)
            std::cout << "  n=" << row.n << " mean_err_n=" << row.mean_err_n
                      << " mean_err_2=" << row.mean_err_2 << " (used " << row.reps_used << ")\n";
        std::cout << "log-log slope: " << report.slope << " (se " << report.slope_se << ")\n"
                  << "written to " << rates_out << ".csv / .json\n";
        return kExitOk;
    }

    if (cov_cmd->parsed()) {
        (void)cov_jobs;
        const fqr::SimConfig cfg = to_sim_config(cov_sim);
        fqr::FitConfig fc = to_fit_config(cov_fit);
        if (cov_cmd->count("--k") == 0 && cov_cmd->count("--rho") == 0) fc.auto_k_rho = true;
        const fqr::CoverageResult result = fqr::coverage_experiment(cfg, cov_m, fc);
        write_text_file(cov_out, fqr::coverage_to_json(result, cfg).dump(2) + "\n");
        std::cout << "coverage at alpha=" << cfg.alpha << ": " << result.coverage << " ("
                  << result.count_le << "/" << result.m << " at-or-below, " << result.count_lt
                  << " strictly below)\n"
                  << "written to " << cov_out << "\n";
        return kExitOk;
    }

    std::cerr << "usage error: no subcommand\n";
    return kExitUsage;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return run(std::move(args));
    } catch (const fqr::config_error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const fqr::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const fqr::numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}
