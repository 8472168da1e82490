#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fqr/errors.hpp"
#include "fqr/estimator.hpp"

namespace fqr {

/// Model as a single JSON document. Numeric fields round-trip bit-exactly
/// (shortest-round-trip decimal serialization).
inline nlohmann::json model_to_json(const QuantileModel& model) {
    nlohmann::json j;
    j["degree"] = model.basis.degree();
    j["intervals"] = model.basis.intervals();
    j["penalty_order"] = model.penalty_order;
    j["alpha"] = model.alpha;
    j["rho"] = model.rho;
    j["intercept"] = model.intercept;
    j["knots"] = model.basis.knots();
    j["theta_hat"] = std::vector<double>(model.theta_hat.data(),
                                         model.theta_hat.data() + model.theta_hat.size());
    j["mean_curve"] = model.mean_curve;
    j["grid"] = model.grid;
    j["quadrature"] = to_string(model.quadrature);
    j["diagnostics"] = {
        {"converged", model.diagnostics.converged},
        {"iterations", model.diagnostics.iterations},
        {"final_epsilon", model.diagnostics.final_epsilon},
        {"lambda_min", model.diagnostics.lambda_min},
        {"lambda_min_warning", model.diagnostics.lambda_min_warning},
        {"objective_trace", model.diagnostics.objective_trace},
    };
    return j;
}

inline QuantileModel model_from_json(const nlohmann::json& j) {
    try {
        SplineBasis basis(j.at("degree").get<int>(), j.at("intervals").get<int>());
        const auto theta_v = j.at("theta_hat").get<std::vector<double>>();
        if (static_cast<int>(theta_v.size()) != basis.dim())
            throw data_error("model file: theta_hat length does not match basis dimension");
        Eigen::VectorXd theta =
            Eigen::Map<const Eigen::VectorXd>(theta_v.data(), static_cast<Eigen::Index>(theta_v.size()));
        QuantileModel model{basis,
                            std::move(theta),
                            j.at("alpha").get<double>(),
                            j.at("rho").get<double>(),
                            j.at("penalty_order").get<int>(),
                            j.value("intercept", 0.0),
                            j.at("grid").get<std::vector<double>>(),
                            j.at("mean_curve").get<std::vector<double>>(),
                            parse_quadrature_rule(j.at("quadrature").get<std::string>()),
                            FitDiagnostics{}};
        if (model.mean_curve.size() != model.grid.size())
            throw data_error("model file: mean_curve length does not match grid");
        if (j.contains("diagnostics")) {
            const auto& d = j.at("diagnostics");
            model.diagnostics.converged = d.value("converged", false);
            model.diagnostics.iterations = d.value("iterations", 0);
            model.diagnostics.final_epsilon = d.value("final_epsilon", 0.0);
            model.diagnostics.lambda_min = d.value("lambda_min", 0.0);
            model.diagnostics.lambda_min_warning = d.value("lambda_min_warning", false);
            model.diagnostics.objective_trace =
                d.value("objective_trace", std::vector<double>{});
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("model file: ") + e.what());
    }
}

inline void save_model(const QuantileModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write model file '" + path + "'");
    out << model_to_json(model).dump(2) << "\n";
}

inline QuantileModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open model file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw data_error("model file '" + path + "' is not valid JSON: " + e.what());
    }
    return model_from_json(j);
}

} // namespace fqr
