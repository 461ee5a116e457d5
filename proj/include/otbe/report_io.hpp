#pragma once

#include <ostream>
#include <string>

#include <json.hpp>

#include "otbe/csv.hpp"
#include "otbe/simlab.hpp"

namespace otbe {

// Report file conventions: one CSV table per experiment (a row per pair,
// repetition or lambda value) plus a JSON summary that echoes the fully
// resolved configuration including seeds. Column meanings are documented in
// the repository README.

namespace detail {

inline nlohmann::json grid_json(const std::vector<double>& g) {
    nlohmann::json out = nlohmann::json::array();
    for (double v : g) out.push_back(v);
    return out;
}

} // namespace detail

inline nlohmann::json config_to_json(const GridExperimentConfig& c) {
    nlohmann::json j;
    j["experiment"] = "grid";
    j["correlation_values"] = detail::grid_json(c.correlation_values);
    j["sigma1_sq"] = c.sigma1_sq;
    j["sigma2_sq"] = c.sigma2_sq;
    j["lambda_grid"] = detail::grid_json(c.lambda_grid);
    j["gamma_grid"] = detail::grid_json(c.gamma_grid);
    j["seed"] = c.seed;
    return j;
}

inline nlohmann::json config_to_json(const LambdaCurveConfig& c) {
    nlohmann::json j;
    j["experiment"] = "lambda-curve";
    j["reps"] = c.reps;
    j["n"] = c.n;
    j["lambda_grid"] = detail::grid_json(c.lambda_grid);
    j["d_s"] = c.d_s;
    j["d_z"] = c.d_z;
    j["d_y"] = c.d_y;
    j["d_x"] = c.d_x;
    j["dim"] = c.dim;
    j["noise_var"] = c.noise_var;
    j["seed"] = c.seed;
    return j;
}

inline nlohmann::json config_to_json(const LambdaStarConfig& c) {
    nlohmann::json j;
    j["experiment"] = "lambda-star";
    j["iters"] = c.iters;
    j["lambda_grid"] = detail::grid_json(c.lambda_grid);
    j["improvement_threshold"] = c.improvement_threshold;
    j["redraw_source"] = c.redraw_source;
    j["d_s"] = c.d_s;
    j["d_z"] = c.d_z;
    j["d_y"] = c.d_y;
    j["d_x"] = c.d_x;
    j["dim"] = c.dim;
    j["noise_var"] = c.noise_var;
    j["seed"] = c.seed;
    return j;
}

inline nlohmann::json config_to_json(const ToySweepConfig& c) {
    nlohmann::json j;
    j["experiment"] = "toy";
    j["rho_source"] = c.rho_source;
    j["rho_target"] = c.rho_target;
    j["sigma1_sq"] = c.sigma1_sq;
    j["sigma2_sq"] = c.sigma2_sq;
    j["lambda_grid"] = detail::grid_json(c.lambda_grid);
    j["seed"] = c.seed;
    return j;
}

// --- grid experiment -------------------------------------------------------

inline CsvTable to_csv(const GridExperimentReport& r) {
    CsvTable t;
    t.header = {"source_id", "target_id", "frobenius_distance", "best_lambda",
                "best_gamma", "mse_ols", "mse_anchor", "mse_bary", "winner"};
    for (const PairRecord& p : r.pairs)
        t.rows.push_back({std::to_string(p.source_id), std::to_string(p.target_id),
                          format_double(p.frobenius_distance), format_double(p.best_lambda),
                          format_double(p.best_gamma), format_double(p.mse_ols),
                          format_double(p.mse_anchor), format_double(p.mse_bary), p.winner});
    return t;
}

inline nlohmann::json summary_json(const GridExperimentReport& r) {
    nlohmann::json j;
    j["config"] = config_to_json(r.config);
    j["admissible_triples"] = r.admissible_triples;
    j["pairs"] = r.pairs.size();
    j["wins"] = {{"ols", r.wins_ols}, {"anchor", r.wins_anchor}, {"bary", r.wins_bary}};
    const double total = static_cast<double>(r.pairs.size());
    j["win_share"] = {{"ols", r.wins_ols / total},
                      {"anchor", r.wins_anchor / total},
                      {"bary", r.wins_bary / total}};
    j["bary_share_top_frobenius_quartile"] = bary_share_top_frobenius_quartile(r);
    return j;
}

// --- lambda curve ----------------------------------------------------------

inline CsvTable to_csv(const LambdaCurveReport& r) {
    CsvTable t;
    t.header = {"rep", "lambda", "cond_corr"};
    for (const CurveRow& row : r.rows)
        t.rows.push_back({std::to_string(row.rep), format_double(row.lambda),
                          format_double(row.cond_corr)});
    return t;
}

inline nlohmann::json summary_json(const LambdaCurveReport& r) {
    nlohmann::json j;
    j["config"] = config_to_json(r.config);
    j["decay_fraction"] = r.decay_fraction;
    return j;
}

// --- lambda star -----------------------------------------------------------

inline CsvTable to_csv(const LambdaStarReport& r) {
    CsvTable t;
    t.header = {"iter", "lambda_star", "mse_ols", "mse_best"};
    for (const LambdaStarRow& row : r.rows)
        t.rows.push_back({std::to_string(row.iter), format_double(row.lambda_star),
                          format_double(row.mse_ols), format_double(row.mse_best)});
    return t;
}

inline nlohmann::json summary_json(const LambdaStarReport& r) {
    nlohmann::json j;
    j["config"] = config_to_json(r.config);
    j["mass_at_zero"] = r.mass_at_zero;
    j["mass_above_09"] = r.mass_above_09;
    j["mass_middle"] = r.mass_middle;
    return j;
}

// --- toy sweep -------------------------------------------------------------

inline CsvTable to_csv(const ToySweepReport& r) {
    CsvTable t;
    t.header = {"lambda", "angle_to_invariant", "cond_corr", "mse_source", "mse_target"};
    for (const ToySweepRow& row : r.rows)
        t.rows.push_back({format_double(row.lambda), format_double(row.angle_to_invariant),
                          format_double(row.cond_corr), format_double(row.mse_source),
                          format_double(row.mse_target)});
    return t;
}

inline nlohmann::json summary_json(const ToySweepReport& r) {
    nlohmann::json j;
    j["config"] = config_to_json(r.config);
    j["mse_ols_source"] = r.mse_ols_source;
    j["mse_ols_target"] = r.mse_ols_target;
    double best = r.rows.empty() ? 0.0 : r.rows.front().mse_target;
    double best_lambda = r.rows.empty() ? 0.0 : r.rows.front().lambda;
    for (const ToySweepRow& row : r.rows)
        if (row.mse_target < best) {
            best = row.mse_target;
            best_lambda = row.lambda;
        }
    j["best_lambda_by_target_mse"] = best_lambda;
    j["best_target_mse"] = best;
    return j;
}

} // namespace otbe
