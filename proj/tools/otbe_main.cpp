// Command-line front end: data ingestion, model fitting, feature transform,
// prediction, barycenter experiment runners. Exit codes: 0 success, 2 schema
// or configuration error, 3 numeric failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "otbe/otbe.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int resolve_threads(int requested) {
    int threads = requested > 0 ? requested
                                : static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    if (const char* cap = std::getenv("OTBE_THREADS")) {
        const int limit = std::atoi(cap);
        if (limit >= 1) threads = std::min(threads, limit);
    }
    return threads;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw otbe::SchemaError("cannot open '" + path + "'");
    try {
        json doc;
        in >> doc;
        return doc;
    } catch (const json::exception& e) {
        throw otbe::SchemaError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw otbe::SchemaError("cannot write '" + path + "'");
    out << text;
}

otbe::Task parse_task(const std::string& s) {
    if (s == "regress") return otbe::Task::Regression;
    if (s == "classify") return otbe::Task::Classification;
    throw otbe::SchemaError("task must be 'regress' or 'classify'");
}

otbe::ContextBlock parse_context(const std::string& s) {
    if (s == "s") return otbe::ContextBlock::S;
    if (s == "z") return otbe::ContextBlock::Z;
    if (s == "both") return otbe::ContextBlock::Both;
    throw otbe::SchemaError("context must be 's', 'z' or 'both'");
}

otbe::ColumnSchema make_schema(const otbe::CsvTable& table, const std::string& schema_path,
                               otbe::Task task) {
    if (!schema_path.empty())
        return otbe::ColumnSchema::from_json(read_json_file(schema_path), table.header);
    return otbe::ColumnSchema::from_conventions(table.header, task);
}

std::vector<double> grid_from_json(const json& j, const std::string& key) {
    std::vector<double> out;
    for (const auto& v : j) out.push_back(v.get<double>());
    if (out.empty()) throw otbe::InvalidConfig("'" + key + "' must be a nonempty array");
    return out;
}

void reject_unknown_keys(const json& doc, const std::vector<std::string>& known) {
    for (const auto& [key, value] : doc.items()) {
        bool ok = false;
        for (const std::string& k : known) ok = ok || k == key;
        if (!ok) throw otbe::InvalidConfig("unknown config key '" + key + "'");
    }
}

// ---------------------------------------------------------------------------
// fit / transform / predict
// ---------------------------------------------------------------------------

struct FitArgs {
    std::string data, schema, out, report;
    double lambda = 0.0;
    int dim = 1;
    std::string task = "regress";
    std::string context = "s";
    double ridge = -1.0;
};

int run_fit(const FitArgs& args) {
    if (!(args.lambda >= 0.0 && args.lambda < 1.0))
        throw otbe::InvalidParameter("lambda must be < 1 and nonnegative");
    if (args.dim < 1) throw otbe::InvalidParameter("dim must be at least 1");
    const otbe::Task task = parse_task(args.task);

    const otbe::CsvTable table = otbe::read_csv_file(args.data);
    const otbe::ColumnSchema schema = make_schema(table, args.schema, task);
    const otbe::Dataset dataset = otbe::load_dataset(table, schema, task);

    otbe::ExtractorConfig config;
    config.lambda = args.lambda;
    config.dim = args.dim;
    config.task = task;
    config.context = parse_context(args.context);
    if (args.ridge >= 0.0) config.ridge = args.ridge;

    otbe::SavedModel saved;
    json report;
    if (task == otbe::Task::Regression) {
        const otbe::MomentSummary moments =
            otbe::empirical_moments(dataset.assembled(), dataset.blocks());
        saved.model = otbe::fit(moments, config);
        saved.linear_head = otbe::fit_linear_head(saved.model, moments);
        const double term_outcome =
            (saved.model.loadings.transpose() * saved.model.outcome_cross).squaredNorm();
        report["multi_correlation_wy"] = term_outcome /
            std::min<double>(saved.model.dim, saved.model.outcome_cross.cols());
    } else {
        const otbe::Matrix ctx = dataset.context_rows(config.context);
        const otbe::ClassificationFit cf =
            otbe::fit_classification(dataset.x, ctx, dataset.labels, config);
        saved.model = cf.model;
        saved.classifier = otbe::fit_centroid_classifier(
            otbe::transform(saved.model, dataset.x), dataset.labels);
        report["dispersion_wy"] =
            (saved.model.loadings.transpose() * saved.model.outcome_cross).squaredNorm();
    }

    otbe::write_model_file(args.out, saved);

    report["task"] = args.task;
    report["lambda"] = saved.model.lambda;
    report["dim"] = saved.model.dim;
    report["n_samples"] = table.n_rows();
    report["spectrum"] = json::array();
    for (otbe::Index i = 0; i < saved.model.spectrum.size(); ++i)
        report["spectrum"].push_back(saved.model.spectrum(i));
    report["term_outcome"] =
        (saved.model.loadings.transpose() * saved.model.outcome_cross).squaredNorm();
    report["term_nuisance"] =
        (saved.model.loadings.transpose() * saved.model.nuisance_cross).squaredNorm();
    report["warning"] = saved.model.warning;
    const std::string report_path = args.report.empty() ? args.out + ".report.json" : args.report;
    write_text_file(report_path, report.dump(2) + "\n");
    if (!saved.model.warning.empty()) std::cerr << "warning: " << saved.model.warning << "\n";
    return 0;
}

std::vector<std::string> feature_header(int dim) {
    std::vector<std::string> h;
    for (int j = 1; j <= dim; ++j) h.push_back("w_" + std::to_string(j));
    return h;
}

bool is_feature_table(const otbe::CsvTable& table, int dim) {
    const std::vector<std::string> expect = feature_header(dim);
    return table.header == expect;
}

otbe::Matrix rows_as_features(const otbe::SavedModel& saved, const otbe::CsvTable& table) {
    if (is_feature_table(table, saved.model.dim)) {
        std::vector<otbe::Index> cols(static_cast<std::size_t>(saved.model.dim));
        for (int j = 0; j < saved.model.dim; ++j) cols[static_cast<std::size_t>(j)] = j;
        return otbe::numeric_columns(table, cols);
    }
    otbe::ColumnSchema schema = otbe::ColumnSchema::from_conventions(table.header, saved.model.task);
    const std::vector<otbe::Index> xcols = schema.columns_with(otbe::ColumnRole::Feature);
    if (xcols.empty()) throw otbe::SchemaError("no feature columns in the input");
    return otbe::transform(saved.model, otbe::numeric_columns(table, xcols));
}

int run_transform(const std::string& model_path, const std::string& data_path,
                  const std::string& out_path) {
    const otbe::SavedModel saved = otbe::read_model_file(model_path);
    const otbe::CsvTable table = otbe::read_csv_file(data_path);
    const otbe::Matrix w = rows_as_features(saved, table);
    otbe::write_csv_file(out_path, otbe::matrix_to_table(feature_header(saved.model.dim), w));
    return 0;
}

int run_predict(const std::string& model_path, const std::string& data_path,
                const std::string& out_path) {
    const otbe::SavedModel saved = otbe::read_model_file(model_path);
    const otbe::CsvTable table = otbe::read_csv_file(data_path);
    const otbe::Matrix w = rows_as_features(saved, table);
    otbe::CsvTable out;
    if (saved.model.task == otbe::Task::Regression) {
        if (!saved.linear_head) throw otbe::InvalidData("model file carries no regression head");
        const otbe::Matrix yhat = otbe::predict(*saved.linear_head, w);
        std::vector<std::string> header;
        for (otbe::Index j = 1; j <= yhat.cols(); ++j)
            header.push_back("yhat_" + std::to_string(j));
        out = otbe::matrix_to_table(header, yhat);
    } else {
        if (!saved.classifier) throw otbe::InvalidData("model file carries no classifier head");
        const std::vector<std::string> labels = otbe::predict(*saved.classifier, w);
        out.header = {"class"};
        for (const std::string& l : labels) out.rows.push_back({l});
    }
    otbe::write_csv_file(out_path, out);
    return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string subcommand, config_path, out_dir;
    std::optional<std::uint64_t> seed;
    int threads = 0;
};

template <class Report>
void emit(const SimulateArgs& args, const std::string& name, const Report& report) {
    fs::create_directories(args.out_dir);
    const fs::path dir(args.out_dir);
    std::ofstream csv((dir / (name + ".csv")).string(), std::ios::binary);
    if (!csv) throw otbe::SchemaError("cannot write into '" + args.out_dir + "'");
    otbe::write_csv(csv, otbe::to_csv(report));
    write_text_file((dir / (name + "_summary.json")).string(),
                    otbe::summary_json(report).dump(2) + "\n");
}

int run_simulate(const SimulateArgs& args) {
    json doc = json::object();
    if (!args.config_path.empty()) doc = read_json_file(args.config_path);
    if (!doc.is_object()) throw otbe::InvalidConfig("config must be a JSON object");
    const int threads = resolve_threads(args.threads);

    if (args.subcommand == "grid") {
        reject_unknown_keys(doc, {"correlation_values", "sigma1_sq", "sigma2_sq",
                                  "lambda_grid", "gamma_grid", "seed"});
        otbe::GridExperimentConfig c;
        if (doc.contains("correlation_values"))
            c.correlation_values = grid_from_json(doc["correlation_values"], "correlation_values");
        if (doc.contains("sigma1_sq")) c.sigma1_sq = doc["sigma1_sq"].get<double>();
        if (doc.contains("sigma2_sq")) c.sigma2_sq = doc["sigma2_sq"].get<double>();
        if (doc.contains("lambda_grid")) c.lambda_grid = grid_from_json(doc["lambda_grid"], "lambda_grid");
        if (doc.contains("gamma_grid")) c.gamma_grid = grid_from_json(doc["gamma_grid"], "gamma_grid");
        if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
        if (args.seed) c.seed = *args.seed;
        c.threads = threads;
        emit(args, "grid", otbe::population_shift_experiment(c));
        return 0;
    }
    if (args.subcommand == "lambda-curve") {
        reject_unknown_keys(doc, {"reps", "n", "lambda_grid", "d_s", "d_z", "d_y", "d_x",
                                  "dim", "noise_var", "seed"});
        otbe::LambdaCurveConfig c;
        if (doc.contains("reps")) c.reps = doc["reps"].get<int>();
        if (doc.contains("n")) c.n = doc["n"].get<otbe::Index>();
        if (doc.contains("lambda_grid")) c.lambda_grid = grid_from_json(doc["lambda_grid"], "lambda_grid");
        if (doc.contains("d_s")) c.d_s = doc["d_s"].get<otbe::Index>();
        if (doc.contains("d_z")) c.d_z = doc["d_z"].get<otbe::Index>();
        if (doc.contains("d_y")) c.d_y = doc["d_y"].get<otbe::Index>();
        if (doc.contains("d_x")) c.d_x = doc["d_x"].get<otbe::Index>();
        if (doc.contains("dim")) c.dim = doc["dim"].get<int>();
        if (doc.contains("noise_var")) c.noise_var = doc["noise_var"].get<double>();
        if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
        if (args.seed) c.seed = *args.seed;
        c.threads = threads;
        emit(args, "lambda_curve", otbe::lambda_curve_experiment(c));
        return 0;
    }
    if (args.subcommand == "lambda-star") {
        reject_unknown_keys(doc, {"iters", "lambda_grid", "improvement_threshold",
                                  "redraw_source", "d_s", "d_z", "d_y", "d_x", "dim",
                                  "noise_var", "seed"});
        otbe::LambdaStarConfig c;
        if (doc.contains("iters")) c.iters = doc["iters"].get<int>();
        if (doc.contains("lambda_grid")) c.lambda_grid = grid_from_json(doc["lambda_grid"], "lambda_grid");
        if (doc.contains("improvement_threshold"))
            c.improvement_threshold = doc["improvement_threshold"].get<double>();
        if (doc.contains("redraw_source")) c.redraw_source = doc["redraw_source"].get<bool>();
        if (doc.contains("d_s")) c.d_s = doc["d_s"].get<otbe::Index>();
        if (doc.contains("d_z")) c.d_z = doc["d_z"].get<otbe::Index>();
        if (doc.contains("d_y")) c.d_y = doc["d_y"].get<otbe::Index>();
        if (doc.contains("d_x")) c.d_x = doc["d_x"].get<otbe::Index>();
        if (doc.contains("dim")) c.dim = doc["dim"].get<int>();
        if (doc.contains("noise_var")) c.noise_var = doc["noise_var"].get<double>();
        if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
        if (args.seed) c.seed = *args.seed;
        c.threads = threads;
        emit(args, "lambda_star", otbe::lambda_star_experiment(c));
        return 0;
    }
    if (args.subcommand == "toy") {
        reject_unknown_keys(doc, {"rho_source", "rho_target", "sigma1_sq", "sigma2_sq",
                                  "lambda_grid", "seed"});
        otbe::ToySweepConfig c;
        if (doc.contains("rho_source")) c.rho_source = doc["rho_source"].get<double>();
        if (doc.contains("rho_target")) c.rho_target = doc["rho_target"].get<double>();
        if (doc.contains("sigma1_sq")) c.sigma1_sq = doc["sigma1_sq"].get<double>();
        if (doc.contains("sigma2_sq")) c.sigma2_sq = doc["sigma2_sq"].get<double>();
        if (doc.contains("lambda_grid")) c.lambda_grid = grid_from_json(doc["lambda_grid"], "lambda_grid");
        if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
        if (args.seed) c.seed = *args.seed;
        emit(args, "toy", otbe::toy_sweep_experiment(c));
        return 0;
    }
    throw otbe::InvalidConfig("unknown simulate subcommand '" + args.subcommand + "'");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Invariant feature extraction via Gaussian optimal-transport barycenters"};
    app.require_subcommand(1);

    FitArgs fit_args;
    CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a feature extractor and prediction head");
    fit_cmd->add_option("--data", fit_args.data, "Input CSV")->required();
    fit_cmd->add_option("--schema", fit_args.schema, "Column schema JSON");
    fit_cmd->add_option("--lambda", fit_args.lambda, "Invariance weight in [0,1)")->required();
    fit_cmd->add_option("--dim", fit_args.dim, "Feature dimension")->required();
    fit_cmd->add_option("--task", fit_args.task, "regress|classify")->required();
    fit_cmd->add_option("--context", fit_args.context, "s|z|both (default s)");
    fit_cmd->add_option("--ridge", fit_args.ridge, "Ridge override for covariance inverses");
    fit_cmd->add_option("--out", fit_args.out, "Model output path")->required();
    fit_cmd->add_option("--report", fit_args.report, "Fit report path (default <out>.report.json)");

    std::string io_model, io_data, io_out;
    CLI::App* transform_cmd = app.add_subcommand("transform", "Write extracted feature columns");
    transform_cmd->add_option("--model", io_model, "Model file")->required();
    transform_cmd->add_option("--data", io_data, "Input CSV")->required();
    transform_cmd->add_option("--out", io_out, "Output CSV")->required();

    CLI::App* predict_cmd = app.add_subcommand("predict", "Write predictions");
    predict_cmd->add_option("--model", io_model, "Model file")->required();
    predict_cmd->add_option("--data", io_data, "Input CSV")->required();
    predict_cmd->add_option("--out", io_out, "Output CSV")->required();

    SimulateArgs sim_args;
    std::uint64_t seed_flag = 0;
    CLI::App* simulate_cmd = app.add_subcommand("simulate", "Run a reproducible experiment");
    simulate_cmd->add_option("subcommand", sim_args.subcommand,
                             "toy|grid|lambda-curve|lambda-star")->required();
    simulate_cmd->add_option("--config", sim_args.config_path, "Experiment config JSON");
    CLI::Option* seed_opt = simulate_cmd->add_option("--seed", seed_flag, "Master seed override");
    simulate_cmd->add_option("--threads", sim_args.threads,
                             "Worker threads (0 = hardware, capped by OTBE_THREADS)");
    simulate_cmd->add_option("--out", sim_args.out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
        if (fit_cmd->parsed()) return run_fit(fit_args);
        if (transform_cmd->parsed()) return run_transform(io_model, io_data, io_out);
        if (predict_cmd->parsed()) return run_predict(io_model, io_data, io_out);
        if (simulate_cmd->parsed()) {
            if (seed_opt->count() > 0) sim_args.seed = seed_flag;
            return run_simulate(sim_args);
        }
        return 2;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const otbe::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const otbe::InvalidConfig& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const otbe::InvalidParameter& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const otbe::Error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
