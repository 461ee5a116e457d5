#pragma once

#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <variant>

#include <json.hpp>

#include "otbe/errors.hpp"
#include "otbe/extractor.hpp"
#include "otbe/heads.hpp"
#include "otbe/matstats.hpp"

namespace otbe {

// Model files start with the magic line "OTBE1" followed by a JSON document.
// All floats are written with round-trip-exact decimal formatting, so a
// write/read cycle reproduces the model bit for bit.
inline constexpr const char* kModelMagic = "OTBE1";
inline constexpr int kModelVersion = 1;

namespace detail {

inline nlohmann::json to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline nlohmann::json to_json(const Vector& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline Matrix matrix_from_json(const nlohmann::json& j, std::string_view what) {
    if (!j.is_array()) throw InvalidData("model field '" + std::string(what) + "' is malformed");
    const Index rows = static_cast<Index>(j.size());
    Index cols = rows > 0 ? static_cast<Index>(j[0].size()) : 0;
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        if (static_cast<Index>(j[static_cast<std::size_t>(i)].size()) != cols)
            throw InvalidData("model field '" + std::string(what) + "' is ragged");
        for (Index k = 0; k < cols; ++k)
            m(i, k) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
    }
    return m;
}

inline Vector vector_from_json(const nlohmann::json& j, std::string_view what) {
    if (!j.is_array()) throw InvalidData("model field '" + std::string(what) + "' is malformed");
    Vector v(static_cast<Index>(j.size()));
    for (Index i = 0; i < v.size(); ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

} // namespace detail

struct SavedModel {
    FeatureModel model;
    std::optional<LinearHead> linear_head;
    std::optional<CentroidClassifier> classifier;
};

inline void write_model(std::ostream& out, const SavedModel& saved) {
    nlohmann::json doc;
    doc["version"] = kModelVersion;
    const FeatureModel& m = saved.model;
    nlohmann::json fm;
    fm["task"] = to_string(m.task);
    fm["lambda"] = m.lambda;
    fm["dim"] = m.dim;
    fm["x_mean"] = detail::to_json(m.x_mean);
    fm["x_inv_sqrt"] = detail::to_json(m.x_inv_sqrt);
    fm["loadings"] = detail::to_json(m.loadings);
    fm["raw_loadings"] = detail::to_json(m.raw_loadings);
    fm["spectrum"] = detail::to_json(m.spectrum);
    fm["outcome_cross"] = detail::to_json(m.outcome_cross);
    fm["nuisance_cross"] = detail::to_json(m.nuisance_cross);
    fm["warning"] = m.warning;
    doc["feature_model"] = std::move(fm);
    if (saved.linear_head) {
        nlohmann::json h;
        h["type"] = "linear";
        h["beta"] = detail::to_json(saved.linear_head->beta);
        h["intercept"] = detail::to_json(saved.linear_head->intercept);
        h["fitted_on"] = saved.linear_head->fitted_on;
        doc["head"] = std::move(h);
    } else if (saved.classifier) {
        nlohmann::json h;
        h["type"] = "centroid";
        h["centroids"] = detail::to_json(saved.classifier->centroids);
        h["priors"] = detail::to_json(saved.classifier->priors);
        h["labels"] = saved.classifier->labels;
        doc["head"] = std::move(h);
    }
    out << kModelMagic << "\n" << doc.dump(2) << "\n";
}

inline void write_model_file(const std::string& path, const SavedModel& saved) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidData("cannot write '" + path + "'");
    write_model(out, saved);
}

inline SavedModel read_model(std::istream& in) {
    std::string magic;
    if (!std::getline(in, magic) || magic != kModelMagic)
        throw InvalidData("not a model file: missing OTBE1 header");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidData(std::string("model file is not valid JSON: ") + e.what());
    }
    if (!doc.contains("version") || doc["version"].get<int>() != kModelVersion)
        throw InvalidData("unsupported model version");
    const nlohmann::json& fm = doc.at("feature_model");
    SavedModel saved;
    FeatureModel& m = saved.model;
    m.task = fm.at("task").get<std::string>() == "classification" ? Task::Classification
                                                                  : Task::Regression;
    m.lambda = fm.at("lambda").get<double>();
    m.dim = fm.at("dim").get<int>();
    m.x_mean = detail::vector_from_json(fm.at("x_mean"), "x_mean");
    m.x_inv_sqrt = detail::matrix_from_json(fm.at("x_inv_sqrt"), "x_inv_sqrt");
    m.loadings = detail::matrix_from_json(fm.at("loadings"), "loadings");
    m.raw_loadings = detail::matrix_from_json(fm.at("raw_loadings"), "raw_loadings");
    m.spectrum = detail::vector_from_json(fm.at("spectrum"), "spectrum");
    m.outcome_cross = detail::matrix_from_json(fm.at("outcome_cross"), "outcome_cross");
    m.nuisance_cross = detail::matrix_from_json(fm.at("nuisance_cross"), "nuisance_cross");
    m.warning = fm.at("warning").get<std::string>();
    if (doc.contains("head")) {
        const nlohmann::json& h = doc["head"];
        if (h.at("type") == "linear") {
            LinearHead head;
            head.beta = detail::matrix_from_json(h.at("beta"), "beta");
            head.intercept = detail::vector_from_json(h.at("intercept"), "intercept");
            head.fitted_on = h.at("fitted_on").get<std::string>();
            saved.linear_head = std::move(head);
        } else if (h.at("type") == "centroid") {
            CentroidClassifier clf;
            clf.centroids = detail::matrix_from_json(h.at("centroids"), "centroids");
            clf.priors = detail::vector_from_json(h.at("priors"), "priors");
            clf.labels = h.at("labels").get<std::vector<std::string>>();
            saved.classifier = std::move(clf);
        } else {
            throw InvalidData("unknown head type in model file");
        }
    }
    return saved;
}

inline SavedModel read_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidData("cannot open '" + path + "'");
    return read_model(in);
}

} // namespace otbe
