#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "otbe/csv.hpp"
#include "otbe/errors.hpp"
#include "otbe/extractor.hpp"
#include "otbe/matstats.hpp"

namespace otbe {

// Maps data columns onto the outcome / confounder / context / feature blocks.
enum class ColumnRole { Outcome, OutcomeClass, Confounder, Context, Feature, Ignore };

inline ColumnRole parse_role(std::string_view s) {
    if (s == "outcome") return ColumnRole::Outcome;
    if (s == "outcome_class") return ColumnRole::OutcomeClass;
    if (s == "confounder") return ColumnRole::Confounder;
    if (s == "context") return ColumnRole::Context;
    if (s == "feature") return ColumnRole::Feature;
    if (s == "ignore") return ColumnRole::Ignore;
    throw SchemaError("unknown column role '" + std::string(s) + "'");
}

struct ColumnSchema {
    std::vector<ColumnRole> roles; // aligned with the CSV header

    // Sidecar document: {"columns": {"<name>": "<role>", ...}}. Every CSV
    // column must be assigned a role; use "ignore" to drop one.
    static ColumnSchema from_json(const nlohmann::json& doc,
                                  const std::vector<std::string>& header) {
        if (!doc.is_object() || !doc.contains("columns") || !doc["columns"].is_object())
            throw SchemaError("schema document must be an object with a 'columns' map");
        const nlohmann::json& cols = doc["columns"];
        ColumnSchema schema;
        for (const std::string& name : header) {
            if (!cols.contains(name))
                throw SchemaError("schema does not assign a role to column '" + name + "'");
            if (!cols[name].is_string())
                throw SchemaError("role of column '" + name + "' must be a string");
            schema.roles.push_back(parse_role(cols[name].get<std::string>()));
        }
        for (const auto& [name, role] : cols.items()) {
            bool known = false;
            for (const std::string& h : header) known = known || h == name;
            if (!known) throw SchemaError("schema names unknown column '" + name + "'");
        }
        return schema;
    }

    // Header-name conventions: y_* outcome, z_* confounder, s_* context,
    // x_* feature. Under a classification task the y_* column is the label.
    static ColumnSchema from_conventions(const std::vector<std::string>& header, Task task) {
        ColumnSchema schema;
        for (const std::string& name : header) {
            if (name.rfind("y_", 0) == 0)
                schema.roles.push_back(task == Task::Classification ? ColumnRole::OutcomeClass
                                                                    : ColumnRole::Outcome);
            else if (name.rfind("z_", 0) == 0)
                schema.roles.push_back(ColumnRole::Confounder);
            else if (name.rfind("s_", 0) == 0)
                schema.roles.push_back(ColumnRole::Context);
            else if (name.rfind("x_", 0) == 0)
                schema.roles.push_back(ColumnRole::Feature);
            else
                throw SchemaError("column '" + name +
                                  "' does not follow the y_/z_/s_/x_ naming convention; "
                                  "provide a schema file");
        }
        return schema;
    }

    std::vector<Index> columns_with(ColumnRole role) const {
        std::vector<Index> out;
        for (std::size_t j = 0; j < roles.size(); ++j)
            if (roles[j] == role) out.push_back(static_cast<Index>(j));
        return out;
    }

    void validate(Task task) const {
        if (columns_with(ColumnRole::Feature).empty())
            throw SchemaError("at least one feature column is required");
        const std::size_t n_out = columns_with(ColumnRole::Outcome).size();
        const std::size_t n_cls = columns_with(ColumnRole::OutcomeClass).size();
        if (task == Task::Regression) {
            if (n_out < 1) throw SchemaError("regression requires at least one outcome column");
            if (n_cls > 0) throw SchemaError("regression does not accept outcome_class columns");
        } else {
            if (n_cls != 1)
                throw SchemaError("classification requires exactly one outcome_class column");
            if (n_out > 0) throw SchemaError("classification does not accept outcome columns");
        }
    }
};

// Column-role view of a CSV file, assembled into the canonical block layout.
struct Dataset {
    Matrix y, z, s, x;
    std::vector<std::string> labels; // classification only
    Task task = Task::Regression;

    bool has_z() const { return z.cols() > 0; }
    bool has_s() const { return s.cols() > 0; }

    // Blocks present, in the canonical (Y, Z, S, X) order.
    std::vector<std::pair<std::string, Index>> blocks() const {
        std::vector<std::pair<std::string, Index>> out;
        if (task == Task::Regression) out.emplace_back("Y", y.cols());
        if (has_z()) out.emplace_back("Z", z.cols());
        if (has_s()) out.emplace_back("S", s.cols());
        out.emplace_back("X", x.cols());
        return out;
    }

    Matrix assembled() const {
        Index cols = x.cols() + z.cols() + s.cols() + (task == Task::Regression ? y.cols() : 0);
        Matrix m(x.rows(), cols);
        Index at = 0;
        if (task == Task::Regression) { m.middleCols(at, y.cols()) = y; at += y.cols(); }
        if (has_z()) { m.middleCols(at, z.cols()) = z; at += z.cols(); }
        if (has_s()) { m.middleCols(at, s.cols()) = s; at += s.cols(); }
        m.middleCols(at, x.cols()) = x;
        return m;
    }

    // Context rows for the configured context block selection.
    Matrix context_rows(ContextBlock c) const {
        const bool want_s = c == ContextBlock::S || c == ContextBlock::Both;
        const bool want_z = c == ContextBlock::Z || c == ContextBlock::Both;
        if (want_s && !has_s()) throw SchemaError("context 's' requested but no context columns");
        if (want_z && !has_z()) throw SchemaError("context 'z' requested but no confounder columns");
        Matrix m(x.rows(), (want_s ? s.cols() : 0) + (want_z ? z.cols() : 0));
        Index at = 0;
        if (want_s) { m.middleCols(at, s.cols()) = s; at += s.cols(); }
        if (want_z) { m.middleCols(at, z.cols()) = z; }
        return m;
    }
};

inline Dataset load_dataset(const CsvTable& table, const ColumnSchema& schema, Task task) {
    schema.validate(task);
    if (table.n_rows() < 1) throw SchemaError("data file has no rows");
    Dataset d;
    d.task = task;
    d.x = numeric_columns(table, schema.columns_with(ColumnRole::Feature));
    const std::vector<Index> zc = schema.columns_with(ColumnRole::Confounder);
    const std::vector<Index> sc = schema.columns_with(ColumnRole::Context);
    d.z = zc.empty() ? Matrix(table.n_rows(), 0) : numeric_columns(table, zc);
    d.s = sc.empty() ? Matrix(table.n_rows(), 0) : numeric_columns(table, sc);
    if (task == Task::Regression) {
        d.y = numeric_columns(table, schema.columns_with(ColumnRole::Outcome));
    } else {
        const Index col = schema.columns_with(ColumnRole::OutcomeClass).front();
        d.y.resize(table.n_rows(), 0);
        for (Index i = 0; i < table.n_rows(); ++i)
            d.labels.push_back(table.rows[static_cast<std::size_t>(i)]
                                         [static_cast<std::size_t>(col)]);
    }
    return d;
}

} // namespace otbe
