#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "otbe/barycenter.hpp"
#include "otbe/errors.hpp"
#include "otbe/matstats.hpp"

namespace otbe {

enum class Task { Regression, Classification };

// Which observed blocks act as the nuisance context the features must be
// conditionally invariant to.
enum class ContextBlock { S, Z, Both };

inline const char* to_string(Task t) {
    return t == Task::Regression ? "regression" : "classification";
}
inline const char* to_string(ContextBlock c) {
    switch (c) {
        case ContextBlock::S: return "s";
        case ContextBlock::Z: return "z";
        default: return "both";
    }
}

struct ExtractorConfig {
    double lambda = 0.0;
    int dim = 1;
    Task task = Task::Regression;
    ContextBlock context = ContextBlock::S;
    std::optional<double> ridge;  // overrides the per-matrix default ridge
    // Categorical fits weight the outcome term by 1/dim; setting this uses
    // the regression normalization min(dim, k) instead.
    bool unify_objective_scale = false;
};

// Fitted linear feature extractor W = raw_loadings^T (X - x_mean).
// loadings has orthonormal columns in whitened coordinates, so Cov(W) is the
// identity under the fitting moments.
struct FeatureModel {
    Vector x_mean;
    Matrix x_inv_sqrt;
    Matrix loadings;
    Matrix raw_loadings;
    double lambda = 0.0;
    int dim = 0;
    Vector spectrum; // full signed-descending spectrum of the objective matrix
    Task task = Task::Regression;
    Matrix outcome_cross;  // whitened cross-covariance with the outcome
    Matrix nuisance_cross; // whitened cross-covariance with the standardized residual
    std::string warning;   // nonempty when dim exceeds the positive spectrum

    Index input_dim() const { return x_mean.size(); }
};

namespace detail {

struct ContextView {
    Vector mean;
    Matrix cov;      // Sigma_ctx
    Matrix cross_y;  // Sigma_ctx,Y
    Matrix cross_x;  // Sigma_X,ctx
    Index dim = 0;
};

inline std::vector<std::string> context_names(const MomentSummary& m, ContextBlock c) {
    std::vector<std::string> names;
    if (c == ContextBlock::S || c == ContextBlock::Both) names.emplace_back("S");
    if (c == ContextBlock::Z || c == ContextBlock::Both) names.emplace_back("Z");
    for (const std::string& n : names)
        if (!m.has_block(n))
            throw InvalidData("context block '" + n + "' is not present in the moments");
    return names;
}

inline ContextView context_view(const MomentSummary& m, ContextBlock c) {
    const std::vector<std::string> names = context_names(m, c);
    Index total = 0;
    for (const std::string& n : names) total += m.block(n).dim;
    ContextView v;
    v.dim = total;
    v.mean.resize(total);
    v.cov.resize(total, total);
    v.cross_y.resize(total, m.block("Y").dim);
    v.cross_x.resize(m.block("X").dim, total);
    Index at = 0;
    for (const std::string& a : names) {
        const Index da = m.block(a).dim;
        v.mean.segment(at, da) = m.block_mean(a);
        v.cross_y.middleRows(at, da) = m.cross_cov(a, "Y");
        v.cross_x.middleCols(at, da) = m.cross_cov("X", a);
        Index bt = 0;
        for (const std::string& b : names) {
            const Index db = m.block(b).dim;
            v.cov.block(at, bt, da, db) = m.cross_cov(a, b);
            bt += db;
        }
        at += da;
    }
    return v;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Builder matrices
// ---------------------------------------------------------------------------

// Whitened cross-covariance of features with the outcome,
// Sigma_X^{-1/2} Sigma_XY Sigma_Y^{-1/2}.
inline Matrix build_C_regression(const MomentSummary& m,
                                 std::optional<double> ridge = std::nullopt) {
    const Matrix cov_x = m.block_cov("X");
    const Matrix cov_y = m.block_cov("Y");
    const Matrix wx = psd_inv_sqrt(cov_x, ridge.value_or(default_ridge(cov_x)), "X");
    const Matrix wy = psd_inv_sqrt(cov_y, ridge.value_or(default_ridge(cov_y)), "Y");
    return wx * m.cross_cov("X", "Y") * wy;
}

// Column j is sqrt(p_j) * whitened (E[X | Y = y_j] - E[X]).
inline Matrix build_C_categorical(const std::vector<ClassStat>& x_stats,
                                  const Matrix& x_inv_sqrt) {
    if (x_stats.size() < 2) throw InvalidParameter("need at least 2 classes");
    const Index d_x = x_stats.front().mean.size();
    Vector grand = Vector::Zero(d_x);
    for (const ClassStat& cs : x_stats) grand += cs.prior * cs.mean;
    Matrix c(d_x, static_cast<Index>(x_stats.size()));
    for (std::size_t j = 0; j < x_stats.size(); ++j)
        c.col(static_cast<Index>(j)) =
            std::sqrt(x_stats[j].prior) * (x_inv_sqrt * (x_stats[j].mean - grand));
    return c;
}

// Whitened cross-covariance of features with the standardized barycenter
// residual of the context given Y (continuous case, exact-moment algebra).
inline Matrix build_D_regression(const MomentSummary& m, const Matrix& x_inv_sqrt,
                                 const ContinuousResidualMap& map,
                                 const detail::ContextView& ctx) {
    const Matrix cross_x_resid = ctx.cross_x - m.cross_cov("X", "Y") * map.coeff.transpose();
    return x_inv_sqrt * cross_x_resid * map.resid_inv_sqrt;
}

// ---------------------------------------------------------------------------
// Closed-form loadings
// ---------------------------------------------------------------------------

// Objective value (1-lambda)/outcome_scale ||A^T C||_F^2
//              - lambda/nuisance_scale ||A^T D||_F^2 for orthonormal A.
inline double objective_value(const Matrix& loadings, const Matrix& outcome_cross,
                              const Matrix& nuisance_cross, double lambda,
                              double outcome_scale, double nuisance_scale) {
    return (1.0 - lambda) / outcome_scale * (loadings.transpose() * outcome_cross).squaredNorm() -
           lambda / nuisance_scale * (loadings.transpose() * nuisance_cross).squaredNorm();
}

// The maximizer is the span of the first dim signed-descending eigenvectors
// of H = (1-lambda)/outcome_scale C C^T - lambda/nuisance_scale D D^T.
inline std::pair<Matrix, Vector> solve_loadings(const Matrix& outcome_cross,
                                                const Matrix& nuisance_cross,
                                                double lambda, int dim,
                                                double outcome_scale,
                                                double nuisance_scale) {
    if (!(lambda >= 0.0 && lambda < 1.0))
        throw InvalidParameter("lambda must be in [0, 1)");
    const Index d_x = outcome_cross.rows();
    if (dim < 1 || dim > d_x)
        throw InvalidParameter("dim must be between 1 and " + std::to_string(d_x));
    if (nuisance_cross.rows() != d_x)
        throw InvalidData("outcome and nuisance matrices have different row counts");
    Matrix h = (1.0 - lambda) / outcome_scale * outcome_cross * outcome_cross.transpose() -
               lambda / nuisance_scale * nuisance_cross * nuisance_cross.transpose();
    EigenDecomposition ed = sym_eig(h);
    return {ed.vectors.leftCols(dim), ed.values};
}

namespace detail {

inline std::string positive_spectrum_warning(const Vector& spectrum, int dim) {
    int positive = 0;
    for (Index i = 0; i < spectrum.size(); ++i)
        if (spectrum(i) > 0.0) ++positive;
    if (positive >= dim) return {};
    std::string msg = "dim exceeds the number of strictly positive objective eigenvalues; "
                      "nonpositive eigenvalues in use:";
    for (Index i = positive; i < dim; ++i)
        msg += " " + std::to_string(spectrum(i));
    return msg;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Regression pipeline
// ---------------------------------------------------------------------------

inline FeatureModel fit(const MomentSummary& m, const ExtractorConfig& config) {
    if (config.task != Task::Regression)
        throw InvalidParameter("classification fits require labeled samples");
    if (!(config.lambda >= 0.0 && config.lambda < 1.0))
        throw InvalidParameter("lambda must be in [0, 1)");

    FeatureModel model;
    model.lambda = config.lambda;
    model.dim = config.dim;
    model.task = Task::Regression;

    run_stage("moments", [&] {
        if (!m.has_block("X")) throw InvalidData("missing feature block 'X'");
        if (!m.has_block("Y")) throw InvalidData("missing outcome block 'Y'");
        detail::context_names(m, config.context);
        if (config.dim < 1 || config.dim > m.block("X").dim)
            throw InvalidParameter("dim must be between 1 and " +
                                   std::to_string(m.block("X").dim));
    });

    run_stage("whitening", [&] {
        const Matrix cov_x = m.block_cov("X");
        model.x_mean = m.block_mean("X");
        model.x_inv_sqrt =
            psd_inv_sqrt(cov_x, config.ridge.value_or(default_ridge(cov_x)), "X");
    });

    const detail::ContextView ctx =
        run_stage("barycenter", [&] { return detail::context_view(m, config.context); });
    const ContinuousResidualMap map = run_stage("barycenter", [&] {
        ContinuousResidualMap out;
        const Matrix cov_y = m.block_cov("Y");
        out.coeff = ctx.cross_y *
            psd_inverse(cov_y, config.ridge.value_or(default_ridge(cov_y)), "Y");
        out.mean_source = ctx.mean;
        out.mean_cond = m.block_mean("Y");
        out.resid_cov = symmetrized(ctx.cov - out.coeff * ctx.cross_y.transpose());
        out.resid_inv_sqrt = psd_inv_sqrt(
            out.resid_cov, config.ridge.value_or(default_ridge(out.resid_cov)), "context|Y");
        return out;
    });

    model.outcome_cross =
        run_stage("outcome cross-covariance", [&] { return build_C_regression(m, config.ridge); });
    model.nuisance_cross = run_stage("nuisance cross-covariance", [&] {
        return build_D_regression(m, model.x_inv_sqrt, map, ctx);
    });

    run_stage("loadings", [&] {
        const double outcome_scale =
            static_cast<double>(std::min<Index>(config.dim, m.block("Y").dim));
        const double nuisance_scale = static_cast<double>(std::min<Index>(config.dim, ctx.dim));
        auto [loadings, spectrum] =
            solve_loadings(model.outcome_cross, model.nuisance_cross, config.lambda,
                           config.dim, outcome_scale, nuisance_scale);
        model.loadings = std::move(loadings);
        model.spectrum = std::move(spectrum);
    });

    model.raw_loadings = model.x_inv_sqrt * model.loadings;
    model.warning = detail::positive_spectrum_warning(model.spectrum, model.dim);
    return model;
}

inline FeatureModel fit(const Matrix& data,
                        const std::vector<std::pair<std::string, Index>>& blocks,
                        const ExtractorConfig& config) {
    return fit(run_stage("moments", [&] { return empirical_moments(data, blocks); }), config);
}

inline Matrix transform(const FeatureModel& model, const Matrix& x_rows) {
    if (x_rows.cols() != model.input_dim())
        throw InvalidData("expected " + std::to_string(model.input_dim()) + " feature columns");
    return (x_rows.rowwise() - model.x_mean.transpose()) * model.raw_loadings;
}

// One model per grid value; the whitener, barycenter map and builder
// matrices are computed once and shared bit-identically.
inline std::vector<FeatureModel> lambda_path(const MomentSummary& m,
                                             ExtractorConfig config,
                                             const std::vector<double>& grid) {
    if (grid.empty()) throw InvalidParameter("lambda grid is empty");
    for (double l : grid)
        if (!(l >= 0.0 && l < 1.0)) throw InvalidParameter("lambda must be in [0, 1)");
    config.lambda = grid.front();
    FeatureModel base = fit(m, config);
    std::vector<FeatureModel> path;
    path.reserve(grid.size());
    const double outcome_scale =
        static_cast<double>(std::min<Index>(config.dim, m.block("Y").dim));
    const double nuisance_scale =
        static_cast<double>(std::min<Index>(config.dim, base.nuisance_cross.cols()));
    for (double l : grid) {
        FeatureModel fm = base;
        fm.lambda = l;
        auto [loadings, spectrum] = solve_loadings(base.outcome_cross, base.nuisance_cross,
                                                   l, config.dim, outcome_scale, nuisance_scale);
        fm.loadings = std::move(loadings);
        fm.spectrum = std::move(spectrum);
        fm.raw_loadings = fm.x_inv_sqrt * fm.loadings;
        fm.warning = detail::positive_spectrum_warning(fm.spectrum, fm.dim);
        path.push_back(std::move(fm));
    }
    return path;
}

inline std::vector<FeatureModel> lambda_path(const Matrix& data,
                                             const std::vector<std::pair<std::string, Index>>& blocks,
                                             const ExtractorConfig& config,
                                             const std::vector<double>& grid) {
    return lambda_path(empirical_moments(data, blocks), config, grid);
}

// ---------------------------------------------------------------------------
// Classification pipeline
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<ClassStat> class_statistics(const Matrix& rows,
                                               const std::vector<std::string>& labels,
                                               Index min_rows) {
    std::map<std::string, std::vector<Index>> groups;
    for (Index i = 0; i < rows.rows(); ++i) groups[labels[static_cast<std::size_t>(i)]].push_back(i);
    std::vector<ClassStat> stats;
    const double n = static_cast<double>(rows.rows());
    for (auto& [label, idx] : groups) {
        if (static_cast<Index>(idx.size()) < min_rows)
            throw ClassTooSmall("class '" + label + "' has " + std::to_string(idx.size()) +
                                " rows, needs at least " + std::to_string(min_rows));
        Matrix sub(static_cast<Index>(idx.size()), rows.cols());
        for (std::size_t r = 0; r < idx.size(); ++r) sub.row(static_cast<Index>(r)) = rows.row(idx[r]);
        std::vector<std::pair<std::string, Index>> one{{"V", rows.cols()}};
        MomentSummary m = empirical_moments(sub, one);
        stats.push_back(ClassStat{label, static_cast<double>(idx.size()) / n,
                                  m.block_mean("V"), m.block_cov("V")});
    }
    return stats;
}

} // namespace detail

struct ClassificationFit {
    FeatureModel model;
    CategoricalBarycenterMap barycenter;
    std::vector<ClassStat> x_class_stats;
};

inline ClassificationFit fit_classification(const Matrix& x_rows, const Matrix& ctx_rows,
                                            const std::vector<std::string>& labels,
                                            const ExtractorConfig& config) {
    if (x_rows.rows() != ctx_rows.rows() ||
        static_cast<Index>(labels.size()) != x_rows.rows())
        throw InvalidData("feature, context and label row counts differ");
    if (!(config.lambda >= 0.0 && config.lambda < 1.0))
        throw InvalidParameter("lambda must be in [0, 1)");
    if (config.dim < 1 || config.dim > x_rows.cols())
        throw InvalidParameter("dim must be between 1 and " + std::to_string(x_rows.cols()));

    ClassificationFit out;
    FeatureModel& model = out.model;
    model.lambda = config.lambda;
    model.dim = config.dim;
    model.task = Task::Classification;

    run_stage("whitening", [&] {
        std::vector<std::pair<std::string, Index>> one{{"X", x_rows.cols()}};
        MomentSummary mx = empirical_moments(x_rows, one);
        const Matrix cov_x = mx.block_cov("X");
        model.x_mean = mx.block_mean("X");
        model.x_inv_sqrt =
            psd_inv_sqrt(cov_x, config.ridge.value_or(default_ridge(cov_x)), "X");
    });

    // Every class needs at least context-dim + 1 rows for a usable
    // within-class covariance.
    const Index min_rows = ctx_rows.cols() + 1;
    out.x_class_stats = run_stage("class statistics", [&] {
        return detail::class_statistics(x_rows, labels, min_rows);
    });
    const std::vector<ClassStat> ctx_stats = run_stage("class statistics", [&] {
        return detail::class_statistics(ctx_rows, labels, min_rows);
    });

    out.barycenter = run_stage("barycenter", [&] {
        return fit_categorical_map(ctx_stats, config.ridge);
    });

    model.outcome_cross = run_stage("outcome cross-covariance", [&] {
        return build_C_categorical(out.x_class_stats, model.x_inv_sqrt);
    });

    model.nuisance_cross = run_stage("nuisance cross-covariance", [&] {
        auto [mapped, standardized] = apply_categorical_map(out.barycenter, ctx_rows, labels);
        Matrix joint(x_rows.rows(), x_rows.cols() + standardized.cols());
        joint << x_rows, standardized;
        std::vector<std::pair<std::string, Index>> two{{"X", x_rows.cols()},
                                                       {"R", standardized.cols()}};
        MomentSummary mj = empirical_moments(joint, two);
        return Matrix(model.x_inv_sqrt * mj.cross_cov("X", "R"));
    });

    run_stage("loadings", [&] {
        const double outcome_scale = config.unify_objective_scale
            ? static_cast<double>(std::min<Index>(config.dim, model.outcome_cross.cols()))
            : static_cast<double>(config.dim);
        const double nuisance_scale =
            static_cast<double>(std::min<Index>(config.dim, ctx_rows.cols()));
        auto [loadings, spectrum] =
            solve_loadings(model.outcome_cross, model.nuisance_cross, config.lambda,
                           config.dim, outcome_scale, nuisance_scale);
        model.loadings = std::move(loadings);
        model.spectrum = std::move(spectrum);
    });

    model.raw_loadings = model.x_inv_sqrt * model.loadings;
    model.warning = detail::positive_spectrum_warning(model.spectrum, model.dim);
    return out;
}

// ---------------------------------------------------------------------------
// Moment extension with the fitted feature block
// ---------------------------------------------------------------------------

// Appends the W = raw_loadings^T (X - x_mean) block to a moment summary so
// that diagnostics can condition on or against the learned features.
inline MomentSummary with_feature_block(const MomentSummary& m, const FeatureModel& model,
                                        const std::string& name = "W") {
    const Block& xb = m.block("X");
    if (xb.dim != model.input_dim())
        throw InvalidData("moments and model disagree on the feature dimension");
    const Matrix& a = model.raw_loadings;
    const Index p = m.dim();
    const Index d = a.cols();

    Vector mean(p + d);
    mean.head(p) = m.mean();
    mean.tail(d) = a.transpose() * (m.block_mean("X") - model.x_mean);

    Matrix cov(p + d, p + d);
    cov.topLeftCorner(p, p) = m.cov();
    const Matrix cross = m.cov().middleCols(xb.offset, xb.dim) * a; // Cov(all, W)
    cov.topRightCorner(p, d) = cross;
    cov.bottomLeftCorner(d, p) = cross.transpose();
    cov.bottomRightCorner(d, d) = a.transpose() * m.block_cov("X") * a;

    std::vector<std::pair<std::string, Index>> blocks;
    for (const Block& b : m.blocks()) blocks.emplace_back(b.name, b.dim);
    blocks.emplace_back(name, d);
    return MomentSummary(std::move(blocks), std::move(mean), std::move(cov), m.provenance());
}

} // namespace otbe
