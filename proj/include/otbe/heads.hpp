#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "otbe/errors.hpp"
#include "otbe/extractor.hpp"
#include "otbe/matstats.hpp"

namespace otbe {

// ---------------------------------------------------------------------------
// Linear prediction heads
// ---------------------------------------------------------------------------

struct LinearHead {
    Matrix beta;      // d_y x k coefficient matrix
    Vector intercept; // d_y
    std::string fitted_on;

    Vector predict_one(const Vector& w) const { return beta * w + intercept; }
};

inline Matrix predict(const LinearHead& head, const Matrix& w_rows) {
    if (w_rows.cols() != head.beta.cols())
        throw InvalidData("expected " + std::to_string(head.beta.cols()) + " input columns");
    return (w_rows * head.beta.transpose()).rowwise() + head.intercept.transpose();
}

// Regression head on top of the extracted features. Cov(W) = I under the
// fitting moments, so beta is just the cross-covariance Sigma_YW.
inline LinearHead fit_linear_head(const FeatureModel& model, const MomentSummary& m) {
    if (model.task != Task::Regression)
        throw InvalidParameter("linear heads apply to regression models");
    LinearHead head;
    head.beta = m.cross_cov("Y", "X") * model.raw_loadings;
    head.intercept = m.block_mean("Y") -
        head.beta * (model.raw_loadings.transpose() * (m.block_mean("X") - model.x_mean));
    head.fitted_on = m.provenance().tag();
    return head;
}

// OLS on the raw features, beta = Sigma_YX Sigma_X^{-1}.
inline LinearHead fit_ols_baseline(const MomentSummary& m,
                                   std::optional<double> ridge = std::nullopt) {
    const Matrix cov_x = m.block_cov("X");
    LinearHead head;
    head.beta = m.cross_cov("Y", "X") * psd_inverse(cov_x, ridge.value_or(default_ridge(cov_x)), "X");
    head.intercept = m.block_mean("Y") - head.beta * m.block_mean("X");
    head.fitted_on = m.provenance().tag();
    return head;
}

// Anchor regression baseline: the population minimizer of
//   E[ ||(I - Pi_A)(Y - B X)||^2 ] + gamma E[ ||Pi_A (Y - B X)||^2 ]
// with Pi_A the population linear projection onto the anchor block. Solved
// through the normal equations
//   B (Sigma_X + (gamma-1) Sigma_Xhat) = Sigma_YX + (gamma-1) Sigma_YXhat,
// where Xhat = Sigma_XA Sigma_A^{-1} A; gamma = 1 recovers OLS.
inline LinearHead fit_anchor_baseline(const MomentSummary& m, std::string_view anchor,
                                      double gamma,
                                      std::optional<double> ridge = std::nullopt) {
    if (gamma < 0.0) throw InvalidParameter("gamma must be nonnegative");
    const Matrix cov_a = m.block_cov(anchor);
    const Matrix a_inv = psd_inverse(cov_a, ridge.value_or(default_ridge(cov_a)), anchor);
    const Matrix cross_xa = m.cross_cov("X", anchor);
    const Matrix proj_hat = cross_xa * a_inv; // maps anchor to Xhat
    const Matrix gram = m.block_cov("X") + (gamma - 1.0) * proj_hat * cross_xa.transpose();
    const Matrix rhs = m.cross_cov("X", "Y") +
                       (gamma - 1.0) * proj_hat * m.cross_cov(anchor, "Y");
    const Matrix gram_inv = psd_inverse(symmetrized(gram),
                                        ridge.value_or(default_ridge(gram)), "anchor gram");
    LinearHead head;
    head.beta = (gram_inv * rhs).transpose();
    head.intercept = m.block_mean("Y") - head.beta * m.block_mean("X");
    head.fitted_on = m.provenance().tag();
    return head;
}

// The anchor objective evaluated by exact moment algebra, used to validate
// the closed form against direct minimization.
inline double anchor_objective(const Matrix& beta, const MomentSummary& m,
                               std::string_view anchor, double gamma) {
    const Matrix cov_a = m.block_cov(anchor);
    const Matrix a_inv = psd_inverse(cov_a, default_ridge(cov_a), anchor);
    // Residual R = Yc - B Xc on centered variables.
    const Matrix cov_r = m.block_cov("Y") - beta * m.cross_cov("X", "Y") -
                         m.cross_cov("Y", "X") * beta.transpose() +
                         beta * m.block_cov("X") * beta.transpose();
    const Matrix cross_ra = m.cross_cov("Y", anchor) - beta * m.cross_cov("X", anchor);
    const double projected = (cross_ra * a_inv * cross_ra.transpose()).trace();
    return cov_r.trace() - projected + gamma * projected;
}

// ---------------------------------------------------------------------------
// Population evaluation
// ---------------------------------------------------------------------------

namespace detail {

// E || Y - G X - c ||^2 under the target moments, expanded in closed form.
inline double population_mse_linear(const Matrix& g, const Vector& c,
                                    const MomentSummary& target) {
    if (g.cols() != target.block("X").dim || g.rows() != target.block("Y").dim ||
        c.size() != g.rows())
        throw InvalidData("predictor and target moments disagree on block dimensions");
    const Matrix cov_y = target.block_cov("Y");
    const Matrix cross_xy = target.cross_cov("X", "Y");
    const Matrix cov_x = target.block_cov("X");
    const Vector bias = target.block_mean("Y") - g * target.block_mean("X") - c;
    return cov_y.trace() - 2.0 * (g * cross_xy).trace() + (g * cov_x * g.transpose()).trace() +
           bias.squaredNorm();
}

} // namespace detail

// Exact population MSE of a feature-space head chained with the extractor,
// evaluated under the target moments (no sampling involved).
inline double mse_population(const LinearHead& head, const FeatureModel& model,
                             const MomentSummary& target) {
    if (head.beta.cols() != model.dim)
        throw InvalidData("head and model disagree on the feature dimension");
    const Matrix g = head.beta * model.raw_loadings.transpose();
    const Vector c = head.intercept - g * model.x_mean;
    return detail::population_mse_linear(g, c, target);
}

// Same evaluator for heads fitted directly on raw X.
inline double mse_population(const LinearHead& head, const MomentSummary& target) {
    return detail::population_mse_linear(head.beta, head.intercept, target);
}

// ---------------------------------------------------------------------------
// Conditional-correlation diagnostic
// ---------------------------------------------------------------------------

// || Corr(W, against | given) ||_F at exact Gaussian moments: the Frobenius
// norm of the standardized partial cross-covariance.
inline double conditional_correlation(const FeatureModel& model, const MomentSummary& m,
                                      std::string_view against, std::string_view given,
                                      std::optional<double> ridge = std::nullopt) {
    const MomentSummary ext = with_feature_block(m, model, "W");
    const Matrix num = partial_covariance(ext, "W", against, given);
    const Matrix cov_w = partial_covariance(ext, "W", "W", given);
    const Matrix cov_v = partial_covariance(ext, against, against, given);
    const Matrix left = psd_inv_sqrt(cov_w, ridge.value_or(default_ridge(cov_w)), "W|given");
    const Matrix right = psd_inv_sqrt(cov_v, ridge.value_or(default_ridge(cov_v)),
                                      std::string(against) + "|given");
    return (left * num * right).norm();
}

// ---------------------------------------------------------------------------
// Nearest-centroid classifier with log-prior offset
// ---------------------------------------------------------------------------

struct CentroidClassifier {
    Matrix centroids; // k x d, one row per class
    Vector priors;
    std::vector<std::string> labels;

    Index classify_one(const Vector& w) const {
        Index best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (Index j = 0; j < centroids.rows(); ++j) {
            const double score = std::log(priors(j)) -
                0.5 * (w - centroids.row(j).transpose()).squaredNorm();
            if (score > best_score) {
                best_score = score;
                best = j;
            }
        }
        return best;
    }
};

inline CentroidClassifier fit_centroid_classifier(const Matrix& w_rows,
                                                  const std::vector<std::string>& labels) {
    if (static_cast<Index>(labels.size()) != w_rows.rows())
        throw InvalidData("label count does not match row count");
    std::map<std::string, std::pair<Vector, double>> sums;
    for (Index i = 0; i < w_rows.rows(); ++i) {
        auto& [sum, count] = sums[labels[static_cast<std::size_t>(i)]];
        if (sum.size() == 0) sum = Vector::Zero(w_rows.cols());
        sum += w_rows.row(i).transpose();
        count += 1.0;
    }
    if (sums.size() < 2) throw InvalidParameter("need at least 2 classes");
    CentroidClassifier out;
    out.centroids.resize(static_cast<Index>(sums.size()), w_rows.cols());
    out.priors.resize(static_cast<Index>(sums.size()));
    Index j = 0;
    for (auto& [label, sc] : sums) {
        out.labels.push_back(label);
        out.centroids.row(j) = (sc.first / sc.second).transpose();
        out.priors(j) = sc.second / static_cast<double>(w_rows.rows());
        ++j;
    }
    return out;
}

inline std::vector<std::string> predict(const CentroidClassifier& clf, const Matrix& w_rows) {
    if (w_rows.cols() != clf.centroids.cols())
        throw InvalidData("expected " + std::to_string(clf.centroids.cols()) + " input columns");
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(w_rows.rows()));
    for (Index i = 0; i < w_rows.rows(); ++i)
        out.push_back(clf.labels[static_cast<std::size_t>(clf.classify_one(w_rows.row(i).transpose()))]);
    return out;
}

} // namespace otbe
