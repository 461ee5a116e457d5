#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "otbe/errors.hpp"
#include "otbe/matstats.hpp"

namespace otbe {

// Transport cost convention used throughout: c(x, y) = 0.5 * ||y - x||^2.
inline double transport_cost(const Vector& from, const Vector& to) {
    return 0.5 * (to - from).squaredNorm();
}

// ---------------------------------------------------------------------------
// Continuous (jointly Gaussian) barycenter map
// ---------------------------------------------------------------------------

// T(S, Y) = S - coeff (Y - mean_Y): the regression remainder of S against Y
// plus its mean. The mapped variable has zero cross-covariance with Y.
struct ContinuousResidualMap {
    Matrix coeff;          // Sigma_SY Sigma_Y^{-1}, d_s x d_y
    Vector mean_source;    // E[S]
    Vector mean_cond;      // E[Y]
    Matrix resid_cov;      // covariance of T(S, Y)
    Matrix resid_inv_sqrt; // whitener for the mapped variable

    Index source_dim() const { return coeff.rows(); }
    Index cond_dim() const { return coeff.cols(); }

    Vector apply_one(const Vector& s, const Vector& y) const {
        return s - coeff * (y - mean_cond);
    }
};

inline ContinuousResidualMap fit_continuous_map(const MomentSummary& m,
                                                std::string_view source,
                                                std::string_view conditioner,
                                                std::optional<double> ridge = std::nullopt) {
    const Matrix s_y = m.block_cov(conditioner);
    const double r = ridge.value_or(default_ridge(s_y));
    ContinuousResidualMap map;
    map.coeff = m.cross_cov(source, conditioner) * psd_inverse(s_y, r, conditioner);
    map.mean_source = m.block_mean(source);
    map.mean_cond = m.block_mean(conditioner);
    map.resid_cov = symmetrized(m.block_cov(source) -
                                map.coeff * m.cross_cov(conditioner, source));
    map.resid_inv_sqrt = psd_inv_sqrt(map.resid_cov, default_ridge(map.resid_cov),
                                      std::string(source) + "|" + std::string(conditioner));
    return map;
}

// Rowwise application; returns the mapped rows T(S, Y) and the standardized
// rows resid_inv_sqrt * (T - E[S]).
inline std::pair<Matrix, Matrix> apply_map(const ContinuousResidualMap& map,
                                           const Matrix& s_rows, const Matrix& y_rows) {
    if (s_rows.rows() != y_rows.rows())
        throw InvalidData("source and conditioner row counts differ");
    if (s_rows.cols() != map.source_dim() || y_rows.cols() != map.cond_dim())
        throw InvalidData("column counts do not match the fitted blocks");
    Matrix mapped = s_rows -
        (y_rows.rowwise() - map.mean_cond.transpose()) * map.coeff.transpose();
    Matrix standardized =
        (mapped.rowwise() - map.mean_source.transpose()) * map.resid_inv_sqrt;
    return {std::move(mapped), std::move(standardized)};
}

// ---------------------------------------------------------------------------
// Categorical barycenter map
// ---------------------------------------------------------------------------

struct ClassStat {
    std::string label;
    double prior = 0.0;
    Vector mean;
    Matrix cov;
};

// Gaussian barycenter of the per-class conditionals. bary_cov is the unique
// SPD solution of  Sigma = sum_y p_y (Sigma^{1/2} Sigma_y Sigma^{1/2})^{1/2}
// and T(S, y_j) = Sigma^{1/2} Sigma_j^{-1/2} (S - mu_j) + E[S].
struct CategoricalBarycenterMap {
    std::vector<std::string> classes;
    Vector priors;
    std::vector<Vector> class_means;
    std::vector<Matrix> class_covs;
    Matrix bary_cov;
    Matrix bary_sqrt;
    std::vector<Matrix> class_inv_sqrts;
    Vector grand_mean; // E[S]
    double fixed_point_residual = 0.0;
    int iterations = 0;

    Index dim() const { return grand_mean.size(); }

    Index class_index(std::string_view label) const {
        for (std::size_t j = 0; j < classes.size(); ++j)
            if (classes[j] == label) return static_cast<Index>(j);
        throw UnknownClass("label '" + std::string(label) + "' was not fitted");
    }
};

inline CategoricalBarycenterMap fit_categorical_map(const std::vector<ClassStat>& stats,
                                                    std::optional<double> ridge = std::nullopt) {
    const std::size_t k = stats.size();
    if (k < 2) throw InvalidParameter("categorical barycenter needs at least 2 classes");
    const Index d = stats.front().mean.size();

    CategoricalBarycenterMap map;
    map.priors.resize(static_cast<Index>(k));
    double prior_sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        const ClassStat& cs = stats[j];
        if (cs.mean.size() != d || cs.cov.rows() != d || cs.cov.cols() != d)
            throw InvalidData("class '" + cs.label + "' has inconsistent dimensions");
        if (cs.prior <= 0.0) throw InvalidData("class '" + cs.label + "' has nonpositive prior");
        map.classes.push_back(cs.label);
        map.priors(static_cast<Index>(j)) = cs.prior;
        prior_sum += cs.prior;
        const double r = ridge.value_or(default_ridge(cs.cov));
        Matrix cov = symmetrized(cs.cov) + r * Matrix::Identity(d, d);
        map.class_inv_sqrts.push_back(psd_inv_sqrt(cov, 0.0, "class " + cs.label));
        map.class_covs.push_back(std::move(cov));
        map.class_means.push_back(cs.mean);
    }
    if (std::abs(prior_sum - 1.0) > 1e-12)
        throw InvalidData("class priors sum to " + std::to_string(prior_sum) + ", expected 1");

    map.grand_mean = Vector::Zero(d);
    for (std::size_t j = 0; j < k; ++j)
        map.grand_mean += map.priors(static_cast<Index>(j)) * map.class_means[j];

    // Fixed-point iteration initialized at the covariance mixture.
    Matrix sigma = Matrix::Zero(d, d);
    for (std::size_t j = 0; j < k; ++j)
        sigma += map.priors(static_cast<Index>(j)) * map.class_covs[j];

    const int max_iters = 500;
    const double rel_tol = 1e-10;
    int iter = 0;
    for (; iter < max_iters; ++iter) {
        const Matrix root = psd_sqrt(sigma, "barycenter iterate");
        const Matrix inv_root = psd_inv_sqrt(sigma, 0.0, "barycenter iterate");
        Matrix mixed = Matrix::Zero(d, d);
        for (std::size_t j = 0; j < k; ++j)
            mixed += map.priors(static_cast<Index>(j)) *
                     psd_sqrt(symmetrized(root * map.class_covs[j] * root));
        Matrix next = symmetrized(inv_root * mixed * mixed * inv_root);
        const double step = (next - sigma).norm() / sigma.norm();
        sigma = std::move(next);
        if (step <= rel_tol) {
            ++iter;
            break;
        }
    }
    map.iterations = iter;
    map.bary_cov = sigma;
    map.bary_sqrt = psd_sqrt(sigma, "barycenter covariance");

    Matrix fp = Matrix::Zero(d, d);
    for (std::size_t j = 0; j < k; ++j)
        fp += map.priors(static_cast<Index>(j)) *
              psd_sqrt(symmetrized(map.bary_sqrt * map.class_covs[j] * map.bary_sqrt));
    map.fixed_point_residual = (sigma - fp).norm() / sigma.norm();
    if (map.fixed_point_residual > 1e-8)
        throw ConvergenceFailure("barycenter fixed point not reached after " +
                                 std::to_string(iter) + " iterations, relative residual " +
                                 std::to_string(map.fixed_point_residual));
    return map;
}

// Rowwise per-class affine map; returns (T(S, Y) rows, standardized rows).
inline std::pair<Matrix, Matrix> apply_categorical_map(const CategoricalBarycenterMap& map,
                                                       const Matrix& s_rows,
                                                       const std::vector<std::string>& labels) {
    if (static_cast<Index>(labels.size()) != s_rows.rows())
        throw InvalidData("label count does not match row count");
    if (s_rows.cols() != map.dim())
        throw InvalidData("column count does not match the fitted block");
    Matrix mapped(s_rows.rows(), s_rows.cols());
    Matrix standardized(s_rows.rows(), s_rows.cols());
    for (Index i = 0; i < s_rows.rows(); ++i) {
        const Index j = map.class_index(labels[static_cast<std::size_t>(i)]);
        const Vector centered = s_rows.row(i).transpose() - map.class_means[static_cast<std::size_t>(j)];
        const Vector white = map.class_inv_sqrts[static_cast<std::size_t>(j)] * centered;
        standardized.row(i) = white.transpose();
        mapped.row(i) = (map.bary_sqrt * white + map.grand_mean).transpose();
    }
    return {std::move(mapped), std::move(standardized)};
}

// ---------------------------------------------------------------------------
// Correlation functional and categorical dispersion
// ---------------------------------------------------------------------------

// Normalized squared Frobenius norm of the standardized cross-covariance,
// the multidimensional analogue of a squared correlation; lands in [0, 1].
inline double multi_correlation(const Matrix& cov_u, const Matrix& cross_uv,
                                const Matrix& cov_v,
                                std::optional<double> ridge = std::nullopt) {
    const double ru = ridge.value_or(0.0);
    const double rv = ridge.value_or(0.0);
    const Matrix k = psd_inv_sqrt(cov_u, ru, "U") * cross_uv * psd_inv_sqrt(cov_v, rv, "V");
    const double denom = static_cast<double>(std::min(cov_u.rows(), cov_v.rows()));
    return k.squaredNorm() / denom;
}

inline double multi_correlation(const MomentSummary& m, std::string_view u,
                                std::string_view v,
                                std::optional<double> ridge = std::nullopt) {
    return multi_correlation(m.block_cov(u), m.cross_cov(u, v), m.block_cov(v), ridge);
}

// D(W, Y) = sum_j p(y_j) || E[W|Y=y_j] - E[W] ||^2.
inline double categorical_dispersion(const std::vector<Vector>& class_means,
                                     const Vector& grand_mean, const Vector& priors) {
    if (static_cast<Index>(class_means.size()) != priors.size())
        throw InvalidData("class mean count does not match prior count");
    double total = 0.0;
    for (std::size_t j = 0; j < class_means.size(); ++j) {
        if (class_means[j].size() != grand_mean.size())
            throw InvalidData("class mean dimension mismatch");
        total += priors(static_cast<Index>(j)) * (class_means[j] - grand_mean).squaredNorm();
    }
    return total;
}

} // namespace otbe
