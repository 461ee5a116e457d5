#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "otbe/barycenter.hpp"
#include "otbe/errors.hpp"
#include "otbe/extractor.hpp"
#include "otbe/heads.hpp"
#include "otbe/matstats.hpp"
#include "otbe/rng.hpp"

namespace otbe {

// ---------------------------------------------------------------------------
// Structural equation models
// ---------------------------------------------------------------------------

// (Z, Y) ~ N(0, Sigma_rho) with unit variances, X1 = Z + e1, X2 = Y - Z + e2.
struct ToySem {
    double rho = 0.0;
    double sigma1_sq = 1.0;
    double sigma2_sq = 1.0;
};

// (Z, S, Y) ~ N(0, sigma_zsy), same feature equations as the toy model but
// with the confounder unobserved and S available as a surrogate.
struct SurrogateSem {
    Matrix sigma_zsy; // 3x3, order (Z, S, Y)
    double sigma1_sq = 0.25;
    double sigma2_sq = 0.25;
};

// (S, Z, Y) ~ N(0, sigma_szy), X = A Z + B Y + noise.
struct MultivariateSem {
    Index d_s = 2, d_z = 2, d_y = 2, d_x = 6;
    Matrix sigma_szy; // (d_s + d_z + d_y)^2, order (S, Z, Y)
    Matrix coef_z;    // d_x x d_z
    Matrix coef_y;    // d_x x d_y
    Matrix noise_cov; // d_x x d_x
};

struct SemSpec {
    std::variant<ToySem, SurrogateSem, MultivariateSem> kind;
    std::uint64_t seed = 0;
};

namespace detail {

inline void require_spd(const Matrix& m, std::string_view what) {
    if (m.rows() != m.cols()) throw InvalidData(std::string(what) + " is not square");
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(m), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw InvalidData(std::string(what) + " is not positive definite");
}

inline void validate(const ToySem& t) {
    if (!(std::abs(t.rho) < 1.0)) throw InvalidData("toy SEM requires |rho| < 1");
    if (t.sigma1_sq <= 0.0 || t.sigma2_sq <= 0.0)
        throw InvalidData("toy SEM noise variances must be positive");
}

inline void validate(const SurrogateSem& s) {
    if (s.sigma_zsy.rows() != 3) throw InvalidData("surrogate SEM needs a 3x3 (Z,S,Y) covariance");
    require_spd(s.sigma_zsy, "surrogate (Z,S,Y) covariance");
    if (s.sigma1_sq <= 0.0 || s.sigma2_sq <= 0.0)
        throw InvalidData("surrogate SEM noise variances must be positive");
}

inline void validate(const MultivariateSem& m) {
    const Index latent = m.d_s + m.d_z + m.d_y;
    if (m.sigma_szy.rows() != latent)
        throw InvalidData("multivariate SEM covariance does not match the declared dimensions");
    require_spd(m.sigma_szy, "multivariate (S,Z,Y) covariance");
    if (m.coef_z.rows() != m.d_x || m.coef_z.cols() != m.d_z)
        throw InvalidData("confounder coefficient matrix has wrong shape");
    if (m.coef_y.rows() != m.d_x || m.coef_y.cols() != m.d_y)
        throw InvalidData("outcome coefficient matrix has wrong shape");
    require_spd(m.noise_cov, "feature noise covariance");
}

} // namespace detail

inline std::vector<std::pair<std::string, Index>> block_partition(const SemSpec& spec) {
    if (std::holds_alternative<ToySem>(spec.kind))
        return {{"Y", 1}, {"Z", 1}, {"X", 2}};
    if (std::holds_alternative<SurrogateSem>(spec.kind))
        return {{"Y", 1}, {"Z", 1}, {"S", 1}, {"X", 2}};
    const auto& m = std::get<MultivariateSem>(spec.kind);
    return {{"Y", m.d_y}, {"Z", m.d_z}, {"S", m.d_s}, {"X", m.d_x}};
}

// Closed-form joint moments of (Y, Z, [S,] X) by linear-Gaussian propagation.
inline MomentSummary sem_to_moments(const SemSpec& spec) {
    if (const auto* t = std::get_if<ToySem>(&spec.kind)) {
        detail::validate(*t);
        const double r = t->rho;
        Matrix cov(4, 4);
        // order (Y, Z, X1, X2)
        cov << 1.0, r, r, 1.0 - r,
               r, 1.0, 1.0, r - 1.0,
               r, 1.0, 1.0 + t->sigma1_sq, r - 1.0,
               1.0 - r, r - 1.0, r - 1.0, 2.0 - 2.0 * r + t->sigma2_sq;
        return MomentSummary(block_partition(spec), Vector::Zero(4), cov, Provenance::exact());
    }
    if (const auto* s = std::get_if<SurrogateSem>(&spec.kind)) {
        detail::validate(*s);
        const Matrix& e = s->sigma_zsy; // order (Z, S, Y)
        const double vz = e(0, 0), czs = e(0, 1), czy = e(0, 2);
        const double vs = e(1, 1), csy = e(1, 2), vy = e(2, 2);
        Matrix cov(5, 5);
        // order (Y, Z, S, X1, X2); X1 = Z + e1, X2 = Y - Z + e2
        cov << vy, czy, csy, czy, vy - czy,
               czy, vz, czs, vz, czy - vz,
               csy, czs, vs, czs, csy - czs,
               czy, vz, czs, vz + s->sigma1_sq, czy - vz,
               vy - czy, czy - vz, csy - czs, czy - vz, vy + vz - 2.0 * czy + s->sigma2_sq;
        return MomentSummary(block_partition(spec), Vector::Zero(5), cov, Provenance::exact());
    }
    const auto& m = std::get<MultivariateSem>(spec.kind);
    detail::validate(m);
    const auto seg_s = Eigen::seqN(0, m.d_s);
    const auto seg_z = Eigen::seqN(m.d_s, m.d_z);
    const auto seg_y = Eigen::seqN(m.d_s + m.d_z, m.d_y);
    const Matrix ss = m.sigma_szy(seg_s, seg_s), sz = m.sigma_szy(seg_s, seg_z),
                 sy = m.sigma_szy(seg_s, seg_y), zz = m.sigma_szy(seg_z, seg_z),
                 zy = m.sigma_szy(seg_z, seg_y), yy = m.sigma_szy(seg_y, seg_y);
    const Matrix cov_xy = m.coef_z * zy + m.coef_y * yy;
    const Matrix cov_xz = m.coef_z * zz + m.coef_y * zy.transpose();
    const Matrix cov_xs = m.coef_z * sz.transpose() + m.coef_y * sy.transpose();
    const Matrix cov_x = m.coef_z * zz * m.coef_z.transpose() +
                         m.coef_y * yy * m.coef_y.transpose() +
                         m.coef_z * zy * m.coef_y.transpose() +
                         m.coef_y * zy.transpose() * m.coef_z.transpose() + m.noise_cov;
    const Index p = m.d_y + m.d_z + m.d_s + m.d_x;
    Matrix cov = Matrix::Zero(p, p);
    const Index oy = 0, oz = m.d_y, os = m.d_y + m.d_z, ox = m.d_y + m.d_z + m.d_s;
    cov.block(oy, oy, m.d_y, m.d_y) = yy;
    cov.block(oz, oz, m.d_z, m.d_z) = zz;
    cov.block(os, os, m.d_s, m.d_s) = ss;
    cov.block(ox, ox, m.d_x, m.d_x) = cov_x;
    cov.block(oy, oz, m.d_y, m.d_z) = zy.transpose();
    cov.block(oz, oy, m.d_z, m.d_y) = zy;
    cov.block(oy, os, m.d_y, m.d_s) = sy.transpose();
    cov.block(os, oy, m.d_s, m.d_y) = sy;
    cov.block(oz, os, m.d_z, m.d_s) = sz.transpose();
    cov.block(os, oz, m.d_s, m.d_z) = sz;
    cov.block(ox, oy, m.d_x, m.d_y) = cov_xy;
    cov.block(oy, ox, m.d_y, m.d_x) = cov_xy.transpose();
    cov.block(ox, oz, m.d_x, m.d_z) = cov_xz;
    cov.block(oz, ox, m.d_z, m.d_x) = cov_xz.transpose();
    cov.block(ox, os, m.d_x, m.d_s) = cov_xs;
    cov.block(os, ox, m.d_s, m.d_x) = cov_xs.transpose();
    return MomentSummary(block_partition(spec), Vector::Zero(p), cov, Provenance::exact());
}

// Seeded sample whose columns follow block_partition(spec). Latent rows are
// drawn first (row-major), then the feature noise, so draws are reproducible.
inline Matrix sample(const SemSpec& spec, Index n) {
    if (n < 1) throw InvalidParameter("sample size must be at least 1");
    Rng rng(spec.seed);
    if (const auto* t = std::get_if<ToySem>(&spec.kind)) {
        detail::validate(*t);
        Matrix latent_cov(2, 2);
        latent_cov << 1.0, t->rho, t->rho, 1.0; // (Z, Y)
        const Matrix root = psd_sqrt(latent_cov);
        Matrix zy = rng.normal_matrix(n, 2) * root;
        Matrix noise = rng.normal_matrix(n, 2);
        Matrix out(n, 4);
        out.col(0) = zy.col(1);                                        // Y
        out.col(1) = zy.col(0);                                        // Z
        out.col(2) = zy.col(0) + std::sqrt(t->sigma1_sq) * noise.col(0); // X1
        out.col(3) = zy.col(1) - zy.col(0) + std::sqrt(t->sigma2_sq) * noise.col(1);
        return out;
    }
    if (const auto* s = std::get_if<SurrogateSem>(&spec.kind)) {
        detail::validate(*s);
        const Matrix root = psd_sqrt(s->sigma_zsy);
        Matrix zsy = rng.normal_matrix(n, 3) * root;
        Matrix noise = rng.normal_matrix(n, 2);
        Matrix out(n, 5);
        out.col(0) = zsy.col(2);                                        // Y
        out.col(1) = zsy.col(0);                                        // Z
        out.col(2) = zsy.col(1);                                        // S
        out.col(3) = zsy.col(0) + std::sqrt(s->sigma1_sq) * noise.col(0);
        out.col(4) = zsy.col(2) - zsy.col(0) + std::sqrt(s->sigma2_sq) * noise.col(1);
        return out;
    }
    const auto& m = std::get<MultivariateSem>(spec.kind);
    detail::validate(m);
    const Matrix root = psd_sqrt(m.sigma_szy);
    Matrix szy = rng.normal_matrix(n, m.d_s + m.d_z + m.d_y) * root;
    Matrix noise = rng.normal_matrix(n, m.d_x) * psd_sqrt(m.noise_cov);
    const Matrix s_rows = szy.leftCols(m.d_s);
    const Matrix z_rows = szy.middleCols(m.d_s, m.d_z);
    const Matrix y_rows = szy.rightCols(m.d_y);
    Matrix out(n, m.d_y + m.d_z + m.d_s + m.d_x);
    out << y_rows, z_rows, s_rows,
           z_rows * m.coef_z.transpose() + y_rows * m.coef_y.transpose() + noise;
    return out;
}

// G G^T + dim * 1e-3 * I with G seeded standard normal.
inline Matrix random_spd(Index dim, Rng& rng) {
    const Matrix g = rng.normal_matrix(dim, dim);
    return g * g.transpose() + static_cast<double>(dim) * 1e-3 * Matrix::Identity(dim, dim);
}

inline Matrix random_spd(Index dim, std::uint64_t seed) {
    Rng rng(seed);
    return random_spd(dim, rng);
}

// Congruence transform making the trailing Y block of a (S, Z, Y) covariance
// equal to the identity while preserving all cross-dependencies.
inline Matrix enforce_unit_y(const Matrix& sigma_szy, Index d_s, Index d_z, Index d_y) {
    if (sigma_szy.rows() != d_s + d_z + d_y)
        throw InvalidData("covariance does not match the declared dimensions");
    Matrix j = Matrix::Identity(sigma_szy.rows(), sigma_szy.cols());
    const Index oy = d_s + d_z;
    j.block(oy, oy, d_y, d_y) = psd_inv_sqrt(sigma_szy.block(oy, oy, d_y, d_y), 0.0, "Y");
    return symmetrized(j * sigma_szy * j);
}

// ---------------------------------------------------------------------------
// Threading
// ---------------------------------------------------------------------------

// Strided parallel loop with preallocated per-index output slots in callers;
// results are identical for every thread count.
inline void parallel_for(std::int64_t count, int threads,
                         const std::function<void(std::int64_t)>& body) {
    if (count <= 0) return;
    threads = static_cast<int>(std::min<std::int64_t>(std::max(1, threads), count));
    if (threads <= 1) {
        for (std::int64_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::int64_t i = t; i < count; i += threads) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (std::thread& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

inline std::vector<double> default_lambda_grid() {
    std::vector<double> grid(41);
    for (int i = 0; i < 41; ++i) grid[static_cast<std::size_t>(i)] = 0.999 * i / 40.0;
    return grid;
}

// ---------------------------------------------------------------------------
// Population shift experiment (grid of covariance triples)
// ---------------------------------------------------------------------------

struct GridExperimentConfig {
    std::vector<double> correlation_values{-0.8, -0.4, 0.0, 0.4, 0.8};
    double sigma1_sq = 0.25;
    double sigma2_sq = 0.25;
    std::vector<double> lambda_grid = default_lambda_grid();
    std::vector<double> gamma_grid{0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
    std::uint64_t seed = 1; // echoed for provenance; the grid itself is deterministic
    int threads = 1;
};

struct PairRecord {
    int source_id = 0;
    int target_id = 0;
    double frobenius_distance = 0.0;
    double best_lambda = 0.0;
    double best_gamma = 1.0;
    double mse_ols = 0.0;
    double mse_anchor = 0.0;
    double mse_bary = 0.0;
    std::string winner;
};

struct GridExperimentReport {
    GridExperimentConfig config;
    int admissible_triples = 0;
    std::vector<PairRecord> pairs;
    std::int64_t wins_ols = 0, wins_anchor = 0, wins_bary = 0;
};

// Correlation matrices over (Z, S, Y) with unit variances, kept when SPD.
inline std::vector<Matrix> admissible_correlation_triples(const std::vector<double>& values) {
    std::vector<Matrix> out;
    for (double zs : values)
        for (double zy : values)
            for (double sy : values) {
                Matrix m(3, 3);
                m << 1.0, zs, zy, zs, 1.0, sy, zy, sy, 1.0;
                Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
                if (es.eigenvalues().minCoeff() > 1e-9) out.push_back(m);
            }
    return out;
}

namespace detail {

struct TunedChoice {
    double parameter = 0.0;
    double mse = 0.0;
};

// Picks the grid argmin; reverts to the OLS-equivalent parameter when that
// value is optimal (within relative rounding slack).
inline TunedChoice tune_with_ols_revert(const std::vector<double>& grid,
                                        const std::vector<double>& mses,
                                        double ols_equivalent_parameter,
                                        double ols_equivalent_mse) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < mses.size(); ++i)
        if (mses[i] < mses[best]) best = i;
    const double slack = 1e-12 * (1.0 + std::abs(mses[best]));
    if (ols_equivalent_mse <= mses[best] + slack)
        return {ols_equivalent_parameter, ols_equivalent_mse};
    return {grid[best], mses[best]};
}

} // namespace detail

inline GridExperimentReport population_shift_experiment(const GridExperimentConfig& config) {
    const std::vector<Matrix> triples = admissible_correlation_triples(config.correlation_values);
    if (triples.empty()) throw InvalidConfig("no admissible covariance triples in the grid");
    if (config.lambda_grid.empty() || config.gamma_grid.empty())
        throw InvalidConfig("lambda and gamma grids must be nonempty");

    struct SourceFits {
        LinearHead ols;
        std::vector<LinearHead> anchors;       // per gamma
        std::vector<FeatureModel> bary_models; // per lambda
        std::vector<LinearHead> bary_heads;
        std::vector<FeatureModel> zero_model;  // lambda = 0, the OLS-equivalent fit
        std::vector<LinearHead> zero_head;
    };

    const int m = static_cast<int>(triples.size());
    std::vector<MomentSummary> moments;
    moments.reserve(triples.size());
    for (const Matrix& t : triples) {
        SemSpec spec{SurrogateSem{t, config.sigma1_sq, config.sigma2_sq}, config.seed};
        moments.push_back(sem_to_moments(spec));
    }

    std::vector<SourceFits> fits(triples.size());
    parallel_for(m, config.threads, [&](std::int64_t i) {
        SourceFits& f = fits[static_cast<std::size_t>(i)];
        const MomentSummary& src = moments[static_cast<std::size_t>(i)];
        f.ols = fit_ols_baseline(src);
        for (double g : config.gamma_grid)
            f.anchors.push_back(fit_anchor_baseline(src, "S", g));
        ExtractorConfig ec;
        ec.dim = 1;
        ec.task = Task::Regression;
        ec.context = ContextBlock::S;
        f.bary_models = lambda_path(src, ec, config.lambda_grid);
        for (const FeatureModel& fm : f.bary_models)
            f.bary_heads.push_back(fit_linear_head(fm, src));
        f.zero_model.push_back(fit(src, ec));
        f.zero_head.push_back(fit_linear_head(f.zero_model.front(), src));
    });

    GridExperimentReport report;
    report.config = config;
    report.admissible_triples = m;
    report.pairs.resize(static_cast<std::size_t>(m) * static_cast<std::size_t>(m));

    parallel_for(static_cast<std::int64_t>(m) * m, config.threads, [&](std::int64_t k) {
        const int si = static_cast<int>(k / m);
        const int ti = static_cast<int>(k % m);
        const SourceFits& f = fits[static_cast<std::size_t>(si)];
        const MomentSummary& target = moments[static_cast<std::size_t>(ti)];

        const double mse_ols = mse_population(f.ols, target);

        std::vector<double> anchor_mses;
        for (const LinearHead& h : f.anchors) anchor_mses.push_back(mse_population(h, target));
        const detail::TunedChoice anchor =
            detail::tune_with_ols_revert(config.gamma_grid, anchor_mses, 1.0, mse_ols);

        std::vector<double> bary_mses;
        for (std::size_t j = 0; j < f.bary_models.size(); ++j)
            bary_mses.push_back(mse_population(f.bary_heads[j], f.bary_models[j], target));
        const double mse_lambda0 =
            mse_population(f.zero_head.front(), f.zero_model.front(), target);
        const detail::TunedChoice bary =
            detail::tune_with_ols_revert(config.lambda_grid, bary_mses, 0.0, mse_lambda0);

        PairRecord rec;
        rec.source_id = si;
        rec.target_id = ti;
        rec.frobenius_distance =
            (triples[static_cast<std::size_t>(si)] - triples[static_cast<std::size_t>(ti)]).norm();
        rec.best_gamma = anchor.parameter;
        rec.best_lambda = bary.parameter;
        rec.mse_ols = mse_ols;
        rec.mse_anchor = anchor.mse;
        rec.mse_bary = bary.mse;

        const bool bary_competes = rec.best_lambda != 0.0 && rec.mse_bary < mse_ols;
        const bool anchor_competes = rec.best_gamma != 1.0 && rec.mse_anchor < mse_ols;
        if (bary_competes && (!anchor_competes || rec.mse_bary <= rec.mse_anchor))
            rec.winner = "bary";
        else if (anchor_competes)
            rec.winner = "anchor";
        else
            rec.winner = "ols";
        report.pairs[static_cast<std::size_t>(k)] = std::move(rec);
    });

    for (const PairRecord& r : report.pairs) {
        if (r.winner == "ols") ++report.wins_ols;
        else if (r.winner == "anchor") ++report.wins_anchor;
        else ++report.wins_bary;
    }
    return report;
}

// Barycentric win share among the top quartile of Frobenius distances;
// used to check that wins concentrate where the shift is largest.
inline double bary_share_top_frobenius_quartile(const GridExperimentReport& report) {
    std::vector<std::size_t> order(report.pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return report.pairs[a].frobenius_distance < report.pairs[b].frobenius_distance;
    });
    const std::size_t start = order.size() - order.size() / 4;
    std::size_t wins = 0;
    for (std::size_t i = start; i < order.size(); ++i)
        if (report.pairs[order[i]].winner == "bary") ++wins;
    return static_cast<double>(wins) / static_cast<double>(order.size() - start);
}

// ---------------------------------------------------------------------------
// Finite-sample lambda curve experiment
// ---------------------------------------------------------------------------

struct LambdaCurveConfig {
    int reps = 100;
    Index n = 8000;
    std::vector<double> lambda_grid = default_lambda_grid();
    Index d_s = 2, d_z = 2, d_y = 2, d_x = 6;
    int dim = 2;
    double noise_var = 0.25;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct CurveRow {
    int rep = 0;
    double lambda = 0.0;
    double cond_corr = 0.0;
};

struct LambdaCurveReport {
    LambdaCurveConfig config;
    std::vector<CurveRow> rows; // one row per (rep, lambda)
    double decay_fraction = 0.0;
};

namespace detail {

struct FixedCoefficients {
    Matrix coef_z, coef_y;
};

// A and B are drawn once from substream 0 and shared by every repetition.
inline FixedCoefficients fixed_coefficients(const LambdaCurveConfig& c) {
    Rng rng = Rng::substream(c.seed, 0);
    FixedCoefficients f;
    f.coef_z = rng.normal_matrix(c.d_x, c.d_z);
    f.coef_y = rng.normal_matrix(c.d_x, c.d_y);
    return f;
}

} // namespace detail

inline LambdaCurveReport lambda_curve_experiment(const LambdaCurveConfig& config) {
    if (config.reps < 1) throw InvalidConfig("reps must be at least 1");
    if (config.lambda_grid.size() < 2 ||
        !std::is_sorted(config.lambda_grid.begin(), config.lambda_grid.end()))
        throw InvalidConfig("lambda grid must be ascending with at least 2 points");
    const detail::FixedCoefficients fixed = detail::fixed_coefficients(config);
    const Index latent = config.d_s + config.d_z + config.d_y;

    LambdaCurveReport report;
    report.config = config;
    report.rows.resize(static_cast<std::size_t>(config.reps) * config.lambda_grid.size());
    std::vector<int> decayed(static_cast<std::size_t>(config.reps), 0);

    parallel_for(config.reps, config.threads, [&](std::int64_t rep) {
        Rng rng = Rng::substream(config.seed, static_cast<std::uint64_t>(rep) + 1);
        const Matrix sigma_src =
            enforce_unit_y(random_spd(latent, rng), config.d_s, config.d_z, config.d_y);
        enforce_unit_y(random_spd(latent, rng), config.d_s, config.d_z, config.d_y); // target draw
        MultivariateSem sem{config.d_s, config.d_z, config.d_y, config.d_x, sigma_src,
                            fixed.coef_z, fixed.coef_y,
                            config.noise_var * Matrix::Identity(config.d_x, config.d_x)};
        SemSpec spec{sem, rng.next_u64()};
        const Matrix data = sample(spec, config.n);
        const MomentSummary exact = sem_to_moments(spec);

        ExtractorConfig ec;
        ec.dim = config.dim;
        ec.context = ContextBlock::S;
        const std::vector<FeatureModel> path =
            lambda_path(data, block_partition(spec), ec, config.lambda_grid);

        for (std::size_t j = 0; j < path.size(); ++j) {
            CurveRow row;
            row.rep = static_cast<int>(rep);
            row.lambda = config.lambda_grid[j];
            row.cond_corr = conditional_correlation(path[j], exact, "Z", "Y");
            report.rows[static_cast<std::size_t>(rep) * config.lambda_grid.size() + j] = row;
        }
        const std::size_t base = static_cast<std::size_t>(rep) * config.lambda_grid.size();
        decayed[static_cast<std::size_t>(rep)] =
            report.rows[base + config.lambda_grid.size() - 1].cond_corr <
            report.rows[base].cond_corr;
    });

    std::int64_t total = 0;
    for (int d : decayed) total += d;
    report.decay_fraction = static_cast<double>(total) / static_cast<double>(config.reps);
    return report;
}

// ---------------------------------------------------------------------------
// Best-lambda under structural shifts
// ---------------------------------------------------------------------------

struct LambdaStarConfig {
    int iters = 500;
    std::vector<double> lambda_grid = default_lambda_grid();
    double improvement_threshold = 0.005;
    bool redraw_source = true; // when false the iteration-0 source is reused
    Index d_s = 2, d_z = 2, d_y = 2, d_x = 6;
    int dim = 2;
    double noise_var = 0.25;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct LambdaStarRow {
    int iter = 0;
    double lambda_star = 0.0;
    double mse_ols = 0.0;
    double mse_best = 0.0;
};

struct LambdaStarReport {
    LambdaStarConfig config;
    std::vector<LambdaStarRow> rows;
    double mass_at_zero = 0.0;
    double mass_above_09 = 0.0;
    double mass_middle = 0.0; // mass in (0.1, 0.9)
};

inline LambdaStarReport lambda_star_experiment(const LambdaStarConfig& config) {
    if (config.iters < 1) throw InvalidConfig("iters must be at least 1");
    if (config.lambda_grid.empty()) throw InvalidConfig("lambda grid must be nonempty");
    LambdaCurveConfig coefcfg;
    coefcfg.seed = config.seed;
    coefcfg.d_s = config.d_s;
    coefcfg.d_z = config.d_z;
    coefcfg.d_y = config.d_y;
    coefcfg.d_x = config.d_x;
    const detail::FixedCoefficients fixed = detail::fixed_coefficients(coefcfg);
    const Index latent = config.d_s + config.d_z + config.d_y;
    const Matrix noise = config.noise_var * Matrix::Identity(config.d_x, config.d_x);

    // Shared source for the fixed-source design.
    Matrix fixed_source;
    {
        Rng rng = Rng::substream(config.seed, 1);
        fixed_source = enforce_unit_y(random_spd(latent, rng), config.d_s, config.d_z, config.d_y);
    }

    LambdaStarReport report;
    report.config = config;
    report.rows.resize(static_cast<std::size_t>(config.iters));

    parallel_for(config.iters, config.threads, [&](std::int64_t iter) {
        Rng rng = Rng::substream(config.seed, static_cast<std::uint64_t>(iter) + 1);
        Matrix sigma_src =
            enforce_unit_y(random_spd(latent, rng), config.d_s, config.d_z, config.d_y);
        if (!config.redraw_source) sigma_src = fixed_source;
        const Matrix sigma_tgt =
            enforce_unit_y(random_spd(latent, rng), config.d_s, config.d_z, config.d_y);

        SemSpec src{MultivariateSem{config.d_s, config.d_z, config.d_y, config.d_x,
                                    sigma_src, fixed.coef_z, fixed.coef_y, noise}, config.seed};
        SemSpec tgt{MultivariateSem{config.d_s, config.d_z, config.d_y, config.d_x,
                                    sigma_tgt, fixed.coef_z, fixed.coef_y, noise}, config.seed};
        const MomentSummary src_m = sem_to_moments(src);
        const MomentSummary tgt_m = sem_to_moments(tgt);

        ExtractorConfig ec;
        ec.dim = config.dim;
        ec.context = ContextBlock::S;
        const std::vector<FeatureModel> path = lambda_path(src_m, ec, config.lambda_grid);

        const double mse_ols = mse_population(fit_ols_baseline(src_m), tgt_m);
        double best_mse = std::numeric_limits<double>::infinity();
        double best_lambda = 0.0;
        for (std::size_t j = 0; j < path.size(); ++j) {
            const double mse = mse_population(fit_linear_head(path[j], src_m), path[j], tgt_m);
            if (mse < best_mse) {
                best_mse = mse;
                best_lambda = config.lambda_grid[j];
            }
        }
        double lambda_star = best_lambda;
        if (!((mse_ols - best_mse) / mse_ols >= config.improvement_threshold)) lambda_star = 0.0;
        report.rows[static_cast<std::size_t>(iter)] =
            LambdaStarRow{static_cast<int>(iter), lambda_star, mse_ols, best_mse};
    });

    for (const LambdaStarRow& r : report.rows) {
        if (r.lambda_star == 0.0) report.mass_at_zero += 1.0;
        else if (r.lambda_star >= 0.9) report.mass_above_09 += 1.0;
        else if (r.lambda_star > 0.1) report.mass_middle += 1.0;
    }
    report.mass_at_zero /= config.iters;
    report.mass_above_09 /= config.iters;
    report.mass_middle /= config.iters;
    return report;
}

// ---------------------------------------------------------------------------
// Toy-model sweep (population level)
// ---------------------------------------------------------------------------

struct ToySweepConfig {
    double rho_source = 0.9;
    double rho_target = 0.0;
    double sigma1_sq = 1.0;
    double sigma2_sq = 1.0;
    std::vector<double> lambda_grid = default_lambda_grid();
    std::uint64_t seed = 1;
};

struct ToySweepRow {
    double lambda = 0.0;
    double angle_to_invariant = 0.0; // radians between the raw direction and (1,1)/sqrt(2)
    double cond_corr = 0.0;          // ||Corr(W, Z | Y)|| under source moments
    double mse_source = 0.0;
    double mse_target = 0.0;
};

struct ToySweepReport {
    ToySweepConfig config;
    std::vector<ToySweepRow> rows;
    double mse_ols_target = 0.0;
    double mse_ols_source = 0.0;
};

inline ToySweepReport toy_sweep_experiment(const ToySweepConfig& config) {
    SemSpec src{ToySem{config.rho_source, config.sigma1_sq, config.sigma2_sq}, config.seed};
    SemSpec tgt{ToySem{config.rho_target, config.sigma1_sq, config.sigma2_sq}, config.seed};
    const MomentSummary src_m = sem_to_moments(src);
    const MomentSummary tgt_m = sem_to_moments(tgt);

    ExtractorConfig ec;
    ec.dim = 1;
    ec.context = ContextBlock::Z;
    const std::vector<FeatureModel> path = lambda_path(src_m, ec, config.lambda_grid);

    ToySweepReport report;
    report.config = config;
    const LinearHead ols = fit_ols_baseline(src_m);
    report.mse_ols_target = mse_population(ols, tgt_m);
    report.mse_ols_source = mse_population(ols, src_m);
    Vector invariant(2);
    invariant << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    for (std::size_t j = 0; j < path.size(); ++j) {
        const FeatureModel& fm = path[j];
        const LinearHead head = fit_linear_head(fm, src_m);
        ToySweepRow row;
        row.lambda = config.lambda_grid[j];
        const Vector dir = fm.raw_loadings.col(0).normalized();
        row.angle_to_invariant = std::acos(std::min(1.0, std::abs(dir.dot(invariant))));
        row.cond_corr = conditional_correlation(fm, src_m, "Z", "Y");
        row.mse_source = mse_population(head, fm, src_m);
        row.mse_target = mse_population(head, fm, tgt_m);
        report.rows.push_back(row);
    }
    return report;
}

} // namespace otbe
