#include <catch2/catch.hpp>

#include "otbe/extractor.hpp"
#include "otbe/heads.hpp"
#include "otbe/rng.hpp"
#include "otbe/simlab.hpp"
#include "support/oracles.hpp"

using namespace otbe;
using oracles::max_abs_diff;

namespace {

// 2x2 inverse square root through the analytic eigendecomposition, an
// independent route for checking the whitened cross-covariance.
Matrix inv_sqrt_2x2(const Matrix& m) {
    const double tr = m(0, 0) + m(1, 1);
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double gap = std::sqrt(tr * tr / 4.0 - det);
    const double l1 = tr / 2.0 + gap;
    const double l2 = tr / 2.0 - gap;
    Vector v1(2), v2(2);
    if (std::abs(m(0, 1)) > 1e-14) {
        v1 << l1 - m(1, 1), m(0, 1);
        v2 << l2 - m(1, 1), m(0, 1);
    } else {
        v1 << 1, 0;
        v2 << 0, 1;
    }
    v1.normalize();
    v2.normalize();
    return v1 * v1.transpose() / std::sqrt(l1) + v2 * v2.transpose() / std::sqrt(l2);
}

ExtractorConfig regression_config(double lambda, int dim, ContextBlock ctx) {
    ExtractorConfig c;
    c.lambda = lambda;
    c.dim = dim;
    c.task = Task::Regression;
    c.context = ctx;
    c.ridge = 0.0;
    return c;
}

} // namespace

TEST_CASE("build_C_regression is zero for independent feature and outcome blocks",
          "[extractor]") {
    Matrix cov = Matrix::Identity(4, 4);
    cov(2, 3) = cov(3, 2) = 0.3; // structure within X only
    MomentSummary m({{"Y", 2}, {"X", 2}}, Vector::Zero(4), cov, Provenance::exact());
    CHECK(build_C_regression(m, 0.0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("build_C_regression matches an independent 2x2 whitening route", "[extractor]") {
    MomentSummary m = sem_to_moments(SemSpec{ToySem{0.0, 0.7, 0.4}, 0});
    const Matrix cov_x = m.block_cov("X");
    const Matrix c = build_C_regression(m, 0.0);
    const Matrix expected = inv_sqrt_2x2(cov_x) * m.cross_cov("X", "Y"); // Sigma_Y = 1
    CHECK(max_abs_diff(c, expected) < 1e-10);
    // at rho 0 the first feature is uncorrelated with the outcome
    CHECK(std::abs(m.cross_cov("X", "Y")(0, 0)) < 1e-14);
}

TEST_CASE("squared C norm is the best achievable squared correlation", "[extractor]") {
    // Pre-whitened features: C = Sigma_XY and max_a corr(a^T X, Y)^2 = ||C||^2.
    Rng rng(7);
    Matrix cov = Matrix::Identity(4, 4);
    Vector c_true(3);
    c_true << 0.4, -0.2, 0.5;
    cov.block(1, 0, 3, 1) = c_true;
    cov.block(0, 1, 1, 3) = c_true.transpose();
    MomentSummary m({{"Y", 1}, {"X", 3}}, Vector::Zero(4), cov, Provenance::exact());
    const Matrix c = build_C_regression(m, 0.0);
    CHECK(max_abs_diff(c, c_true) < 1e-12);
    double best = 0.0;
    for (int k = 0; k < 10000; ++k) {
        Vector a = rng.normal_vector(3).normalized();
        best = std::max(best, std::pow(a.dot(c_true), 2));
    }
    CHECK(best <= c.squaredNorm() + 1e-12);
    CHECK(best > 0.95 * c.squaredNorm());
    // Cauchy-Schwarz is attained along C itself
    CHECK(std::pow(c_true.normalized().dot(c_true), 2) == Approx(c.squaredNorm()));
}

TEST_CASE("build_C_categorical handles the balanced two-class case", "[extractor]") {
    Vector up(1), down(1);
    up << 2.0;
    down << -2.0;
    std::vector<ClassStat> equal{{"a", 0.5, up, Matrix::Identity(1, 1)},
                                 {"b", 0.5, up, Matrix::Identity(1, 1)}};
    CHECK(build_C_categorical(equal, Matrix::Identity(1, 1)).cwiseAbs().maxCoeff() == 0.0);

    std::vector<ClassStat> split{{"a", 0.5, up, Matrix::Identity(1, 1)},
                                 {"b", 0.5, down, Matrix::Identity(1, 1)}};
    const Matrix c = build_C_categorical(split, Matrix::Identity(1, 1));
    CHECK(c(0, 0) == Approx(2.0 / std::sqrt(2.0)));
    CHECK(c(0, 1) == Approx(-2.0 / std::sqrt(2.0)));
}

TEST_CASE("projected categorical C norm equals the dispersion for any orthonormal A",
          "[extractor]") {
    Rng rng(19);
    std::vector<ClassStat> stats;
    Vector priors(3);
    priors << 0.25, 0.35, 0.4;
    for (int j = 0; j < 3; ++j)
        stats.push_back({"c" + std::to_string(j), priors(j), rng.normal_vector(4),
                         Matrix::Identity(4, 4)});
    const Matrix c = build_C_categorical(stats, Matrix::Identity(4, 4));
    const Matrix a = oracles::random_orthonormal(rng, 4, 2);
    Vector grand = Vector::Zero(4);
    for (int j = 0; j < 3; ++j) grand += priors(j) * stats[static_cast<std::size_t>(j)].mean;
    std::vector<Vector> w_means;
    for (const ClassStat& cs : stats) w_means.push_back(a.transpose() * cs.mean);
    const double disp = categorical_dispersion(w_means, a.transpose() * grand, priors);
    CHECK(disp == Approx((a.transpose() * c).squaredNorm()).epsilon(1e-12));
}

TEST_CASE("nuisance cross-covariance vanishes for pure-noise context", "[extractor]") {
    Matrix cov = Matrix::Identity(5, 5);
    cov(0, 3) = cov(3, 0) = 0.4; // Y correlates with X only
    MomentSummary m({{"Y", 1}, {"S", 1}, {"X", 3}}, Vector::Zero(5), cov, Provenance::exact());
    FeatureModel fm = fit(m, regression_config(0.5, 1, ContextBlock::S));
    CHECK(fm.nuisance_cross.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("toy raw direction (1,1) is orthogonal to the unwhitened nuisance covariance",
          "[extractor]") {
    MomentSummary m = sem_to_moments(SemSpec{ToySem{0.7, 1.0, 1.0}, 0});
    // Cov(X1 + X2, Z | Y) = 0: the unique unconfounded direction in raw coordinates.
    const Matrix cov_xz_given_y = partial_covariance(m, "X", "Z", "Y");
    Vector ones(2);
    ones << 1.0, 1.0;
    CHECK(std::abs(ones.dot(cov_xz_given_y.col(0))) < 1e-12);
}

TEST_CASE("empirical nuisance cross-covariance is consistent with the exact one",
          "[extractor]") {
    SemSpec spec = oracles::random_multivariate_sem(5);
    const MomentSummary exact = sem_to_moments(spec);
    const Matrix data = sample(spec, 100000);
    const MomentSummary emp = empirical_moments(data, block_partition(spec));
    ExtractorConfig cfg;
    cfg.dim = 2;
    cfg.context = ContextBlock::S;
    const FeatureModel exact_fit = fit(exact, cfg);
    const FeatureModel emp_fit = fit(emp, cfg);
    CHECK(max_abs_diff(emp_fit.nuisance_cross, exact_fit.nuisance_cross) < 0.05);
}

TEST_CASE("solve_loadings returns the normalized C direction at lambda zero", "[extractor]") {
    Vector c(3);
    c << 2.0, -1.0, 0.5;
    Matrix d = Matrix::Zero(3, 1);
    auto [loadings, spectrum] = solve_loadings(c, d, 0.0, 1, 1.0, 1.0);
    CHECK((loadings.col(0) - c.normalized()).norm() < 1e-12);
    CHECK(spectrum(0) == Approx(c.squaredNorm()));
}

TEST_CASE("zero nuisance matrix makes the solution independent of lambda", "[extractor]") {
    Rng rng(23);
    const Matrix c = rng.normal_matrix(4, 2);
    const Matrix d = Matrix::Zero(4, 2);
    auto [l1, s1] = solve_loadings(c, d, 0.3, 2, 2.0, 2.0);
    auto [l2, s2] = solve_loadings(c, d, 0.7, 2, 2.0, 2.0);
    // spans agree; with the deterministic sign convention the loadings do too
    CHECK(max_abs_diff(l1 * l1.transpose(), l2 * l2.transpose()) < 1e-10);
    EigenDecomposition cc = sym_eig(Matrix(c * c.transpose()));
    CHECK(max_abs_diff(l1 * l1.transpose(),
                       cc.vectors.leftCols(2) * cc.vectors.leftCols(2).transpose()) < 1e-10);
}

TEST_CASE("closed form beats random orthonormal candidates", "[extractor]") {
    Rng rng(29);
    const Matrix c = rng.normal_matrix(4, 2);
    const Matrix d = rng.normal_matrix(4, 2);
    const double lambda = 0.7;
    auto [loadings, spectrum] = solve_loadings(c, d, lambda, 2, 2.0, 2.0);
    const double best_closed = objective_value(loadings, c, d, lambda, 2.0, 2.0);
    double best_random = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 10000; ++k) {
        const Matrix a = oracles::random_orthonormal(rng, 4, 2);
        best_random = std::max(best_random, objective_value(a, c, d, lambda, 2.0, 2.0));
    }
    CHECK(best_closed >= best_random - 1e-6);
    // objective equals the sum of the top signed eigenvalues
    CHECK(best_closed == Approx(spectrum(0) + spectrum(1)).margin(1e-9));
}

TEST_CASE("solve_loadings validates parameters", "[extractor]") {
    const Matrix c = Matrix::Ones(3, 1);
    const Matrix d = Matrix::Zero(3, 1);
    CHECK_THROWS_AS(solve_loadings(c, d, 1.0, 1, 1.0, 1.0), InvalidParameter);
    CHECK_THROWS_AS(solve_loadings(c, d, -0.1, 1, 1.0, 1.0), InvalidParameter);
    CHECK_THROWS_AS(solve_loadings(c, d, 0.5, 4, 1.0, 1.0), InvalidParameter);
    CHECK_THROWS_AS(solve_loadings(c, d, 0.5, 0, 1.0, 1.0), InvalidParameter);
}

TEST_CASE("toy fit at high lambda recovers the invariant direction", "[extractor]") {
    MomentSummary m = sem_to_moments(SemSpec{ToySem{0.9, 1.0, 1.0}, 0});
    FeatureModel fm = fit(m, regression_config(0.999, 1, ContextBlock::Z));
    Vector invariant(2);
    invariant << 1.0, 1.0;
    invariant.normalize();
    const Vector dir = fm.raw_loadings.col(0).normalized();
    const double angle = std::acos(std::min(1.0, std::abs(dir.dot(invariant))));
    CHECK(angle < 1e-3);
}

TEST_CASE("multivariate fit keeps orthonormal loadings", "[extractor]") {
    SemSpec spec = oracles::random_multivariate_sem(77);
    MomentSummary m = sem_to_moments(spec);
    FeatureModel fm = fit(m, regression_config(0.4, 2, ContextBlock::S));
    CHECK(max_abs_diff(fm.loadings.transpose() * fm.loadings, Matrix::Identity(2, 2)) <= 1e-10);
}

TEST_CASE("transform centers, whitens and projects", "[extractor]") {
    SemSpec spec = oracles::random_multivariate_sem(31);
    MomentSummary m = sem_to_moments(spec);
    FeatureModel fm = fit(m, regression_config(0.3, 2, ContextBlock::S));

    Matrix at_mean(1, fm.input_dim());
    at_mean.row(0) = fm.x_mean.transpose();
    CHECK(transform(fm, at_mean).cwiseAbs().maxCoeff() == 0.0);

    // Cov(W) = I at the fitting moments
    MomentSummary ext = with_feature_block(m, fm);
    CHECK(max_abs_diff(ext.block_cov("W"), Matrix::Identity(2, 2)) <= 1e-10);

    Matrix bad(1, fm.input_dim() + 1);
    bad.setZero();
    CHECK_THROWS_AS(transform(fm, bad), InvalidData);
}

TEST_CASE("square extractor at lambda zero preserves whitened norms", "[extractor]") {
    SemSpec spec = oracles::random_multivariate_sem(41, 2, 2, 2, 4);
    MomentSummary m = sem_to_moments(spec);
    FeatureModel fm = fit(m, regression_config(0.0, 4, ContextBlock::S));
    Rng rng(4);
    const Matrix x = rng.normal_matrix(20, 4);
    const Matrix w = transform(fm, x);
    const Matrix xt = (x.rowwise() - fm.x_mean.transpose()) * fm.x_inv_sqrt;
    for (Index i = 0; i < x.rows(); ++i)
        CHECK(w.row(i).norm() == Approx(xt.row(i).norm()).epsilon(1e-10));
}

TEST_CASE("lambda_path shares builder matrices bit for bit", "[extractor]") {
    SemSpec spec = oracles::random_multivariate_sem(53);
    MomentSummary m = sem_to_moments(spec);
    ExtractorConfig cfg = regression_config(0.0, 2, ContextBlock::S);

    const std::vector<FeatureModel> single = lambda_path(m, cfg, {0.0});
    const FeatureModel direct = fit(m, cfg);
    CHECK(max_abs_diff(single.front().loadings, direct.loadings) == 0.0);
    CHECK(max_abs_diff(single.front().outcome_cross, direct.outcome_cross) == 0.0);

    const std::vector<FeatureModel> path = lambda_path(m, cfg, {0.0, 0.3, 0.7, 0.99});
    for (const FeatureModel& fm : path) {
        CHECK(max_abs_diff(fm.outcome_cross, path.front().outcome_cross) == 0.0);
        CHECK(max_abs_diff(fm.nuisance_cross, path.front().nuisance_cross) == 0.0);
    }
    CHECK_THROWS_AS(lambda_path(m, cfg, {0.0, 1.0}), InvalidParameter);
}

TEST_CASE("conditional correlation decays along the toy lambda path", "[extractor]") {
    MomentSummary m = sem_to_moments(SemSpec{ToySem{0.8, 1.0, 1.0}, 0});
    ExtractorConfig cfg = regression_config(0.0, 1, ContextBlock::Z);
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(0.99 * i / 20.0);
    const std::vector<FeatureModel> path = lambda_path(m, cfg, grid);
    const double at_zero = conditional_correlation(path.front(), m, "Z", "Y");
    const double at_high = conditional_correlation(path.back(), m, "Z", "Y");
    CHECK(at_high <= at_zero);
}

TEST_CASE("objective terms are monotone along the lambda path", "[extractor]") {
    SemSpec spec = oracles::random_multivariate_sem(61);
    MomentSummary m = sem_to_moments(spec);
    ExtractorConfig cfg = regression_config(0.0, 2, ContextBlock::S);
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(0.999 * i / 20.0);
    const std::vector<FeatureModel> path = lambda_path(m, cfg, grid);
    double prev_d = std::numeric_limits<double>::infinity();
    double prev_c = std::numeric_limits<double>::infinity();
    for (const FeatureModel& fm : path) {
        const double term_d = (fm.loadings.transpose() * fm.nuisance_cross).squaredNorm();
        const double term_c = (fm.loadings.transpose() * fm.outcome_cross).squaredNorm();
        CHECK(term_d <= prev_d + 1e-8);
        CHECK(term_c <= prev_c + 1e-8);
        prev_d = term_d;
        prev_c = term_c;
    }
}

TEST_CASE("closed-form optimality across dimensions and lambdas", "[extractor]") {
    Rng rng(67);
    for (int instance = 0; instance < 8; ++instance) {
        const Index d_x = 2 + static_cast<Index>(rng.next_u64() % 4); // 2..5
        const Index d_y = 1 + static_cast<Index>(rng.next_u64() % 3);
        const Index d_s = 1 + static_cast<Index>(rng.next_u64() % 3);
        const int dim = 1 + static_cast<int>(rng.next_u64() % std::min<Index>(2, d_x));
        const Matrix c = rng.normal_matrix(d_x, d_y);
        const Matrix d = rng.normal_matrix(d_x, d_s);
        const double scale_c = static_cast<double>(std::min<Index>(dim, d_y));
        const double scale_d = static_cast<double>(std::min<Index>(dim, d_s));
        for (double lambda : {0.0, 0.3, 0.7, 0.95}) {
            auto [loadings, spectrum] = solve_loadings(c, d, lambda, dim, scale_c, scale_d);
            const double closed = objective_value(loadings, c, d, lambda, scale_c, scale_d);
            double best = -std::numeric_limits<double>::infinity();
            for (int k = 0; k < 2000; ++k) {
                const Matrix a = oracles::random_orthonormal(rng, d_x, dim);
                best = std::max(best, objective_value(a, c, d, lambda, scale_c, scale_d));
            }
            CHECK(closed >= best - 1e-6);
            double top = 0.0;
            for (int k = 0; k < dim; ++k) top += spectrum(k);
            CHECK(closed == Approx(top).margin(1e-9));
        }
    }
}

TEST_CASE("objective is invariant under within-span rotations", "[extractor]") {
    Rng rng(71);
    const Matrix c = rng.normal_matrix(5, 2);
    const Matrix d = rng.normal_matrix(5, 3);
    auto [loadings, spectrum] = solve_loadings(c, d, 0.6, 2, 2.0, 2.0);
    const double base = objective_value(loadings, c, d, 0.6, 2.0, 2.0);
    for (int k = 0; k < 5; ++k) {
        const Matrix q = oracles::random_orthogonal(rng, 2);
        CHECK(objective_value(loadings * q, c, d, 0.6, 2.0, 2.0) ==
              Approx(base).margin(1e-10));
    }
}

TEST_CASE("uncorrelation with the mapped context equals conditional uncorrelation",
          "[extractor]") {
    // Cov(W, T(S,Y)) and Sigma_WS|Y are one and the same matrix at exact
    // moments, so each vanishes exactly when the other does.
    for (std::uint64_t seed : {101, 102, 103, 104, 105}) {
        SemSpec spec = oracles::random_multivariate_sem(seed);
        MomentSummary m = sem_to_moments(spec);
        FeatureModel fm = fit(m, regression_config(0.5, 2, ContextBlock::S));
        MomentSummary ext = with_feature_block(m, fm);
        ContinuousResidualMap map = fit_continuous_map(m, "S", "Y", 0.0);
        // Cov(W, T(S,Y)) = Sigma_WS - Sigma_WY Sigma_Y^{-1} Sigma_YS
        const Matrix cov_w_t = ext.cross_cov("W", "S") -
                               ext.cross_cov("W", "Y") * map.coeff.transpose();
        const Matrix partial = partial_covariance(ext, "W", "S", "Y");
        CHECK(max_abs_diff(cov_w_t, partial) < 1e-9);
    }
}

TEST_CASE("full-rank context covariance transfers uncorrelation to the confounder",
          "[extractor]") {
    // Loadings chosen in the nullspace of (Sigma_XS|Y)^T also kill
    // Sigma_WZ|Y when Sigma_ZS|Y has full rank.
    for (std::uint64_t seed : {201, 202, 203}) {
        SemSpec spec = oracles::random_multivariate_sem(seed);
        MomentSummary m = sem_to_moments(spec);
        const Matrix cross_xs = partial_covariance(m, "X", "S", "Y");
        const Matrix cross_xz = partial_covariance(m, "X", "Z", "Y");
        const Matrix cross_zs = partial_covariance(m, "Z", "S", "Y");
        REQUIRE(Eigen::FullPivLU<Matrix>(cross_zs).rank() == cross_zs.rows());
        Eigen::FullPivLU<Matrix> lu(Matrix(cross_xs.transpose()));
        const Matrix null_basis = lu.kernel(); // d_x x (d_x - rank)
        REQUIRE(null_basis.cols() > 0);
        for (Index j = 0; j < null_basis.cols(); ++j) {
            const Vector a = null_basis.col(j).normalized();
            CHECK((a.transpose() * cross_xs).cwiseAbs().maxCoeff() < 1e-9);
            CHECK((a.transpose() * cross_xz).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("fit validates configuration and moment blocks", "[extractor]") {
    MomentSummary m = sem_to_moments(SemSpec{ToySem{0.5, 1.0, 1.0}, 0});
    CHECK_THROWS_AS(fit(m, regression_config(1.0, 1, ContextBlock::Z)), InvalidParameter);
    CHECK_THROWS_AS(fit(m, regression_config(0.5, 3, ContextBlock::Z)), InvalidParameter);
    // toy moments carry no S block
    CHECK_THROWS_AS(fit(m, regression_config(0.5, 1, ContextBlock::S)), InvalidData);
    CHECK_THROWS_WITH(fit(m, regression_config(0.5, 1, ContextBlock::S)),
                      Catch::Contains("[moments]"));
}

TEST_CASE("classification fit produces orthonormal loadings and guards class support",
          "[extractor]") {
    Rng rng(83);
    const Index n = 400;
    Matrix x(n, 3), s(n, 1);
    std::vector<std::string> labels;
    Vector mu_a(3), mu_b(3);
    mu_a << 2.0, 0.0, 0.0;
    mu_b << -2.0, 0.5, 0.0;
    for (Index i = 0; i < n; ++i) {
        const bool is_a = (i % 2) == 0;
        x.row(i) = (rng.normal_vector(3) + (is_a ? mu_a : mu_b)).transpose();
        s(i, 0) = rng.normal() + (is_a ? 0.5 : -0.5);
        labels.push_back(is_a ? "a" : "b");
    }
    ExtractorConfig cfg;
    cfg.lambda = 0.2;
    cfg.dim = 2;
    cfg.task = Task::Classification;
    ClassificationFit cf = fit_classification(x, s, labels, cfg);
    CHECK(max_abs_diff(cf.model.loadings.transpose() * cf.model.loadings,
                       Matrix::Identity(2, 2)) <= 1e-10);
    CHECK(cf.model.outcome_cross.cols() == 2);
    CHECK(cf.barycenter.classes.size() == 2);

    // a class smaller than context-dim + 1 rows is rejected
    std::vector<std::string> tiny_labels = labels;
    for (Index i = 0; i < n; ++i) tiny_labels[static_cast<std::size_t>(i)] = "a";
    tiny_labels[0] = "b";
    CHECK_THROWS_AS(fit_classification(x, s, tiny_labels, cfg), ClassTooSmall);
}

TEST_CASE("dim beyond the positive spectrum records a warning", "[extractor]") {
    MomentSummary m = sem_to_moments(oracles::random_multivariate_sem(91));
    FeatureModel fm = fit(m, regression_config(0.9, 6, ContextBlock::S));
    CHECK(!fm.warning.empty());
    FeatureModel ok = fit(m, regression_config(0.0, 2, ContextBlock::S));
    CHECK(ok.warning.empty());
}

TEST_CASE("stacked context concatenates surrogate and confounder blocks", "[extractor]") {
    SemSpec spec = oracles::random_multivariate_sem(123);
    MomentSummary m = sem_to_moments(spec);
    FeatureModel with_s = fit(m, regression_config(0.5, 2, ContextBlock::S));
    FeatureModel with_both = fit(m, regression_config(0.5, 2, ContextBlock::Both));
    CHECK(with_s.nuisance_cross.cols() == 2);
    CHECK(with_both.nuisance_cross.cols() == 4);
    // leading columns of the stacked context come from S
    CHECK(max_abs_diff(with_both.nuisance_cross.leftCols(2).eval(),
                       with_s.nuisance_cross) > 0.0); // standardizer differs across contexts
    CHECK(max_abs_diff(with_both.loadings.transpose() * with_both.loadings,
                       Matrix::Identity(2, 2)) <= 1e-10);
}

TEST_CASE("sample-based fit equals fitting the empirical moments", "[extractor]") {
    SemSpec spec = oracles::random_multivariate_sem(321);
    const Matrix data = sample(spec, 500);
    ExtractorConfig cfg = regression_config(0.4, 2, ContextBlock::S);
    FeatureModel direct = fit(data, block_partition(spec), cfg);
    FeatureModel staged = fit(empirical_moments(data, block_partition(spec)), cfg);
    CHECK(max_abs_diff(direct.loadings, staged.loadings) == 0.0);
    CHECK(max_abs_diff(direct.raw_loadings, staged.raw_loadings) == 0.0);
}
