#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "otbe/errors.hpp"

namespace otbe {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Ridge used by pipeline code when inverting empirical covariances.
inline double default_ridge(const Matrix& m) {
    if (m.rows() == 0) return 0.0;
    return 1e-10 * m.trace() / static_cast<double>(m.rows());
}

// ---------------------------------------------------------------------------
// Moment summaries
// ---------------------------------------------------------------------------

struct Provenance {
    enum class Kind { Empirical, Exact };
    Kind kind = Kind::Exact;
    std::int64_t samples = 0;

    static Provenance exact() { return {Kind::Exact, 0}; }
    static Provenance empirical(std::int64_t n) { return {Kind::Empirical, n}; }
    bool is_exact() const { return kind == Kind::Exact; }

    std::string tag() const {
        return is_exact() ? "exact" : "empirical(" + std::to_string(samples) + ")";
    }
};

struct Block {
    std::string name;
    Index offset = 0;
    Index dim = 0;
};

// Joint first and second moments of a set of named variable blocks.
// Immutable after construction; the joint covariance is symmetrized once and
// every diagonal block is checked to be positive semidefinite.
class MomentSummary {
public:
    MomentSummary(std::vector<std::pair<std::string, Index>> blocks,
                  Vector mean, Matrix cov, Provenance provenance)
        : mean_(std::move(mean)), provenance_(provenance) {
        Index offset = 0;
        for (auto& [name, dim] : blocks) {
            if (dim <= 0) throw InvalidData("block '" + name + "' has nonpositive dimension");
            blocks_.push_back(Block{name, offset, dim});
            offset += dim;
        }
        if (mean_.size() != offset)
            throw InvalidData("mean dimension does not match block layout");
        if (cov.rows() != offset || cov.cols() != offset)
            throw InvalidData("covariance dimension does not match block layout");
        if (!mean_.allFinite() || !all_finite(cov))
            throw InvalidData("moment summary has non-finite entries");
        const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
        if (asym > 1e-12 * (1.0 + cov.cwiseAbs().maxCoeff()))
            throw InvalidData("joint covariance is not symmetric");
        cov_ = symmetrized(cov);
        for (const Block& b : blocks_) check_block_psd(b);
    }

    Index dim() const { return mean_.size(); }
    const Vector& mean() const { return mean_; }
    const Matrix& cov() const { return cov_; }
    const Provenance& provenance() const { return provenance_; }
    const std::vector<Block>& blocks() const { return blocks_; }

    bool has_block(std::string_view name) const {
        for (const Block& b : blocks_)
            if (b.name == name) return true;
        return false;
    }

    const Block& block(std::string_view name) const {
        for (const Block& b : blocks_)
            if (b.name == name) return b;
        throw InvalidData("unknown block '" + std::string(name) + "'");
    }

    Vector block_mean(std::string_view name) const {
        const Block& b = block(name);
        return mean_.segment(b.offset, b.dim);
    }

    Matrix block_cov(std::string_view name) const {
        const Block& b = block(name);
        return cov_.block(b.offset, b.offset, b.dim, b.dim);
    }

    Matrix cross_cov(std::string_view a, std::string_view b) const {
        const Block& ba = block(a);
        const Block& bb = block(b);
        return cov_.block(ba.offset, bb.offset, ba.dim, bb.dim);
    }

private:
    void check_block_psd(const Block& b) const {
        Eigen::SelfAdjointEigenSolver<Matrix> es(
            cov_.block(b.offset, b.offset, b.dim, b.dim),
            Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues().minCoeff();
        const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
        if (lo < -1e-10 * (1.0 + hi))
            throw InvalidData("covariance block '" + b.name + "' is not positive semidefinite");
    }

    std::vector<Block> blocks_;
    Vector mean_;
    Matrix cov_;
    Provenance provenance_;
};

// Unbiased moment estimation from an n x p sample matrix. Rows are visited
// in a canonical (lexicographically sorted) order so the result is exactly
// invariant under row permutations of the input.
inline MomentSummary empirical_moments(const Matrix& data,
                                       std::vector<std::pair<std::string, Index>> blocks) {
    const Index n = data.rows();
    const Index p = data.cols();
    if (!all_finite(data)) throw InvalidData("sample matrix has non-finite entries");
    if (n < 2) throw InsufficientSamples("need at least 2 samples, got " + std::to_string(n));
    if (p < 1) throw InvalidData("sample matrix has no columns");

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        for (Index j = 0; j < p; ++j) {
            if (data(a, j) < data(b, j)) return true;
            if (data(a, j) > data(b, j)) return false;
        }
        return false;
    });

    Vector mean = Vector::Zero(p);
    for (Index i : order) mean += data.row(i).transpose();
    mean /= static_cast<double>(n);

    Matrix cov = Matrix::Zero(p, p);
    Vector centered(p);
    for (Index i : order) {
        centered = data.row(i).transpose() - mean;
        cov.selfadjointView<Eigen::Lower>().rankUpdate(centered);
    }
    cov = Matrix(cov.selfadjointView<Eigen::Lower>()) / static_cast<double>(n - 1);

    return MomentSummary(std::move(blocks), std::move(mean), std::move(cov),
                         Provenance::empirical(n));
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition with a fixed ordering and sign convention
// ---------------------------------------------------------------------------

struct EigenDecomposition {
    Vector values;  // signed-descending, e.g. 2 ranks above -3
    Matrix vectors; // orthonormal columns aligned with values
};

// Eigenvalues sorted by signed value, descending. Each eigenvector is scaled
// so that its entry of largest magnitude (first such entry on ties) is
// positive, which makes results reproducible across platforms.
inline EigenDecomposition sym_eig(const Matrix& m) {
    if (m.rows() != m.cols()) throw InvalidData("sym_eig requires a square matrix");
    if (!all_finite(m)) throw InvalidData("sym_eig input has non-finite entries");
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-9 * (1.0 + m.cwiseAbs().maxCoeff()))
        throw InvalidData("sym_eig input is not symmetric");

    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(m));
    if (es.info() != Eigen::Success) throw ConvergenceFailure("eigendecomposition failed");

    const Index p = m.rows();
    EigenDecomposition out;
    out.values.resize(p);
    out.vectors.resize(p, p);
    for (Index k = 0; k < p; ++k) {
        const Index src = p - 1 - k; // Eigen returns ascending order
        out.values(k) = es.eigenvalues()(src);
        Vector v = es.eigenvectors().col(src);
        Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        out.vectors.col(k) = v;
    }
    return out;
}

namespace detail {

inline EigenDecomposition psd_eig(const Matrix& m, std::string_view label) {
    EigenDecomposition ed = sym_eig(m);
    const double hi = ed.values.size() ? ed.values.cwiseAbs().maxCoeff() : 0.0;
    if (ed.values.size() && ed.values.minCoeff() < -1e-10 * (1.0 + hi))
        throw InvalidData("matrix '" + std::string(label) + "' is not positive semidefinite");
    ed.values = ed.values.cwiseMax(0.0);
    return ed;
}

inline void reject_singular(const Vector& values, std::string_view label) {
    const double top = values.maxCoeff();
    if (top <= 0.0 || values.minCoeff() < 1e-12 * top)
        throw SingularCovariance("covariance block '" + std::string(label) +
                                 "' is numerically singular; pass a ridge or drop the block");
}

} // namespace detail

// Symmetric PSD square root; eigenvalues below zero (within tolerance) are
// clipped to zero.
inline Matrix psd_sqrt(const Matrix& m, std::string_view label = "matrix") {
    EigenDecomposition ed = detail::psd_eig(m, label);
    return ed.vectors * ed.values.cwiseSqrt().asDiagonal() * ed.vectors.transpose();
}

// Inverse square root built from eigenvalues max(l, 0) + ridge. With ridge 0,
// eigenvalues below 1e-12 * l_max are rejected as singular.
inline Matrix psd_inv_sqrt(const Matrix& m, double ridge = 0.0,
                           std::string_view label = "matrix") {
    if (ridge < 0.0) throw InvalidParameter("ridge must be nonnegative");
    EigenDecomposition ed = detail::psd_eig(m, label);
    Vector vals = ed.values.array() + ridge;
    if (ridge == 0.0) detail::reject_singular(vals, label);
    return ed.vectors * vals.cwiseInverse().cwiseSqrt().asDiagonal() * ed.vectors.transpose();
}

// Inverse under the same eigenvalue policy as psd_inv_sqrt.
inline Matrix psd_inverse(const Matrix& m, double ridge = 0.0,
                          std::string_view label = "matrix") {
    if (ridge < 0.0) throw InvalidParameter("ridge must be nonnegative");
    EigenDecomposition ed = detail::psd_eig(m, label);
    Vector vals = ed.values.array() + ridge;
    if (ridge == 0.0) detail::reject_singular(vals, label);
    return ed.vectors * vals.cwiseInverse().asDiagonal() * ed.vectors.transpose();
}

// Gaussian conditional cross-covariance Sigma_{UV|given}.
inline Matrix partial_covariance(const MomentSummary& m, std::string_view u,
                                 std::string_view v, std::string_view given,
                                 double ridge = 0.0) {
    const Matrix s_uv = m.cross_cov(u, v);
    const Matrix s_ug = m.cross_cov(u, given);
    const Matrix s_gv = m.cross_cov(given, v);
    const Matrix g_inv = psd_inverse(m.block_cov(given), ridge, given);
    return s_uv - s_ug * g_inv * s_gv;
}

} // namespace otbe
