#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "equisparse/linalg.hpp"
#include "equisparse/partition.hpp"
#include "equisparse/path.hpp"
#include "equisparse/rng.hpp"
#include "equisparse/tuning.hpp"

namespace equisparse {

struct FissionResult {
    Vector y1, y2;
    double delta = 0.0;
    Vector offsets;  // log-odds offsets of the y2 | y1 model
    std::uint64_t seed = 0;
};

/// Offset of the y2 model for one observation: log((1-d)/d) when y1 = 1, log(d/(1-d)) otherwise.
inline double fission_offset(double y1, double delta) {
    const double r = std::log((1.0 - delta) / delta);
    return y1 == 1.0 ? r : -r;
}

/// Bernoulli(delta) flips of a binary response; y2 is the response itself.
inline FissionResult fission(const Vector& y, double delta, std::uint64_t seed) {
    require(delta > 0.5 && delta < 1.0, ErrorCode::DeltaOutOfRange,
            "delta must lie in (0.5, 1), got " + std::to_string(delta));
    require(is_binary(y), ErrorCode::NonBinaryResponse, "fission needs a 0/1 response");
    CounterRng rng(seed, stream_id({0xF155ULL}));
    FissionResult r;
    r.delta = delta;
    r.seed = seed;
    r.y2 = y;
    r.y1.resize(y.size());
    r.offsets.resize(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const bool z = rng.bernoulli(delta);
        r.y1(i) = z ? 1.0 - y(i) : y(i);
        r.offsets(i) = fission_offset(r.y1(i), delta);
    }
    return r;
}

/// n x G design whose column g sums the features in group g.
inline Matrix aggregate_design(const Matrix& X, const Partition& part) {
    require(X.cols() == part.p(), ErrorCode::DimensionMismatch,
            "design has " + std::to_string(X.cols()) + " columns, partition covers " + std::to_string(part.p()));
    return sum_columns(X, part.groups());
}

struct GlmFit {
    Vector coef;               // one entry per design column; aliased columns are 0
    Matrix cov;                // inverse observed information; aliased rows/columns are 0
    Vector linear;             // fitted log-odds including the offset
    std::vector<int> aliased;  // dropped columns
    double score_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/**
 * Logistic maximum likelihood with a fixed per-row offset (IRLS / damped
 * Newton, score tolerance 1e-10, at most 100 iterations). Columns that are
 * linearly dependent on earlier-pivoted ones are dropped and reported.
 */
inline GlmFit glm_logistic_offset(const Matrix& Xg, const Vector& y, const std::optional<Vector>& offsets,
                                  double score_tol = 1e-10, int max_iter = 100) {
    require(Xg.rows() == y.size(), ErrorCode::DimensionMismatch, "design rows differ from response length");
    require(!offsets || offsets->size() == y.size(), ErrorCode::DimensionMismatch, "offset length differs from n");
    require(is_binary(y), ErrorCode::NonBinaryResponse, "logistic GLM needs a 0/1 response");
    require(Xg.cols() <= Xg.rows(), ErrorCode::DimensionMismatch, "more aggregated columns than observations");

    const Eigen::Index q = Xg.cols();
    Eigen::ColPivHouseholderQR<Matrix> qr(Xg);
    qr.setThreshold(1e-10);
    const Eigen::Index rank = qr.rank();
    std::vector<int> keep;
    for (Eigen::Index k = 0; k < rank; ++k) keep.push_back(static_cast<int>(qr.colsPermutation().indices()(k)));
    std::sort(keep.begin(), keep.end());

    GlmFit out;
    std::vector<bool> kept(q, false);
    for (int k : keep) kept[k] = true;
    for (int k = 0; k < q; ++k)
        if (!kept[k]) out.aliased.push_back(k);

    Matrix Xk(Xg.rows(), static_cast<Eigen::Index>(keep.size()));
    for (size_t k = 0; k < keep.size(); ++k) Xk.col(static_cast<Eigen::Index>(k)) = Xg.col(keep[k]);

    auto nr = logistic_newton(Xk, y, offsets, 0.0, score_tol, max_iter);
    if (!nr.converged && nr.coef.size() > 0 && nr.coef.cwiseAbs().maxCoeff() > 30.0)
        fail(ErrorCode::Separation, "logistic fit diverges (|coef| > 30 at the iteration cap); data look separated");
    // Under complete separation the score vanishes before the cap is reached, with every
    // observation fitted to within rounding of its label.
    double worst = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) worst = std::max(worst, std::abs(y(i) - sigmoid(nr.linear(i))));
    if (nr.coef.size() > 0 && worst < 1e-6)
        fail(ErrorCode::Separation, "every observation is fitted with probability 0 or 1; data are separated");

    out.coef = Vector::Zero(q);
    out.cov = Matrix::Zero(q, q);
    const Matrix cov_k = nr.hessian.size() > 0 ? Matrix(nr.hessian.inverse()) : Matrix();
    for (size_t a = 0; a < keep.size(); ++a) {
        out.coef(keep[a]) = nr.coef(static_cast<Eigen::Index>(a));
        for (size_t b = 0; b < keep.size(); ++b)
            out.cov(keep[a], keep[b]) = cov_k(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
    out.linear = nr.linear;
    out.score_norm = nr.score_norm;
    out.iterations = nr.iterations;
    out.converged = nr.converged;
    return out;
}

struct WaldResult {
    double estimate = 0.0;
    double se = 0.0;
    double z = 0.0;
    double p = 1.0;
    /// Zero variance or touches an aliased column; z and p are NaN.
    bool degenerate = false;
};

inline double two_sided_normal_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

inline std::vector<WaldResult> wald_contrasts(const GlmFit& fit, const std::vector<Vector>& contrasts) {
    std::vector<WaldResult> out;
    for (const auto& c : contrasts) {
        require(c.size() == fit.coef.size(), ErrorCode::DimensionMismatch, "contrast length differs from coef count");
        WaldResult w;
        w.estimate = c.dot(fit.coef);
        const double var = c.dot(fit.cov * c);
        bool touches_aliased = false;
        for (int k : fit.aliased) touches_aliased |= c(k) != 0.0;
        w.se = var > 0.0 ? std::sqrt(var) : 0.0;
        if (touches_aliased || !(var > 1e-300)) {
            w.degenerate = true;
            w.z = w.p = std::numeric_limits<double>::quiet_NaN();
        } else {
            w.z = w.estimate / w.se;
            w.p = two_sided_normal_p(w.z);
        }
        out.push_back(w);
    }
    return out;
}

/// Benjamini-Hochberg step-up adjusted p-values (input order preserved, capped at 1).
inline std::vector<double> bh_adjust(const std::vector<double>& pvalues) {
    const size_t m = pvalues.size();
    for (double p : pvalues)
        require(p >= 0.0 && p <= 1.0, ErrorCode::OutOfRange, "p-values must lie in [0, 1], got " + std::to_string(p));
    std::vector<size_t> order(m);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return pvalues[a] < pvalues[b]; });
    std::vector<double> adj(m);
    double running = 1.0;
    for (size_t r = m; r-- > 0;) {
        running = std::min(running, pvalues[order[r]] * static_cast<double>(m) / static_cast<double>(r + 1));
        adj[order[r]] = running;
    }
    return adj;
}

struct InferOptions {
    double delta = 0.9;
    std::uint64_t seed = 1;
    /// K-fold CV on the selection set; k < 2 switches to a random half split.
    int folds = 5;
    GridOptions grid;
    FistaOptions fista;
    /// Include the fission offsets in the selection fit.
    bool selection_offsets = false;
    /// Column whose group is contrasted against every other group.
    std::optional<int> focal_feature;
    int threads = 1;
};

struct ContrastRow {
    std::string name;
    WaldResult wald;
    double p_bh = std::numeric_limits<double>::quiet_NaN();
};

struct InferResult {
    FissionResult fission;
    double selected_lambda = 0.0;
    Partition partition;
    GlmFit glm;
    std::vector<WaldResult> marginal;  // one per aggregated group
    int focal_group = -1;
    std::vector<ContrastRow> contrasts;
};

/**
 * Fission, tree-penalized selection on (X, y1), aggregation of X by the
 * selected partition, offset GLM on y2, Wald tests per group and focal
 * contrasts with BH adjustment.
 */
inline InferResult infer_pipeline(const Dataset& data, const PenaltySpec& spec, const InferOptions& opt) {
    validate(data, LossKind::Logistic);
    InferResult r;
    r.fission = fission(data.y, opt.delta, opt.seed);

    Dataset s1 = data;
    s1.y = r.fission.y1;
    s1.offset = opt.selection_offsets ? std::optional<Vector>(r.fission.offsets) : std::nullopt;

    TuneReport rep;
    if (opt.folds >= 2) {
        rep = kfold_cv(s1, spec, LossKind::Logistic, opt.folds, stream_id({opt.seed, 0xCF}), opt.grid, opt.fista,
                       opt.threads);
    } else {
        std::vector<int> order(static_cast<size_t>(data.n()));
        std::iota(order.begin(), order.end(), 0);
        CounterRng rng(opt.seed, stream_id({0x5B11ULL}));
        rng.shuffle(order);
        const auto half = order.begin() + data.n() / 2;
        rep = tune_validation(s1.rows({order.begin(), half}), s1.rows({half, order.end()}), spec, LossKind::Logistic,
                              opt.grid, opt.fista);
    }
    r.selected_lambda = rep.best_lambda;
    r.partition = *rep.best_fit.partition;

    const Matrix Xg = aggregate_design(data.X, r.partition);
    r.glm = glm_logistic_offset(Xg, r.fission.y2, r.fission.offsets);
    const int G = r.partition.n_groups;
    std::vector<Vector> basis;
    for (int g = 0; g < G; ++g) basis.push_back(Vector::Unit(G, g));
    r.marginal = wald_contrasts(r.glm, basis);

    if (opt.focal_feature) {
        require(*opt.focal_feature >= 0 && *opt.focal_feature < data.p(), ErrorCode::OutOfRange,
                "focal feature index out of range");
        r.focal_group = r.partition.labels[*opt.focal_feature];
        std::vector<Vector> cs;
        for (int g = 0; g < G; ++g) {
            if (g == r.focal_group) continue;
            cs.push_back(Vector::Unit(G, r.focal_group) - Vector::Unit(G, g));
            r.contrasts.push_back({"g" + std::to_string(r.focal_group) + "-g" + std::to_string(g), {}, {}});
        }
        auto w = wald_contrasts(r.glm, cs);
        std::vector<double> ps;
        std::vector<size_t> valid;
        for (size_t i = 0; i < w.size(); ++i) {
            r.contrasts[i].wald = w[i];
            if (!w[i].degenerate) {
                ps.push_back(w[i].p);
                valid.push_back(i);
            }
        }
        const auto adj = bh_adjust(ps);
        for (size_t k = 0; k < valid.size(); ++k) r.contrasts[valid[k]].p_bh = adj[k];
    }
    return r;
}

}  // namespace equisparse
