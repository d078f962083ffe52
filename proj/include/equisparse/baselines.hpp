#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "equisparse/fista.hpp"
#include "equisparse/linalg.hpp"
#include "equisparse/partition.hpp"
#include "equisparse/path.hpp"

namespace equisparse {

/// Ancestor-path incidence: A(j, i) = 1 iff node i lies on the path from leaf j up to its root.
struct ExpansionMatrix {
    Matrix A;
    std::shared_ptr<const Tree> tree;
    std::vector<bool> penalized;  // false for roots

    int n_nodes() const { return static_cast<int>(A.cols()); }
};

inline ExpansionMatrix expansion_matrix(std::shared_ptr<const Tree> tree) {
    ExpansionMatrix E;
    const int L = tree->n_nodes(), p = tree->n_leaves();
    E.A = Matrix::Zero(p, L);
    E.penalized.assign(L, true);
    for (int v = 0; v < L; ++v) {
        if (tree->is_root(v)) E.penalized[v] = false;
        for (int j : tree->leaf_set(v)) E.A(j, v) = 1.0;
    }
    E.tree = std::move(tree);
    return E;
}

/// Binary p x K membership matrix of a partition.
struct GroupMap {
    Matrix H;
    int K = 0;

    static GroupMap from_partition(const Partition& part) {
        GroupMap g;
        g.K = part.n_groups;
        g.H = Matrix::Zero(part.p(), part.n_groups);
        for (int j = 0; j < part.p(); ++j) g.H(j, part.labels[j]) = 1.0;
        return g;
    }
};

inline void soft_threshold_inplace(Vector& v, double t, const std::vector<double>& w, const std::vector<bool>& pen) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!pen[i]) continue;
        const double thr = t * w[i];
        const double a = std::abs(v(i));
        v(i) = a <= thr ? 0.0 : std::copysign(a - thr, v(i));
    }
}

inline double weighted_l1(const Vector& v, const std::vector<double>& w, const std::vector<bool>& pen) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (pen[i]) s += w[i] * std::abs(v(i));
    return s;
}

/// Weighted l1 problem loss(offset + Z g) + lambda * sum_{penalized} w_i |g_i|, shared by RARE and LASSO.
class L1Problem {
public:
    L1Problem(Matrix Z, Vector y, std::optional<Vector> offset, LossKind kind, std::vector<bool> penalized,
              std::vector<double> weights)
        : Z_(std::move(Z)), y_(std::move(y)), offset_(std::move(offset)), kind_(kind), pen_(std::move(penalized)),
          w_(std::move(weights)) {
        require(static_cast<Eigen::Index>(pen_.size()) == Z_.cols() && static_cast<Eigen::Index>(w_.size()) == Z_.cols(),
                ErrorCode::DimensionMismatch, "one weight and penalty flag per column needed");
        for (double wi : w_)
            require(std::isfinite(wi) && wi >= 0.0, ErrorCode::InvalidArgument, "l1 weights must be finite and >= 0");
        lipschitz_ = lipschitz_bound(kind_, Z_);
    }

    LossKind kind() const { return kind_; }
    const Matrix& design() const { return Z_; }

    /// Unpenalized fit on the unpenalized columns only, penalized coefficients zero.
    Vector null_fit() const {
        std::vector<std::vector<int>> groups;
        for (int i = 0; i < static_cast<int>(pen_.size()); ++i)
            if (!pen_[i]) groups.push_back({i});
        if (groups.empty()) return Vector::Zero(Z_.cols());
        return aggregated_fit(kind_, Z_, y_, offset_, groups);
    }

    /// Smallest lambda for which null_fit() is optimal.
    double lambda_max() const {
        const Vector g0 = null_fit();
        Vector eta = Z_ * g0;
        if (offset_) eta += *offset_;
        const Vector grad = Z_.transpose() * residual_from_linear(kind_, y_, eta);
        double best = 0.0;
        for (Eigen::Index i = 0; i < grad.size(); ++i)
            if (pen_[i] && w_[i] > 0.0) best = std::max(best, std::abs(grad(i)) / w_[i]);
        return best;
    }

    FistaState solve(double lambda, const Vector& start, const FistaOptions& opts) const {
        require(lambda >= 0.0 && std::isfinite(lambda), ErrorCode::NegativeLambda, "lambda must be finite and >= 0");
        return fista_minimize(
            kind_, Z_, y_, offset_, lipschitz_,
            [&](Vector& v, double step) { soft_threshold_inplace(v, step * lambda, w_, pen_); },
            [&](const Vector& g) { return lambda == 0.0 ? 0.0 : lambda * weighted_l1(g, w_, pen_); }, start, opts);
    }

private:
    Matrix Z_;
    Vector y_;
    std::optional<Vector> offset_;
    LossKind kind_;
    std::vector<bool> pen_;
    std::vector<double> w_;
    double lipschitz_ = 0.0;
};

struct RareResult {
    FitResult fit;  // beta = A gamma
    Vector gamma;   // one entry per tree node
};

/**
 * Partition induced by a RARE fit: two leaves are merged iff the nonzero
 * latent coefficients on their root paths are the same set of nodes.
 */
inline Partition rare_partition(const Tree& tree, const Vector& gamma) {
    std::vector<std::vector<int>> pattern(tree.n_leaves());
    for (int v = 0; v < tree.n_nodes(); ++v) {
        if (gamma(v) == 0.0 && !tree.is_root(v)) continue;
        for (int j : tree.leaf_set(v)) pattern[j].push_back(v);
    }
    // Roots are always in the pattern; leaves under different roots stay apart.
    return Partition::from_labels(pattern);
}

class RareProblem {
public:
    RareProblem(const Dataset& data, std::shared_ptr<const Tree> tree, LossKind kind,
                std::optional<std::vector<double>> weights = std::nullopt)
        : E_(expansion_matrix(std::move(tree))), prob_(make(data, kind, weights)) {}

    const ExpansionMatrix& expansion() const { return E_; }
    double lambda_max() const { return prob_.lambda_max(); }
    Vector null_fit() const { return prob_.null_fit(); }

    /// `start` is a gamma vector (defaults to the root-only fit).
    RareResult fit(double lambda, const FistaOptions& opts = {}, std::optional<Vector> start = std::nullopt) const {
        Vector g0 = start ? *start : prob_.null_fit();
        require(g0.size() == E_.n_nodes(), ErrorCode::DimensionMismatch, "gamma start has wrong length");
        auto st = prob_.solve(lambda, g0, opts);
        RareResult r;
        r.gamma = std::move(st.x);
        r.fit.beta = E_.A * r.gamma;
        r.fit.lambda = lambda;
        r.fit.loss_kind = prob_.kind();
        r.fit.objective_trace = std::move(st.trace);
        r.fit.iterations = st.iterations;
        r.fit.converged = st.converged;
        r.fit.partition = rare_partition(*E_.tree, r.gamma);
        return r;
    }

    /// Warm-started fits along a decreasing grid.
    std::vector<RareResult> fit_grid(const std::vector<double>& lambdas, const FistaOptions& opts = {}) const {
        std::vector<RareResult> out;
        std::optional<Vector> start;
        for (double lam : lambdas) {
            out.push_back(fit(lam, opts, start));
            start = out.back().gamma;
        }
        return out;
    }

private:
    L1Problem make(const Dataset& data, LossKind kind, const std::optional<std::vector<double>>& weights) const {
        validate(data, kind);
        require(data.p() == E_.tree->n_leaves(), ErrorCode::DimensionMismatch,
                "design has " + std::to_string(data.p()) + " columns, tree has " +
                    std::to_string(E_.tree->n_leaves()) + " leaves");
        std::vector<double> w = weights ? *weights : std::vector<double>(E_.n_nodes(), 1.0);
        require(static_cast<int>(w.size()) == E_.n_nodes(), ErrorCode::DimensionMismatch,
                "RARE weights need one value per tree node");
        return L1Problem(data.X * E_.A, data.y, data.offset, kind, E_.penalized, std::move(w));
    }

    ExpansionMatrix E_;
    L1Problem prob_;
};

inline RareResult rare_fit(const Dataset& data, std::shared_ptr<const Tree> tree, double lambda, LossKind kind,
                           std::optional<std::vector<double>> weights_gamma = std::nullopt,
                           const FistaOptions& opts = {}) {
    return RareProblem(data, std::move(tree), kind, std::move(weights_gamma)).fit(lambda, opts);
}

/// Partition grouping features whose fitted coefficients are exactly equal.
inline Partition equal_value_partition(const Vector& beta) {
    std::vector<double> raw(beta.data(), beta.data() + beta.size());
    return Partition::from_labels(raw);
}

inline L1Problem lasso_problem(const Dataset& data, LossKind kind) {
    validate(data, kind);
    return L1Problem(data.X, data.y, data.offset, kind, std::vector<bool>(data.p(), true),
                     std::vector<double>(data.p(), 1.0));
}

inline FitResult lasso_fit(const Dataset& data, double lambda, LossKind kind, const FistaOptions& opts = {}) {
    auto prob = lasso_problem(data, kind);
    Vector start = opts.warm_start ? *opts.warm_start : Vector::Zero(data.p());
    auto st = prob.solve(lambda, start, opts);
    FitResult r;
    r.beta = std::move(st.x);
    r.lambda = lambda;
    r.loss_kind = kind;
    r.objective_trace = std::move(st.trace);
    r.iterations = st.iterations;
    r.converged = st.converged;
    r.partition = equal_value_partition(r.beta);
    return r;
}

/// Minimizes loss + (lambda/2) ||beta||^2 (closed form or damped Newton).
inline FitResult ridge_fit(const Dataset& data, double lambda, LossKind kind) {
    validate(data, kind);
    require(lambda >= 0.0 && std::isfinite(lambda), ErrorCode::NegativeLambda, "lambda must be finite and >= 0");
    FitResult r;
    r.lambda = lambda;
    r.loss_kind = kind;
    const double n = static_cast<double>(data.n());
    if (kind == LossKind::Squared) {
        Vector target = data.y;
        if (data.offset) target -= *data.offset;
        if (lambda == 0.0) {
            r.beta = least_squares_min_norm(data.X, target);
        } else {
            Matrix G = data.X.transpose() * data.X;
            G.diagonal().array() += n * lambda;
            r.beta = solve_psd(G, data.X.transpose() * target);
        }
        r.iterations = 1;
        r.converged = true;
    } else {
        auto nr = logistic_newton(data.X, data.y, data.offset, lambda, 1e-10, 200);
        r.beta = std::move(nr.coef);
        r.iterations = nr.iterations;
        r.converged = nr.converged;
    }
    Vector eta = data.X * r.beta;
    if (data.offset) eta += *data.offset;
    r.objective_trace.push_back(loss_from_linear(kind, data.y, eta) + 0.5 * lambda * r.beta.squaredNorm());
    r.partition = equal_value_partition(r.beta);
    return r;
}

/// Least squares (or ridge) on the aggregated design X H; beta = H beta_tilde.
inline FitResult oracle_aggregated_ls(const Dataset& data, const GroupMap& groups,
                                      std::optional<double> ridge_lambda = std::nullopt) {
    require(groups.H.rows() == data.p(), ErrorCode::DimensionMismatch, "group map rows must equal p");
    Dataset agg;
    agg.X = data.X * groups.H;
    agg.y = data.y;
    agg.offset = data.offset;
    FitResult inner = ridge_fit(agg, ridge_lambda.value_or(0.0), LossKind::Squared);
    FitResult r = inner;
    r.beta = groups.H * inner.beta;
    std::vector<int> labels(data.p());
    for (int j = 0; j < data.p(); ++j) {
        Eigen::Index k;
        groups.H.row(j).maxCoeff(&k);
        labels[j] = static_cast<int>(k);
    }
    r.partition = Partition::from_labels(labels);
    return r;
}

}  // namespace equisparse
