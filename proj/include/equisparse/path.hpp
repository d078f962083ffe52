#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "equisparse/fista.hpp"
#include "equisparse/linalg.hpp"

namespace equisparse {

struct GridOptions {
    int n_lambda = 50;
    double lambda_min_ratio = 1e-3;
    std::optional<double> lambda_max;
};

struct SolutionPath {
    std::vector<double> lambdas;  // decreasing
    Matrix betas;                 // one row per lambda, original column order
    std::vector<int> iterations;
    std::vector<bool> converged;
    std::vector<double> metrics;  // optional per-lambda validation loss
};

/// n x G matrix whose column g sums the columns of X listed in groups[g].
inline Matrix sum_columns(const Matrix& X, const std::vector<std::vector<int>>& groups) {
    Matrix out = Matrix::Zero(X.rows(), static_cast<Eigen::Index>(groups.size()));
    for (size_t g = 0; g < groups.size(); ++g)
        for (int j : groups[g]) out.col(static_cast<Eigen::Index>(g)) += X.col(j);
    return out;
}

/// Unpenalized fit restricted to coefficients constant on each group (no ridge).
inline Vector aggregated_fit(LossKind kind, const Matrix& X, const Vector& y, const std::optional<Vector>& offset,
                             const std::vector<std::vector<int>>& groups) {
    const Matrix Xg = sum_columns(X, groups);
    Vector coef;
    if (kind == LossKind::Squared) {
        Vector target = y;
        if (offset) target -= *offset;
        coef = least_squares_min_norm(Xg, target);
    } else {
        coef = logistic_newton(Xg, y, offset, 0.0, 1e-10, 200).coef;
    }
    Vector beta = Vector::Zero(X.cols());
    for (size_t g = 0; g < groups.size(); ++g)
        for (int j : groups[g]) beta(j) = coef(static_cast<Eigen::Index>(g));
    return beta;
}

/// Minimizer of the loss over the penalty's kernel (constant within each root group).
inline Vector kernel_fit(const TreeProblem& prob) {
    const Tree& tree = *prob.spec().tree;
    std::vector<std::vector<int>> groups;
    for (int r : tree.roots()) {
        auto rg = tree.range(r);
        std::vector<int> g;
        for (int k = rg.begin; k < rg.end; ++k) g.push_back(k);
        groups.push_back(std::move(g));
    }
    // Groups are in permuted coordinates here.
    Vector beta_perm = aggregated_fit(prob.kind(), prob.design_permuted(), prob.y(), prob.offset(), groups);
    return tree.from_permuted(beta_perm);
}

/**
 * Smallest lambda at which the kernel fit is optimal, i.e. one prox-gradient
 * step from it is fully aggregated. Doubling search, then bisection.
 */
inline double lambda_max(const TreeProblem& prob) {
    const auto& spec = prob.spec();
    const Vector beta0 = spec.tree->to_permuted(kernel_fit(prob));
    Vector eta = prob.design_permuted() * beta0;
    if (prob.offset()) eta += *prob.offset();
    const Vector grad = prob.design_permuted().transpose() * residual_from_linear(prob.kind(), prob.y(), eta);
    const double step = prob.lipschitz() > 0.0 ? 1.0 / prob.lipschitz() : 1.0;
    const Vector point = beta0 - step * grad;

    auto aggregated = [&](double lambda) {
        Vector v = point;
        prox_permuted_inplace(spec, step * lambda, v);
        return in_kernel_permuted(spec, v, 0.0);
    };
    if (aggregated(0.0)) return 0.0;

    const double scale = grad.norm() + 1e-300;
    double hi = scale;
    int guard = 0;
    while (!aggregated(hi)) {
        hi *= 2.0;
        require(++guard < 200, ErrorCode::InvalidArgument,
                "no finite lambda aggregates the fit (a root with zero weight?)");
    }
    double lo = 0.0;
    for (int it = 0; it < 100 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (aggregated(mid) ? hi : lo) = mid;
    }
    return hi;
}

inline std::vector<double> lambda_grid(double lmax, int n_lambda, double min_ratio) {
    require(n_lambda >= 2, ErrorCode::InvalidArgument, "n_lambda must be >= 2");
    require(min_ratio > 0.0 && min_ratio <= 1.0, ErrorCode::InvalidArgument, "lambda_min_ratio must be in (0, 1]");
    std::vector<double> out(n_lambda);
    for (int i = 0; i < n_lambda; ++i)
        out[i] = lmax * std::pow(min_ratio, static_cast<double>(i) / (n_lambda - 1));
    return out;
}

/// Warm-started fits along an explicit decreasing grid.
inline SolutionPath fit_path(const TreeProblem& prob, const std::vector<double>& lambdas, FistaOptions opts = {}) {
    SolutionPath path;
    path.lambdas = lambdas;
    path.betas.resize(static_cast<Eigen::Index>(lambdas.size()), prob.spec().p());
    if (!opts.warm_start) opts.warm_start = kernel_fit(prob);
    for (size_t i = 0; i < lambdas.size(); ++i) {
        FitResult fit = prob.fit(lambdas[i], opts);
        path.betas.row(static_cast<Eigen::Index>(i)) = fit.beta.transpose();
        path.iterations.push_back(fit.iterations);
        path.converged.push_back(fit.converged);
        opts.warm_start = std::move(fit.beta);
    }
    return path;
}

inline std::vector<double> path_lambdas(const TreeProblem& prob, const GridOptions& grid) {
    const double lmax = grid.lambda_max ? *grid.lambda_max : lambda_max(prob);
    return lambda_grid(lmax > 0.0 ? lmax : 1e-12, grid.n_lambda, grid.lambda_min_ratio);
}

inline SolutionPath solution_path(const Dataset& data, const PenaltySpec& spec, LossKind kind,
                                  const GridOptions& grid = {}, const FistaOptions& opts = {}) {
    TreeProblem prob(data, spec, kind);
    return fit_path(prob, path_lambdas(prob, grid), opts);
}

/// Group scaling constant max_l sigma_max(X_{., A_l} / sqrt(n)) over internal nodes.
inline double scaling_constant(const Matrix& X, const Tree& tree) {
    double best = 0.0;
    const double n = static_cast<double>(X.rows());
    for (int v : tree.internal_nodes()) {
        const auto cols = tree.leaf_set(v);
        Matrix sub(X.rows(), static_cast<Eigen::Index>(cols.size()));
        for (size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = X.col(cols[k]);
        best = std::max(best, std::sqrt(max_singular_value_sq(sub) / n));
    }
    return best;
}

/// Theoretical penalty level 4 sqrt(2) sigma C / sqrt(n) * Theta(T) * sqrt(log 2p + log |I|).
inline double theory_lambda(const Tree& tree, double sigma, double C, int n, int p) {
    require(sigma > 0.0 && C > 0.0, ErrorCode::InvalidArgument, "sigma and C must be positive");
    require(n >= 1 && p >= 1, ErrorCode::InvalidArgument, "n and p must be positive");
    const double th = theta(tree);
    const double n_internal = static_cast<double>(tree.internal_nodes().size());
    return 4.0 * std::sqrt(2.0) * sigma * C / std::sqrt(static_cast<double>(n)) * th *
           std::sqrt(std::log(2.0 * p) + std::log(n_internal));
}

}  // namespace equisparse
