#pragma once

#include <cmath>
#include <optional>

#include <Eigen/Dense>

#include "equisparse/loss.hpp"

namespace equisparse {

/// Minimum-norm solution of min ||y - X b||_2 (complete orthogonal decomposition).
inline Vector least_squares_min_norm(const Matrix& X, const Vector& y) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(X);
    return cod.solve(y);
}

/// Solves H d = g, falling back to the minimum-norm solution when H is singular.
inline Vector solve_psd(const Matrix& H, const Vector& g) {
    Eigen::LDLT<Matrix> ldlt(H);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        const auto& D = ldlt.vectorD();
        const double dmax = D.cwiseAbs().maxCoeff();
        if (dmax > 0.0 && D.minCoeff() > 1e-12 * dmax) {
            Vector d = ldlt.solve(g);
            if (d.allFinite()) return d;
        }
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(H);
    return cod.solve(g);
}

struct NewtonResult {
    Vector coef;
    Vector linear;      // offset + X coef
    Matrix hessian;     // X^T W X (unscaled), plus n * ridge * I
    double score_norm = 0.0;  // ||X^T (y - mu) - n ridge coef||_2
    int iterations = 0;
    bool converged = false;
};

/**
 * Damped Newton (IRLS) for logistic regression with optional offset and ridge:
 * minimizes (1/n) sum [log(1+exp(eta_i)) - y_i eta_i] + (ridge/2) ||b||^2,
 * eta = offset + X b. Step halving guarantees monotone objective.
 */
inline NewtonResult logistic_newton(const Matrix& X, const Vector& y, const std::optional<Vector>& offset,
                                    double ridge, double score_tol = 1e-10, int max_iter = 100,
                                    std::optional<Vector> start = std::nullopt) {
    const Eigen::Index n = X.rows(), q = X.cols();
    const double nd = static_cast<double>(n);
    NewtonResult r;
    r.coef = start ? *start : Vector::Zero(q);

    auto linear = [&](const Vector& b) {
        Vector eta = X * b;
        if (offset) eta += *offset;
        return eta;
    };
    auto objective = [&](const Vector& b, const Vector& eta) {
        return loss_from_linear(LossKind::Logistic, y, eta) + 0.5 * ridge * b.squaredNorm();
    };

    Vector eta = linear(r.coef);
    double f = objective(r.coef, eta);
    for (r.iterations = 0; r.iterations <= max_iter; ++r.iterations) {
        Vector mu(n), w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            mu(i) = sigmoid(eta(i));
            w(i) = mu(i) * (1.0 - mu(i));
        }
        Vector score = X.transpose() * (y - mu) - nd * ridge * r.coef;
        r.hessian = X.transpose() * w.asDiagonal() * X;
        r.hessian.diagonal().array() += nd * ridge;
        r.score_norm = score.norm();
        if (r.score_norm <= score_tol) {
            r.converged = true;
            break;
        }
        if (r.iterations == max_iter) break;

        Vector step = solve_psd(r.hessian, score);
        double t = 1.0;
        bool moved = false;
        for (int half = 0; half < 60; ++half, t *= 0.5) {
            Vector cand = r.coef + t * step;
            Vector eta_c = linear(cand);
            const double fc = objective(cand, eta_c);
            if (std::isfinite(fc) && fc <= f + 1e-14 * std::abs(f)) {
                r.coef = std::move(cand);
                eta = std::move(eta_c);
                f = fc;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    r.linear = eta;
    return r;
}

}  // namespace equisparse
