#pragma once

// Independent reference solvers used only by the tests. None of them calls the
// library's prox, FISTA or Newton code.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "equisparse/penalty.hpp"
#include "equisparse/loss.hpp"
#include "equisparse/rng.hpp"

namespace oracle {

using equisparse::Matrix;
using equisparse::Vector;

/// Internal groups as explicit column lists with their thresholds.
struct Groups {
    std::vector<std::vector<int>> cols;
    std::vector<double> weight;
};

inline Groups groups_of(const equisparse::PenaltySpec& spec) {
    Groups g;
    for (int v : spec.tree->internal_nodes()) {
        g.cols.push_back(spec.tree->leaf_set(v));
        g.weight.push_back(spec.weights[v]);
    }
    return g;
}

inline Vector centered(const Vector& x, const std::vector<int>& cols) {
    Vector out(static_cast<Eigen::Index>(cols.size()));
    double mean = 0.0;
    for (int j : cols) mean += x(j);
    mean /= static_cast<double>(cols.size());
    for (size_t k = 0; k < cols.size(); ++k) out(static_cast<Eigen::Index>(k)) = x(cols[k]) - mean;
    return out;
}

inline double penalty(const Groups& g, const Vector& x) {
    double s = 0.0;
    for (size_t l = 0; l < g.cols.size(); ++l) s += g.weight[l] * centered(x, g.cols[l]).norm();
    return s;
}

struct ProxOracle {
    Vector beta;
    double gap = 0.0;
    int sweeps = 0;
};

/**
 * Prox of lambda * Omega by block coordinate ascent on the dual:
 * beta = eta - sum_l P_l u_l with ||u_l|| <= lambda w_l, P_l the centering
 * projector of group l. Stops when the duality gap drops below gap_tol.
 */
inline ProxOracle prox(const Groups& g, double lambda, const Vector& eta, double gap_tol = 1e-15,
                       int max_sweeps = 2000000) {
    const size_t G = g.cols.size();
    std::vector<Vector> u(G);
    for (size_t l = 0; l < G; ++l) u[l] = Vector::Zero(static_cast<Eigen::Index>(g.cols[l].size()));
    Vector beta = eta;
    ProxOracle out;
    for (out.sweeps = 0; out.sweeps < max_sweeps; ++out.sweeps) {
        for (size_t l = 0; l < G; ++l) {
            const auto& cols = g.cols[l];
            // r = beta + P_l u_l (remove own contribution)
            for (size_t k = 0; k < cols.size(); ++k) beta(cols[k]) += u[l](static_cast<Eigen::Index>(k));
            Vector cand = centered(beta, cols);
            const double t = lambda * g.weight[l];
            const double nrm = cand.norm();
            if (nrm > t) cand *= t / nrm;
            u[l] = cand;
            for (size_t k = 0; k < cols.size(); ++k) beta(cols[k]) -= u[l](static_cast<Eigen::Index>(k));
        }
        if (out.sweeps % 16 == 0) {
            const Vector s = eta - beta;
            const double primal = 0.5 * s.squaredNorm() + lambda * penalty(g, beta);
            const double dual = s.dot(eta) - 0.5 * s.squaredNorm();
            out.gap = primal - dual;
            if (out.gap <= gap_tol * (1.0 + std::abs(primal))) break;
        }
    }
    out.beta = beta;
    return out;
}

inline double loss(equisparse::LossKind kind, const Matrix& X, const Vector& y, const Vector& b) {
    const Vector eta = X * b;
    const double n = static_cast<double>(X.rows());
    double s = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        if (kind == equisparse::LossKind::Squared) {
            s += 0.5 * (y(i) - eta(i)) * (y(i) - eta(i));
        } else {
            const double z = eta(i);
            s += (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z))) - y(i) * z;
        }
    }
    return s / n;
}

/// Central finite-difference gradient of the mean loss.
inline Vector fd_grad(equisparse::LossKind kind, const Matrix& X, const Vector& y, const Vector& b, double h = 1e-6) {
    Vector g(b.size());
    for (Eigen::Index j = 0; j < b.size(); ++j) {
        Vector bp = b, bm = b;
        bp(j) += h;
        bm(j) -= h;
        g(j) = (loss(kind, X, y, bp) - loss(kind, X, y, bm)) / (2 * h);
    }
    return g;
}

/**
 * ADMM for loss(X b) + lambda * sum_l w_l ||P_l b||, splitting z_l = P_l b.
 * The b-step carries a small proximal term so it stays well posed when X is
 * rank deficient; for the logistic loss it is solved by Newton's method.
 */
inline Vector admm(equisparse::LossKind kind, const Matrix& X, const Vector& y, const Groups& g, double lambda,
                   int iters = 40000, double rho = 1.0, double prox_eps = 1e-3) {
    const Eigen::Index p = X.cols();
    const double n = static_cast<double>(X.rows());
    const size_t G = g.cols.size();
    // Sum of centering projectors as a dense matrix.
    Matrix S = Matrix::Zero(p, p);
    std::vector<Matrix> P(G);
    for (size_t l = 0; l < G; ++l) {
        const auto& cols = g.cols[l];
        const double a = static_cast<double>(cols.size());
        P[l] = Matrix::Zero(static_cast<Eigen::Index>(cols.size()), p);
        for (size_t r = 0; r < cols.size(); ++r)
            for (size_t c = 0; c < cols.size(); ++c)
                P[l](static_cast<Eigen::Index>(r), cols[c]) = (r == c ? 1.0 : 0.0) - 1.0 / a;
        S += P[l].transpose() * P[l];
    }
    Vector b = Vector::Zero(p);
    std::vector<Vector> z(G), u(G);
    for (size_t l = 0; l < G; ++l) z[l] = u[l] = Vector::Zero(static_cast<Eigen::Index>(g.cols[l].size()));

    const Matrix XtX = X.transpose() * X / n;
    Eigen::LLT<Matrix> sq_solver;
    if (kind == equisparse::LossKind::Squared) {
        Matrix A = XtX + rho * S;
        A.diagonal().array() += prox_eps;
        sq_solver.compute(A);
    }
    for (int it = 0; it < iters; ++it) {
        Vector rhs = prox_eps * b;
        for (size_t l = 0; l < G; ++l) rhs += rho * P[l].transpose() * (z[l] - u[l]);
        if (kind == equisparse::LossKind::Squared) {
            b = sq_solver.solve(rhs + X.transpose() * y / n);
        } else {
            for (int k = 0; k < 50; ++k) {
                Vector eta = X * b, mu(eta.size()), w(eta.size());
                for (Eigen::Index i = 0; i < eta.size(); ++i) {
                    mu(i) = 1.0 / (1.0 + std::exp(-eta(i)));
                    w(i) = mu(i) * (1.0 - mu(i));
                }
                Vector grad = X.transpose() * (mu - y) / n + rho * S * b + prox_eps * b - rhs;
                if (grad.norm() < 1e-13) break;
                Matrix H = X.transpose() * w.asDiagonal() * X / n + rho * S;
                H.diagonal().array() += prox_eps;
                b -= H.llt().solve(grad);
            }
        }
        for (size_t l = 0; l < G; ++l) {
            Vector v = P[l] * b + u[l];
            const double t = lambda * g.weight[l] / rho;
            const double nrm = v.norm();
            z[l] = nrm > t ? Vector((1.0 - t / nrm) * v) : Vector::Zero(v.size());
            u[l] += P[l] * b - z[l];
        }
    }
    return b;
}

/// Coordinate descent lasso for (1/2n)||y - X b||^2 + lambda ||b||_1.
inline Vector lasso_cd(const Matrix& X, const Vector& y, double lambda, int sweeps = 200000, double tol = 1e-15) {
    const Eigen::Index p = X.cols();
    const double n = static_cast<double>(X.rows());
    Vector b = Vector::Zero(p), r = y;
    for (int s = 0; s < sweeps; ++s) {
        double delta = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const double cj = X.col(j).squaredNorm() / n;
            if (cj == 0.0) continue;
            const double zj = X.col(j).dot(r) / n + cj * b(j);
            const double nb = std::abs(zj) <= lambda ? 0.0 : (zj - std::copysign(lambda, zj)) / cj;
            const double d = nb - b(j);
            if (d != 0.0) {
                r -= d * X.col(j);
                b(j) = nb;
                delta = std::max(delta, std::abs(d));
            }
        }
        if (delta < tol) break;
    }
    return b;
}

/// Plain Newton with backtracking for the offset logistic likelihood.
inline Vector logistic_mle(const Matrix& X, const Vector& y, const Vector& offset, int iters = 200) {
    Vector b = Vector::Zero(X.cols());
    auto nll = [&](const Vector& c) {
        const Vector eta = X * c + offset;
        double s = 0.0;
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            const double z = eta(i);
            s += (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z))) - y(i) * z;
        }
        return s;
    };
    for (int it = 0; it < iters; ++it) {
        const Vector eta = X * b + offset;
        Vector mu(eta.size()), w(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            mu(i) = 1.0 / (1.0 + std::exp(-eta(i)));
            w(i) = mu(i) * (1.0 - mu(i));
        }
        const Vector grad = X.transpose() * (mu - y);
        if (grad.norm() < 1e-12) break;
        const Matrix H = X.transpose() * w.asDiagonal() * X;
        const Vector step = H.ldlt().solve(grad);
        double t = 1.0, f0 = nll(b);
        while (t > 1e-12 && nll(b - t * step) > f0) t *= 0.5;
        b -= t * step;
    }
    return b;
}

/// Random tree specs: each internal node gets 2-4 children until `p` leaves exist.
inline std::vector<equisparse::NodeSpec> random_tree_specs(int p, int max_depth, equisparse::CounterRng& rng,
                                                           int n_roots = 1) {
    using equisparse::NodeSpec;
    std::vector<NodeSpec> specs;
    int next_col = 0, next_id = 0;
    // Distribute leaves over roots, then recursively split.
    std::vector<int> root_sizes(n_roots, 1);
    for (int k = n_roots; k < p; ++k) ++root_sizes[rng.below(static_cast<std::uint64_t>(n_roots))];
    auto build = [&](auto&& self, int size, std::optional<std::string> parent, int depth) -> void {
        const std::string id = "n" + std::to_string(next_id++);
        if (size == 1) {
            specs.push_back({id, parent, next_col++});
            return;
        }
        specs.push_back({id, parent, std::nullopt});
        if (depth >= max_depth) {
            for (int k = 0; k < size; ++k) specs.push_back({"n" + std::to_string(next_id++), id, next_col++});
            return;
        }
        int arity = 2 + static_cast<int>(rng.below(3));
        arity = std::min(arity, size);
        std::vector<int> parts(arity, 1);
        for (int k = arity; k < size; ++k) ++parts[rng.below(static_cast<std::uint64_t>(arity))];
        for (int s : parts) self(self, s, id, depth + 1);
    };
    for (int s : root_sizes) build(build, s, std::nullopt, 0);
    return specs;
}

}  // namespace oracle
