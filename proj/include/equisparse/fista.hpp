#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "equisparse/error.hpp"
#include "equisparse/loss.hpp"
#include "equisparse/partition.hpp"
#include "equisparse/penalty.hpp"

namespace equisparse {

struct FistaOptions {
    int max_iter = 20000;
    double tol = 1e-9;
    bool restart = true;
    /// Halve the step whenever the quadratic upper bound is violated.
    bool backtracking = false;
    std::optional<Vector> warm_start;
};

struct FitResult {
    Vector beta;  // original column order
    double lambda = 0.0;
    LossKind loss_kind = LossKind::Squared;
    std::vector<double> objective_trace;
    int iterations = 0;
    bool converged = false;
    std::optional<Partition> partition;
};

struct FistaState {
    Vector x;
    std::vector<double> trace;
    int iterations = 0;
    int restarts = 0;
    bool converged = false;
};

/**
 * Accelerated proximal gradient for loss(offset + A x) + penalty(x).
 *
 * `prox(v, t)` must return argmin_z 1/2 ||z - v||^2 + t * penalty(z) (in place
 * on v); `penalty(x)` evaluates the nonsmooth term including its lambda.
 * Momentum is reset whenever the objective would increase, and the rejected
 * step is discarded, so the recorded trace is non-increasing. A x is tracked
 * incrementally: one product with A and one with A^T per iteration.
 */
template <class Prox, class Penalty>
FistaState fista_minimize(LossKind kind, const Matrix& A, const Vector& y, const std::optional<Vector>& offset,
                          double lipschitz, Prox&& prox, Penalty&& penalty, Vector x0, const FistaOptions& opts) {
    require(opts.max_iter >= 1, ErrorCode::InvalidArgument, "max_iter must be >= 1");
    require(x0.size() == A.cols(), ErrorCode::DimensionMismatch, "start vector length differs from design width");

    auto linear = [&](const Vector& x) {
        Vector eta = A * x;
        if (offset) eta += *offset;
        return eta;
    };

    double step = lipschitz > 0.0 ? 1.0 / lipschitz : 1.0;
    FistaState st;
    st.x = std::move(x0);
    Vector Ax = linear(st.x);
    double F = loss_from_linear(kind, y, Ax) + penalty(st.x);
    st.trace.push_back(F);

    Vector yk = st.x, Ay = Ax;
    double t = 1.0;
    bool momentum = false;

    while (st.iterations < opts.max_iter) {
        ++st.iterations;
        const Vector r = residual_from_linear(kind, y, Ay);
        const Vector grad = A.transpose() * r;
        const double f_y = opts.backtracking ? loss_from_linear(kind, y, Ay) : 0.0;

        Vector z, Az;
        double f_z = 0.0;
        while (true) {
            z = yk - step * grad;
            prox(z, step);
            Az = linear(z);
            f_z = loss_from_linear(kind, y, Az);
            if (!opts.backtracking) break;
            const Vector d = z - yk;
            if (f_z <= f_y + grad.dot(d) + 0.5 / step * d.squaredNorm() + 1e-15 * std::abs(f_y)) break;
            step *= 0.5;
        }
        const double Fz = f_z + penalty(z);

        if (!(Fz <= F)) {
            if (!momentum) {
                // A plain prox-gradient step failed to descend: numerically stationary.
                st.converged = std::isfinite(F);
                break;
            }
            if (opts.restart) {
                yk = st.x;
                Ay = Ax;
                t = 1.0;
                momentum = false;
                ++st.restarts;
                continue;
            }
        }

        const double change = std::abs(F - Fz);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double mom = (t - 1.0) / t_next;
        yk = z + mom * (z - st.x);
        Ay = Az + mom * (Az - Ax);
        t = t_next;
        momentum = mom > 0.0;
        st.x = std::move(z);
        Ax = std::move(Az);
        F = Fz;
        st.trace.push_back(F);

        if (change <= opts.tol * std::abs(F) || change == 0.0) {
            st.converged = true;
            break;
        }
    }
    return st;
}

/// Tree-penalized problem with the design permuted into the tree's leaf order.
class TreeProblem {
public:
    TreeProblem(const Dataset& data, PenaltySpec spec, LossKind kind)
        : spec_(std::move(spec)), kind_(kind), y_(data.y), offset_(data.offset) {
        validate(data, kind);
        require(data.p() == spec_.p(), ErrorCode::DimensionMismatch,
                "design has " + std::to_string(data.p()) + " columns, tree has " + std::to_string(spec_.p()) +
                    " leaves");
        const auto& perm = spec_.tree->leaf_perm();
        Xp_.resize(data.n(), data.p());
        for (int k = 0; k < data.p(); ++k) Xp_.col(k) = data.X.col(perm[k]);
        lipschitz_ = lipschitz_bound(kind, Xp_);
    }

    const PenaltySpec& spec() const { return spec_; }
    LossKind kind() const { return kind_; }
    const Matrix& design_permuted() const { return Xp_; }
    const Vector& y() const { return y_; }
    const std::optional<Vector>& offset() const { return offset_; }
    double lipschitz() const { return lipschitz_; }

    FitResult fit(double lambda, const FistaOptions& opts) const {
        require(lambda >= 0.0 && std::isfinite(lambda), ErrorCode::NegativeLambda, "lambda must be finite and >= 0");
        Vector x0 = Vector::Zero(spec_.p());
        if (opts.warm_start) {
            require(opts.warm_start->size() == spec_.p(), ErrorCode::DimensionMismatch, "warm start length differs from p");
            x0 = spec_.tree->to_permuted(*opts.warm_start);
        }
        auto st = fista_minimize(
            kind_, Xp_, y_, offset_, lipschitz_,
            [&](Vector& v, double step) { prox_permuted_inplace(spec_, step * lambda, v); },
            [&](const Vector& x) { return lambda == 0.0 ? 0.0 : lambda * omega_permuted(spec_, x); }, std::move(x0),
            opts);
        FitResult out;
        out.beta = spec_.tree->from_permuted(st.x);
        out.lambda = lambda;
        out.loss_kind = kind_;
        out.objective_trace = std::move(st.trace);
        out.iterations = st.iterations;
        out.converged = st.converged;
        return out;
    }

private:
    PenaltySpec spec_;
    LossKind kind_;
    Matrix Xp_;
    Vector y_;
    std::optional<Vector> offset_;
    double lipschitz_ = 0.0;
};

/// Full penalized objective g(beta) + lambda * Omega(beta).
inline double penalized_objective(LossKind kind, const Dataset& data, const PenaltySpec& spec, double lambda,
                                  const Vector& beta) {
    Vector eta = data.X * beta;
    if (data.offset) eta += *data.offset;
    return loss_from_linear(kind, data.y, eta) + lambda * omega(spec, beta);
}

/// Accelerated proximal gradient fit of the tree-penalized estimator.
inline FitResult fista_fit(const Dataset& data, const PenaltySpec& spec, LossKind kind, double lambda,
                           const FistaOptions& opts = {}) {
    return TreeProblem(data, spec, kind).fit(lambda, opts);
}

}  // namespace equisparse
