#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "equisparse/error.hpp"
#include "equisparse/tree.hpp"

namespace equisparse {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// w_l = a_l^{-1/2} on internal nodes, zero elsewhere (indexed by node).
inline std::vector<double> default_weights(const Tree& tree) {
    std::vector<double> w(tree.n_nodes(), 0.0);
    for (int v : tree.internal_nodes()) w[v] = 1.0 / std::sqrt(static_cast<double>(tree.group_size(v)));
    return w;
}

/// Tree plus per-internal-node weights of the hierarchical penalty.
struct PenaltySpec {
    std::shared_ptr<const Tree> tree;
    std::vector<double> weights;  // one per node; only internal entries are used

    PenaltySpec() = default;

    explicit PenaltySpec(std::shared_ptr<const Tree> t) : tree(std::move(t)) {
        require(tree != nullptr, ErrorCode::InvalidArgument, "penalty needs a tree");
        weights = default_weights(*tree);
    }

    PenaltySpec(std::shared_ptr<const Tree> t, std::vector<double> w) : tree(std::move(t)), weights(std::move(w)) {
        require(tree != nullptr, ErrorCode::InvalidArgument, "penalty needs a tree");
        require(static_cast<int>(weights.size()) == tree->n_nodes(), ErrorCode::DimensionMismatch,
                "weights need one entry per node");
        for (int v = 0; v < tree->n_nodes(); ++v) {
            require(std::isfinite(weights[v]) && weights[v] >= 0.0, ErrorCode::InvalidArgument,
                    "weight of node '" + tree->id(v) + "' must be finite and nonnegative");
            if (tree->is_leaf(v)) weights[v] = 0.0;
        }
    }

    int p() const { return tree->n_leaves(); }
};

namespace detail {

/// Neumaier-compensated accumulator.
struct CompensatedSum {
    double sum = 0.0;
    double c = 0.0;
    void add(double x) {
        double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            c += (sum - t) + x;
        else
            c += (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + c; }
};

struct GroupMoments {
    double mean = 0.0;
    double spread = 0.0;  // ||v - mean 1||_2
};

/// Mean and centered norm in one sweep, shifted by the first entry for stability.
inline GroupMoments group_moments(const double* v, int a) {
    GroupMoments m;
    if (a <= 0) return m;
    const double shift = v[0];
    CompensatedSum s1, s2;
    for (int i = 0; i < a; ++i) {
        const double d = v[i] - shift;
        s1.add(d);
        s2.add(d * d);
    }
    const double sd = s1.value();
    m.mean = shift + sd / a;
    const double ss = s2.value() - sd * sd / a;
    m.spread = ss > 0.0 ? std::sqrt(ss) : 0.0;
    return m;
}

}  // namespace detail

/// Centered group norm ||v - mean(v) 1||_2 over a permuted range.
inline double group_spread(const Vector& x, LeafRange r) {
    return detail::group_moments(x.data() + r.begin, r.size()).spread;
}

/**
 * Closed-form prox of threshold * ||D v||_2 on one group, in place.
 *
 * With m the group mean, s the centered norm and rho = threshold / s, the
 * slice becomes m 1 when rho >= 1 (or s == 0), otherwise rho m 1 + (1-rho) v.
 * The group sum is preserved.
 */
inline void prox_group_update(Eigen::Ref<Vector> beta, LeafRange group, double threshold) {
    if (threshold <= 0.0 || group.size() <= 1) return;
    double* v = beta.data() + group.begin;
    const int a = group.size();
    const auto mom = detail::group_moments(v, a);
    if (mom.spread <= 0.0 || threshold >= mom.spread) {
        for (int i = 0; i < a; ++i) v[i] = mom.mean;
        return;
    }
    const double rho = threshold / mom.spread;
    const double shift = rho * mom.mean;
    const double keep = 1.0 - rho;
    for (int i = 0; i < a; ++i) v[i] = shift + keep * v[i];
}

/// Penalty value for a coefficient vector already in permuted order.
inline double omega_permuted(const PenaltySpec& spec, const Vector& beta_perm) {
    double total = 0.0;
    for (int v : spec.tree->internal_nodes()) {
        const double w = spec.weights[v];
        if (w == 0.0) continue;
        total += w * group_spread(beta_perm, spec.tree->range(v));
    }
    return total;
}

/// Hierarchical penalty sum_l w_l ||beta_{A_l} - mean 1||_2 (original column order).
inline double omega(const PenaltySpec& spec, const Vector& beta) {
    require(beta.size() == spec.p(), ErrorCode::DimensionMismatch,
            "beta has length " + std::to_string(beta.size()) + ", tree has " + std::to_string(spec.p()) + " leaves");
    return omega_permuted(spec, spec.tree->to_permuted(beta));
}

/// In-place prox of lambda * Omega on a permuted vector: bottom-up over depth layers.
inline void prox_permuted_inplace(const PenaltySpec& spec, double lambda, Eigen::Ref<Vector> eta_perm) {
    if (lambda == 0.0) return;
    const auto& layers = spec.tree->internal_layers();
    for (auto layer = layers.rbegin(); layer != layers.rend(); ++layer) {
        for (int v : *layer) prox_group_update(eta_perm, spec.tree->range(v), lambda * spec.weights[v]);
    }
}

/// argmin_beta 1/2 ||beta - eta||^2 + lambda Omega(beta), original column order.
inline Vector prox(const PenaltySpec& spec, double lambda, const Vector& eta) {
    require(eta.size() == spec.p(), ErrorCode::DimensionMismatch,
            "eta has length " + std::to_string(eta.size()) + ", tree has " + std::to_string(spec.p()) + " leaves");
    require(lambda >= 0.0 && std::isfinite(lambda), ErrorCode::NegativeLambda, "lambda must be finite and >= 0");
    Vector work = spec.tree->to_permuted(eta);
    prox_permuted_inplace(spec, lambda, work);
    return spec.tree->from_permuted(work);
}

/// True when beta is constant within every root's leaf set (the penalty's kernel).
inline bool in_kernel_permuted(const PenaltySpec& spec, const Vector& beta_perm, double tol = 0.0) {
    for (int r : spec.tree->roots())
        if (group_spread(beta_perm, spec.tree->range(r)) > tol) return false;
    return true;
}

}  // namespace equisparse
