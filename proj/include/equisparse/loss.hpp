#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "equisparse/error.hpp"
#include "equisparse/penalty.hpp"

namespace equisparse {

enum class LossKind { Squared, Logistic };

inline const char* to_string(LossKind k) { return k == LossKind::Squared ? "squared" : "logistic"; }

inline LossKind parse_loss_kind(const std::string& s) {
    if (s == "squared") return LossKind::Squared;
    if (s == "logistic") return LossKind::Logistic;
    fail(ErrorCode::InvalidArgument, "unknown loss '" + s + "' (expected squared or logistic)");
}

/// Dense design (rows are observations) and response. No intercept.
struct Dataset {
    Matrix X;
    Vector y;
    std::vector<std::string> feature_names;
    /// Optional fixed linear-predictor offset (logistic log-odds shift).
    std::optional<Vector> offset;

    int n() const { return static_cast<int>(X.rows()); }
    int p() const { return static_cast<int>(X.cols()); }

    Dataset rows(const std::vector<int>& idx) const {
        Dataset out;
        out.X.resize(static_cast<Eigen::Index>(idx.size()), X.cols());
        out.y.resize(static_cast<Eigen::Index>(idx.size()));
        if (offset) out.offset = Vector(static_cast<Eigen::Index>(idx.size()));
        for (size_t i = 0; i < idx.size(); ++i) {
            out.X.row(i) = X.row(idx[i]);
            out.y(i) = y(idx[i]);
            if (offset) (*out.offset)(i) = (*offset)(idx[i]);
        }
        out.feature_names = feature_names;
        return out;
    }
};

inline bool is_binary(const Vector& y) {
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (y(i) != 0.0 && y(i) != 1.0) return false;
    return true;
}

inline void validate(const Dataset& d, LossKind kind) {
    require(d.n() >= 1 && d.p() >= 1, ErrorCode::DimensionMismatch, "dataset must have n >= 1 and p >= 1");
    require(d.y.size() == d.n(), ErrorCode::DimensionMismatch,
            "y has " + std::to_string(d.y.size()) + " rows, X has " + std::to_string(d.n()));
    require(d.X.allFinite() && d.y.allFinite(), ErrorCode::NonFiniteValue, "dataset contains NaN or Inf");
    if (d.offset) {
        require(d.offset->size() == d.n(), ErrorCode::DimensionMismatch, "offset length differs from n");
        require(d.offset->allFinite(), ErrorCode::NonFiniteValue, "offset contains NaN or Inf");
    }
    if (!d.feature_names.empty())
        require(static_cast<int>(d.feature_names.size()) == d.p(), ErrorCode::DimensionMismatch,
                "feature name count differs from p");
    if (kind == LossKind::Logistic)
        require(is_binary(d.y), ErrorCode::NonBinaryResponse, "logistic loss needs y in {0,1}");
}

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct LossGrad {
    double value = 0.0;
    Vector grad;
};

/// Loss value from a precomputed linear predictor eta = offset + X beta.
inline double loss_from_linear(LossKind kind, const Vector& y, const Vector& eta) {
    const double n = static_cast<double>(y.size());
    if (kind == LossKind::Squared) return 0.5 * (y - eta).squaredNorm() / n;
    double s = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) s += softplus(eta(i)) - y(i) * eta(i);
    return s / n;
}

/// d loss / d eta (per observation, already divided by n).
inline Vector residual_from_linear(LossKind kind, const Vector& y, const Vector& eta) {
    const double n = static_cast<double>(y.size());
    if (kind == LossKind::Squared) return (eta - y) / n;
    Vector r(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) r(i) = (sigmoid(eta(i)) - y(i)) / n;
    return r;
}

/**
 * Squared: (1/2n)||y - X b||^2, gradient -(1/n) X^T (y - X b).
 * Logistic: (1/n) sum log(1+exp(x_i^T b)) - y_i x_i^T b, gradient (1/n) X^T (sigmoid(X b) - y).
 */
inline LossGrad loss_and_grad(LossKind kind, const Matrix& X, const Vector& y, const Vector& beta,
                              const std::optional<Vector>& offset = std::nullopt) {
    require(X.rows() == y.size() && X.cols() == beta.size(), ErrorCode::DimensionMismatch,
            "loss_and_grad: shapes of X, y, beta disagree");
    if (kind == LossKind::Logistic)
        require(is_binary(y), ErrorCode::NonBinaryResponse, "logistic loss needs y in {0,1}");
    Vector eta = X * beta;
    if (offset) eta += *offset;
    LossGrad out;
    out.value = loss_from_linear(kind, y, eta);
    out.grad = X.transpose() * residual_from_linear(kind, y, eta);
    return out;
}

/// Largest squared singular value of X by power iteration on X^T X.
inline double max_singular_value_sq(const Matrix& X, double tol = 1e-8, int max_iter = 500) {
    const Eigen::Index p = X.cols();
    require(X.rows() > 0 && p > 0, ErrorCode::DimensionMismatch, "empty design matrix");
    require(X.allFinite(), ErrorCode::PowerIterationDiverged, "design contains non-finite values");
    Vector v(p);
    for (Eigen::Index j = 0; j < p; ++j) v(j) = 1.0 + 0.5 * std::sin(static_cast<double>(j + 1));
    v.normalize();
    double est = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Vector w = X.transpose() * (X * v);
        const double next = v.dot(w);
        const double norm = w.norm();
        require(std::isfinite(norm) && std::isfinite(next), ErrorCode::PowerIterationDiverged,
                "power iteration produced non-finite values");
        if (norm == 0.0) return 0.0;
        v = w / norm;
        if (it > 0 && std::abs(next - est) <= tol * std::abs(next)) return std::max(next, norm);
        est = next;
    }
    // Slow spectral gap: settle it exactly on the smaller Gram matrix.
    Matrix G = X.rows() < p ? Matrix(X * X.transpose()) : Matrix(X.transpose() * X);
    Eigen::SelfAdjointEigenSolver<Matrix> es(G, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

/// Lipschitz constant of the loss gradient: sigma_max(X)^2 / n, quartered for logistic.
inline double lipschitz_bound(LossKind kind, const Matrix& X) {
    const double s2 = max_singular_value_sq(X);
    const double n = static_cast<double>(X.rows());
    return kind == LossKind::Squared ? s2 / n : s2 / (4.0 * n);
}

}  // namespace equisparse
