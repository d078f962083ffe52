#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "equisparse/parallel.hpp"
#include "equisparse/partition.hpp"
#include "equisparse/path.hpp"
#include "equisparse/rng.hpp"

namespace equisparse {

struct TuneReport {
    std::vector<double> lambdas;
    std::vector<double> criterion;
    double best_lambda = 0.0;
    int best_index = 0;
    FitResult best_fit;
    /// Fold id per row (K-fold CV only).
    std::vector<int> folds;
};

/// Mean squared error (squared loss) or mean cross-entropy (logistic) of beta on data.
inline double validation_loss(LossKind kind, const Dataset& data, const Vector& beta) {
    Vector eta = data.X * beta;
    if (data.offset) eta += *data.offset;
    if (kind == LossKind::Squared) return (data.y - eta).squaredNorm() / static_cast<double>(data.n());
    return loss_from_linear(LossKind::Logistic, data.y, eta);
}

/// Index of the minimum; exact ties go to the earliest entry (largest lambda).
inline int argmin_prefer_first(const std::vector<double>& values) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i)
        if (values[i] < values[best]) best = i;
    return best;
}

/// Warm-started fits along a grid, keeping every FitResult.
inline std::vector<FitResult> fit_grid(const TreeProblem& prob, const std::vector<double>& lambdas,
                                       FistaOptions opts = {}, int stop_after = -1) {
    std::vector<FitResult> fits;
    if (!opts.warm_start) opts.warm_start = kernel_fit(prob);
    const int count = stop_after >= 0 ? stop_after + 1 : static_cast<int>(lambdas.size());
    for (int i = 0; i < count; ++i) {
        fits.push_back(prob.fit(lambdas[i], opts));
        opts.warm_start = fits.back().beta;
    }
    return fits;
}

namespace detail {

inline TuneReport tune_on_validation(const TreeProblem& prob, const Dataset& valid, std::vector<double> lambdas,
                                     const FistaOptions& opts) {
    require(!lambdas.empty(), ErrorCode::InvalidArgument, "empty lambda grid");
    TuneReport rep;
    rep.lambdas = std::move(lambdas);
    auto fits = fit_grid(prob, rep.lambdas, opts);
    for (const auto& f : fits) rep.criterion.push_back(validation_loss(prob.kind(), valid, f.beta));
    rep.best_index = argmin_prefer_first(rep.criterion);
    rep.best_lambda = rep.lambdas[rep.best_index];
    rep.best_fit = std::move(fits[rep.best_index]);
    rep.best_fit.partition = extract_partition(rep.best_fit.beta, *prob.spec().tree);
    return rep;
}

}  // namespace detail

/// Fits the path on `train` and picks the lambda with the smallest loss on `valid`.
inline TuneReport tune_validation(const Dataset& train, const Dataset& valid, const PenaltySpec& spec, LossKind kind,
                                  const GridOptions& grid = {}, const FistaOptions& opts = {}) {
    require(train.p() == valid.p(), ErrorCode::DimensionMismatch, "train and validation widths differ");
    validate(valid, kind);
    TreeProblem prob(train, spec, kind);
    return detail::tune_on_validation(prob, valid, path_lambdas(prob, grid), opts);
}

/// Validation tuning on an explicit grid (a single lambda is allowed).
inline TuneReport tune_validation_on_grid(const Dataset& train, const Dataset& valid, const PenaltySpec& spec,
                                          LossKind kind, std::vector<double> lambdas, const FistaOptions& opts = {}) {
    require(train.p() == valid.p(), ErrorCode::DimensionMismatch, "train and validation widths differ");
    validate(valid, kind);
    return detail::tune_on_validation(TreeProblem(train, spec, kind), valid, std::move(lambdas), opts);
}

/// Shuffled fold ids in [0, k), deterministic in seed.
inline std::vector<int> make_folds(int n, int k, std::uint64_t seed) {
    require(k >= 2 && k <= n, ErrorCode::FoldTooSmall,
            "need 2 <= k <= n, got k=" + std::to_string(k) + ", n=" + std::to_string(n));
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    CounterRng rng(seed, stream_id({0xF01D5ULL}));
    rng.shuffle(order);
    std::vector<int> folds(n);
    for (int pos = 0; pos < n; ++pos) folds[order[pos]] = pos % k;
    return folds;
}

/// K-fold CV with a caller-supplied fold assignment; the grid comes from the full data.
inline TuneReport kfold_cv_with_folds(const Dataset& data, const PenaltySpec& spec, LossKind kind,
                                      const std::vector<int>& folds, int k, const GridOptions& grid = {},
                                      const FistaOptions& opts = {}, int threads = 1) {
    require(static_cast<int>(folds.size()) == data.n(), ErrorCode::DimensionMismatch, "one fold id per row needed");
    std::vector<std::vector<int>> held(k), kept(k);
    for (int i = 0; i < data.n(); ++i) {
        require(folds[i] >= 0 && folds[i] < k, ErrorCode::InvalidArgument, "fold id out of range");
        for (int f = 0; f < k; ++f) (f == folds[i] ? held[f] : kept[f]).push_back(i);
    }
    for (int f = 0; f < k; ++f)
        require(!held[f].empty() && !kept[f].empty(), ErrorCode::FoldTooSmall,
                "fold " + std::to_string(f) + " is empty or leaves no training rows");

    TreeProblem full(data, spec, kind);
    TuneReport rep;
    rep.folds = folds;
    rep.lambdas = path_lambdas(full, grid);

    auto fold_losses = parallel_map(static_cast<size_t>(k), threads, [&](size_t f) {
        const Dataset train = data.rows(kept[f]);
        const Dataset test = data.rows(held[f]);
        TreeProblem prob(train, spec, kind);
        auto fits = fit_grid(prob, rep.lambdas, opts);
        std::vector<double> losses;
        for (const auto& fit : fits) losses.push_back(validation_loss(kind, test, fit.beta));
        return losses;
    });

    rep.criterion.assign(rep.lambdas.size(), 0.0);
    for (int f = 0; f < k; ++f)
        for (size_t i = 0; i < rep.lambdas.size(); ++i) rep.criterion[i] += fold_losses[f][i];
    for (auto& c : rep.criterion) c /= k;

    rep.best_index = argmin_prefer_first(rep.criterion);
    rep.best_lambda = rep.lambdas[rep.best_index];
    auto fits = fit_grid(full, rep.lambdas, opts, rep.best_index);
    rep.best_fit = std::move(fits.back());
    rep.best_fit.partition = extract_partition(rep.best_fit.beta, *spec.tree);
    return rep;
}

inline TuneReport kfold_cv(const Dataset& data, const PenaltySpec& spec, LossKind kind, int k, std::uint64_t seed,
                           const GridOptions& grid = {}, const FistaOptions& opts = {}, int threads = 1) {
    return kfold_cv_with_folds(data, spec, kind, make_folds(data.n(), k, seed), k, grid, opts, threads);
}

}  // namespace equisparse
