#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "equisparse/error.hpp"
#include "equisparse/penalty.hpp"
#include "equisparse/tree.hpp"

namespace equisparse {

/// Grouping of p features; labels are canonical (first appearance order).
struct Partition {
    std::vector<int> labels;
    int n_groups = 0;
    std::optional<AggregatingSet> source;

    int p() const { return static_cast<int>(labels.size()); }

    std::vector<std::vector<int>> groups() const {
        std::vector<std::vector<int>> out(n_groups);
        for (int j = 0; j < p(); ++j) out[labels[j]].push_back(j);
        return out;
    }

    /// Relabels arbitrary integer labels onto [0, G) by first appearance.
    template <class Label>
    static Partition from_labels(const std::vector<Label>& raw) {
        Partition out;
        out.labels.resize(raw.size());
        std::map<Label, int> ids;
        for (size_t j = 0; j < raw.size(); ++j) {
            auto [it, inserted] = ids.emplace(raw[j], static_cast<int>(ids.size()));
            out.labels[j] = it->second;
        }
        out.n_groups = static_cast<int>(ids.size());
        return out;
    }

    static Partition from_aggregating_set(const AggregatingSet& set, int p) {
        std::vector<int> raw(p, -1);
        for (size_t g = 0; g < set.groups.size(); ++g)
            for (int j : set.groups[g]) raw[j] = static_cast<int>(g);
        Partition out = from_labels(raw);
        out.source = set;
        return out;
    }

    static Partition singletons(int p) {
        std::vector<int> raw(p);
        for (int j = 0; j < p; ++j) raw[j] = j;
        return from_labels(raw);
    }
};

/**
 * Partition implied by fitted coefficients: an internal node counts as merged
 * when its centered group norm is at most tol_rel * (1 + ||beta||_2).
 */
inline Partition extract_partition(const Vector& beta, const Tree& tree, double tol_rel = 1e-8) {
    require(beta.size() == tree.n_leaves(), ErrorCode::DimensionMismatch,
            "beta has length " + std::to_string(beta.size()) + ", tree has " + std::to_string(tree.n_leaves()) +
                " leaves");
    require(tol_rel > 0.0, ErrorCode::InvalidArgument, "tol_rel must be positive");
    const Vector perm = tree.to_permuted(beta);
    const double tol = tol_rel * (1.0 + beta.norm());
    std::vector<bool> merged(tree.n_nodes(), false);
    for (int v : tree.internal_nodes()) merged[v] = group_spread(perm, tree.range(v)) <= tol;
    return Partition::from_aggregating_set(coarsest_aggregating_set(tree, merged), tree.n_leaves());
}

/// Adjusted Rand index from the pair-counting contingency table.
inline double adjusted_rand_index(const Partition& a, const Partition& b) {
    require(a.p() == b.p(), ErrorCode::DimensionMismatch, "partitions cover different feature counts");
    const int n = a.p();
    if (n < 2) return 1.0;
    auto choose2 = [](double m) { return m * (m - 1.0) / 2.0; };

    std::map<std::pair<int, int>, std::int64_t> table;
    std::vector<std::int64_t> rows(a.n_groups, 0), cols(b.n_groups, 0);
    for (int j = 0; j < n; ++j) {
        ++table[{a.labels[j], b.labels[j]}];
        ++rows[a.labels[j]];
        ++cols[b.labels[j]];
    }
    double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [key, count] : table) sum_cells += choose2(static_cast<double>(count));
    for (auto r : rows) sum_rows += choose2(static_cast<double>(r));
    for (auto c : cols) sum_cols += choose2(static_cast<double>(c));
    const double total = choose2(static_cast<double>(n));
    const double expected = sum_rows * sum_cols / total;
    const double max_index = 0.5 * (sum_rows + sum_cols);
    // Both partitions trivial (all singletons or one block): agreement is perfect iff equal.
    if (max_index == expected) return sum_rows == sum_cols && sum_cells == sum_rows ? 1.0 : 0.0;
    return (sum_cells - expected) / (max_index - expected);
}

}  // namespace equisparse
