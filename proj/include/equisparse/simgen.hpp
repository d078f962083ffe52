#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "equisparse/error.hpp"
#include "equisparse/loss.hpp"
#include "equisparse/partition.hpp"
#include "equisparse/rng.hpp"
#include "equisparse/tree.hpp"

namespace equisparse {

enum class Scenario { Exp1, Exp2, S1, S2, S3 };

inline const char* to_string(Scenario s) {
    switch (s) {
        case Scenario::Exp1: return "exp1";
        case Scenario::Exp2: return "exp2";
        case Scenario::S1: return "s1";
        case Scenario::S2: return "s2";
        case Scenario::S3: return "s3";
    }
    return "?";
}

inline Scenario parse_scenario(const std::string& s) {
    for (Scenario v : {Scenario::Exp1, Scenario::Exp2, Scenario::S1, Scenario::S2, Scenario::S3})
        if (s == to_string(v)) return v;
    fail(ErrorCode::UnknownVariant, "unknown scenario '" + s + "' (expected exp1, exp2, s1, s2 or s3)");
}

struct SimConfig {
    Scenario scenario = Scenario::Exp1;
    int n = 50;
    int p = 60;
    int K = 10;
    std::uint64_t seed = 1;
    double poisson_rate = 0.02;
    double snr_divisor = 5.0;
    /// Experiment-1 tree T0..T5.
    int tree_variant = 0;
    int n_valid = 50;
    int n_test = 500;

    LossKind loss() const { return scenario == Scenario::S3 ? LossKind::Logistic : LossKind::Squared; }
};

/// Published sizes for each scenario (first value of each sweep).
inline SimConfig default_config(Scenario s) {
    SimConfig c;
    c.scenario = s;
    switch (s) {
        case Scenario::Exp1: c.n = 50; c.p = 60; c.K = 10; c.n_test = 500; break;
        case Scenario::Exp2: c.n = 50; c.p = 60; c.K = 20; c.n_test = 500; break;
        case Scenario::S1: c.n = 50; c.p = 100; c.K = 10; c.n_test = 500; break;
        case Scenario::S2: c.n = 500; c.p = 400; c.K = 100; c.n_test = 5000; break;
        case Scenario::S3: c.n = 50; c.p = 400; c.K = 20; c.n_test = 500; break;
    }
    c.n_valid = c.n;
    return c;
}

struct GroundTruth {
    std::shared_ptr<const Tree> tree;
    Vector beta_star;
    Partition partition_star;
    AggregatingSet aggregating_set_star;
};

namespace sim_stream {
inline constexpr std::uint64_t effects = 0xE5;
inline constexpr std::uint64_t design = 0xD0;
inline constexpr std::uint64_t noise = 0x40;
inline constexpr std::uint64_t tree = 0x7E;
inline constexpr std::uint64_t exp1_deletions = 0xDE1;
}  // namespace sim_stream

/// K draws from Uniform(1.5, 2.5); entry k (zero-based) gets sign (-1)^k.
inline Vector gen_effects(int K, std::uint64_t seed) {
    require(K >= 1, ErrorCode::InvalidArgument, "K must be >= 1");
    CounterRng rng(seed, stream_id({sim_stream::effects}));
    Vector out(K);
    for (int k = 0; k < K; ++k) out(k) = (k % 2 == 0 ? 1.0 : -1.0) * rng.uniform(1.5, 2.5);
    return out;
}

/// n x p matrix of iid Poisson(rate) counts, filled row by row.
inline Matrix gen_design(int n, int p, double rate, std::uint64_t seed) {
    require(n >= 1 && p >= 1, ErrorCode::InvalidArgument, "design needs n, p >= 1");
    require(rate > 0.0 && std::isfinite(rate), ErrorCode::InvalidArgument, "Poisson rate must be positive");
    CounterRng rng(seed, stream_id({sim_stream::design}));
    Matrix X(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) X(i, j) = rng.poisson(rate);
    return X;
}

/// Noise scale sigma with sigma^2 = ||X beta||^2 / (snr_divisor * n).
inline double noise_sigma(const Matrix& X, const Vector& beta_star, double snr_divisor) {
    require(X.cols() == beta_star.size(), ErrorCode::DimensionMismatch, "beta_star length differs from p");
    require(snr_divisor > 0.0, ErrorCode::InvalidArgument, "snr_divisor must be positive");
    const double signal = (X * beta_star).squaredNorm();
    require(signal > 0.0, ErrorCode::ZeroSignal, "X beta_star is identically zero; noise level undefined");
    return std::sqrt(signal / (snr_divisor * static_cast<double>(X.rows())));
}

enum class ResponseKind { Gaussian, Bernoulli };

/// Gaussian response with a given noise scale, or Bernoulli with logistic probabilities.
inline Vector gen_response_with_sigma(const Matrix& X, const Vector& beta_star, ResponseKind kind, double sigma,
                                      std::uint64_t seed) {
    require(X.cols() == beta_star.size(), ErrorCode::DimensionMismatch, "beta_star length differs from p");
    CounterRng rng(seed, stream_id({sim_stream::noise}));
    const Vector mean = X * beta_star;
    Vector y(X.rows());
    for (Eigen::Index i = 0; i < y.size(); ++i)
        y(i) = kind == ResponseKind::Gaussian ? mean(i) + sigma * rng.normal()
                                              : (rng.bernoulli(sigmoid(mean(i))) ? 1.0 : 0.0);
    return y;
}

inline Vector gen_response(const Matrix& X, const Vector& beta_star, ResponseKind kind, double snr_divisor,
                           std::uint64_t seed) {
    const double sigma = kind == ResponseKind::Gaussian ? noise_sigma(X, beta_star, snr_divisor) : 0.0;
    return gen_response_with_sigma(X, beta_star, kind, sigma, seed);
}

namespace detail {

/// Accumulates NodeSpecs; each emit function returns the id of the node it created.
struct SpecBuilder {
    std::vector<NodeSpec> specs;
    int counter = 0;

    std::string internal(const std::string& id, const std::optional<std::string>& parent) {
        specs.push_back({id, parent, std::nullopt});
        return id;
    }
    std::string leaf(int col, const std::optional<std::string>& parent) {
        std::string id = "x" + std::to_string(col);
        specs.push_back({id, parent, col});
        return id;
    }
    std::string fresh(const std::string& prefix) { return prefix + std::to_string(counter++); }
};

using EmitItem = std::function<std::string(int item, const std::optional<std::string>& parent)>;

/// Balanced binary tree over items [lo, hi): left half gets floor(size/2) items.
inline std::string emit_balanced(SpecBuilder& b, int lo, int hi, const std::string& id,
                                 const std::optional<std::string>& parent, const std::string& prefix,
                                 const EmitItem& item) {
    if (hi - lo == 1) return item(lo, parent);
    b.internal(id, parent);
    const int mid = lo + (hi - lo) / 2;
    for (auto [a, c] : {std::pair{lo, mid}, std::pair{mid, hi}}) {
        const std::string child = c - a == 1 ? std::string() : b.fresh(prefix);
        emit_balanced(b, a, c, child, id, prefix, item);
    }
    return id;
}

/// Merge list of agglomerative clustering: cluster ids < m are items, m + k is merge k.
using Merges = std::vector<std::pair<int, int>>;

/// Average linkage (Lance-Williams update) on a symmetric distance matrix; ties go to the lowest pair.
inline Merges average_linkage(Matrix D) {
    const int m = static_cast<int>(D.rows());
    Merges merges;
    std::vector<int> id(m), size(m, 1);
    std::vector<bool> active(m, true);
    for (int i = 0; i < m; ++i) id[i] = i;
    for (int step = 0; step + 1 < m; ++step) {
        int bi = -1, bj = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
            if (!active[i]) continue;
            for (int j = i + 1; j < m; ++j)
                if (active[j] && D(i, j) < best) best = D(i, j), bi = i, bj = j;
        }
        merges.emplace_back(id[bi], id[bj]);
        for (int k = 0; k < m; ++k) {
            if (!active[k] || k == bi || k == bj) continue;
            const double d = (size[bi] * D(bi, k) + size[bj] * D(bj, k)) / (size[bi] + size[bj]);
            D(bi, k) = D(k, bi) = d;
        }
        size[bi] += size[bj];
        active[bj] = false;
        id[bi] = m + step;
    }
    return merges;
}

/// Emits a dendrogram; the top merge gets `top_id`, a single item is emitted directly.
inline std::string emit_dendrogram(SpecBuilder& b, const Merges& merges, int m, const std::string& top_id,
                                   const std::optional<std::string>& parent, const std::string& prefix,
                                   const EmitItem& item) {
    if (m == 1) return item(0, parent);
    std::function<void(int, const std::string&, const std::optional<std::string>&)> emit =
        [&](int cluster, const std::string& id, const std::optional<std::string>& par) {
            if (cluster < m) {
                item(cluster, par);
                return;
            }
            b.internal(id, par);
            const auto [l, r] = merges[cluster - m];
            for (int c : {l, r}) emit(c, c < m ? std::string() : b.fresh(prefix), id);
        };
    emit(2 * m - 2, top_id, parent);
    return top_id;
}

inline Matrix pairwise_distances(const Matrix& pts) {
    const Eigen::Index m = pts.rows();
    Matrix D = Matrix::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i + 1; j < m; ++j) D(i, j) = D(j, i) = (pts.row(i) - pts.row(j)).norm();
    return D;
}

inline Matrix normal_points(int m, CounterRng& rng) {
    Matrix pts(m, 2);
    for (int i = 0; i < m; ++i)
        for (int d = 0; d < 2; ++d) pts(i, d) = rng.normal();
    return pts;
}

/// Fills beta_star and the partition from the aggregating-set node ids (groups in listed order).
inline GroundTruth finish_truth(Tree tree, const std::vector<std::string>& set_ids, const Vector& effects) {
    GroundTruth gt;
    auto t = std::make_shared<const Tree>(std::move(tree));
    std::vector<int> nodes;
    for (const auto& id : set_ids) nodes.push_back(t->index_of(id));
    gt.aggregating_set_star = make_aggregating_set(*t, nodes);
    gt.partition_star = Partition::from_aggregating_set(gt.aggregating_set_star, t->n_leaves());
    gt.beta_star = Vector::Zero(t->n_leaves());
    for (size_t g = 0; g < gt.aggregating_set_star.groups.size(); ++g)
        for (int j : gt.aggregating_set_star.groups[g]) gt.beta_star(j) = effects(static_cast<Eigen::Index>(g));
    gt.tree = std::move(t);
    return gt;
}

}  // namespace detail

inline constexpr int exp1_variant_count = 6;

/// Number of internal nodes removed below / above the aggregating set in T0..T5.
inline std::pair<int, int> exp1_deletions(int variant) {
    static constexpr int below[] = {0, 10, 20, 30, 0, 0};
    static constexpr int above[] = {0, 0, 0, 0, 3, 6};
    require(variant >= 0 && variant < exp1_variant_count, ErrorCode::UnknownVariant,
            "Experiment-1 tree variant must be 0..5, got " + std::to_string(variant));
    return {below[variant], above[variant]};
}

/// Ids of the ten aggregating-set nodes of the Experiment-1 tree.
inline std::vector<std::string> exp1_set_ids() {
    std::vector<std::string> ids;
    for (int g = 0; g < 10; ++g) ids.push_back("g" + std::to_string(g));
    return ids;
}

/**
 * Experiment-1 tree: 60 leaves in ten groups (five of 9 columns, then five of
 * 3), each group a balanced binary subtree, the ten group nodes joined by a
 * balanced binary meta-tree. Variants delete a fixed random subset of nodes
 * below (T1-T3) or above (T4, T5) the groups; the subsets are nested.
 */
inline Tree gen_tree_exp1(int variant) {
    const auto [n_below, n_above] = exp1_deletions(variant);
    const std::vector<int> sizes = {9, 9, 9, 9, 9, 3, 3, 3, 3, 3};
    std::vector<int> start(sizes.size() + 1, 0);
    for (size_t g = 0; g < sizes.size(); ++g) start[g + 1] = start[g] + sizes[g];

    detail::SpecBuilder b;
    detail::emit_balanced(b, 0, 10, "root", std::nullopt, "m", [&](int g, const std::optional<std::string>& par) {
        const std::string gid = "g" + std::to_string(g);
        return detail::emit_balanced(b, start[g], start[g + 1], gid, par, gid + ".",
                                     [&](int col, const std::optional<std::string>& lp) { return b.leaf(col, lp); });
    });
    Tree t0(std::move(b.specs), start.back());
    if (variant == 0) return t0;

    std::vector<int> below, above;
    for (int v : t0.internal_nodes()) {
        const std::string& id = t0.id(v);
        if (id[0] == 'g' && id.find('.') != std::string::npos) below.push_back(v);
        if (id[0] == 'm') above.push_back(v);
    }
    CounterRng rng(0x5EED, stream_id({sim_stream::exp1_deletions}));
    rng.shuffle(below);
    rng.shuffle(above);
    std::vector<int> victims(below.begin(), below.begin() + n_below);
    victims.insert(victims.end(), above.begin(), above.begin() + n_above);
    return delete_internal_nodes(t0, victims);
}

inline GroundTruth exp1_truth(int variant, std::uint64_t seed) {
    return detail::finish_truth(gen_tree_exp1(variant), exp1_set_ids(), gen_effects(10, seed));
}

/**
 * Tree with K groups over p leaves built by average-linkage clustering of iid
 * N(0, I_2) points. Clustering runs inside each group first, then over the
 * groups, so every group is a subtree. The first K/2 groups hold 3p/(2K)
 * consecutive columns, the rest p/(2K).
 */
inline GroundTruth gen_tree_hclust(int p, int K, std::uint64_t seed) {
    require(K >= 2 && K % 2 == 0 && p % (2 * K) == 0, ErrorCode::IndivisibleSizes,
            "group sizes 3p/2K and p/2K must be integers (K even, 2K | p); got p=" + std::to_string(p) +
                ", K=" + std::to_string(K));
    const int big = 3 * p / (2 * K), small = p / (2 * K);
    std::vector<int> start(K + 1, 0);
    for (int g = 0; g < K; ++g) start[g + 1] = start[g] + (g < K / 2 ? big : small);

    CounterRng rng(seed, stream_id({sim_stream::tree}));
    const Matrix pts = detail::normal_points(p, rng);
    const Matrix D = detail::pairwise_distances(pts);

    Matrix Dg = Matrix::Zero(K, K);
    for (int a = 0; a < K; ++a)
        for (int c = a + 1; c < K; ++c) {
            Dg(a, c) = D.block(start[a], start[c], start[a + 1] - start[a], start[c + 1] - start[c]).mean();
            Dg(c, a) = Dg(a, c);
        }

    detail::SpecBuilder b;
    std::vector<std::string> set_ids(K);
    detail::emit_dendrogram(
        b, detail::average_linkage(Dg), K, "root", std::nullopt, "m",
        [&](int g, const std::optional<std::string>& par) {
            const int a = start[g], size = start[g + 1] - start[g];
            const std::string gid = "g" + std::to_string(g);
            set_ids[g] = detail::emit_dendrogram(
                b, detail::average_linkage(D.block(a, a, size, size)), size, gid, par, gid + ".",
                [&](int k, const std::optional<std::string>& lp) { return b.leaf(a + k, lp); });
            return set_ids[g];
        });
    return detail::finish_truth(Tree(std::move(b.specs), p), set_ids, gen_effects(K, seed));
}

/**
 * Experiment-2 tree: root -> 2 -> 4 nodes, each of the 4 holding 5 of the 20
 * aggregating-set nodes. Under every set node sits the same p_s-leaf
 * average-linkage subtree (fixed seed), so p = 20 p_s.
 */
inline Tree gen_tree_exp2(int p_s) {
    require(p_s >= 1, ErrorCode::InvalidArgument, "p_s must be >= 1");
    CounterRng rng(0xE2, stream_id({sim_stream::tree, static_cast<std::uint64_t>(p_s)}));
    const detail::Merges sub = detail::average_linkage(detail::pairwise_distances(detail::normal_points(p_s, rng)));

    detail::SpecBuilder b;
    b.internal("root", std::nullopt);
    for (int a = 0; a < 2; ++a) {
        const std::string aid = "a" + std::to_string(a);
        b.internal(aid, "root");
        for (int c = 0; c < 2; ++c) {
            const std::string cid = "b" + std::to_string(2 * a + c);
            b.internal(cid, aid);
            for (int k = 0; k < 5; ++k) {
                const int g = 5 * (2 * a + c) + k;
                const std::string gid = "g" + std::to_string(g);
                detail::emit_dendrogram(b, sub, p_s, gid, cid, gid + ".",
                                        [&](int leaf, const std::optional<std::string>& lp) {
                                            return b.leaf(g * p_s + leaf, lp);
                                        });
            }
        }
    }
    return Tree(std::move(b.specs), 20 * p_s);
}

inline std::vector<std::string> exp2_set_ids(int p_s) {
    std::vector<std::string> ids;
    for (int g = 0; g < 20; ++g) ids.push_back(p_s == 1 ? "x" + std::to_string(g) : "g" + std::to_string(g));
    return ids;
}

inline GroundTruth exp2_truth(int p_s, std::uint64_t seed) {
    return detail::finish_truth(gen_tree_exp2(p_s), exp2_set_ids(p_s), gen_effects(20, seed));
}

/// Checks the configuration against the scenario's structural constraints.
inline void validate_config(const SimConfig& c) {
    require(c.n >= 1 && c.n_valid >= 1 && c.n_test >= 1, ErrorCode::InvalidArgument, "sample sizes must be >= 1");
    require(c.K >= 1 && c.K <= c.p, ErrorCode::InvalidArgument, "need 1 <= K <= p");
    switch (c.scenario) {
        case Scenario::Exp1:
            require(c.p == 60 && c.K == 10, ErrorCode::InvalidArgument, "exp1 is fixed at p = 60, K = 10");
            exp1_deletions(c.tree_variant);
            break;
        case Scenario::Exp2:
            require(c.K == 20 && c.p % 20 == 0, ErrorCode::IndivisibleSizes, "exp2 needs K = 20 and p = 20 p_s");
            break;
        case Scenario::S1:
            require(c.p == 100 && c.n == 50, ErrorCode::InvalidArgument, "s1 is fixed at p = 100, n = 50");
            break;
        case Scenario::S2:
            require(4 * c.K == c.p, ErrorCode::InvalidArgument, "s2 needs K / p = 0.25");
            break;
        case Scenario::S3: break;
    }
}

/// Tree and coefficients for one replicate.
inline GroundTruth make_truth(const SimConfig& c, std::uint64_t rep_seed) {
    validate_config(c);
    switch (c.scenario) {
        case Scenario::Exp1: return exp1_truth(c.tree_variant, rep_seed);
        case Scenario::Exp2: return exp2_truth(c.p / 20, rep_seed);
        default: return gen_tree_hclust(c.p, c.K, rep_seed);
    }
}

struct SimData {
    GroundTruth truth;
    Dataset train, valid, test;
    double sigma = 0.0;  // zero for binary responses
};

/// Seed of replicate `rep` under a base seed.
inline std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t rep) { return stream_id({base, rep}); }

/**
 * Train / validation / test draws for one replicate. The noise scale is set
 * from the training design and reused for the other splits.
 */
inline SimData simulate(const SimConfig& c, std::uint64_t rep_seed) {
    SimData d;
    d.truth = make_truth(c, rep_seed);
    const ResponseKind kind = c.loss() == LossKind::Logistic ? ResponseKind::Bernoulli : ResponseKind::Gaussian;
    std::vector<std::string> names;
    for (int j = 0; j < c.p; ++j) names.push_back("x" + std::to_string(j));

    const int sizes[3] = {c.n, c.n_valid, c.n_test};
    Dataset* out[3] = {&d.train, &d.valid, &d.test};
    for (int s = 0; s < 3; ++s) {
        const std::uint64_t split_seed = stream_id({rep_seed, static_cast<std::uint64_t>(s)});
        out[s]->X = gen_design(sizes[s], c.p, c.poisson_rate, split_seed);
        out[s]->feature_names = names;
        if (s == 0 && kind == ResponseKind::Gaussian)
            d.sigma = noise_sigma(out[s]->X, d.truth.beta_star, c.snr_divisor);
        out[s]->y = gen_response_with_sigma(out[s]->X, d.truth.beta_star, kind, d.sigma, split_seed);
    }
    return d;
}

}  // namespace equisparse
