#include <gtest/gtest.h>

#include <set>

#include "equisparse/partition.hpp"
#include "equisparse/rng.hpp"
#include "equisparse/simgen.hpp"
#include "equisparse/tuning.hpp"
#include "fixtures.hpp"

using namespace equisparse;

namespace {

Partition labels(std::vector<int> v) { return Partition::from_labels(v); }

/// ARI by enumerating all pairs.
double brute_force_ari(const Partition& a, const Partition& b) {
    const int n = a.p();
    double both = 0, only_a = 0, only_b = 0, pairs = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const bool sa = a.labels[i] == a.labels[j], sb = b.labels[i] == b.labels[j];
            both += sa && sb;
            only_a += sa;
            only_b += sb;
            ++pairs;
        }
    const double expected = only_a * only_b / pairs;
    return (both - expected) / (0.5 * (only_a + only_b) - expected);
}

Dataset noiseless_fig1a(int n, std::uint64_t seed) {
    CounterRng rng(seed, 1);
    Dataset d;
    d.X.resize(n, 7);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < 7; ++j) d.X(i, j) = rng.normal();
    Vector b(7);
    b << 1.0, -2.0, -2.0, 3.0, 3.0, 0.5, -1.5;
    d.y = d.X * b;
    return d;
}

}  // namespace

TEST(ExtractPartition, Fig1aPattern) {
    auto t = fixtures::fig1a();
    Vector b(7);
    b << 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 5.0;
    auto part = extract_partition(b, *t);
    EXPECT_EQ(part.n_groups, 5);
    auto g = part.groups();
    EXPECT_EQ((std::set<std::vector<int>>(g.begin(), g.end())),
              (std::set<std::vector<int>>{{0}, {1, 2}, {3, 4}, {5}, {6}}));
    ASSERT_TRUE(part.source.has_value());
    EXPECT_EQ(part.source->nodes.size(), 5u);
}

TEST(ExtractPartition, ConstantAndDistinct) {
    auto t = fixtures::fig1a();
    EXPECT_EQ(extract_partition(Vector::Constant(7, 2.5), *t).n_groups, 1);
    Vector d(7);
    d << 1, 2, 3, 4, 5, 6, 7;
    EXPECT_EQ(extract_partition(d, *t).n_groups, 7);
}

TEST(ExtractPartition, ToleranceIsRelative) {
    auto t = fixtures::fig1a();
    Vector b = Vector::Constant(7, 1e6);
    b(1) += 1e-4;  // tiny relative to ||b||
    EXPECT_EQ(extract_partition(b, *t).n_groups, 1);
    EXPECT_THROW(extract_partition(Vector::Zero(6), *t), Error);
}

TEST(ExtractPartition, HugeLambdaProxGivesKernelPartition) {
    CounterRng rng(1, 1);
    auto spec = fixtures::fig1a_spec();
    Vector eta(7);
    for (int j = 0; j < 7; ++j) eta(j) = rng.normal();
    EXPECT_EQ(extract_partition(prox(spec, 1e3, eta), *spec.tree).n_groups, 1);
}

TEST(Ari, IdentityPermutationAndKnownValue) {
    EXPECT_DOUBLE_EQ(adjusted_rand_index(labels({0, 0, 1, 1}), labels({0, 0, 1, 1})), 1.0);
    EXPECT_DOUBLE_EQ(adjusted_rand_index(labels({0, 0, 1, 1}), labels({1, 1, 0, 0})), 1.0);
    EXPECT_DOUBLE_EQ(adjusted_rand_index(labels({0, 0, 1, 1}), labels({0, 1, 0, 1})), -0.5);
    EXPECT_DOUBLE_EQ(brute_force_ari(labels({0, 0, 1, 1}), labels({0, 1, 0, 1})), -0.5);
    EXPECT_THROW(adjusted_rand_index(labels({0, 1}), labels({0, 1, 2})), Error);
}

TEST(Ari, MatchesBruteForceAndIsSymmetric) {
    CounterRng rng(2, 1);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 3 + static_cast<int>(rng.below(20));
        std::vector<int> a(n), b(n);
        for (int i = 0; i < n; ++i) {
            a[i] = static_cast<int>(rng.below(4));
            b[i] = static_cast<int>(rng.below(3));
        }
        const auto pa = labels(a), pb = labels(b);
        const double ari = adjusted_rand_index(pa, pb);
        EXPECT_NEAR(ari, adjusted_rand_index(pb, pa), 1e-14);
        const double ref = brute_force_ari(pa, pb);
        if (std::isfinite(ref)) EXPECT_NEAR(ari, ref, 1e-12);
        EXPECT_LE(ari, 1.0 + 1e-14);
    }
}

TEST(Ari, DegeneratePartitions) {
    EXPECT_EQ(adjusted_rand_index(Partition::singletons(5), Partition::singletons(5)), 1.0);
    EXPECT_EQ(adjusted_rand_index(labels({0, 0, 0}), labels({0, 0, 0})), 1.0);
    EXPECT_EQ(adjusted_rand_index(labels({0, 0, 0}), Partition::singletons(3)), 0.0);
}

TEST(TuneValidation, NoiselessPicksSmallestLambda) {
    Dataset d = noiseless_fig1a(40, 3);
    GridOptions g;
    g.n_lambda = 10;
    auto rep = tune_validation(d, d, fixtures::fig1a_spec(), LossKind::Squared, g);
    EXPECT_EQ(rep.best_index, 9);
    EXPECT_DOUBLE_EQ(rep.best_lambda, rep.lambdas.back());
    EXPECT_EQ(rep.criterion.size(), 10u);
}

TEST(TuneValidation, SingleLambdaGrid) {
    Dataset d = noiseless_fig1a(20, 4);
    auto rep = tune_validation_on_grid(d, d, fixtures::fig1a_spec(), LossKind::Squared, {0.123});
    EXPECT_DOUBLE_EQ(rep.best_lambda, 0.123);
}

TEST(TuneValidation, TiesGoToLargerLambda) {
    EXPECT_EQ(argmin_prefer_first({3.0, 1.0, 1.0, 2.0}), 1);
    EXPECT_EQ(argmin_prefer_first({1.0, 1.0}), 0);
}

TEST(KFold, FoldsAreDeterministicAndBalanced) {
    auto a = make_folds(23, 5, 42), b = make_folds(23, 5, 42);
    EXPECT_EQ(a, b);
    std::vector<int> count(5, 0);
    for (int f : a) ++count[f];
    for (int c : count) EXPECT_TRUE(c == 4 || c == 5);
    EXPECT_THROW(make_folds(3, 4, 1), Error);
    EXPECT_THROW(make_folds(3, 1, 1), Error);
}

TEST(KFold, LeaveOneOutRuns) {
    Dataset d = noiseless_fig1a(10, 5);
    for (int i = 0; i < 10; ++i) d.y(i) += 0.1 * std::sin(i);
    GridOptions g;
    g.n_lambda = 5;
    auto rep = kfold_cv(d, fixtures::fig1a_spec(), LossKind::Squared, 10, 7, g);
    for (double c : rep.criterion) EXPECT_TRUE(std::isfinite(c));
}

TEST(KFold, SameSeedSameReportAndThreadInvariant) {
    auto sim = simulate(default_config(Scenario::Exp1), 11);
    PenaltySpec spec(sim.truth.tree);
    GridOptions g;
    g.n_lambda = 8;
    auto a = kfold_cv(sim.train, spec, LossKind::Squared, 5, 3, g, {}, 1);
    auto b = kfold_cv(sim.train, spec, LossKind::Squared, 5, 3, g, {}, 3);
    EXPECT_EQ(a.folds, b.folds);
    EXPECT_EQ(a.criterion, b.criterion);
    EXPECT_EQ(a.best_fit.beta, b.best_fit.beta);
}

TEST(KFold, RowOrderInvariantGivenFolds) {
    auto sim = simulate(default_config(Scenario::Exp1), 12);
    PenaltySpec spec(sim.truth.tree);
    GridOptions g;
    g.n_lambda = 6;
    const auto folds = make_folds(sim.train.n(), 5, 9);
    auto a = kfold_cv_with_folds(sim.train, spec, LossKind::Squared, folds, 5, g);

    std::vector<int> order(sim.train.n());
    for (int i = 0; i < sim.train.n(); ++i) order[i] = sim.train.n() - 1 - i;
    Dataset rev = sim.train.rows(order);
    std::vector<int> rev_folds(folds.rbegin(), folds.rend());
    auto b = kfold_cv_with_folds(rev, spec, LossKind::Squared, rev_folds, 5, g);
    ASSERT_EQ(a.criterion.size(), b.criterion.size());
    for (size_t i = 0; i < a.criterion.size(); ++i) EXPECT_NEAR(a.criterion[i], b.criterion[i], 1e-8);
}
