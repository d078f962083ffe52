#include <gtest/gtest.h>

#include "equisparse/baselines.hpp"
#include "equisparse/rng.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace equisparse;

namespace {

Dataset gaussian_data(int n, int p, std::uint64_t seed, double noise = 0.3) {
    CounterRng rng(seed, 1);
    Dataset d;
    d.X.resize(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) d.X(i, j) = rng.normal();
    Vector b(p);
    for (int j = 0; j < p; ++j) b(j) = rng.normal();
    d.y = d.X * b;
    for (int i = 0; i < n; ++i) d.y(i) += noise * rng.normal();
    return d;
}

}  // namespace

TEST(Expansion, Fig1aLeafOneRow) {
    auto t = fixtures::fig1a();
    auto E = expansion_matrix(t);
    std::vector<int> ones;
    for (int v = 0; v < t->n_nodes(); ++v)
        if (E.A(0, v) == 1.0) ones.push_back(v);
    std::vector<int> want = {t->index_of("b11"), t->index_of("b9"), t->index_of("b1")};
    std::sort(want.begin(), want.end());
    EXPECT_EQ(ones, want);
    EXPECT_FALSE(E.penalized[t->index_of("b11")]);
    EXPECT_TRUE(E.penalized[t->index_of("b9")]);
}

TEST(Expansion, SingleNodeAndForest) {
    auto single = std::make_shared<const Tree>(parse_tree("r\t-\t0\n", 1));
    auto E1 = expansion_matrix(single);
    EXPECT_EQ(E1.A, Matrix::Ones(1, 1));
    EXPECT_FALSE(E1.penalized[0]);

    auto forest = std::make_shared<const Tree>(parse_tree("r1\t-\t-\na\tr1\t0\nr2\t-\t-\nb\tr2\t1\n", 2));
    auto E2 = expansion_matrix(forest);
    Matrix want(2, 4);
    want << 1, 1, 0, 0, 0, 0, 1, 1;
    EXPECT_EQ(E2.A, want);
    EXPECT_EQ(std::count(E2.penalized.begin(), E2.penalized.end(), false), 2);
}

TEST(Expansion, RootOnlyGammaIsInKernel) {
    auto t = fixtures::fig1a();
    auto E = expansion_matrix(t);
    PenaltySpec spec(t);
    Vector gamma = Vector::Zero(t->n_nodes());
    gamma(t->index_of("b11")) = 2.75;
    EXPECT_EQ(omega(spec, E.A * gamma), 0.0);
}

TEST(Rare, HugeLambdaGivesRootConstant) {
    Dataset d = gaussian_data(30, 7, 1);
    auto r = rare_fit(d, fixtures::fig1a(), 1e6, LossKind::Squared);
    for (int v = 0; v < r.gamma.size(); ++v)
        if (v != fixtures::fig1a()->index_of("b11")) EXPECT_EQ(r.gamma(v), 0.0);
    EXPECT_LE((r.fit.beta.array() - r.fit.beta(0)).abs().maxCoeff(), 1e-12);
    // equals aggregated least squares on the kernel group
    GroupMap H;
    H.K = 1;
    H.H = Matrix::Ones(7, 1);
    auto oracle_fit = oracle_aggregated_ls(d, H);
    EXPECT_LE((r.fit.beta - oracle_fit.beta).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(Rare, ZeroLambdaReproducesUnpenalizedFit) {
    Dataset d = gaussian_data(40, 7, 2);
    FistaOptions o;
    o.tol = 1e-14;
    o.max_iter = 200000;
    auto r = rare_fit(d, fixtures::fig1a(), 0.0, LossKind::Squared, std::nullopt, o);
    Vector ls = d.X.colPivHouseholderQr().solve(d.y);
    EXPECT_LE((r.fit.beta - ls).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(Rare, SupportForcesEqualCoefficients) {
    // gamma_b2 and gamma_b3 zero => beta_2 == beta_3 == gamma_b11 + gamma_b9 + gamma_b8.
    auto t = fixtures::fig1a();
    auto E = expansion_matrix(t);
    Vector gamma = Vector::Zero(t->n_nodes());
    gamma(t->index_of("b11")) = 1.0;
    gamma(t->index_of("b9")) = 0.5;
    gamma(t->index_of("b8")) = -2.0;
    gamma(t->index_of("b1")) = 0.25;
    gamma(t->index_of("b4")) = 1.0;
    CounterRng rng(3, 1);
    Dataset d;
    d.X.resize(200, 7);
    for (int i = 0; i < 200; ++i)
        for (int j = 0; j < 7; ++j) d.X(i, j) = rng.normal();
    d.y = d.X * (E.A * gamma);
    for (int i = 0; i < 200; ++i) d.y(i) += 0.01 * rng.normal();

    FistaOptions tight;
    tight.tol = 1e-15;
    tight.max_iter = 200000;
    auto r = rare_fit(d, t, 0.02, LossKind::Squared, std::nullopt, tight);
    EXPECT_EQ(r.gamma(t->index_of("b2")), 0.0);
    EXPECT_EQ(r.gamma(t->index_of("b3")), 0.0);
    EXPECT_DOUBLE_EQ(r.fit.beta(1), r.fit.beta(2));
    EXPECT_EQ(r.fit.partition->labels[1], r.fit.partition->labels[2]);

    // Same support from the independent coordinate-descent lasso on the penalized block,
    // with the root column profiled out.
    const Matrix Z = d.X * E.A;
    const int root = t->index_of("b11");
    const Vector zr = Z.col(root);
    Matrix Zp(200, t->n_nodes() - 1);
    for (int v = 0, k = 0; v < t->n_nodes(); ++v)
        if (v != root) Zp.col(k++) = Z.col(v) - zr * (zr.dot(Z.col(v)) / zr.squaredNorm());
    const Vector yp = d.y - zr * (zr.dot(d.y) / zr.squaredNorm());
    Vector cd = oracle::lasso_cd(Zp, yp, 0.02);
    for (int v = 0, k = 0; v < t->n_nodes(); ++v) {
        if (v == root) continue;
        EXPECT_EQ(cd(k) == 0.0, r.gamma(v) == 0.0) << t->id(v);
        EXPECT_NEAR(cd(k), r.gamma(v), 1e-6);
        ++k;
    }
}

TEST(Rare, PartitionFromSupport) {
    auto t = fixtures::fig1a();
    Vector gamma = Vector::Zero(t->n_nodes());
    gamma(t->index_of("b11")) = 1.0;
    gamma(t->index_of("b10")) = 1.0;
    auto part = rare_partition(*t, gamma);
    EXPECT_EQ(part.n_groups, 2);
    EXPECT_EQ(part.labels[3], part.labels[4]);
    EXPECT_NE(part.labels[0], part.labels[3]);
}

TEST(Lasso, AboveThresholdIsZero) {
    Dataset d = gaussian_data(20, 5, 4);
    const double thr = (d.X.transpose() * d.y).lpNorm<Eigen::Infinity>() / 20.0;
    auto f = lasso_fit(d, thr * 1.0001, LossKind::Squared);
    EXPECT_EQ(f.beta, Vector::Zero(5));
}

TEST(Lasso, MatchesCoordinateDescent) {
    Dataset d = gaussian_data(10, 5, 5);
    FistaOptions o;
    o.tol = 1e-15;
    o.max_iter = 100000;
    auto f = lasso_fit(d, 0.1, LossKind::Squared, o);
    Vector ref = oracle::lasso_cd(d.X, d.y, 0.1);
    EXPECT_LE((f.beta - ref).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(Ridge, ZeroLambdaIsOls) {
    Dataset d = gaussian_data(20, 4, 6);
    auto f = ridge_fit(d, 0.0, LossKind::Squared);
    Vector ols = (d.X.transpose() * d.X).ldlt().solve(d.X.transpose() * d.y);
    EXPECT_LE((f.beta - ols).lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(Ridge, StationarityBothLosses) {
    Dataset d = gaussian_data(30, 4, 7);
    const double lam = 0.3;
    auto sq = ridge_fit(d, lam, LossKind::Squared);
    Vector g = -d.X.transpose() * (d.y - d.X * sq.beta) / 30.0 + lam * sq.beta;
    EXPECT_LE(g.norm(), 1e-10);

    Dataset b = d;
    for (int i = 0; i < 30; ++i) b.y(i) = d.y(i) > 0 ? 1.0 : 0.0;
    auto lg = ridge_fit(b, lam, LossKind::Logistic);
    EXPECT_TRUE(lg.converged);
    const Vector grad = loss_and_grad(LossKind::Logistic, b.X, b.y, lg.beta).grad + lam * lg.beta;
    EXPECT_LE(grad.norm(), 1e-10);
}

TEST(OracleLs, IdentityAndSingleGroup) {
    Dataset d = gaussian_data(25, 4, 8);
    GroupMap I;
    I.K = 4;
    I.H = Matrix::Identity(4, 4);
    auto f = oracle_aggregated_ls(d, I);
    Vector ols = d.X.colPivHouseholderQr().solve(d.y);
    EXPECT_LE((f.beta - ols).lpNorm<Eigen::Infinity>(), 1e-10);

    GroupMap one;
    one.K = 1;
    one.H = Matrix::Ones(4, 1);
    auto g = oracle_aggregated_ls(d, one);
    const Vector s = d.X.rowwise().sum();
    EXPECT_NEAR(g.beta(0), s.dot(d.y) / s.squaredNorm(), 1e-12);
    EXPECT_EQ(g.partition->n_groups, 1);
}

TEST(OracleLs, RankDeficientGivesMinimumNorm) {
    Dataset d = gaussian_data(25, 3, 9);
    d.X.col(2) = d.X.col(1);
    GroupMap I;
    I.K = 3;
    I.H = Matrix::Identity(3, 3);
    auto f = oracle_aggregated_ls(d, I);
    EXPECT_TRUE(f.beta.allFinite());
    EXPECT_NEAR(f.beta(1), f.beta(2), 1e-10);
}
