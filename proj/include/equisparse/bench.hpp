#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "equisparse/baselines.hpp"
#include "equisparse/io.hpp"
#include "equisparse/parallel.hpp"
#include "equisparse/simgen.hpp"
#include "equisparse/tuning.hpp"

namespace equisparse {

struct BenchConfig {
    Scenario scenario = Scenario::Exp1;
    int reps = 50;
    std::uint64_t seed = 1;
    /// exp2: p values (multiples of 20); s2/s3: p values; s1: K values. Empty uses the defaults.
    std::vector<int> sweep;
    int threads = 1;
    GridOptions grid;
    FistaOptions fista;
};

inline std::vector<int> default_sweep(Scenario s) {
    switch (s) {
        case Scenario::Exp1: return {0, 1, 2, 3, 4, 5};
        case Scenario::Exp2: return {60, 100, 200, 400, 600, 800, 1000};
        case Scenario::S1: return {10, 50};
        case Scenario::S2: return {400, 600, 800, 1000};
        case Scenario::S3: return {200, 400, 600, 800, 1000};
    }
    return {};
}

struct BenchRow {
    std::string setting;
    std::string method;
    int rep = 0;
    double test_error = 0.0;
    double ari = 0.0;
    double selected_lambda = 0.0;
};

namespace detail {

inline BenchRow tree_method(const std::string& setting, int rep, const SimData& d, std::shared_ptr<const Tree> tree,
                            const Partition& truth, LossKind kind, const BenchConfig& cfg) {
    const PenaltySpec spec(std::move(tree));
    auto tr = tune_validation(d.train, d.valid, spec, kind, cfg.grid, cfg.fista);
    return {setting, "tree", rep, validation_loss(kind, d.test, tr.best_fit.beta),
            adjusted_rand_index(*tr.best_fit.partition, truth), tr.best_lambda};
}

inline BenchRow rare_method(const std::string& setting, int rep, const SimData& d, std::shared_ptr<const Tree> tree,
                            const Partition& truth, LossKind kind, const BenchConfig& cfg) {
    RareProblem prob(d.train, std::move(tree), kind);
    const double lmax = cfg.grid.lambda_max ? *cfg.grid.lambda_max : prob.lambda_max();
    const auto lambdas = lambda_grid(lmax > 0.0 ? lmax : 1e-12, cfg.grid.n_lambda, cfg.grid.lambda_min_ratio);
    auto fits = prob.fit_grid(lambdas, cfg.fista);
    std::vector<double> crit;
    for (const auto& f : fits) crit.push_back(validation_loss(kind, d.valid, f.fit.beta));
    const int best = argmin_prefer_first(crit);
    const auto& f = fits[best].fit;
    return {setting, "rare", rep, validation_loss(kind, d.test, f.beta), adjusted_rand_index(*f.partition, truth),
            lambdas[best]};
}

/// Oracle least squares (ridge_grid empty) or validation-tuned oracle ridge on the true groups.
inline BenchRow oracle_method(const std::string& setting, int rep, const SimData& d, const Partition& truth,
                              bool ridge) {
    const GroupMap H = GroupMap::from_partition(truth);
    if (!ridge) {
        auto f = oracle_aggregated_ls(d.train, H);
        return {setting, "oracle-ls", rep, validation_loss(LossKind::Squared, d.test, f.beta), 1.0, 0.0};
    }
    const double L = lipschitz_bound(LossKind::Squared, d.train.X * H.H);
    const auto lambdas = lambda_grid(L > 0.0 ? 1e2 * L : 1.0, 50, 1e-6);
    std::vector<double> crit;
    std::vector<Vector> betas;
    for (double lam : lambdas) {
        betas.push_back(oracle_aggregated_ls(d.train, H, lam).beta);
        crit.push_back(validation_loss(LossKind::Squared, d.valid, betas.back()));
    }
    const int best = argmin_prefer_first(crit);
    return {setting, "oracle-ridge", rep, validation_loss(LossKind::Squared, d.test, betas[best]), 1.0,
            lambdas[best]};
}

inline SimConfig setting_config(Scenario s, int value) {
    SimConfig c = default_config(s);
    switch (s) {
        case Scenario::Exp1: c.tree_variant = value; break;
        case Scenario::Exp2:
        case Scenario::S3: c.p = value; break;
        case Scenario::S1: c.K = value; break;
        case Scenario::S2: c.p = value; c.K = value / 4; break;
    }
    validate_config(c);
    return c;
}

inline std::string setting_name(Scenario s, int value) {
    if (s == Scenario::Exp1) return "T" + std::to_string(value);
    return (s == Scenario::S1 ? "K" : "p") + std::to_string(value);
}

}  // namespace detail

/**
 * Replicated generate -> tune -> test runs. Experiment 1 shares one dataset
 * per replicate across the six trees; other scenarios draw fresh data per
 * setting. Rows come back ordered by (setting, rep, method).
 */
inline std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
    require(cfg.reps >= 1, ErrorCode::InvalidArgument, "reps must be >= 1");
    const auto sweep = cfg.sweep.empty() ? default_sweep(cfg.scenario) : cfg.sweep;
    std::vector<SimConfig> configs;
    for (int v : sweep) configs.push_back(detail::setting_config(cfg.scenario, v));

    const bool exp1 = cfg.scenario == Scenario::Exp1;
    std::vector<std::shared_ptr<const Tree>> exp1_trees;
    if (exp1)
        for (int v : sweep) exp1_trees.push_back(std::make_shared<const Tree>(gen_tree_exp1(v)));

    const size_t n_settings = exp1 ? 1 : configs.size();
    const size_t jobs = n_settings * static_cast<size_t>(cfg.reps);
    auto results = parallel_map(jobs, cfg.threads, [&](size_t job) {
        const size_t s = job / cfg.reps;
        const int rep = static_cast<int>(job % cfg.reps);
        std::vector<BenchRow> rows;
        if (exp1) {
            const SimData d = simulate(configs.front(), replicate_seed(cfg.seed, rep));
            const Partition& truth = d.truth.partition_star;
            for (size_t v = 0; v < configs.size(); ++v) {
                const std::string name = detail::setting_name(cfg.scenario, sweep[v]);
                rows.push_back(detail::tree_method(name, rep, d, exp1_trees[v], truth, LossKind::Squared, cfg));
                rows.push_back(detail::rare_method(name, rep, d, exp1_trees[v], truth, LossKind::Squared, cfg));
                rows.push_back(detail::oracle_method(name, rep, d, truth, false));
                rows.push_back(detail::oracle_method(name, rep, d, truth, true));
            }
            return rows;
        }
        const SimConfig& c = configs[s];
        const std::string name = detail::setting_name(cfg.scenario, sweep[s]);
        const SimData d = simulate(c, replicate_seed(stream_id({cfg.seed, static_cast<std::uint64_t>(sweep[s])}), rep));
        const Partition& truth = d.truth.partition_star;
        rows.push_back(detail::tree_method(name, rep, d, d.truth.tree, truth, c.loss(), cfg));
        rows.push_back(detail::rare_method(name, rep, d, d.truth.tree, truth, c.loss(), cfg));
        if (cfg.scenario == Scenario::Exp2) {
            BenchRow ratio = rows[0];
            ratio.method = "ratio";
            ratio.test_error = rows[0].test_error / rows[1].test_error;
            ratio.ari = std::numeric_limits<double>::quiet_NaN();
            ratio.selected_lambda = std::numeric_limits<double>::quiet_NaN();
            rows.push_back(ratio);
        }
        return rows;
    });

    std::vector<BenchRow> rows;
    if (exp1) {
        // Reorder from (rep, setting) to (setting, rep).
        for (size_t v = 0; v < configs.size(); ++v)
            for (const auto& rep_rows : results)
                for (size_t k = 4 * v; k < 4 * v + 4; ++k) rows.push_back(rep_rows[k]);
    } else {
        for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
    }
    return rows;
}

struct SummaryRow {
    std::string setting, method;
    std::string metric;
    int count = 0;
    double mean = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0;
};

/// Linear-interpolation quantile of sorted data (type 7).
inline double quantile_sorted(const std::vector<double>& v, double q) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double pos = q * static_cast<double>(v.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline std::vector<SummaryRow> summarize(const std::vector<BenchRow>& rows) {
    std::vector<std::pair<std::string, std::string>> keys;
    std::map<std::pair<std::string, std::string>, std::vector<const BenchRow*>> by;
    for (const auto& r : rows) {
        auto key = std::make_pair(r.setting, r.method);
        if (!by.count(key)) keys.push_back(key);
        by[key].push_back(&r);
    }
    std::vector<SummaryRow> out;
    for (const auto& key : keys) {
        for (const char* metric : {"test_error", "ari"}) {
            std::vector<double> v;
            for (const auto* r : by[key]) {
                const double x = std::string(metric) == "test_error" ? r->test_error : r->ari;
                if (std::isfinite(x)) v.push_back(x);
            }
            if (v.empty()) continue;
            std::sort(v.begin(), v.end());
            SummaryRow s{key.first, key.second, metric, static_cast<int>(v.size())};
            double sum = 0.0;
            for (double x : v) sum += x;
            s.mean = sum / static_cast<double>(v.size());
            s.q1 = quantile_sorted(v, 0.25);
            s.median = quantile_sorted(v, 0.5);
            s.q3 = quantile_sorted(v, 0.75);
            out.push_back(s);
        }
    }
    return out;
}

inline const SummaryRow* find_summary(const std::vector<SummaryRow>& s, const std::string& setting,
                                      const std::string& method, const std::string& metric) {
    for (const auto& r : s)
        if (r.setting == setting && r.method == method && r.metric == metric) return &r;
    return nullptr;
}

inline std::string format_bench_csv(const std::vector<BenchRow>& rows) {
    auto num = [](double x) { return std::isfinite(x) ? format_number(x) : std::string("NA"); };
    std::string out = "setting,method,rep,test_error,ari,selected_lambda\n";
    for (const auto& r : rows)
        out += r.setting + "," + r.method + "," + std::to_string(r.rep) + "," + num(r.test_error) + "," + num(r.ari) +
               "," + num(r.selected_lambda) + "\n";
    return out;
}

inline std::string format_summary_csv(const std::vector<SummaryRow>& rows) {
    std::string out = "setting,method,metric,count,mean,q1,median,q3\n";
    for (const auto& r : rows)
        out += r.setting + "," + r.method + "," + r.metric + "," + std::to_string(r.count) + "," +
               format_number(r.mean) + "," + format_number(r.q1) + "," + format_number(r.median) + "," +
               format_number(r.q3) + "\n";
    return out;
}

}  // namespace equisparse
