// Command-line front end: fit, path, cv, prox, simulate, bench, infer.

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "equisparse/equisparse.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using namespace equisparse;

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

Json vec_json(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

/// Collects inputs and outputs of one run and writes them plus the manifest.
class Run {
public:
    Run(std::string command, std::string out_dir) : command_(std::move(command)), out_(std::move(out_dir)) {
        start_ = std::chrono::steady_clock::now();
        config_ = Json::object();
    }

    Json& config() { return config_; }
    Json& extra() { return extra_; }

    std::string read_input(const std::string& path) {
        std::string text = read_file(path);
        inputs_[path] = sha256_hex(text);
        return text;
    }

    void write(const std::string& name, const std::string& content) {
        fs::create_directories(out_);
        write_file((fs::path(out_) / name).string(), content);
        outputs_.push_back(name);
    }

    void write_json(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }

    void finish() {
        Json m;
        m["command"] = command_;
        m["tool_version"] = kToolVersion;
        m["config"] = config_;
        Json in = Json::object();
        for (const auto& [path, digest] : inputs_) in[path] = "sha256:" + digest;
        m["inputs"] = in;
        m["outputs"] = outputs_;
        if (!extra_.is_null()) m["details"] = extra_;
        const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start_;
        m["wall_clock_seconds"] = wall.count();
        fs::create_directories(out_);
        write_file((fs::path(out_) / "manifest.json").string(), m.dump(2) + "\n");
    }

private:
    std::string command_, out_;
    Json config_, extra_;
    std::map<std::string, std::string> inputs_;
    std::vector<std::string> outputs_;
    std::chrono::steady_clock::time_point start_;
};

struct CommonOpts {
    std::string out = ".";
    std::optional<int> threads;
    std::uint64_t seed = 1;
    bool header = false;
};

struct DataOpts {
    std::string x, y, tree;
    std::string loss = "squared";
};

void add_common(CLI::App* sub, CommonOpts& c) {
    sub->add_option("--out", c.out, "Output directory")->capture_default_str();
    sub->add_option("--threads", c.threads, "Worker threads (fallback: EQUISPARSE_THREADS, then 1)");
    sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    sub->add_flag("--header", c.header, "Matrix CSV files carry a header row");
}

void add_data(CLI::App* sub, DataOpts& d, bool need_tree = true) {
    sub->add_option("--x", d.x, "Design matrix CSV")->required();
    sub->add_option("--y", d.y, "Response vector CSV")->required();
    auto* t = sub->add_option("--tree", d.tree, "Tree TSV (node_id, parent_id, leaf_col)");
    if (need_tree) t->required();
    sub->add_option("--loss", d.loss, "squared or logistic")->capture_default_str();
}

void echo_common(Run& run, const CommonOpts& c) {
    run.config()["out"] = c.out;
    run.config()["threads"] = resolve_threads(c.threads);
    run.config()["seed"] = c.seed;
    run.config()["header"] = c.header;
}

Dataset load_dataset(Run& run, const DataOpts& d, bool header) {
    Dataset data;
    auto xm = parse_matrix_csv(run.read_input(d.x), d.x, header);
    data.X = std::move(xm.values);
    data.y = parse_vector_csv(run.read_input(d.y), d.y);
    require(data.X.rows() == data.y.size(), ErrorCode::DimensionMismatch,
            d.x + " has " + std::to_string(data.X.rows()) + " rows but " + d.y + " has " +
                std::to_string(data.y.size()) + " values");
    if (header) {
        data.feature_names = xm.header;
    } else {
        for (Eigen::Index j = 0; j < data.X.cols(); ++j) data.feature_names.push_back("x" + std::to_string(j));
    }
    run.config()["x"] = d.x;
    run.config()["y"] = d.y;
    run.config()["loss"] = d.loss;
    return data;
}

std::shared_ptr<const Tree> load_tree(Run& run, const std::string& path, int p) {
    run.config()["tree"] = path;
    try {
        return std::make_shared<const Tree>(parse_tree(run.read_input(path), p));
    } catch (const Error& e) {
        // drop the "<Code>: " prefix so it is not repeated
        const std::string what = e.what();
        const auto cut = what.find(": ");
        throw Error(e.code(), path + ": " + (cut == std::string::npos ? what : what.substr(cut + 2)));
    }
}

/// Per-node weights from a two-column CSV `node_id,weight`; nodes not listed get `fallback`.
std::vector<double> load_node_weights(Run& run, const std::string& path, const Tree& tree,
                                      const std::vector<double>& fallback) {
    std::vector<double> w = fallback;
    for (const auto& rec : parse_csv(run.read_input(path), path)) {
        require(rec.fields.size() == 2, ErrorCode::MalformedLine,
                path + ":" + std::to_string(rec.line) + ": expected node_id,weight");
        const auto node = tree.find(rec.fields[0]);
        require(node.has_value(), ErrorCode::UnknownNode,
                path + ":" + std::to_string(rec.line) + ": unknown node '" + rec.fields[0] + "'");
        w[*node] = parse_number(rec.fields[1], path, rec.line, 2);
    }
    run.config()["weights"] = path;
    return w;
}

/// Two-column CSV `feature_name,group_id` with a header row.
std::string format_partition(const Partition& part, const std::vector<std::string>& names) {
    std::string out = "feature_name,group_id\n";
    for (int j = 0; j < part.p(); ++j) out += csv_escape(names[j]) + "," + std::to_string(part.labels[j]) + "\n";
    return out;
}

Partition parse_partition(Run& run, const std::string& path, const std::vector<std::string>& names) {
    auto recs = parse_csv(run.read_input(path), path);
    require(!recs.empty(), ErrorCode::EmptyInput, path + ": empty partition file");
    std::map<std::string, int> col;
    for (size_t j = 0; j < names.size(); ++j) col[names[j]] = static_cast<int>(j);
    std::vector<int> labels(names.size(), -1);
    for (size_t r = 1; r < recs.size(); ++r) {
        const auto& rec = recs[r];
        require(rec.fields.size() == 2, ErrorCode::MalformedLine,
                path + ":" + std::to_string(rec.line) + ": expected feature_name,group_id");
        auto it = col.find(rec.fields[0]);
        require(it != col.end(), ErrorCode::UnknownNode,
                path + ":" + std::to_string(rec.line) + ": unknown feature '" + rec.fields[0] + "'");
        labels[it->second] = static_cast<int>(parse_number(rec.fields[1], path, rec.line, 2));
    }
    for (size_t j = 0; j < labels.size(); ++j)
        require(labels[j] >= 0, ErrorCode::DimensionMismatch, path + ": feature '" + names[j] + "' has no group");
    run.config()["partition"] = path;
    return Partition::from_labels(labels);
}

Json fit_json(const FitResult& f, const std::string& method, const Tree* tree) {
    Json j;
    j["method"] = method;
    j["loss"] = to_string(f.loss_kind);
    j["lambda"] = f.lambda;
    j["beta"] = vec_json(f.beta);
    j["converged"] = f.converged;
    j["iterations"] = f.iterations;
    j["objective_trace"] = f.objective_trace;
    if (f.partition) {
        j["n_groups"] = f.partition->n_groups;
        if (tree && f.partition->source) {
            Json ids = Json::array();
            for (int v : f.partition->source->nodes) ids.push_back(tree->id(v));
            j["aggregating_set"] = ids;
        }
    }
    return j;
}

void fista_opts(CLI::App* sub, FistaOptions& o) {
    sub->add_option("--max-iter", o.max_iter, "FISTA iteration cap")->capture_default_str();
    sub->add_option("--tol", o.tol, "Relative objective-change tolerance")->capture_default_str();
}

void echo_fista(Run& run, const FistaOptions& o) {
    run.config()["max_iter"] = o.max_iter;
    run.config()["tol"] = o.tol;
}

void add_grid(CLI::App* sub, GridOptions& g) {
    sub->add_option("--n-lambda", g.n_lambda, "Grid size")->capture_default_str();
    sub->add_option("--lambda-min-ratio", g.lambda_min_ratio, "Smallest / largest lambda")->capture_default_str();
}

void echo_grid(Run& run, const GridOptions& g) {
    run.config()["n_lambda"] = g.n_lambda;
    run.config()["lambda_min_ratio"] = g.lambda_min_ratio;
}

// fit --------------------------------------------------------------------------

struct FitArgs {
    CommonOpts common;
    DataOpts data;
    double lambda = 0.0;
    std::string method = "tree";
    std::string weights, partition;
    FistaOptions fista;
};

void cmd_fit(const FitArgs& a) {
    Run run("fit", a.common.out);
    echo_common(run, a.common);
    Dataset data = load_dataset(run, a.data, a.common.header);
    const LossKind kind = parse_loss_kind(a.data.loss);
    run.config()["method"] = a.method;
    run.config()["lambda"] = a.lambda;
    echo_fista(run, a.fista);
    require(a.lambda >= 0.0, ErrorCode::NegativeLambda, "--lambda must be >= 0");

    std::shared_ptr<const Tree> tree;
    if (a.method == "tree" || a.method == "rare") {
        require(!a.data.tree.empty(), ErrorCode::InvalidArgument, "--method " + a.method + " needs --tree");
        tree = load_tree(run, a.data.tree, data.p());
    }

    FitResult f;
    if (a.method == "tree") {
        std::optional<std::vector<double>> w;
        if (!a.weights.empty()) w = load_node_weights(run, a.weights, *tree, default_weights(*tree));
        const PenaltySpec spec = w ? PenaltySpec(tree, *w) : PenaltySpec(tree);
        f = fista_fit(data, spec, kind, a.lambda, a.fista);
        f.partition = extract_partition(f.beta, *tree);
    } else if (a.method == "rare") {
        std::optional<std::vector<double>> w;
        if (!a.weights.empty())
            w = load_node_weights(run, a.weights, *tree, std::vector<double>(tree->n_nodes(), 1.0));
        auto r = rare_fit(data, tree, a.lambda, kind, w, a.fista);
        f = r.fit;
        std::string g = "node_id,gamma\n";
        for (int v = 0; v < tree->n_nodes(); ++v) g += csv_escape(tree->id(v)) + "," + format_number(r.gamma(v)) + "\n";
        run.write("gamma.csv", g);
    } else if (a.method == "lasso") {
        f = lasso_fit(data, a.lambda, kind, a.fista);
    } else if (a.method == "ridge") {
        f = ridge_fit(data, a.lambda, kind);
    } else if (a.method == "oracle") {
        require(!a.partition.empty(), ErrorCode::InvalidArgument, "--method oracle needs --partition");
        require(kind == LossKind::Squared, ErrorCode::InvalidArgument, "--method oracle supports squared loss only");
        const Partition part = parse_partition(run, a.partition, data.feature_names);
        f = oracle_aggregated_ls(data, GroupMap::from_partition(part),
                                 a.lambda > 0.0 ? std::optional<double>(a.lambda) : std::nullopt);
    } else {
        fail(ErrorCode::UnknownVariant, "unknown --method '" + a.method + "'");
    }

    run.write("beta.csv", format_vector_csv(f.beta));
    run.write("partition.csv", format_partition(*f.partition, data.feature_names));
    run.write_json("fit.json", fit_json(f, a.method, tree.get()));
    run.finish();
}

// path -------------------------------------------------------------------------

struct PathArgs {
    CommonOpts common;
    DataOpts data;
    std::string weights;
    GridOptions grid;
    FistaOptions fista;
};

PenaltySpec make_spec(Run& run, const std::shared_ptr<const Tree>& tree, const std::string& weights) {
    if (weights.empty()) return PenaltySpec(tree);
    return PenaltySpec(tree, load_node_weights(run, weights, *tree, default_weights(*tree)));
}

void cmd_path(const PathArgs& a) {
    Run run("path", a.common.out);
    echo_common(run, a.common);
    Dataset data = load_dataset(run, a.data, a.common.header);
    echo_grid(run, a.grid);
    echo_fista(run, a.fista);
    auto tree = load_tree(run, a.data.tree, data.p());
    const PenaltySpec spec = make_spec(run, tree, a.weights);
    auto path = solution_path(data, spec, parse_loss_kind(a.data.loss), a.grid, a.fista);

    Json j;
    j["lambdas"] = path.lambdas;
    Json betas = Json::array(), groups = Json::array();
    for (Eigen::Index k = 0; k < path.betas.rows(); ++k) {
        const Vector b = path.betas.row(k).transpose();
        betas.push_back(vec_json(b));
        groups.push_back(extract_partition(b, *tree).n_groups);
    }
    j["betas"] = betas;
    j["n_groups"] = groups;
    j["converged"] = path.converged;
    j["iterations"] = path.iterations;
    run.write_json("path.json", j);

    Matrix table(path.betas.rows(), path.betas.cols() + 1);
    for (Eigen::Index k = 0; k < path.betas.rows(); ++k) table(k, 0) = path.lambdas[k];
    table.rightCols(path.betas.cols()) = path.betas;
    std::vector<std::string> header;
    if (a.common.header) {
        header.push_back("lambda");
        header.insert(header.end(), data.feature_names.begin(), data.feature_names.end());
    }
    run.write("path.csv", format_matrix_csv(table, header));
    run.finish();
}

// cv ---------------------------------------------------------------------------

struct CvArgs {
    CommonOpts common;
    DataOpts data;
    std::string weights;
    int folds = 5;
    GridOptions grid;
    FistaOptions fista;
};

void cmd_cv(const CvArgs& a) {
    Run run("cv", a.common.out);
    echo_common(run, a.common);
    Dataset data = load_dataset(run, a.data, a.common.header);
    run.config()["folds"] = a.folds;
    echo_grid(run, a.grid);
    echo_fista(run, a.fista);
    auto tree = load_tree(run, a.data.tree, data.p());
    const PenaltySpec spec = make_spec(run, tree, a.weights);
    const LossKind kind = parse_loss_kind(a.data.loss);
    auto rep = kfold_cv(data, spec, kind, a.folds, a.common.seed, a.grid, a.fista, resolve_threads(a.common.threads));
    rep.best_fit.partition = extract_partition(rep.best_fit.beta, *tree);

    Json j;
    j["lambdas"] = rep.lambdas;
    j["cv_error"] = rep.criterion;
    j["best_index"] = rep.best_index;
    j["best_lambda"] = rep.best_lambda;
    j["fit"] = fit_json(rep.best_fit, "tree", tree.get());
    run.write_json("cv.json", j);
    run.write("beta.csv", format_vector_csv(rep.best_fit.beta));
    run.write("partition.csv", format_partition(*rep.best_fit.partition, data.feature_names));
    run.extra()["fold_assignment"] = rep.folds;
    run.finish();
}

// prox -------------------------------------------------------------------------

struct ProxArgs {
    CommonOpts common;
    std::string eta, tree, weights;
    double lambda = 0.0;
};

void cmd_prox(const ProxArgs& a) {
    Run run("prox", a.common.out);
    echo_common(run, a.common);
    const Vector eta = parse_vector_csv(run.read_input(a.eta), a.eta);
    run.config()["eta"] = a.eta;
    run.config()["lambda"] = a.lambda;
    auto tree = load_tree(run, a.tree, static_cast<int>(eta.size()));
    const PenaltySpec spec = make_spec(run, tree, a.weights);
    run.write("prox.csv", format_vector_csv(prox(spec, a.lambda, eta)));
    run.finish();
}

// simulate ---------------------------------------------------------------------

struct SimArgs {
    CommonOpts common;
    std::string scenario = "exp1";
    int rep = 0;
    std::optional<int> n, p, K, tree_variant, n_test;
};

void cmd_simulate(const SimArgs& a) {
    Run run("simulate", a.common.out);
    echo_common(run, a.common);
    SimConfig c = default_config(parse_scenario(a.scenario));
    if (a.n) c.n = c.n_valid = *a.n;
    if (a.p) c.p = *a.p;
    if (a.K) c.K = *a.K;
    if (a.tree_variant) c.tree_variant = *a.tree_variant;
    if (a.n_test) c.n_test = *a.n_test;
    const std::uint64_t rep_seed = replicate_seed(a.common.seed, static_cast<std::uint64_t>(a.rep));
    const SimData d = simulate(c, rep_seed);

    Json& cfg = run.config();
    cfg["scenario"] = to_string(c.scenario);
    cfg["rep"] = a.rep;
    cfg["replicate_seed"] = rep_seed;
    cfg["n"] = c.n;
    cfg["n_valid"] = c.n_valid;
    cfg["n_test"] = c.n_test;
    cfg["p"] = c.p;
    cfg["K"] = c.K;
    cfg["poisson_rate"] = c.poisson_rate;
    cfg["snr_divisor"] = c.snr_divisor;
    if (c.scenario == Scenario::Exp1) cfg["tree_variant"] = c.tree_variant;

    std::vector<std::string> header = a.common.header ? d.train.feature_names : std::vector<std::string>{};
    run.write("tree.tsv", format_tree(*d.truth.tree));
    const std::pair<const char*, const Dataset*> splits[] = {{"", &d.train}, {"_valid", &d.valid}, {"_test", &d.test}};
    for (const auto& [suffix, ds] : splits) {
        run.write(std::string("X") + suffix + ".csv", format_matrix_csv(ds->X, header));
        run.write(std::string("y") + suffix + ".csv", format_vector_csv(ds->y));
    }
    run.write("beta_star.csv", format_vector_csv(d.truth.beta_star));
    run.write("partition.csv", format_partition(d.truth.partition_star, d.train.feature_names));

    Json& det = run.extra();
    det["loss"] = to_string(c.loss());
    det["sigma"] = d.sigma;
    Json set = Json::array();
    for (int v : d.truth.aggregating_set_star.nodes) set.push_back(d.truth.tree->id(v));
    det["aggregating_set"] = set;
    if (c.scenario == Scenario::Exp2)
        det["meta_structure"] =
            "root -> a0, a1; a0 -> b0, b1; a1 -> b2, b3; b<k> -> g<5k>..g<5k+4>; each g<i> holds the same "
            "average-linkage subtree over p/20 leaves";
    if (c.scenario == Scenario::Exp1) {
        const auto [below, above] = exp1_deletions(c.tree_variant);
        det["deleted_below"] = below;
        det["deleted_above"] = above;
    }
    run.finish();
}

// bench ------------------------------------------------------------------------

struct BenchArgs {
    CommonOpts common;
    std::string scenario = "exp1";
    int reps = 50;
    std::vector<int> sweep;
    GridOptions grid;
    FistaOptions fista;
};

void cmd_bench(const BenchArgs& a) {
    Run run("bench", a.common.out);
    echo_common(run, a.common);
    BenchConfig cfg;
    cfg.scenario = parse_scenario(a.scenario);
    cfg.reps = a.reps;
    cfg.seed = a.common.seed;
    cfg.sweep = a.sweep.empty() ? default_sweep(cfg.scenario) : a.sweep;
    cfg.threads = resolve_threads(a.common.threads);
    cfg.grid = a.grid;
    cfg.fista = a.fista;
    run.config()["scenario"] = a.scenario;
    run.config()["reps"] = a.reps;
    run.config()["sweep"] = cfg.sweep;
    echo_grid(run, a.grid);
    echo_fista(run, a.fista);

    const auto rows = run_bench(cfg);
    run.write("bench.csv", format_bench_csv(rows));
    run.write("summary.csv", format_summary_csv(summarize(rows)));
    run.finish();
}

// infer ------------------------------------------------------------------------

struct InferArgs {
    CommonOpts common;
    DataOpts data;
    std::string weights, focal;
    double delta = 0.9;
    int folds = 5;
    bool selection_offsets = false;
    GridOptions grid;
    FistaOptions fista;
};

Json wald_json(const WaldResult& w) {
    Json j;
    j["estimate"] = w.estimate;
    j["se"] = w.se;
    j["z"] = w.degenerate ? Json(nullptr) : Json(w.z);
    j["p"] = w.degenerate ? Json(nullptr) : Json(w.p);
    return j;
}

void cmd_infer(const InferArgs& a) {
    Run run("infer", a.common.out);
    echo_common(run, a.common);
    DataOpts d = a.data;
    d.loss = "logistic";
    Dataset data = load_dataset(run, d, a.common.header);
    auto tree = load_tree(run, a.data.tree, data.p());
    const PenaltySpec spec = make_spec(run, tree, a.weights);

    InferOptions o;
    o.delta = a.delta;
    o.seed = a.common.seed;
    o.folds = a.folds;
    o.grid = a.grid;
    o.fista = a.fista;
    o.selection_offsets = a.selection_offsets;
    o.threads = resolve_threads(a.common.threads);
    if (!a.focal.empty()) {
        auto it = std::find(data.feature_names.begin(), data.feature_names.end(), a.focal);
        require(it != data.feature_names.end(), ErrorCode::UnknownNode, "unknown --focal feature '" + a.focal + "'");
        o.focal_feature = static_cast<int>(it - data.feature_names.begin());
    }
    run.config()["delta"] = a.delta;
    run.config()["folds"] = a.folds;
    run.config()["selection_offsets"] = a.selection_offsets;
    run.config()["focal"] = a.focal;
    echo_grid(run, a.grid);
    echo_fista(run, a.fista);

    const auto r = infer_pipeline(data, spec, o);

    Json j;
    j["selected_lambda"] = r.selected_lambda;
    Json groups = Json::array();
    for (const auto& g : r.partition.groups()) {
        Json names = Json::array();
        for (int col : g) names.push_back(data.feature_names[col]);
        groups.push_back(names);
    }
    j["selected_partition"] = groups;
    j["coefficients"] = vec_json(r.glm.coef);
    Json se = Json::array();
    for (const auto& w : r.marginal) se.push_back(w.se);
    j["se"] = se;
    Json marg = Json::array();
    for (const auto& w : r.marginal) marg.push_back(wald_json(w));
    j["wald"] = marg;
    j["aliased"] = r.glm.aliased;
    j["glm_converged"] = r.glm.converged;
    Json cs = Json::array();
    for (const auto& c : r.contrasts) {
        Json row = wald_json(c.wald);
        row["name"] = c.name;
        row["p_bh"] = std::isnan(c.p_bh) ? Json(nullptr) : Json(c.p_bh);
        cs.push_back(row);
    }
    j["focal_group"] = r.focal_group;
    j["contrasts"] = cs;
    run.write_json("infer.json", j);
    run.write("partition.csv", format_partition(r.partition, data.feature_names));
    run.finish();
}

int exit_code(ErrorCode code) {
    switch (category_of(code)) {
        case ErrorCategory::Input: return 2;
        case ErrorCategory::Shape: return 3;
        case ErrorCategory::Numeric: return 4;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tree-guided feature aggregation: fitting, tuning, simulation and inference"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    FitArgs fit;
    auto* s_fit = app.add_subcommand("fit", "Fit one estimator at a fixed lambda");
    add_common(s_fit, fit.common);
    add_data(s_fit, fit.data, false);
    s_fit->add_option("--lambda", fit.lambda, "Penalty level")->required();
    s_fit->add_option("--method", fit.method, "tree, rare, lasso, ridge or oracle")
        ->check(CLI::IsMember({"tree", "rare", "lasso", "ridge", "oracle"}))
        ->capture_default_str();
    s_fit->add_option("--weights", fit.weights, "Per-node weights CSV (node_id,weight)");
    s_fit->add_option("--partition", fit.partition, "Partition CSV for --method oracle");
    fista_opts(s_fit, fit.fista);

    PathArgs path;
    auto* s_path = app.add_subcommand("path", "Warm-started solution path over a lambda grid");
    add_common(s_path, path.common);
    add_data(s_path, path.data);
    s_path->add_option("--weights", path.weights, "Per-node weights CSV (node_id,weight)");
    add_grid(s_path, path.grid);
    fista_opts(s_path, path.fista);

    CvArgs cv;
    auto* s_cv = app.add_subcommand("cv", "K-fold cross-validated tree fit");
    add_common(s_cv, cv.common);
    add_data(s_cv, cv.data);
    s_cv->add_option("--weights", cv.weights, "Per-node weights CSV (node_id,weight)");
    s_cv->add_option("--folds", cv.folds, "Number of folds")->capture_default_str();
    add_grid(s_cv, cv.grid);
    fista_opts(s_cv, cv.fista);

    ProxArgs px;
    auto* s_prox = app.add_subcommand("prox", "Proximal operator of the tree penalty");
    add_common(s_prox, px.common);
    s_prox->add_option("--eta", px.eta, "Input vector CSV")->required();
    s_prox->add_option("--tree", px.tree, "Tree TSV")->required();
    s_prox->add_option("--lambda", px.lambda, "Penalty level")->required();
    s_prox->add_option("--weights", px.weights, "Per-node weights CSV (node_id,weight)");

    SimArgs sim;
    auto* s_sim = app.add_subcommand("simulate", "Draw one simulated replicate");
    add_common(s_sim, sim.common);
    s_sim->add_option("--scenario", sim.scenario, "exp1, exp2, s1, s2 or s3")->capture_default_str();
    s_sim->add_option("--rep", sim.rep, "Replicate index")->capture_default_str();
    s_sim->add_option("--n", sim.n, "Training (and validation) size");
    s_sim->add_option("--p", sim.p, "Number of features");
    s_sim->add_option("--k", sim.K, "Number of true groups");
    s_sim->add_option("--tree-variant", sim.tree_variant, "Experiment-1 tree 0..5");
    s_sim->add_option("--n-test", sim.n_test, "Test size");

    BenchArgs bench;
    auto* s_bench = app.add_subcommand("bench", "Replicated simulation benchmark");
    add_common(s_bench, bench.common);
    s_bench->add_option("--scenario", bench.scenario, "exp1, exp2, s1, s2 or s3")->capture_default_str();
    s_bench->add_option("--reps", bench.reps, "Replications")->capture_default_str();
    s_bench->add_option("--sweep", bench.sweep, "Settings to run (tree variants, p or K values)")->delimiter(',');
    add_grid(s_bench, bench.grid);
    fista_opts(s_bench, bench.fista);

    InferArgs inf;
    auto* s_inf = app.add_subcommand("infer", "Data-fission inference on aggregated logistic effects");
    add_common(s_inf, inf.common);
    add_data(s_inf, inf.data);
    s_inf->add_option("--delta", inf.delta, "Flip probability in (0.5, 1)")->capture_default_str();
    s_inf->add_option("--folds", inf.folds, "CV folds for selection (< 2: half split)")->capture_default_str();
    s_inf->add_option("--focal", inf.focal, "Feature whose group is contrasted with all others");
    s_inf->add_flag("--selection-offsets", inf.selection_offsets, "Include fission offsets in the selection fit");
    add_grid(s_inf, inf.grid);
    fista_opts(s_inf, inf.fista);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*s_fit) cmd_fit(fit);
        if (*s_path) cmd_path(path);
        if (*s_cv) cmd_cv(cv);
        if (*s_prox) cmd_prox(px);
        if (*s_sim) cmd_simulate(sim);
        if (*s_bench) cmd_bench(bench);
        if (*s_inf) cmd_infer(inf);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
