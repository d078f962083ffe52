#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "equisparse/error.hpp"

namespace equisparse {

/// One row of the tree-TSV format before indexing.
struct NodeSpec {
    std::string id;
    std::optional<std::string> parent;  // absent for roots
    std::optional<int> leaf_col;        // absent for internal nodes
};

/// Contiguous half-open range of positions in permuted leaf order.
struct LeafRange {
    int begin = 0;
    int end = 0;
    int size() const { return end - begin; }
};

/**
 * Rooted forest whose leaves are the columns of a design matrix.
 *
 * Nodes are dense indices in file order. Leaves are additionally placed in a
 * depth-first order (`leaf_perm`) in which every node's leaf set is a
 * contiguous range, so group operations on coefficient vectors reduce to
 * slicing. Immutable after construction.
 */
class Tree {
public:
    Tree() = default;

    /// Validates and indexes a node list. `p` is the expected feature count.
    Tree(std::vector<NodeSpec> specs, int p) : specs_(std::move(specs)), p_(p) { build(); }

    int n_nodes() const { return static_cast<int>(specs_.size()); }
    int n_leaves() const { return p_; }

    const std::vector<NodeSpec>& specs() const { return specs_; }
    const std::string& id(int node) const { return specs_[node].id; }
    int parent(int node) const { return parent_[node]; }
    const std::vector<int>& children(int node) const { return children_[node]; }
    bool is_leaf(int node) const { return children_[node].empty(); }
    bool is_root(int node) const { return parent_[node] < 0; }
    int leaf_col(int node) const { return leaf_col_[node]; }
    int depth(int node) const { return depth_[node]; }
    int height() const { return static_cast<int>(layers_.size()) - 1; }

    /// Group size a_l.
    int group_size(int node) const { return range_[node].size(); }
    LeafRange range(int node) const { return range_[node]; }

    /// Sorted original feature columns under `node`.
    std::vector<int> leaf_set(int node) const {
        std::vector<int> cols(leaf_perm_.begin() + range_[node].begin,
                              leaf_perm_.begin() + range_[node].end);
        std::sort(cols.begin(), cols.end());
        return cols;
    }

    const std::vector<int>& internal_nodes() const { return internal_; }
    const std::vector<int>& roots() const { return roots_; }
    /// Kernel node set: nodes without ancestors.
    const std::vector<int>& kernel_nodes() const { return roots_; }

    /// All nodes grouped by depth; layers()[0] are the roots.
    const std::vector<std::vector<int>>& layers() const { return layers_; }
    /// Internal nodes grouped by depth.
    const std::vector<std::vector<int>>& internal_layers() const { return internal_layers_; }

    /// leaf_perm()[k] is the original column stored at permuted position k.
    const std::vector<int>& leaf_perm() const { return leaf_perm_; }
    /// Inverse of leaf_perm: permuted position of original column j.
    const std::vector<int>& leaf_position() const { return leaf_pos_; }

    std::optional<int> find(std::string_view node_id) const {
        auto it = index_.find(std::string(node_id));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    int index_of(std::string_view node_id) const {
        auto idx = find(node_id);
        if (!idx) fail(ErrorCode::UnknownNode, "no node with id '" + std::string(node_id) + "'");
        return *idx;
    }

    bool is_ancestor(int anc, int node) const {
        for (int cur = parent_[node]; cur >= 0; cur = parent_[cur])
            if (cur == anc) return true;
        return false;
    }

    template <class Vec>
    Vec to_permuted(const Vec& x) const {
        Vec out(x.size());
        for (int k = 0; k < p_; ++k) out[k] = x[leaf_perm_[k]];
        return out;
    }

    template <class Vec>
    Vec from_permuted(const Vec& x) const {
        Vec out(x.size());
        for (int k = 0; k < p_; ++k) out[leaf_perm_[k]] = x[k];
        return out;
    }

private:
    void build() {
        const int L = n_nodes();
        require(L > 0, ErrorCode::EmptyInput, "tree has no nodes");
        require(p_ >= 1, ErrorCode::InvalidArgument, "expected feature count must be >= 1");

        index_.clear();
        for (int i = 0; i < L; ++i) {
            auto [it, inserted] = index_.emplace(specs_[i].id, i);
            require(inserted, ErrorCode::DuplicateNodeId, "node id '" + specs_[i].id + "' appears twice");
        }

        parent_.assign(L, -1);
        children_.assign(L, {});
        for (int i = 0; i < L; ++i) {
            if (!specs_[i].parent) continue;
            auto it = index_.find(*specs_[i].parent);
            require(it != index_.end(), ErrorCode::DanglingParent,
                    "node '" + specs_[i].id + "' references missing parent '" + *specs_[i].parent + "'");
            require(it->second != i, ErrorCode::CycleDetected, "node '" + specs_[i].id + "' is its own parent");
            parent_[i] = it->second;
            children_[it->second].push_back(i);
        }

        roots_.clear();
        for (int i = 0; i < L; ++i)
            if (parent_[i] < 0) roots_.push_back(i);
        require(!roots_.empty(), ErrorCode::CycleDetected, "every node has a parent");

        // Preorder from the roots; anything unreached sits on a cycle.
        depth_.assign(L, -1);
        std::vector<int> order;
        order.reserve(L);
        std::vector<int> stack;
        for (auto it = roots_.rbegin(); it != roots_.rend(); ++it) {
            depth_[*it] = 0;
            stack.push_back(*it);
        }
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            order.push_back(v);
            const auto& ch = children_[v];
            for (auto it = ch.rbegin(); it != ch.rend(); ++it) {
                depth_[*it] = depth_[v] + 1;
                stack.push_back(*it);
            }
        }
        for (int i = 0; i < L; ++i)
            require(depth_[i] >= 0, ErrorCode::CycleDetected, "node '" + specs_[i].id + "' lies on a parent cycle");

        leaf_col_.assign(L, -1);
        leaf_pos_.assign(p_, -1);
        leaf_perm_.clear();
        leaf_perm_.reserve(p_);
        for (int i = 0; i < L; ++i) {
            const auto& col = specs_[i].leaf_col;
            if (!children_[i].empty()) {
                require(!col, ErrorCode::LeafColumnOnInternalNode,
                        "internal node '" + specs_[i].id + "' carries a leaf column");
                continue;
            }
            require(col.has_value(), ErrorCode::LeafWithoutColumn, "leaf '" + specs_[i].id + "' has no column");
            require(*col >= 0 && *col < p_, ErrorCode::LeafColumnOutOfRange,
                    "leaf '" + specs_[i].id + "' column " + std::to_string(*col) + " outside [0, " +
                        std::to_string(p_) + ")");
            require(leaf_pos_[*col] < 0, ErrorCode::DuplicateLeafColumn,
                    "column " + std::to_string(*col) + " assigned to more than one leaf");
            leaf_col_[i] = *col;
            leaf_pos_[*col] = 0;  // mark seen; real positions assigned below
        }
        for (int j = 0; j < p_; ++j)
            require(leaf_pos_[j] >= 0, ErrorCode::MissingLeafColumn,
                    "column " + std::to_string(j) + " has no leaf");

        // Leaf ranges: in preorder, a node's leaves are contiguous.
        range_.assign(L, {});
        for (int v : order) {
            if (children_[v].empty()) {
                leaf_pos_[leaf_col_[v]] = static_cast<int>(leaf_perm_.size());
                leaf_perm_.push_back(leaf_col_[v]);
            }
        }
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            int v = *it;
            if (children_[v].empty()) {
                range_[v] = {leaf_pos_[leaf_col_[v]], leaf_pos_[leaf_col_[v]] + 1};
            } else {
                range_[v] = {range_[children_[v].front()].begin, range_[children_[v].back()].end};
            }
        }

        int h = 0;
        for (int d : depth_) h = std::max(h, d);
        layers_.assign(h + 1, {});
        internal_layers_.assign(h + 1, {});
        internal_.clear();
        for (int i = 0; i < L; ++i) {
            layers_[depth_[i]].push_back(i);
            if (!children_[i].empty()) {
                internal_.push_back(i);
                internal_layers_[depth_[i]].push_back(i);
            }
        }
        while (!internal_layers_.empty() && internal_layers_.back().empty()) internal_layers_.pop_back();
    }

    std::vector<NodeSpec> specs_;
    int p_ = 0;
    std::unordered_map<std::string, int> index_;
    std::vector<int> parent_;
    std::vector<std::vector<int>> children_;
    std::vector<int> leaf_col_;
    std::vector<int> depth_;
    std::vector<int> roots_;
    std::vector<int> internal_;
    std::vector<std::vector<int>> layers_;
    std::vector<std::vector<int>> internal_layers_;
    std::vector<LeafRange> range_;
    std::vector<int> leaf_perm_;
    std::vector<int> leaf_pos_;
};

namespace detail {

inline std::string_view trim_cr(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    size_t start = 0;
    while (true) {
        size_t pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

}  // namespace detail

/// Parses the tree-TSV format: `node_id<TAB>parent_id<TAB>leaf_col`, `-` for absent fields.
inline Tree parse_tree(std::string_view text, int p) {
    std::vector<NodeSpec> specs;
    int line_no = 0;
    size_t start = 0;
    while (start <= text.size()) {
        size_t nl = text.find('\n', start);
        std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        start = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
        ++line_no;
        line = detail::trim_cr(line);
        if (line.empty() || line.front() == '#') continue;

        auto fields = detail::split_tabs(line);
        const std::string where = "line " + std::to_string(line_no);
        require(fields.size() == 3, ErrorCode::MalformedLine, where + ": expected 3 tab-separated fields");
        require(!fields[0].empty() && fields[0] != "-", ErrorCode::MalformedLine, where + ": empty node id");

        NodeSpec spec;
        spec.id = std::string(fields[0]);
        if (fields[1] != "-") {
            require(!fields[1].empty(), ErrorCode::MalformedLine, where + ": empty parent id");
            spec.parent = std::string(fields[1]);
        }
        if (fields[2] != "-") {
            int col = 0;
            std::string s(fields[2]);
            size_t used = 0;
            try {
                col = std::stoi(s, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            require(used == s.size() && !s.empty(), ErrorCode::MalformedLine,
                    where + ": leaf column '" + s + "' is not an integer");
            spec.leaf_col = col;
        }
        specs.push_back(std::move(spec));
    }
    require(!specs.empty(), ErrorCode::EmptyInput, "tree document contains no nodes");
    return Tree(std::move(specs), p);
}

inline std::string format_tree(const Tree& tree) {
    std::ostringstream os;
    for (const auto& s : tree.specs()) {
        os << s.id << '\t' << (s.parent ? *s.parent : "-") << '\t';
        if (s.leaf_col)
            os << *s.leaf_col;
        else
            os << '-';
        os << '\n';
    }
    return os.str();
}

/// Set of nodes whose leaf sets partition the features.
struct AggregatingSet {
    std::vector<int> nodes;
    /// One sorted column list per node, in the order of `nodes`.
    std::vector<std::vector<int>> groups;
};

/// Checks that the nodes' leaf sets are pairwise disjoint and cover every feature.
inline bool is_aggregating_set(const Tree& tree, std::span<const int> nodes) {
    std::vector<char> seen(tree.n_leaves(), 0);
    int covered = 0;
    for (int v : nodes) {
        if (v < 0 || v >= tree.n_nodes()) return false;
        auto r = tree.range(v);
        for (int k = r.begin; k < r.end; ++k) {
            if (seen[k]) return false;
            seen[k] = 1;
            ++covered;
        }
    }
    return covered == tree.n_leaves();
}

inline AggregatingSet make_aggregating_set(const Tree& tree, std::vector<int> nodes) {
    require(is_aggregating_set(tree, nodes), ErrorCode::InvalidArgument,
            "node list does not partition the leaves");
    AggregatingSet out;
    out.nodes = std::move(nodes);
    for (int v : out.nodes) out.groups.push_back(tree.leaf_set(v));
    return out;
}

/**
 * Unique coarsest aggregating set for per-node merge flags: a node belongs to
 * it iff it is a leaf or flagged merged, and no ancestor is flagged merged.
 * `merged` is indexed by node; entries for leaves are ignored.
 */
inline AggregatingSet coarsest_aggregating_set(const Tree& tree, const std::vector<bool>& merged) {
    require(static_cast<int>(merged.size()) == tree.n_nodes(), ErrorCode::DimensionMismatch,
            "merge flags must have one entry per node");
    std::vector<int> nodes;
    std::vector<int> stack(tree.roots().rbegin(), tree.roots().rend());
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        if (tree.is_leaf(v) || merged[v]) {
            nodes.push_back(v);
            continue;
        }
        const auto& ch = tree.children(v);
        for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
    }
    AggregatingSet out;
    out.nodes = std::move(nodes);
    for (int v : out.nodes) out.groups.push_back(tree.leaf_set(v));
    return out;
}

/// Tree complexity sqrt(max a) * (1 + sqrt(max a / ln|I|)) over internal nodes.
inline double theta(const Tree& tree) {
    const auto& internal = tree.internal_nodes();
    require(internal.size() >= 2, ErrorCode::TooFewInternalNodes,
            "theta needs at least two internal nodes, got " + std::to_string(internal.size()));
    int max_a = 0;
    for (int v : internal) max_a = std::max(max_a, tree.group_size(v));
    const double a = max_a;
    return std::sqrt(a) * (1.0 + std::sqrt(a / std::log(static_cast<double>(internal.size()))));
}

/**
 * Removes internal non-root nodes, reattaching their children to the nearest
 * surviving ancestor. Leaf columns and roots are unchanged.
 */
inline Tree delete_internal_nodes(const Tree& tree, std::span<const int> victims) {
    std::vector<char> dead(tree.n_nodes(), 0);
    for (int v : victims) {
        require(v >= 0 && v < tree.n_nodes(), ErrorCode::UnknownNode, "node index out of range");
        require(!tree.is_leaf(v), ErrorCode::CannotDeleteLeaf, "cannot delete leaf '" + tree.id(v) + "'");
        require(!tree.is_root(v), ErrorCode::CannotDeleteRoot, "cannot delete root '" + tree.id(v) + "'");
        dead[v] = 1;
    }
    std::vector<NodeSpec> specs;
    specs.reserve(tree.n_nodes());
    for (int i = 0; i < tree.n_nodes(); ++i) {
        if (dead[i]) continue;
        NodeSpec s = tree.specs()[i];
        int par = tree.parent(i);
        while (par >= 0 && dead[par]) par = tree.parent(par);
        if (par >= 0)
            s.parent = tree.id(par);
        else
            s.parent.reset();
        specs.push_back(std::move(s));
    }
    return Tree(std::move(specs), tree.n_leaves());
}

}  // namespace equisparse
