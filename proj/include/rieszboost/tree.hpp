#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "matrix.hpp"

namespace rieszboost {

struct TreeParams {
    int max_depth = 3;
    int min_samples_leaf = 5;
};

/// One node of a regression tree. feature < 0 marks a leaf; otherwise rows
/// with row[feature] <= threshold go left.
struct TreeNode {
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
};

/// CART regression tree: axis-aligned splits at midpoints of consecutive
/// distinct feature values, chosen to minimize squared error; leaves predict
/// the mean training target.
class RegressionTree {
public:
    RegressionTree() = default;
    RegressionTree(std::vector<TreeNode> nodes, std::size_t n_features)
        : nodes_(std::move(nodes)), n_features_(n_features) {
        if (nodes_.empty()) {
            throw std::invalid_argument("RegressionTree: no nodes");
        }
    }

    double predict(std::span<const double> row) const {
        if (row.size() != n_features_) {
            throw std::invalid_argument("RegressionTree::predict: feature count mismatch");
        }
        const TreeNode* node = &nodes_[0];
        while (!node->is_leaf()) {
            node = &nodes_[row[node->feature] <= node->threshold ? node->left : node->right];
        }
        return node->value;
    }

    /// Predict on the virtual row [first, rest...] without materializing it.
    double predict_joined(double first, std::span<const double> rest) const {
        if (rest.size() + 1 != n_features_) {
            throw std::invalid_argument("RegressionTree::predict_joined: feature count mismatch");
        }
        const TreeNode* node = &nodes_[0];
        while (!node->is_leaf()) {
            const double v = node->feature == 0 ? first : rest[node->feature - 1];
            node = &nodes_[v <= node->threshold ? node->left : node->right];
        }
        return node->value;
    }

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    std::size_t n_features() const { return n_features_; }

private:
    std::vector<TreeNode> nodes_;
    std::size_t n_features_ = 0;
};

namespace detail {

/// Sort row indices by each feature column (ties keep row order).
inline std::vector<std::vector<std::int32_t>> presort_columns(const Matrix& x) {
    std::vector<std::vector<std::int32_t>> sorted(x.cols());
    for (std::size_t f = 0; f < x.cols(); ++f) {
        auto& ord = sorted[f];
        ord.resize(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) ord[i] = static_cast<std::int32_t>(i);
        std::stable_sort(ord.begin(), ord.end(), [&](std::int32_t l, std::int32_t r) {
            return x(l, f) < x(r, f);
        });
    }
    return sorted;
}

/// Level-wise tree growth over presorted columns: each level is one scan of
/// every column, bucketing rows into their current nodes, so fitting costs
/// O(max_depth * n_features * n_rows) after the one-time presort.
inline RegressionTree fit_tree_presorted(const Matrix& x, std::span<const double> targets,
                                         const TreeParams& params,
                                         const std::vector<std::vector<std::int32_t>>& sorted) {
    const std::size_t m = x.rows();
    const std::size_t d = x.cols();
    if (m == 0 || d == 0) {
        throw std::invalid_argument("fit_tree: empty data");
    }
    if (targets.size() != m) {
        throw std::invalid_argument("fit_tree: target count does not match rows");
    }
    if (params.max_depth < 1 || params.min_samples_leaf < 1) {
        throw std::invalid_argument("fit_tree: max_depth and min_samples_leaf must be >= 1");
    }

    // Gains are computed from uncentered sums, whose cancellation noise is
    // on the order of 1e-11 * sum(t^2); anything below that is not a real
    // squared-error improvement.
    constexpr double kMinGainRel = 1e-10;

    struct NodeStats {
        std::int64_t count = 0;
        double sum = 0.0;
        double sumsq = 0.0;
    };
    struct BestSplit {
        double gain = 0.0;
        std::int32_t feature = -1;
        double threshold = 0.0;
    };

    std::vector<TreeNode> nodes(1);
    std::vector<NodeStats> stats(1);
    for (std::size_t i = 0; i < m; ++i) {
        stats[0].count += 1;
        stats[0].sum += targets[i];
        stats[0].sumsq += targets[i] * targets[i];
    }
    std::vector<std::int32_t> node_of(m, 0);

    const std::int64_t min_leaf = params.min_samples_leaf;
    std::size_t frontier_begin = 0;

    for (int depth = 0; depth < params.max_depth; ++depth) {
        const std::size_t frontier_end = nodes.size();
        if (frontier_begin == frontier_end) break;

        std::vector<std::uint8_t> splittable(frontier_end, 0);
        bool any = false;
        for (std::size_t nid = frontier_begin; nid < frontier_end; ++nid) {
            if (stats[nid].count >= 2 * min_leaf) {
                splittable[nid] = 1;
                any = true;
            }
        }
        if (!any) break;

        std::vector<BestSplit> best(frontier_end);
        for (std::size_t nid = frontier_begin; nid < frontier_end; ++nid) {
            best[nid].gain = kMinGainRel * stats[nid].sumsq;
        }

        struct ScanState {
            std::int64_t left_count = 0;
            double left_sum = 0.0;
            double prev_value = 0.0;
        };
        std::vector<ScanState> scan(frontier_end);

        for (std::size_t f = 0; f < d; ++f) {
            for (std::size_t nid = frontier_begin; nid < frontier_end; ++nid) {
                scan[nid] = ScanState{};
            }
            for (std::int32_t r : sorted[f]) {
                const std::int32_t nid = node_of[r];
                if (static_cast<std::size_t>(nid) < frontier_begin || !splittable[nid]) continue;
                ScanState& st = scan[nid];
                const double v = x(r, f);
                if (st.left_count >= min_leaf && v > st.prev_value &&
                    stats[nid].count - st.left_count >= min_leaf) {
                    const double thr = st.prev_value + 0.5 * (v - st.prev_value);
                    if (thr < v) {  // adjacent doubles may have no separating midpoint
                        const auto lc = static_cast<double>(st.left_count);
                        const auto rc = static_cast<double>(stats[nid].count - st.left_count);
                        const double rs = stats[nid].sum - st.left_sum;
                        const double gain = st.left_sum * st.left_sum / lc + rs * rs / rc -
                                            stats[nid].sum * stats[nid].sum /
                                                static_cast<double>(stats[nid].count);
                        if (gain > best[nid].gain) {
                            best[nid] = {gain, static_cast<std::int32_t>(f), thr};
                        }
                    }
                }
                st.left_count += 1;
                st.left_sum += targets[r];
                st.prev_value = v;
            }
        }

        bool split_any = false;
        for (std::size_t nid = frontier_begin; nid < frontier_end; ++nid) {
            if (best[nid].feature < 0) continue;
            nodes[nid].feature = best[nid].feature;
            nodes[nid].threshold = best[nid].threshold;
            nodes[nid].left = static_cast<std::int32_t>(nodes.size());
            nodes[nid].right = static_cast<std::int32_t>(nodes.size() + 1);
            nodes.emplace_back();
            nodes.emplace_back();
            stats.emplace_back();
            stats.emplace_back();
            split_any = true;
        }
        if (!split_any) break;

        for (std::size_t i = 0; i < m; ++i) {
            const std::int32_t nid = node_of[i];
            if (static_cast<std::size_t>(nid) < frontier_begin || nodes[nid].is_leaf()) continue;
            const TreeNode& nd = nodes[nid];
            const std::int32_t child = x(i, nd.feature) <= nd.threshold ? nd.left : nd.right;
            node_of[i] = child;
            stats[child].count += 1;
            stats[child].sum += targets[i];
            stats[child].sumsq += targets[i] * targets[i];
        }

        frontier_begin = frontier_end;
    }

    // Leaf values: exact constant when a leaf is pure, mean otherwise.
    const std::size_t n_nodes = nodes.size();
    std::vector<double> first_value(n_nodes, 0.0);
    std::vector<std::uint8_t> seen(n_nodes, 0), all_equal(n_nodes, 1);
    for (std::size_t i = 0; i < m; ++i) {
        const std::int32_t nid = node_of[i];
        if (!seen[nid]) {
            seen[nid] = 1;
            first_value[nid] = targets[i];
        } else if (targets[i] != first_value[nid]) {
            all_equal[nid] = 0;
        }
    }
    for (std::size_t nid = 0; nid < n_nodes; ++nid) {
        if (!nodes[nid].is_leaf()) continue;
        nodes[nid].value = all_equal[nid]
                               ? first_value[nid]
                               : stats[nid].sum / static_cast<double>(stats[nid].count);
    }

    return RegressionTree(std::move(nodes), d);
}

}  // namespace detail

/// Fit a regression tree of x -> targets by greedy squared-error splitting.
inline RegressionTree fit_tree(const Matrix& x, std::span<const double> targets,
                               const TreeParams& params) {
    if (x.rows() != targets.size()) {
        throw std::invalid_argument("fit_tree: target count does not match rows");
    }
    return detail::fit_tree_presorted(x, targets, params, detail::presort_columns(x));
}

}  // namespace rieszboost
