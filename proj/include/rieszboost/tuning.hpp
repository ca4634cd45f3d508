#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "boosting.hpp"
#include "dataset.hpp"

namespace rieszboost {

/// Cartesian hyperparameter grid.
inline std::vector<BoostParams> make_grid(std::span<const double> learning_rates,
                                          std::span<const int> n_iterations,
                                          std::span<const int> max_depths,
                                          int min_samples_leaf = 5) {
    if (learning_rates.empty() || n_iterations.empty() || max_depths.empty()) {
        throw std::invalid_argument("make_grid: empty grid axis");
    }
    std::vector<BoostParams> grid;
    grid.reserve(learning_rates.size() * n_iterations.size() * max_depths.size());
    for (double lr : learning_rates) {
        for (int m : n_iterations) {
            for (int depth : max_depths) {
                grid.push_back({lr, m, TreeParams{depth, min_samples_leaf}});
            }
        }
    }
    return grid;
}

namespace detail {

/// Grid points sharing (learning_rate, tree params) differ only in how many
/// boosting iterations they keep, and iteration M of one run is a prefix of
/// a longer run, so each group is fit once at its largest M and validation
/// loss is snapshotted at every M in the group.
struct CvGroup {
    double learning_rate = 0.0;
    TreeParams tree;
    std::vector<std::pair<int, std::size_t>> iters;  // (n_iterations, grid index), M ascending
};

inline std::vector<CvGroup> group_grid(std::span<const BoostParams> grid) {
    std::vector<CvGroup> groups;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const auto& p = grid[g];
        auto it = std::find_if(groups.begin(), groups.end(), [&](const CvGroup& gr) {
            return gr.learning_rate == p.learning_rate && gr.tree.max_depth == p.tree.max_depth &&
                   gr.tree.min_samples_leaf == p.tree.min_samples_leaf;
        });
        if (it == groups.end()) {
            groups.push_back({p.learning_rate, p.tree, {}});
            it = std::prev(groups.end());
        }
        it->iters.emplace_back(p.n_iterations, g);
    }
    for (auto& gr : groups) {
        std::sort(gr.iters.begin(), gr.iters.end());
    }
    return groups;
}

/// Training design for one CV fold: the boosting inputs built from the
/// fold-train subset.
struct CvDesign {
    Matrix predictors;
    Matrix targets;
    ResidualFn residual;
};

/// Validation plan for one CV fold: loss is a function of the model's
/// predictions at a fixed set of points.
struct CvEval {
    Matrix points;
    std::function<double(std::span<const double> values)> loss;
};

/// Mean validation loss per grid point under seeded k-fold CV.
/// make_design(fold_train) -> CvDesign, make_eval(fold_valid) -> CvEval.
template <typename MakeDesign, typename MakeEval>
std::vector<double> cv_mean_losses(const Dataset& data, std::span<const BoostParams> grid, int k,
                                   std::uint64_t seed, MakeDesign&& make_design,
                                   MakeEval&& make_eval) {
    if (grid.empty()) {
        throw std::invalid_argument("tune: empty hyperparameter grid");
    }
    const auto groups = group_grid(grid);
    const auto folds = kfold(data.n(), k, seed);
    std::vector<double> losses(grid.size(), 0.0);

    for (const auto& [train_idx, valid_idx] : folds) {
        const Dataset fold_train = data.subset(train_idx);
        const Dataset fold_valid = data.subset(valid_idx);
        const CvDesign design = make_design(fold_train);
        const CvEval eval = make_eval(fold_valid);
        const auto sorted = presort_columns(design.predictors);

        std::vector<double> values(eval.points.rows());
        for (const auto& group : groups) {
            std::fill(values.begin(), values.end(), 0.0);
            std::size_t next = 0;
            while (next < group.iters.size() && group.iters[next].first == 0) {
                losses[group.iters[next].second] += eval.loss(values);
                ++next;
            }
            const int max_iters = group.iters.back().first;
            boost_trees(design.predictors, design.targets, design.residual, group.learning_rate,
                        group.tree, max_iters, sorted, [&](int iter, RegressionTree tree) {
                            for (std::size_t p = 0; p < values.size(); ++p) {
                                values[p] +=
                                    group.learning_rate * tree.predict(eval.points.row(p));
                            }
                            while (next < group.iters.size() && group.iters[next].first == iter) {
                                losses[group.iters[next].second] += eval.loss(values);
                                ++next;
                            }
                        });
        }
    }
    for (auto& l : losses) l /= static_cast<double>(k);
    return losses;
}

/// Index of the grid point with the smallest loss. Ties prefer fewer
/// iterations, then smaller learning rate, then shallower trees.
inline std::size_t select_best(std::span<const BoostParams> grid, std::span<const double> losses) {
    if (grid.size() != losses.size() || grid.empty()) {
        throw std::invalid_argument("select_best: grid/loss size mismatch");
    }
    std::vector<std::size_t> order(grid.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        return std::make_tuple(grid[l].n_iterations, grid[l].learning_rate,
                               grid[l].tree.max_depth, grid[l].tree.min_samples_leaf, l) <
               std::make_tuple(grid[r].n_iterations, grid[r].learning_rate,
                               grid[r].tree.max_depth, grid[r].tree.min_samples_leaf, r);
    });
    std::size_t best = grid.size();
    double best_loss = 0.0;
    for (std::size_t idx : order) {
        if (!std::isfinite(losses[idx])) continue;
        if (best == grid.size() || losses[idx] < best_loss) {
            best = idx;
            best_loss = losses[idx];
        }
    }
    if (best == grid.size()) {
        throw std::runtime_error("select_best: no grid point produced a finite loss");
    }
    return best;
}

}  // namespace detail
}  // namespace rieszboost
