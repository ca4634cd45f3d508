#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "format.hpp"
#include "math.hpp"
#include "matrix.hpp"
#include "tree.hpp"

namespace rieszboost {

struct BoostParams {
    double learning_rate = 0.1;
    int n_iterations = 100;
    TreeParams tree;
};

/// Pseudo-residual of one observation: receives the target row and the
/// current prediction, returns the value the next tree should fit.
using ResidualFn = std::function<double(std::span<const double> target_row, double z_hat)>;

/// Squared-error pseudo-residual.
inline double residual_mse(double y, double z_hat) {
    return y - z_hat;
}

/// Bernoulli log-likelihood pseudo-residual; z_hat is on the log-odds scale.
inline double residual_bernoulli(double y, double z_hat) {
    return y - expit(z_hat);
}

/// Additive tree ensemble. Predictions start at 0 and add
/// learning_rate * tree(row) per boosting iteration, so a model with no
/// trees predicts exactly 0 everywhere.
class BoostedModel {
public:
    BoostedModel() = default;
    BoostedModel(std::vector<RegressionTree> trees, double learning_rate, std::size_t n_features)
        : trees_(std::move(trees)), learning_rate_(learning_rate), n_features_(n_features) {}

    double predict(std::span<const double> row) const {
        if (row.size() != n_features_) {
            throw std::invalid_argument("BoostedModel::predict: feature count mismatch");
        }
        double z = 0.0;
        for (const auto& tree : trees_) {
            z += learning_rate_ * tree.predict(row);
        }
        return z;
    }

    /// Predict on the virtual row [first, rest...].
    double predict_joined(double first, std::span<const double> rest) const {
        if (rest.size() + 1 != n_features_) {
            throw std::invalid_argument("BoostedModel::predict_joined: feature count mismatch");
        }
        double z = 0.0;
        for (const auto& tree : trees_) {
            z += learning_rate_ * tree.predict_joined(first, rest);
        }
        return z;
    }

    std::size_t n_trees() const { return trees_.size(); }
    double learning_rate() const { return learning_rate_; }
    std::size_t n_features() const { return n_features_; }
    const std::vector<RegressionTree>& trees() const { return trees_; }

private:
    std::vector<RegressionTree> trees_;
    double learning_rate_ = 0.0;
    std::size_t n_features_ = 0;
};

/// Probability prediction for Bernoulli-boosted models.
inline double predict_proba(const BoostedModel& model, std::span<const double> row) {
    return expit(model.predict(row));
}

namespace detail {

inline void validate_boost_inputs(const Matrix& predictors, const Matrix& targets,
                                  double learning_rate, int n_iterations) {
    if (predictors.rows() == 0) {
        throw std::invalid_argument("fit_boost: empty data");
    }
    if (targets.rows() != predictors.rows()) {
        throw std::invalid_argument("fit_boost: predictor and target row counts differ");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("fit_boost: learning_rate must be positive and finite");
    }
    if (n_iterations < 0) {
        throw std::invalid_argument("fit_boost: n_iterations must be >= 0");
    }
}

/// Core boosting loop; invokes on_tree(iteration, tree) after each step so
/// callers can collect the trees or snapshot intermediate predictions.
template <typename OnTree>
void boost_trees(const Matrix& predictors, const Matrix& targets, const ResidualFn& residual,
                 double learning_rate, const TreeParams& tree_params, int n_iterations,
                 const std::vector<std::vector<std::int32_t>>& sorted, OnTree&& on_tree) {
    const std::size_t m = predictors.rows();
    std::vector<double> z_hat(m, 0.0), resid(m);
    for (int iter = 1; iter <= n_iterations; ++iter) {
        for (std::size_t i = 0; i < m; ++i) {
            resid[i] = residual(targets.row(i), z_hat[i]);
            if (!std::isfinite(resid[i])) {
                throw std::runtime_error("fit_boost: non-finite residual at iteration " +
                                         std::to_string(iter));
            }
        }
        RegressionTree tree = detail::fit_tree_presorted(predictors, resid, tree_params, sorted);
        for (std::size_t i = 0; i < m; ++i) {
            z_hat[i] += learning_rate * tree.predict(predictors.row(i));
        }
        on_tree(iter, std::move(tree));
    }
}

}  // namespace detail

/// Generic gradient boosting: start at 0, repeatedly fit a tree to the
/// pseudo-residuals and take a learning_rate step. targets may have several
/// columns; each residual call sees its full target row.
inline BoostedModel fit_boost(const Matrix& predictors, const Matrix& targets,
                              const ResidualFn& residual, const BoostParams& params) {
    detail::validate_boost_inputs(predictors, targets, params.learning_rate, params.n_iterations);
    std::vector<RegressionTree> trees;
    trees.reserve(params.n_iterations);
    detail::boost_trees(predictors, targets, residual, params.learning_rate, params.tree,
                        params.n_iterations, detail::presort_columns(predictors),
                        [&](int, RegressionTree tree) { trees.push_back(std::move(tree)); });
    return BoostedModel(std::move(trees), params.learning_rate, predictors.cols());
}

inline constexpr const char* kModelMagic = "rieszboost-model 1";

/// Versioned text serialization; numbers use shortest round-trip formatting
/// so save/load reproduces the model bit for bit.
inline void save_model(const BoostedModel& model, std::ostream& out) {
    out << kModelMagic << "\n";
    out << "learning_rate " << detail::format_double(model.learning_rate()) << "\n";
    out << "n_features " << model.n_features() << "\n";
    out << "n_trees " << model.n_trees() << "\n";
    for (const auto& tree : model.trees()) {
        out << "tree " << tree.nodes().size() << "\n";
        for (const auto& nd : tree.nodes()) {
            out << nd.feature << ' ' << detail::format_double(nd.threshold) << ' ' << nd.left
                << ' ' << nd.right << ' ' << detail::format_double(nd.value) << "\n";
        }
    }
}

inline void save_model(const BoostedModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("save_model: cannot open '" + path + "' for writing");
    }
    save_model(model, out);
    if (!out) {
        throw std::runtime_error("save_model: write to '" + path + "' failed");
    }
}

inline BoostedModel load_model(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kModelMagic) {
        throw std::runtime_error("load_model: bad or missing format header");
    }
    auto expect_key = [&](const char* key) -> std::string {
        std::string k, v;
        if (!(in >> k >> v) || k != key) {
            throw std::runtime_error(std::string("load_model: expected '") + key + "'");
        }
        return v;
    };
    const double lr = detail::parse_double(expect_key("learning_rate"), "load_model");
    const auto n_features = static_cast<std::size_t>(std::stoull(expect_key("n_features")));
    const auto n_trees = static_cast<std::size_t>(std::stoull(expect_key("n_trees")));

    std::vector<RegressionTree> trees;
    trees.reserve(n_trees);
    for (std::size_t t = 0; t < n_trees; ++t) {
        std::string k;
        std::size_t n_nodes = 0;
        if (!(in >> k >> n_nodes) || k != "tree" || n_nodes == 0) {
            throw std::runtime_error("load_model: malformed tree header");
        }
        std::vector<TreeNode> nodes(n_nodes);
        for (auto& nd : nodes) {
            std::string thr, val;
            if (!(in >> nd.feature >> thr >> nd.left >> nd.right >> val)) {
                throw std::runtime_error("load_model: truncated tree nodes");
            }
            nd.threshold = detail::parse_double(thr, "load_model");
            nd.value = detail::parse_double(val, "load_model");
            if (!nd.is_leaf()) {
                if (nd.feature >= static_cast<std::int32_t>(n_features) || nd.left < 0 ||
                    nd.right < 0 || static_cast<std::size_t>(nd.left) >= n_nodes ||
                    static_cast<std::size_t>(nd.right) >= n_nodes) {
                    throw std::runtime_error("load_model: node references out of range");
                }
            }
        }
        trees.emplace_back(std::move(nodes), n_features);
    }
    return BoostedModel(std::move(trees), lr, n_features);
}

inline BoostedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_model: cannot open '" + path + "'");
    }
    return load_model(in);
}

}  // namespace rieszboost
