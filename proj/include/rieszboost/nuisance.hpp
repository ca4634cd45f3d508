#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "boosting.hpp"
#include "dataset.hpp"
#include "functional.hpp"
#include "kde.hpp"
#include "tuning.hpp"

namespace rieszboost {

/// Boosted outcome regression mu(a, x).
class OutcomeModel {
public:
    OutcomeModel() = default;
    explicit OutcomeModel(BoostedModel model) : model_(std::move(model)) {}

    double predict(double a, std::span<const double> x) const {
        return model_.predict_joined(a, x);
    }
    double operator()(double a, std::span<const double> x) const { return predict(a, x); }

    const BoostedModel& model() const { return model_; }

private:
    BoostedModel model_;
};

/// Boosted propensity score pi(x), fitted on the log-odds scale.
class PropensityModel {
public:
    PropensityModel() = default;
    explicit PropensityModel(BoostedModel model) : model_(std::move(model)) {}

    double prob(std::span<const double> x) const { return expit(model_.predict(x)); }
    double operator()(std::span<const double> x) const { return prob(x); }

    const BoostedModel& model() const { return model_; }

private:
    BoostedModel model_;
};

namespace detail {

inline Matrix outcome_predictors(const Dataset& ds) {
    Matrix m(ds.n(), 1 + ds.n_covariates());
    for (std::size_t i = 0; i < ds.n(); ++i) {
        m(i, 0) = ds.a(i);
        auto x = ds.x_row(i);
        std::copy(x.begin(), x.end(), m.row(i).begin() + 1);
    }
    return m;
}

inline Matrix column_matrix(const std::vector<double>& v) {
    return Matrix(v.size(), 1, v);
}

}  // namespace detail

struct TunedOutcome {
    OutcomeModel model;
    BoostParams params;
    double cv_loss = 0.0;  // mean held-out squared error
    std::size_t grid_index = 0;
};

/// Tune and fit the outcome regression by k-fold CV on held-out MSE.
inline TunedOutcome fit_outcome_regression(const Dataset& train,
                                           std::span<const BoostParams> grid, int k,
                                           std::uint64_t seed) {
    const auto losses = detail::cv_mean_losses(
        train, grid, k, seed,
        [&](const Dataset& fold_train) {
            return detail::CvDesign{detail::outcome_predictors(fold_train),
                                    detail::column_matrix(fold_train.y()),
                                    [](std::span<const double> t, double z) {
                                        return residual_mse(t[0], z);
                                    }};
        },
        [&](const Dataset& fold_valid) {
            return detail::CvEval{
                detail::outcome_predictors(fold_valid),
                [y = fold_valid.y()](std::span<const double> values) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < y.size(); ++i) {
                        acc += (y[i] - values[i]) * (y[i] - values[i]);
                    }
                    return acc / static_cast<double>(y.size());
                }};
        });
    const std::size_t best = detail::select_best(grid, losses);
    BoostedModel model = fit_boost(detail::outcome_predictors(train),
                                   detail::column_matrix(train.y()),
                                   [](std::span<const double> t, double z) {
                                       return residual_mse(t[0], z);
                                   },
                                   grid[best]);
    return {OutcomeModel(std::move(model)), grid[best], losses[best], best};
}

struct TunedPropensity {
    PropensityModel model;
    BoostParams params;
    double cv_loss = 0.0;  // mean held-out loss under the selection metric
    std::size_t grid_index = 0;
};

/// How the propensity CV scores a held-out fold. Log-likelihood targets
/// calibrated probabilities and is the default. Accuracy (misclassification
/// rate at the 0.5 threshold) is the stock scoring of off-the-shelf
/// classifier stacks; it is insensitive to calibration, which matters because
/// the indirect representer consumes probabilities, not labels.
enum class PropensityCvMetric { log_likelihood, accuracy };

inline std::string propensity_cv_metric_name(PropensityCvMetric metric) {
    return metric == PropensityCvMetric::log_likelihood ? "log_likelihood" : "accuracy";
}

inline PropensityCvMetric parse_propensity_cv_metric(const std::string& name) {
    if (name == "log_likelihood") return PropensityCvMetric::log_likelihood;
    if (name == "accuracy") return PropensityCvMetric::accuracy;
    throw std::invalid_argument("unknown propensity CV metric '" + name +
                                "' (expected log_likelihood or accuracy)");
}

/// Tune and fit the propensity score by k-fold CV, scored on held-out
/// Bernoulli log-likelihood (evaluated on the log-odds scale for stability)
/// or on held-out misclassification rate.
inline TunedPropensity fit_propensity(const Dataset& train, std::span<const BoostParams> grid,
                                      int k, std::uint64_t seed,
                                      PropensityCvMetric metric = PropensityCvMetric::log_likelihood) {
    if (!train.treatment_is_binary()) {
        throw std::invalid_argument("fit_propensity: treatment must be exactly 0/1");
    }
    const bool has_both = std::any_of(train.a().begin(), train.a().end(),
                                      [](double a) { return a == 1.0; }) &&
                          std::any_of(train.a().begin(), train.a().end(),
                                      [](double a) { return a == 0.0; });
    if (!has_both) {
        throw std::invalid_argument("fit_propensity: all treatment labels are identical");
    }
    const auto losses = detail::cv_mean_losses(
        train, grid, k, seed,
        [&](const Dataset& fold_train) {
            return detail::CvDesign{fold_train.x(), detail::column_matrix(fold_train.a()),
                                    [](std::span<const double> t, double z) {
                                        return residual_bernoulli(t[0], z);
                                    }};
        },
        [&](const Dataset& fold_valid) {
            return detail::CvEval{
                fold_valid.x(),
                [a = fold_valid.a(), metric](std::span<const double> values) {
                    double loss = 0.0;
                    for (std::size_t i = 0; i < a.size(); ++i) {
                        if (metric == PropensityCvMetric::log_likelihood) {
                            loss -= bernoulli_log_likelihood(a[i], values[i]);
                        } else {
                            const double label = values[i] > 0.0 ? 1.0 : 0.0;
                            if (label != a[i]) loss += 1.0;
                        }
                    }
                    return loss / static_cast<double>(a.size());
                }};
        });
    const std::size_t best = detail::select_best(grid, losses);
    BoostedModel model = fit_boost(train.x(), detail::column_matrix(train.a()),
                                   [](std::span<const double> t, double z) {
                                       return residual_bernoulli(t[0], z);
                                   },
                                   grid[best]);
    return {PropensityModel(std::move(model)), grid[best], losses[best], best};
}

struct TunedConditionalDensity {
    ConditionalDensity density;
    BandwidthSelection bandwidths;
};

/// Fit the conditional treatment density: bandwidths are chosen on an inner
/// split of train, then both KDEs are refit on all of train.
inline TunedConditionalDensity fit_conditional_density(const Dataset& train,
                                                       std::span<const double> joint_grid,
                                                       std::span<const double> marginal_grid,
                                                       double floor, std::uint64_t seed) {
    const SplitResult inner = split(train, 0.5, seed);
    const BandwidthSelection sel =
        select_bandwidths(inner.train, inner.estimation, joint_grid, marginal_grid, floor);
    Kde joint(detail::joint_samples(train), sel.joint);
    Kde marginal(detail::covariate_samples(train), sel.marginal);
    return {ConditionalDensity(std::move(joint), std::move(marginal), floor), sel};
}

/// Plug-in representer from a propensity model (binary-treatment
/// functionals). eps_clip > 0 clips pi into [eps_clip, 1 - eps_clip];
/// eps_clip = 0 disables clipping.
inline double indirect_alpha(const FunctionalSpec& f, const PropensityModel& propensity,
                             double eps_clip, double a, std::span<const double> x) {
    if (!f.binary_treatment()) {
        throw std::invalid_argument("indirect_alpha: " + f.name() +
                                    " does not use a propensity score");
    }
    double p = propensity.prob(x);
    if (eps_clip > 0.0) {
        p = std::clamp(p, eps_clip, 1.0 - eps_clip);
    }
    if (f.kind == FunctionalKind::ate) {
        return a / p - (1.0 - a) / (1.0 - p);
    }
    return a - (1.0 - a) * p / (1.0 - p);
}

/// Plug-in representer from a conditional treatment density (shift
/// functionals). Ratio denominators are floored at the density's floor.
inline double indirect_alpha(const FunctionalSpec& f, const ConditionalDensity& density,
                             double a, std::span<const double> x) {
    if (f.binary_treatment()) {
        throw std::invalid_argument("indirect_alpha: " + f.name() +
                                    " does not use a conditional density");
    }
    const double ratio =
        density.eval(a - f.delta, x) / std::max(density.eval(a, x), density.floor());
    if (f.kind == FunctionalKind::ase) {
        return ratio - 1.0;
    }
    return (a < f.threshold + f.delta ? ratio : 0.0) - (a < f.threshold ? 1.0 : 0.0);
}

}  // namespace rieszboost
