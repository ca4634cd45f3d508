#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "functional.hpp"
#include "nuisance.hpp"
#include "riesz.hpp"
#include "tuning.hpp"

namespace rieszboost {

enum class MethodKind { rieszboost, indirect };

inline std::string method_name(MethodKind m) {
    return m == MethodKind::rieszboost ? "rieszboost" : "indirect";
}

inline MethodKind parse_method(const std::string& name) {
    if (name == "rieszboost") return MethodKind::rieszboost;
    if (name == "indirect") return MethodKind::indirect;
    throw std::invalid_argument("unknown method '" + name + "' (expected rieszboost, indirect)");
}

/// Hyperparameter search space used throughout the experiments.
inline std::vector<BoostParams> default_boost_grid() {
    const std::vector<double> lrs{0.001, 0.01, 0.1, 0.25};
    const std::vector<int> iters{10, 30, 50, 75, 100, 150, 200};
    const std::vector<int> depths{3, 5, 7};
    return make_grid(lrs, iters, depths);
}

inline std::vector<double> default_joint_bandwidths() {
    return {0.01, 1.2575, 2.505, 3.7525, 5.0};
}

inline std::vector<double> default_marginal_bandwidths() {
    return {0.01, 0.5075, 1.005, 1.5025, 2.0};
}

/// Everything needed to fit nuisances for one estimate.
struct EstimatorConfig {
    std::vector<BoostParams> grid = default_boost_grid();
    std::vector<double> kde_joint_bandwidths = default_joint_bandwidths();
    std::vector<double> kde_marginal_bandwidths = default_marginal_bandwidths();
    int cv_folds = 5;
    double split_fraction = 0.5;
    bool two_fold = false;
    double propensity_clip = 1e-4;  // 0 disables clipping
    PropensityCvMetric propensity_cv_metric = PropensityCvMetric::log_likelihood;
    double density_floor = 1e-12;

    void validate() const {
        if (grid.empty()) {
            throw std::invalid_argument("EstimatorConfig: empty hyperparameter grid");
        }
        if (cv_folds < 2) {
            throw std::invalid_argument("EstimatorConfig: cv_folds must be >= 2");
        }
        if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
            throw std::invalid_argument("EstimatorConfig: split_fraction must be in (0, 1)");
        }
        if (propensity_clip < 0.0 || propensity_clip >= 0.5) {
            throw std::invalid_argument("EstimatorConfig: propensity_clip must be in [0, 0.5)");
        }
        if (!(density_floor > 0.0)) {
            throw std::invalid_argument("EstimatorConfig: density_floor must be positive");
        }
    }
};

/// Fitted nuisances handed to the estimating-equation step: the outcome
/// regression, the representer, and (for att/lase) the training-half
/// estimate of the gate probability.
struct NuisanceBundle {
    std::function<double(double a, std::span<const double> x)> mu;
    std::function<double(double a, std::span<const double> x)> alpha;
    double scalar_hat = 1.0;
};

struct EstimateResult {
    double psi_hat = 0.0;
    double se = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    std::vector<double> phi;  // estimated influence values, one per data row
};

/// Standard error from influence values: sqrt(sum phi^2) / n.
inline double eif_se(std::span<const double> phi) {
    if (phi.empty()) {
        throw std::invalid_argument("eif_se: empty influence vector");
    }
    double ss = 0.0;
    for (double p : phi) ss += p * p;
    const auto n = static_cast<double>(phi.size());
    return std::sqrt(ss) / n;
}

namespace detail {

inline double gate_value(const FunctionalSpec& f, double a) {
    switch (f.kind) {
        case FunctionalKind::att: return a == 1.0 ? 1.0 : 0.0;
        case FunctionalKind::lase: return a < f.threshold ? 1.0 : 0.0;
        default: return 1.0;
    }
}

inline bool is_ratio_functional(const FunctionalSpec& f) {
    return f.kind == FunctionalKind::att || f.kind == FunctionalKind::lase;
}

}  // namespace detail

/// Estimated influence value of one observation at (psi, scale), where scale
/// is the gate probability for att/lase and 1 otherwise.
template <typename Mu, typename Alpha>
double phi_value(const FunctionalSpec& f, double y, double a, std::span<const double> x, Mu&& mu,
                 Alpha&& alpha, double psi, double scale = 1.0) {
    const double m = m_eval(f, a, x, mu);
    const double correction = alpha(a, x) * (y - mu(a, x));
    if (detail::is_ratio_functional(f)) {
        return (m - detail::gate_value(f, a) * psi + correction) / scale;
    }
    return m + correction - psi;
}

/// Solve the estimating equation mean[phi(o; psi)] = 0 on data. For ate/ase
/// this is the one-step mean; for att/lase the gate probability is estimated
/// from the same data, giving the closed-form ratio below. mean(phi) is zero
/// by construction.
inline EstimateResult eee_estimate(const FunctionalSpec& f, const Dataset& data,
                                   const NuisanceBundle& bundle) {
    f.validate();
    if (!bundle.mu || !bundle.alpha) {
        throw std::invalid_argument("eee_estimate: bundle is missing mu or alpha");
    }
    if (f.binary_treatment() && !data.treatment_is_binary()) {
        throw std::invalid_argument("eee_estimate: " + f.name() +
                                    " requires binary treatment (values exactly 0 or 1)");
    }
    if (detail::is_ratio_functional(f) && !(bundle.scalar_hat > 0.0)) {
        throw std::invalid_argument("eee_estimate: scalar_hat must be positive for " + f.name());
    }

    const std::size_t n = data.n();
    std::vector<double> score(n);
    double gate_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = data.x_row(i);
        const double m = m_eval(f, data.a(i), x, bundle.mu);
        score[i] = m + bundle.alpha(data.a(i), x) * (data.y(i) - bundle.mu(data.a(i), x));
        gate_sum += detail::gate_value(f, data.a(i));
    }
    const double score_mean = mean(score);

    EstimateResult out;
    out.phi.resize(n);
    if (detail::is_ratio_functional(f)) {
        if (gate_sum == 0.0) {
            throw std::runtime_error(
                "eee_estimate: no units pass the " + f.name() +
                " gate in the estimation data (gate probability estimate is zero)");
        }
        const double p_hat = gate_sum / static_cast<double>(n);
        out.psi_hat = score_mean / p_hat;
        for (std::size_t i = 0; i < n; ++i) {
            out.phi[i] =
                (score[i] - detail::gate_value(f, data.a(i)) * out.psi_hat) / p_hat;
        }
    } else {
        out.psi_hat = score_mean;
        for (std::size_t i = 0; i < n; ++i) {
            out.phi[i] = score[i] - out.psi_hat;
        }
    }
    out.se = eif_se(out.phi);
    out.ci_lower = out.psi_hat - 1.96 * out.se;
    out.ci_upper = out.psi_hat + 1.96 * out.se;
    return out;
}

/// Stream tags decorrelating the seeded sub-streams of one estimate.
namespace stream {
inline constexpr std::uint64_t draw = 1;
inline constexpr std::uint64_t split = 2;
inline constexpr std::uint64_t outcome = 3;
inline constexpr std::uint64_t riesz = 4;
inline constexpr std::uint64_t propensity = 5;
inline constexpr std::uint64_t kde = 6;
}  // namespace stream

/// Fit the representer estimate alone; used when no outcome model is needed.
inline std::function<double(double, std::span<const double>)> fit_alpha(
    const Dataset& train, const FunctionalSpec& f, MethodKind method,
    const EstimatorConfig& config, std::uint64_t seed) {
    f.validate();
    config.validate();
    if (method == MethodKind::rieszboost) {
        auto tuned = std::make_shared<TunedRiesz>(tune_rieszboost(
            train, f, config.grid, config.cv_folds, derive_seed(seed, stream::riesz)));
        return [tuned](double a, std::span<const double> x) { return tuned->model(a, x); };
    }
    if (f.binary_treatment()) {
        auto tuned = std::make_shared<TunedPropensity>(
            fit_propensity(train, config.grid, config.cv_folds,
                           derive_seed(seed, stream::propensity), config.propensity_cv_metric));
        return [tuned, f, clip = config.propensity_clip](double a, std::span<const double> x) {
            return indirect_alpha(f, tuned->model, clip, a, x);
        };
    }
    if (config.kde_joint_bandwidths.empty() || config.kde_marginal_bandwidths.empty()) {
        throw std::invalid_argument("fit_alpha: " + f.name() +
                                    " with the indirect method needs KDE bandwidth grids");
    }
    auto tuned = std::make_shared<TunedConditionalDensity>(fit_conditional_density(
        train, config.kde_joint_bandwidths, config.kde_marginal_bandwidths,
        config.density_floor, derive_seed(seed, stream::kde)));
    return [tuned, f](double a, std::span<const double> x) {
        return indirect_alpha(f, tuned->density, a, x);
    };
}

/// Fit all nuisances for one direction of cross-fitting on train.
inline NuisanceBundle fit_bundle(const Dataset& train, const FunctionalSpec& f,
                                 MethodKind method, const EstimatorConfig& config,
                                 std::uint64_t seed) {
    f.validate();
    config.validate();
    NuisanceBundle bundle;
    auto outcome = std::make_shared<TunedOutcome>(fit_outcome_regression(
        train, config.grid, config.cv_folds, derive_seed(seed, stream::outcome)));
    bundle.mu = [outcome](double a, std::span<const double> x) {
        return outcome->model.predict(a, x);
    };
    bundle.alpha = fit_alpha(train, f, method, config, seed);
    if (detail::is_ratio_functional(f)) {
        double gate_sum = 0.0;
        for (std::size_t i = 0; i < train.n(); ++i) {
            gate_sum += detail::gate_value(f, train.a(i));
        }
        if (gate_sum == 0.0) {
            throw std::runtime_error("fit_bundle: no units pass the " + f.name() +
                                     " gate in the training data");
        }
        bundle.scalar_hat = gate_sum / static_cast<double>(train.n());
    }
    return bundle;
}

/// Split-sample estimate: nuisances fitted on the training half, the
/// estimating equation solved on the held-out half. With two_fold the roles
/// are also swapped and the two directional estimates are averaged; each
/// influence value is computed at its own direction's estimate, so the
/// pooled influence values still average to zero.
inline EstimateResult cross_fit_estimate(const Dataset& data, const FunctionalSpec& f,
                                         MethodKind method, const EstimatorConfig& config,
                                         std::uint64_t seed) {
    f.validate();
    config.validate();
    const SplitResult sr = split(data, config.split_fraction, derive_seed(seed, stream::split));

    auto one_direction = [&](const Dataset& train, const Dataset& estimation) {
        return eee_estimate(f, estimation, fit_bundle(train, f, method, config, seed));
    };

    const EstimateResult forward = one_direction(sr.train, sr.estimation);
    if (!config.two_fold) {
        return forward;
    }
    const EstimateResult backward = one_direction(sr.estimation, sr.train);

    EstimateResult out;
    out.psi_hat = 0.5 * (forward.psi_hat + backward.psi_hat);
    out.phi.resize(data.n());
    for (std::size_t j = 0; j < sr.estimation_idx.size(); ++j) {
        out.phi[sr.estimation_idx[j]] = forward.phi[j];
    }
    for (std::size_t j = 0; j < sr.train_idx.size(); ++j) {
        out.phi[sr.train_idx[j]] = backward.phi[j];
    }
    out.se = eif_se(out.phi);
    out.ci_lower = out.psi_hat - 1.96 * out.se;
    out.ci_upper = out.psi_hat + 1.96 * out.se;
    return out;
}

}  // namespace rieszboost
