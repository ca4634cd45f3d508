#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "boosting.hpp"
#include "dataset.hpp"
#include "functional.hpp"
#include "tuning.hpp"

namespace rieszboost {

/// Training design for representer boosting. Each observed row (a_i, x_i)
/// appears first, in dataset order, followed by the functional's counterfixed
/// rows; predictors column 0 is the (possibly shifted) treatment, the rest
/// are covariates. targets keeps (row treatment, source treatment) so the
/// pseudo-residual can tell observed rows from appended ones.
struct AugmentedData {
    Matrix predictors;              // n_aug x (1 + d)
    Matrix targets;                 // n_aug x 2
    std::vector<std::size_t> origin;  // source dataset row of each augmented row
    std::size_t n_observed = 0;
};

inline AugmentedData augment(const Dataset& ds, const FunctionalSpec& f) {
    f.validate();
    if (f.binary_treatment() && !ds.treatment_is_binary()) {
        throw std::invalid_argument("augment: " + f.name() +
                                    " requires binary treatment (values exactly 0 or 1)");
    }
    const std::size_t n = ds.n();
    const std::size_t d = ds.n_covariates();

    struct Extra {
        double a_row;
        std::size_t src;
    };
    std::vector<Extra> extra;
    switch (f.kind) {
        case FunctionalKind::ate:
            extra.reserve(n);
            for (std::size_t i = 0; i < n; ++i) extra.push_back({1.0 - ds.a(i), i});
            break;
        case FunctionalKind::att:
            for (std::size_t i = 0; i < n; ++i) {
                if (ds.a(i) == 1.0) extra.push_back({0.0, i});
            }
            break;
        case FunctionalKind::ase:
            extra.reserve(n);
            for (std::size_t i = 0; i < n; ++i) extra.push_back({ds.a(i) + f.delta, i});
            break;
        case FunctionalKind::lase:
            for (std::size_t i = 0; i < n; ++i) {
                if (ds.a(i) < f.threshold) extra.push_back({ds.a(i) + f.delta, i});
            }
            break;
    }

    const std::size_t n_aug = n + extra.size();
    AugmentedData out;
    out.predictors = Matrix(n_aug, 1 + d);
    out.targets = Matrix(n_aug, 2);
    out.origin.resize(n_aug);
    out.n_observed = n;

    auto fill_row = [&](std::size_t row, double a_row, std::size_t src) {
        out.predictors(row, 0) = a_row;
        auto x = ds.x_row(src);
        for (std::size_t c = 0; c < d; ++c) out.predictors(row, 1 + c) = x[c];
        out.targets(row, 0) = a_row;
        out.targets(row, 1) = ds.a(src);
        out.origin[row] = src;
    };
    for (std::size_t i = 0; i < n; ++i) fill_row(i, ds.a(i), i);
    for (std::size_t j = 0; j < extra.size(); ++j) fill_row(n + j, extra[j].a_row, extra[j].src);
    return out;
}

/// Pseudo-residual of the representer loss at one augmented row.
/// a_row is the row's treatment value, a_src the source observation's; the
/// two are compared with exact float equality, which is how observed rows
/// are recognized.
inline double riesz_residual(const FunctionalSpec& f, double a_row, double a_src, double z_hat) {
    const bool observed = a_row == a_src;
    const double quad = observed ? -z_hat : 0.0;
    switch (f.kind) {
        case FunctionalKind::ate:
            return quad + (2.0 * a_row - 1.0);
        case FunctionalKind::att:
            return quad + (a_src == 1.0 ? 2.0 * a_row - 1.0 : 0.0);
        case FunctionalKind::ase:
            return quad + (observed ? -1.0 : 1.0);
        case FunctionalKind::lase:
            return quad + (a_src < f.threshold ? (observed ? -1.0 : 1.0) : 0.0);
    }
    throw std::logic_error("riesz_residual: unreachable");
}

inline ResidualFn make_riesz_residual(const FunctionalSpec& f) {
    return [f](std::span<const double> target_row, double z_hat) {
        return riesz_residual(f, target_row[0], target_row[1], z_hat);
    };
}

/// Empirical representer loss mean[alpha(a, x)^2 - 2 m(o, alpha)]; its
/// population minimizer is the true representer. alpha is any callable
/// (a, x) -> double.
template <typename Alpha>
double riesz_loss(const Dataset& ds, const FunctionalSpec& f, Alpha&& alpha) {
    double loss = 0.0;
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const double v = alpha(ds.a(i), ds.x_row(i));
        loss += v * v - 2.0 * m_eval(f, ds.a(i), ds.x_row(i), alpha);
    }
    return loss / static_cast<double>(ds.n());
}

/// A boosted representer estimate for one functional.
class RieszModel {
public:
    RieszModel() = default;
    RieszModel(BoostedModel model, FunctionalSpec functional)
        : model_(std::move(model)), functional_(functional) {}

    double predict(double a, std::span<const double> x) const {
        return model_.predict_joined(a, x);
    }
    double operator()(double a, std::span<const double> x) const { return predict(a, x); }

    const BoostedModel& model() const { return model_; }
    const FunctionalSpec& functional() const { return functional_; }

private:
    BoostedModel model_;
    FunctionalSpec functional_;
};

/// Boost the representer loss directly on the augmented design.
inline RieszModel fit_rieszboost(const Dataset& train, const FunctionalSpec& f,
                                 const BoostParams& params) {
    AugmentedData aug = augment(train, f);
    BoostedModel model =
        fit_boost(aug.predictors, aug.targets, make_riesz_residual(f), params);
    return RieszModel(std::move(model), f);
}

namespace detail {

/// Validation plan for the representer loss on a fold: predictions are
/// needed at each observed point and at the functional's counterfixed
/// points, and the loss combines them as mean[self^2 - 2 (plus - minus)].
inline CvEval make_riesz_eval(const Dataset& valid, const FunctionalSpec& f) {
    const std::size_t n = valid.n();
    const std::size_t d = valid.n_covariates();
    std::vector<double> pts;
    std::vector<std::size_t> self_idx(n);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (plus, minus)

    auto add_point = [&](double a, std::span<const double> x) {
        pts.push_back(a);
        pts.insert(pts.end(), x.begin(), x.end());
        return pts.size() / (1 + d) - 1;
    };
    for (std::size_t i = 0; i < n; ++i) {
        const double a = valid.a(i);
        const auto x = valid.x_row(i);
        const std::size_t self = add_point(a, x);
        self_idx[i] = self;
        switch (f.kind) {
            case FunctionalKind::ate: {
                const std::size_t other = add_point(1.0 - a, x);
                pairs.emplace_back(a == 1.0 ? self : other, a == 1.0 ? other : self);
                break;
            }
            case FunctionalKind::att:
                if (a == 1.0) pairs.emplace_back(self, add_point(0.0, x));
                break;
            case FunctionalKind::ase:
                pairs.emplace_back(add_point(a + f.delta, x), self);
                break;
            case FunctionalKind::lase:
                if (a < f.threshold) pairs.emplace_back(add_point(a + f.delta, x), self);
                break;
        }
    }

    const std::size_t n_points = pts.size() / (1 + d);
    Matrix points(n_points, 1 + d, std::move(pts));
    auto loss = [n, self_idx = std::move(self_idx),
                 pairs = std::move(pairs)](std::span<const double> values) {
        double acc = 0.0;
        for (std::size_t idx : self_idx) acc += values[idx] * values[idx];
        for (const auto& [plus, minus] : pairs) acc -= 2.0 * (values[plus] - values[minus]);
        return acc / static_cast<double>(n);
    };
    return {std::move(points), std::move(loss)};
}

}  // namespace detail

struct TunedRiesz {
    RieszModel model;
    BoostParams params;
    double cv_loss = 0.0;
    std::size_t grid_index = 0;
};

/// Select hyperparameters by k-fold CV on the validation representer loss,
/// then refit on all of train. Ties prefer fewer iterations, then smaller
/// learning rate, then shallower trees.
inline TunedRiesz tune_rieszboost(const Dataset& train, const FunctionalSpec& f,
                                  std::span<const BoostParams> grid, int k, std::uint64_t seed) {
    f.validate();
    const auto losses = detail::cv_mean_losses(
        train, grid, k, seed,
        [&](const Dataset& fold_train) {
            AugmentedData aug = augment(fold_train, f);
            return detail::CvDesign{std::move(aug.predictors), std::move(aug.targets),
                                    make_riesz_residual(f)};
        },
        [&](const Dataset& fold_valid) { return detail::make_riesz_eval(fold_valid, f); });
    const std::size_t best = detail::select_best(grid, losses);
    return {fit_rieszboost(train, f, grid[best]), grid[best], losses[best], best};
}

}  // namespace rieszboost
