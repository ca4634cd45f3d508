#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "matrix.hpp"

namespace rieszboost {

/// Gaussian product-kernel density estimate with a single isotropic
/// bandwidth: f(p) = mean_s h^-q prod_k phi((p_k - s_k) / h).
class Kde {
public:
    Kde() = default;

    Kde(Matrix samples, double bandwidth)
        : samples_(std::move(samples)), bandwidth_(bandwidth) {
        if (samples_.rows() == 0 || samples_.cols() == 0) {
            throw std::invalid_argument("Kde: empty sample matrix");
        }
        if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_)) {
            throw std::invalid_argument("Kde: bandwidth must be positive and finite");
        }
    }

    double eval(std::span<const double> point) const {
        if (point.size() != samples_.cols()) {
            throw std::invalid_argument("Kde::eval: dimension mismatch");
        }
        return eval_impl([&](std::size_t k) { return point[k]; });
    }

    /// Evaluate at the virtual point [first, rest...].
    double eval_joined(double first, std::span<const double> rest) const {
        if (rest.size() + 1 != samples_.cols()) {
            throw std::invalid_argument("Kde::eval_joined: dimension mismatch");
        }
        return eval_impl([&](std::size_t k) { return k == 0 ? first : rest[k - 1]; });
    }

    std::size_t dim() const { return samples_.cols(); }
    std::size_t n_samples() const { return samples_.rows(); }
    double bandwidth() const { return bandwidth_; }

private:
    template <typename PointAt>
    double eval_impl(PointAt&& at) const {
        const std::size_t m = samples_.rows();
        const std::size_t q = samples_.cols();
        double acc = 0.0;
        for (std::size_t s = 0; s < m; ++s) {
            double sq = 0.0;
            for (std::size_t k = 0; k < q; ++k) {
                const double z = (at(k) - samples_(s, k)) / bandwidth_;
                sq += z * z;
            }
            acc += std::exp(-0.5 * sq);
        }
        const double norm =
            std::pow(2.0 * std::numbers::pi, -0.5 * static_cast<double>(q)) /
            (static_cast<double>(m) * std::pow(bandwidth_, static_cast<double>(q)));
        return acc * norm;
    }

    Matrix samples_;
    double bandwidth_ = 0.0;
};

/// Conditional density of treatment given covariates as a ratio of KDEs,
/// with the marginal floored away from zero.
class ConditionalDensity {
public:
    ConditionalDensity() = default;

    ConditionalDensity(Kde joint, Kde marginal, double floor = 1e-12)
        : joint_(std::move(joint)), marginal_(std::move(marginal)), floor_(floor) {
        if (joint_.dim() != marginal_.dim() + 1) {
            throw std::invalid_argument(
                "ConditionalDensity: joint must have exactly one more dimension than marginal");
        }
        if (!(floor_ > 0.0)) {
            throw std::invalid_argument("ConditionalDensity: floor must be positive");
        }
    }

    double eval(double a, std::span<const double> x) const {
        return joint_.eval_joined(a, x) / std::max(marginal_.eval(x), floor_);
    }

    const Kde& joint() const { return joint_; }
    const Kde& marginal() const { return marginal_; }
    double floor() const { return floor_; }

private:
    Kde joint_;
    Kde marginal_;
    double floor_ = 1e-12;
};

namespace detail {

inline Matrix joint_samples(const Dataset& ds) {
    Matrix m(ds.n(), 1 + ds.n_covariates());
    for (std::size_t i = 0; i < ds.n(); ++i) {
        m(i, 0) = ds.a(i);
        auto x = ds.x_row(i);
        std::copy(x.begin(), x.end(), m.row(i).begin() + 1);
    }
    return m;
}

inline Matrix covariate_samples(const Dataset& ds) {
    return ds.x();
}

}  // namespace detail

struct BandwidthSelection {
    double joint = 0.0;
    double marginal = 0.0;
    double score = 0.0;  // held-out sum of log conditional densities
};

/// Pick the (joint, marginal) bandwidth pair maximizing the held-out log
/// conditional density of valid under KDEs built from train. Pairs whose
/// joint density underflows to zero anywhere score -inf and are rejected.
/// Ties prefer the smaller joint, then smaller marginal bandwidth.
inline BandwidthSelection select_bandwidths(const Dataset& train, const Dataset& valid,
                                            std::span<const double> joint_grid,
                                            std::span<const double> marginal_grid,
                                            double floor = 1e-12) {
    if (joint_grid.empty() || marginal_grid.empty()) {
        throw std::invalid_argument("select_bandwidths: empty bandwidth grid");
    }
    if (train.n_covariates() != valid.n_covariates()) {
        throw std::invalid_argument("select_bandwidths: covariate dimension mismatch");
    }
    for (double h : joint_grid) {
        if (!(h > 0.0) || !std::isfinite(h)) {
            throw std::invalid_argument("select_bandwidths: bandwidths must be positive");
        }
    }
    for (double h : marginal_grid) {
        if (!(h > 0.0) || !std::isfinite(h)) {
            throw std::invalid_argument("select_bandwidths: bandwidths must be positive");
        }
    }

    const std::size_t mt = train.n();
    const std::size_t mv = valid.n();
    const std::size_t d = train.n_covariates();
    const std::size_t qj = 1 + d;

    // Squared distances are bandwidth-free; precompute once so each pair in
    // the grid costs one exp per (train, valid) combination.
    std::vector<double> d_joint(mt * mv), d_marg(mt * mv);
    for (std::size_t v = 0; v < mv; ++v) {
        const auto xv = valid.x_row(v);
        for (std::size_t t = 0; t < mt; ++t) {
            const auto xt = train.x_row(t);
            double sx = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double dx = xv[k] - xt[k];
                sx += dx * dx;
            }
            const double da = valid.a(v) - train.a(t);
            d_marg[v * mt + t] = sx;
            d_joint[v * mt + t] = sx + da * da;
        }
    }

    auto mean_kernel_density = [&](const std::vector<double>& dist, std::size_t v, double h,
                                   std::size_t q) {
        double acc = 0.0;
        const double inv2h2 = 0.5 / (h * h);
        for (std::size_t t = 0; t < mt; ++t) {
            acc += std::exp(-dist[v * mt + t] * inv2h2);
        }
        return acc * std::pow(2.0 * std::numbers::pi, -0.5 * static_cast<double>(q)) /
               (static_cast<double>(mt) * std::pow(h, static_cast<double>(q)));
    };

    std::vector<double> jg(joint_grid.begin(), joint_grid.end());
    std::vector<double> mg(marginal_grid.begin(), marginal_grid.end());
    std::sort(jg.begin(), jg.end());
    std::sort(mg.begin(), mg.end());

    BandwidthSelection best{0.0, 0.0, -std::numeric_limits<double>::infinity()};
    bool found = false;
    for (double hj : jg) {
        std::vector<double> log_joint(mv);
        for (std::size_t v = 0; v < mv; ++v) {
            // log(0) = -inf rejects the pair when the joint KDE underflows
            log_joint[v] = std::log(mean_kernel_density(d_joint, v, hj, qj));
        }
        for (double hm : mg) {
            double score = 0.0;
            for (std::size_t v = 0; v < mv; ++v) {
                const double marg = mean_kernel_density(d_marg, v, hm, d);
                score += log_joint[v] - std::log(std::max(marg, floor));
            }
            if (std::isfinite(score) && (!found || score > best.score)) {
                best = {hj, hm, score};
                found = true;
            }
        }
    }
    if (!found) {
        throw std::runtime_error("select_bandwidths: no bandwidth pair produced a finite score");
    }
    return best;
}

}  // namespace rieszboost
