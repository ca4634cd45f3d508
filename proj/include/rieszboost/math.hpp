#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace rieszboost {

/// Numerically stable logistic function.
inline double expit(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow for large |z|.
inline double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

/// Bernoulli log-likelihood of label y under log-odds z, computed in
/// log-odds space so saturated probabilities never produce log(0).
inline double bernoulli_log_likelihood(double y, double z) {
    return y * z - softplus(z);
}

/// Standard normal density.
inline double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

/// Standard normal CDF.
inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

inline double mean(std::span<const double> v) {
    if (v.empty()) {
        throw std::invalid_argument("mean: empty range");
    }
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Sample variance with the n-1 divisor.
inline double sample_variance(std::span<const double> v) {
    if (v.size() < 2) {
        throw std::invalid_argument("sample_variance: need at least 2 values");
    }
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

inline double sample_sd(std::span<const double> v) {
    return std::sqrt(sample_variance(v));
}

/// Composite Simpson rule on [lo, hi] with n subintervals (n made even).
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int n = 2000) {
    if (!(hi > lo)) {
        throw std::invalid_argument("simpson: requires hi > lo");
    }
    if (n < 2) n = 2;
    if (n % 2 != 0) ++n;
    const double h = (hi - lo) / n;
    double s = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) {
        s += f(lo + i * h) * (i % 2 == 0 ? 2.0 : 4.0);
    }
    return s * h / 3.0;
}

}  // namespace rieszboost
