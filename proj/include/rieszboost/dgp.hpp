#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "functional.hpp"
#include "math.hpp"
#include "rng.hpp"

namespace rieszboost {

/// The two synthetic designs: binary treatment (for ate/att) and continuous
/// treatment (for ase/lase). Both have a single covariate.
enum class DgpKind { binary, continuous };

inline std::string dgp_name(DgpKind d) {
    return d == DgpKind::binary ? "binary" : "continuous";
}

inline DgpKind parse_dgp(const std::string& name) {
    if (name == "binary") return DgpKind::binary;
    if (name == "continuous") return DgpKind::continuous;
    throw std::invalid_argument("unknown dgp '" + name + "' (expected binary, continuous)");
}

/// Binary design: X ~ U(0,1), A | X ~ Bernoulli(expit(log-odds below)),
/// Y | A, X ~ N(mu, 1).
inline double binary_treatment_log_odds(double x) {
    return -0.02 * x - x * x + 4.0 * std::log(x + 0.3) + 1.5;
}

inline double binary_propensity(double x) {
    return expit(binary_treatment_log_odds(x));
}

/// Continuous design: X ~ U(0,2), A | X ~ N(x^2 - 1, sd 2), Y | A, X ~ N(mu, 1).
inline constexpr double kTreatmentSd = 2.0;

inline double continuous_treatment_mean(double x) {
    return x * x - 1.0;
}

/// True outcome mean. Both designs are linear in the treatment.
inline double true_mu(DgpKind dgp, double a, double x) {
    if (dgp == DgpKind::binary) {
        return 5.0 * x + 9.0 * x * a + 5.0 * std::sin(std::numbers::pi * x) + 25.0 * (a - 2.0);
    }
    return 5.0 * x + 9.0 * a * (x + 2.0) * (x + 2.0) + 5.0 * std::sin(std::numbers::pi * x) +
           25.0 * a;
}

/// Draw n observations; per observation the draw order is x, a, y.
inline Dataset draw(DgpKind dgp, std::size_t n, Rng& rng) {
    if (n == 0) {
        throw std::invalid_argument("draw: n must be positive");
    }
    std::vector<double> y(n), a(n);
    Matrix x(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        if (dgp == DgpKind::binary) {
            x(i, 0) = rng.uniform(0.0, 1.0);
            a[i] = rng.bernoulli(binary_propensity(x(i, 0))) ? 1.0 : 0.0;
        } else {
            x(i, 0) = rng.uniform(0.0, 2.0);
            a[i] = rng.normal(continuous_treatment_mean(x(i, 0)), kTreatmentSd);
        }
        y[i] = rng.normal(true_mu(dgp, a[i], x(i, 0)), 1.0);
    }
    return Dataset(std::move(y), std::move(a), std::move(x));
}

namespace detail {

inline void require_compatible(DgpKind dgp, const FunctionalSpec& f, const char* what) {
    const bool ok = (dgp == DgpKind::binary) == f.binary_treatment();
    if (!ok) {
        throw std::invalid_argument(std::string(what) + ": functional " + f.name() +
                                    " is not defined for the " + dgp_name(dgp) + " design");
    }
}

}  // namespace detail

/// True representer of the functional under the design. For the shift
/// functionals this is the Gaussian density ratio
/// exp(((a - m)^2 - (a - delta - m)^2) / (2 sd^2)) with m = x^2 - 1.
inline double true_alpha(DgpKind dgp, const FunctionalSpec& f, double a, double x) {
    f.validate();
    detail::require_compatible(dgp, f, "true_alpha");
    switch (f.kind) {
        case FunctionalKind::ate: {
            const double p = binary_propensity(x);
            return a / p - (1.0 - a) / (1.0 - p);
        }
        case FunctionalKind::att: {
            const double p = binary_propensity(x);
            return a - (1.0 - a) * p / (1.0 - p);
        }
        case FunctionalKind::ase:
        case FunctionalKind::lase: {
            const double m = continuous_treatment_mean(x);
            const double ratio = std::exp(((a - m) * (a - m) - (a - f.delta - m) * (a - f.delta - m)) /
                                          (2.0 * kTreatmentSd * kTreatmentSd));
            if (f.kind == FunctionalKind::ase) {
                return ratio - 1.0;
            }
            return (a < f.threshold + f.delta ? ratio : 0.0) - (a < f.threshold ? 1.0 : 0.0);
        }
    }
    throw std::logic_error("true_alpha: unreachable");
}

enum class TruthMode { closed_form, quadrature, monte_carlo };

inline std::string truth_mode_name(TruthMode m) {
    switch (m) {
        case TruthMode::closed_form: return "closed-form";
        case TruthMode::quadrature: return "quadrature";
        case TruthMode::monte_carlo: return "monte-carlo";
    }
    return "?";
}

inline TruthMode parse_truth_mode(const std::string& name) {
    if (name == "closed-form") return TruthMode::closed_form;
    if (name == "quadrature") return TruthMode::quadrature;
    if (name == "monte-carlo") return TruthMode::monte_carlo;
    throw std::invalid_argument("unknown truth mode '" + name +
                                "' (expected closed-form, quadrature, monte-carlo)");
}

/// True value of the functional under the design.
///
/// closed-form is available for ate and ase, where the covariate integral
/// collapses analytically. quadrature integrates over the covariate; both
/// outcome means are linear in the treatment, so the shift difference does
/// not depend on where it is taken, and for lase the treatment integral
/// reduces to a normal CDF weight. monte-carlo plugs the true outcome mean
/// into m and averages over n_draws fresh observations.
inline double true_psi(DgpKind dgp, const FunctionalSpec& f, TruthMode mode,
                       std::size_t n_draws = 10'000'000, std::uint64_t seed = 1) {
    f.validate();
    detail::require_compatible(dgp, f, "true_psi");

    if (mode == TruthMode::closed_form) {
        if (f.kind == FunctionalKind::ate) {
            return 29.5;  // integral of 9x + 25 over U(0,1)
        }
        if (f.kind == FunctionalKind::ase) {
            // shift difference is delta * (9 (x+2)^2 + 25); E[(X+2)^2] = 28/3
            return f.delta * (9.0 * 28.0 / 3.0 + 25.0);
        }
        throw std::invalid_argument("true_psi: no closed form for " + f.name());
    }

    if (mode == TruthMode::quadrature) {
        const int n_points = 20000;
        switch (f.kind) {
            case FunctionalKind::ate:
                return simpson([&](double x) { return true_mu(dgp, 1.0, x) - true_mu(dgp, 0.0, x); },
                               0.0, 1.0, n_points);
            case FunctionalKind::att: {
                const double num = simpson(
                    [&](double x) {
                        return binary_propensity(x) *
                               (true_mu(dgp, 1.0, x) - true_mu(dgp, 0.0, x));
                    },
                    0.0, 1.0, n_points);
                const double den = simpson([](double x) { return binary_propensity(x); }, 0.0,
                                           1.0, n_points);
                return num / den;
            }
            case FunctionalKind::ase:
                return simpson(
                           [&](double x) {
                               return true_mu(dgp, f.delta, x) - true_mu(dgp, 0.0, x);
                           },
                           0.0, 2.0, n_points) /
                       2.0;
            case FunctionalKind::lase: {
                auto below = [&](double x) {
                    return normal_cdf((f.threshold - continuous_treatment_mean(x)) / kTreatmentSd);
                };
                const double num = simpson(
                    [&](double x) {
                        return below(x) * (true_mu(dgp, f.delta, x) - true_mu(dgp, 0.0, x));
                    },
                    0.0, 2.0, n_points);
                const double den = simpson(below, 0.0, 2.0, n_points);
                if (den == 0.0) {
                    throw std::runtime_error("true_psi: gate probability is zero");
                }
                return num / den;
            }
        }
        throw std::logic_error("true_psi: unreachable");
    }

    if (n_draws == 0) {
        throw std::invalid_argument("true_psi: monte-carlo needs n_draws > 0");
    }
    Rng rng(seed);
    auto mu0 = [&](double a, std::span<const double> x) { return true_mu(dgp, a, x[0]); };
    double m_sum = 0.0, gate_sum = 0.0;
    for (std::size_t i = 0; i < n_draws; ++i) {
        double x, a;
        if (dgp == DgpKind::binary) {
            x = rng.uniform(0.0, 1.0);
            a = rng.bernoulli(binary_propensity(x)) ? 1.0 : 0.0;
        } else {
            x = rng.uniform(0.0, 2.0);
            a = rng.normal(continuous_treatment_mean(x), kTreatmentSd);
        }
        const double xs[1] = {x};
        m_sum += m_eval(f, a, std::span<const double>(xs), mu0);
        if (f.kind == FunctionalKind::att) gate_sum += a == 1.0 ? 1.0 : 0.0;
        if (f.kind == FunctionalKind::lase) gate_sum += a < f.threshold ? 1.0 : 0.0;
    }
    if (f.kind == FunctionalKind::att || f.kind == FunctionalKind::lase) {
        if (gate_sum == 0.0) {
            throw std::runtime_error("true_psi: no draws passed the gate");
        }
        return m_sum / gate_sum;
    }
    return m_sum / static_cast<double>(n_draws);
}

}  // namespace rieszboost
