#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "dgp.hpp"
#include "estimate.hpp"
#include "format.hpp"
#include "functional.hpp"

namespace rieszboost {

struct RepresenterMetrics {
    double rmse = 0.0;
    double mae = 0.0;
};

/// Error of an estimated representer against the true one, over the observed
/// rows of eval. The synthetic designs have one covariate.
template <typename Alpha>
RepresenterMetrics representer_metrics(Alpha&& alpha_hat, DgpKind dgp, const FunctionalSpec& f,
                                       const Dataset& eval) {
    if (eval.n_covariates() != 1) {
        throw std::invalid_argument("representer_metrics: expected a single covariate");
    }
    double se = 0.0, ae = 0.0;
    for (std::size_t i = 0; i < eval.n(); ++i) {
        const double diff =
            alpha_hat(eval.a(i), eval.x_row(i)) - true_alpha(dgp, f, eval.a(i), eval.x_row(i)[0]);
        se += diff * diff;
        ae += std::abs(diff);
    }
    const auto n = static_cast<double>(eval.n());
    return {std::sqrt(se / n), ae / n};
}

struct StudyConfig {
    DgpKind dgp = DgpKind::binary;
    std::vector<FunctionalSpec> functionals;
    std::vector<MethodKind> methods{MethodKind::rieszboost, MethodKind::indirect};
    std::size_t n = 1000;
    std::size_t n_sims = 500;
    std::uint64_t base_seed = 1;
    EstimatorConfig estimator;
    int jobs = 1;

    void validate() const {
        if (functionals.empty()) {
            throw std::invalid_argument("StudyConfig: no functionals");
        }
        for (const auto& f : functionals) {
            f.validate();
            detail::require_compatible(dgp, f, "StudyConfig");
        }
        if (methods.empty()) {
            throw std::invalid_argument("StudyConfig: no methods");
        }
        for (std::size_t i = 0; i < methods.size(); ++i) {
            for (std::size_t j = i + 1; j < methods.size(); ++j) {
                if (methods[i] == methods[j]) {
                    throw std::invalid_argument("StudyConfig: duplicate method " +
                                                method_name(methods[i]));
                }
            }
        }
        if (n < 10) {
            throw std::invalid_argument("StudyConfig: n must be at least 10");
        }
        if (n_sims == 0) {
            throw std::invalid_argument("StudyConfig: n_sims must be positive");
        }
        if (jobs < 1) {
            throw std::invalid_argument("StudyConfig: jobs must be at least 1");
        }
        estimator.validate();
    }
};

struct CellAggregate {
    MethodKind method = MethodKind::rieszboost;
    FunctionalSpec functional;
    double truth = 0.0;
    double avg_estimate = 0.0;
    double avg_est_sd = 0.0;
    double rmse = 0.0;
    double empirical_sd = 0.0;  // n-1 divisor; 0 when n_sims == 1
    bool empirical_sd_defined = true;  // false when n_sims < 2
    double coverage_95 = 0.0;
    double rep_rmse = 0.0;
    double rep_mae = 0.0;
};

struct StudyReport {
    DgpKind dgp = DgpKind::binary;
    std::size_t n = 0;
    std::size_t n_sims = 0;
    std::uint64_t base_seed = 0;
    std::vector<CellAggregate> cells;  // functional-major, methods inner, in config order
};

namespace detail {

struct CellOutcome {
    double psi = 0.0;
    double se = 0.0;
    bool covered = false;
    double rep_rmse = 0.0;
    double rep_mae = 0.0;
};

/// One replication: draw, split, fit shared nuisances on the training half,
/// then estimate every (functional, method) cell on the held-out half.
inline std::vector<CellOutcome> run_replication(const StudyConfig& config,
                                                std::span<const double> truths,
                                                std::size_t rep_index) {
    const std::uint64_t rep_seed = config.base_seed + rep_index;
    const EstimatorConfig& est = config.estimator;

    Rng rng(derive_seed(rep_seed, stream::draw));
    const Dataset ds = draw(config.dgp, config.n, rng);
    const SplitResult sr = split(ds, est.split_fraction, derive_seed(rep_seed, stream::split));

    const bool want_rb = std::find(config.methods.begin(), config.methods.end(),
                                   MethodKind::rieszboost) != config.methods.end();
    const bool want_ind = std::find(config.methods.begin(), config.methods.end(),
                                    MethodKind::indirect) != config.methods.end();

    // The outcome regression is shared by every cell; the indirect nuisance
    // (propensity or conditional density) is shared across its functionals.
    const TunedOutcome outcome = fit_outcome_regression(
        sr.train, est.grid, est.cv_folds, derive_seed(rep_seed, stream::outcome));

    TunedPropensity propensity;
    TunedConditionalDensity density;
    if (want_ind) {
        if (config.dgp == DgpKind::binary) {
            propensity = fit_propensity(sr.train, est.grid, est.cv_folds,
                                        derive_seed(rep_seed, stream::propensity),
                                        est.propensity_cv_metric);
        } else {
            density = fit_conditional_density(sr.train, est.kde_joint_bandwidths,
                                              est.kde_marginal_bandwidths, est.density_floor,
                                              derive_seed(rep_seed, stream::kde));
        }
    }

    std::vector<TunedRiesz> riesz_fits(config.functionals.size());
    if (want_rb) {
        for (std::size_t fi = 0; fi < config.functionals.size(); ++fi) {
            riesz_fits[fi] = tune_rieszboost(
                sr.train, config.functionals[fi], est.grid, est.cv_folds,
                derive_seed(derive_seed(rep_seed, stream::riesz), fi));
        }
    }

    std::vector<CellOutcome> outcomes;
    outcomes.reserve(config.functionals.size() * config.methods.size());
    for (std::size_t fi = 0; fi < config.functionals.size(); ++fi) {
        const FunctionalSpec& f = config.functionals[fi];
        for (MethodKind method : config.methods) {
            NuisanceBundle bundle;
            bundle.mu = [&outcome](double a, std::span<const double> x) {
                return outcome.model.predict(a, x);
            };
            if (method == MethodKind::rieszboost) {
                bundle.alpha = [&model = riesz_fits[fi].model](double a,
                                                               std::span<const double> x) {
                    return model(a, x);
                };
            } else if (config.dgp == DgpKind::binary) {
                bundle.alpha = [&propensity, f, clip = est.propensity_clip](
                                   double a, std::span<const double> x) {
                    return indirect_alpha(f, propensity.model, clip, a, x);
                };
            } else {
                bundle.alpha = [&density, f](double a, std::span<const double> x) {
                    return indirect_alpha(f, density.density, a, x);
                };
            }
            if (detail::is_ratio_functional(f)) {
                double gate_sum = 0.0;
                for (std::size_t i = 0; i < sr.train.n(); ++i) {
                    gate_sum += gate_value(f, sr.train.a(i));
                }
                bundle.scalar_hat = gate_sum / static_cast<double>(sr.train.n());
            }

            const EstimateResult res = eee_estimate(f, sr.estimation, bundle);
            const RepresenterMetrics metrics =
                representer_metrics(bundle.alpha, config.dgp, f, sr.estimation);
            outcomes.push_back({res.psi_hat, res.se,
                                res.ci_lower <= truths[fi] && truths[fi] <= res.ci_upper,
                                metrics.rmse, metrics.mae});
        }
    }
    return outcomes;
}

}  // namespace detail

/// Run the full simulation study. Replication s uses seed base_seed + s
/// (s = 1..n_sims) for everything it does, so any replication can be rerun
/// in isolation and the report does not depend on the number of jobs.
inline StudyReport run_study(const StudyConfig& config) {
    config.validate();

    std::vector<double> truths(config.functionals.size());
    for (std::size_t fi = 0; fi < config.functionals.size(); ++fi) {
        truths[fi] = true_psi(config.dgp, config.functionals[fi], TruthMode::quadrature);
    }

    std::vector<std::vector<detail::CellOutcome>> results(config.n_sims);
    auto run_one = [&](std::size_t s) {
        try {
            results[s] = detail::run_replication(config, truths, s + 1);
        } catch (const std::exception& e) {
            throw std::runtime_error("run_study: replication " + std::to_string(s + 1) +
                                     " (seed " + std::to_string(config.base_seed + s + 1) +
                                     ") failed: " + e.what());
        }
    };

    const std::size_t n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(config.jobs), config.n_sims);
    if (n_threads <= 1) {
        for (std::size_t s = 0; s < config.n_sims; ++s) run_one(s);
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        auto worker = [&] {
            while (!failed.load()) {
                const std::size_t s = next.fetch_add(1);
                if (s >= config.n_sims) break;
                try {
                    run_one(s);
                } catch (...) {
                    std::scoped_lock lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true);
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    StudyReport report{config.dgp, config.n, config.n_sims, config.base_seed, {}};
    std::size_t cell = 0;
    for (std::size_t fi = 0; fi < config.functionals.size(); ++fi) {
        for (MethodKind method : config.methods) {
            std::vector<double> psi(config.n_sims), se(config.n_sims), rep_rmse(config.n_sims),
                rep_mae(config.n_sims);
            double covered = 0.0;
            for (std::size_t s = 0; s < config.n_sims; ++s) {
                const detail::CellOutcome& o = results[s][cell];
                psi[s] = o.psi;
                se[s] = o.se;
                rep_rmse[s] = o.rep_rmse;
                rep_mae[s] = o.rep_mae;
                covered += o.covered ? 1.0 : 0.0;
            }
            CellAggregate agg;
            agg.method = method;
            agg.functional = config.functionals[fi];
            agg.truth = truths[fi];
            agg.avg_estimate = mean(psi);
            agg.avg_est_sd = mean(se);
            double mse = 0.0;
            for (double p : psi) mse += (p - agg.truth) * (p - agg.truth);
            agg.rmse = std::sqrt(mse / static_cast<double>(config.n_sims));
            agg.empirical_sd = config.n_sims >= 2 ? sample_sd(psi) : 0.0;
            agg.empirical_sd_defined = config.n_sims >= 2;
            agg.coverage_95 = covered / static_cast<double>(config.n_sims);
            agg.rep_rmse = mean(rep_rmse);
            agg.rep_mae = mean(rep_mae);
            report.cells.push_back(agg);
            ++cell;
        }
    }
    return report;
}

/// Machine-readable report: one row per (functional, method) cell. Numeric
/// columns use shortest round-trip formatting.
inline void write_study_csv(const StudyReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("write_study_csv: cannot open '" + path + "' for writing");
    }
    out << "method,functional,avg_estimate,avg_est_sd,rmse,empirical_sd,coverage_95,"
           "rep_rmse,rep_mae,n_sims,n,base_seed\n";
    for (const auto& c : report.cells) {
        out << method_name(c.method) << ',' << c.functional.name() << ','
            << detail::format_double(c.avg_estimate)
            << ',' << detail::format_double(c.avg_est_sd) << ',' << detail::format_double(c.rmse)
            << ',' << detail::format_double(c.empirical_sd) << ','
            << detail::format_double(c.coverage_95) << ',' << detail::format_double(c.rep_rmse)
            << ',' << detail::format_double(c.rep_mae) << ',' << report.n_sims << ',' << report.n
            << ',' << report.base_seed << "\n";
    }
    if (!out) {
        throw std::runtime_error("write_study_csv: write to '" + path + "' failed");
    }
}

namespace detail {

inline std::string fixed3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

inline std::string display_method(MethodKind m) {
    return m == MethodKind::rieszboost ? "RieszBoost" : "Indirect";
}

inline std::string display_functional(const FunctionalSpec& f) {
    std::string s = f.name();
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace detail

/// Human-readable report mirroring the layout of the CSV.
inline void write_study_markdown(const StudyReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("write_study_markdown: cannot open '" + path + "' for writing");
    }

    std::vector<FunctionalSpec> functionals;
    std::vector<MethodKind> methods;
    for (const auto& c : report.cells) {
        if (std::none_of(functionals.begin(), functionals.end(), [&](const FunctionalSpec& f) {
                return f.name() == c.functional.name();
            })) {
            functionals.push_back(c.functional);
        }
        if (std::find(methods.begin(), methods.end(), c.method) == methods.end()) {
            methods.push_back(c.method);
        }
    }
    auto cell_for = [&](const FunctionalSpec& f, MethodKind m) -> const CellAggregate& {
        for (const auto& c : report.cells) {
            if (c.functional.name() == f.name() && c.method == m) return c;
        }
        throw std::logic_error("write_study_markdown: missing cell");
    };

    out << "# Simulation study report\n\n";
    out << "Design: " << dgp_name(report.dgp) << " treatment, n = " << report.n
        << " per replication, " << report.n_sims << " replications, base seed "
        << report.base_seed << ".\n\n";

    out << "## Representer estimation error\n\n";
    out << "| Method |";
    for (const auto& f : functionals) {
        out << ' ' << detail::display_functional(f) << " RMSE | " << detail::display_functional(f)
            << " MAE |";
    }
    out << "\n|---|";
    for (std::size_t i = 0; i < functionals.size(); ++i) out << "---|---|";
    out << "\n";
    for (MethodKind m : methods) {
        out << "| " << detail::display_method(m) << " |";
        for (const auto& f : functionals) {
            const auto& c = cell_for(f, m);
            out << ' ' << detail::fixed3(c.rep_rmse) << " | " << detail::fixed3(c.rep_mae)
                << " |";
        }
        out << "\n";
    }
    out << "\n";

    for (const auto& f : functionals) {
        const auto& first = cell_for(f, methods.front());
        out << "## " << detail::display_functional(f) << " (truth "
            << detail::fixed3(first.truth) << ")\n\n";
        out << "| Method | Avg. estimate | Avg. est. SD | RMSE | Empirical SD | 95% coverage |\n";
        out << "|---|---|---|---|---|---|\n";
        for (MethodKind m : methods) {
            const auto& c = cell_for(f, m);
            out << "| " << detail::display_method(m) << " | " << detail::fixed3(c.avg_estimate)
                << " | " << detail::fixed3(c.avg_est_sd) << " | " << detail::fixed3(c.rmse)
                << " | " << detail::fixed3(c.empirical_sd) << " | "
                << detail::fixed3(c.coverage_95) << " |\n";
        }
        out << "\n";
    }
    if (!report.cells.empty() && !report.cells.front().empirical_sd_defined) {
        out << "Empirical SD needs at least two replications and is reported as 0 here.\n";
    }
    if (!out) {
        throw std::runtime_error("write_study_markdown: write to '" + path + "' failed");
    }
}

}  // namespace rieszboost
