// Command-line front end: truth values, single estimates, simulation
// studies, and representer curves. Results go to stdout or files; progress
// and errors go to stderr. Exit codes: 0 success, 2 usage or configuration
// error, 1 runtime failure.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rieszboost/rieszboost.hpp"

namespace rb = rieszboost;

namespace {

struct TruthArgs {
    std::string dgp;
    std::string functional;
    std::string mode = "quadrature";
    std::uint64_t n_draws = 10'000'000;
    std::uint64_t seed = 1;
    double delta = 1.0;
    double threshold = 0.0;
};

struct SchemaArgs {
    std::string outcome = "y";
    std::string treatment = "a";
    std::string covariates;  // comma-separated; empty = all remaining columns

    rb::CsvSchema schema() const {
        rb::CsvSchema s{outcome, treatment, {}};
        if (!covariates.empty()) {
            for (const auto& name : rb::detail::split_list(covariates)) {
                s.covariates.push_back(name);
            }
        }
        return s;
    }
};

struct EstimateArgs {
    std::string data;
    SchemaArgs schema;
    std::string functional;
    std::string method = "rieszboost";
    double delta = 1.0;
    double threshold = 0.0;
    bool has_delta = false;
    std::uint64_t seed = 1;
    std::string config;
    std::string out;
    int folds = 0;              // 0 = not set on the command line
    double split_fraction = 0;  // 0 = not set
    bool two_fold = false;
};

struct SimulateArgs {
    std::string config;
    int jobs = 1;
};

struct CurveArgs {
    std::string data;
    SchemaArgs schema;
    std::string functional;
    std::string method = "rieszboost";
    double delta = 1.0;
    double threshold = 0.0;
    bool has_delta = false;
    std::uint64_t seed = 1;
    std::string config;
    std::string out;
    std::string dgp;  // optional; adds the true representer column
    double x_min = 0.0, x_max = 0.0;
    bool has_x_min = false, has_x_max = false;
    int x_count = 101;
    std::string a_values;  // required for ase/lase
};

rb::EstimatorConfig estimator_from(const std::string& config_path) {
    if (config_path.empty()) {
        return rb::EstimatorConfig{};
    }
    return rb::parse_config_file(config_path).study.estimator;
}

int run_truth(const TruthArgs& args) {
    const rb::DgpKind dgp = rb::parse_dgp(args.dgp);
    const rb::FunctionalSpec f =
        rb::parse_functional(args.functional, args.delta, args.threshold);
    const rb::TruthMode mode = rb::parse_truth_mode(args.mode);
    const double value = rb::true_psi(dgp, f, mode, args.n_draws, args.seed);
    std::cout << rb::detail::format_double(value) << " (" << rb::truth_mode_name(mode) << ")\n";
    return 0;
}

int run_estimate(const EstimateArgs& args) {
    const rb::FunctionalSpec f =
        rb::parse_functional(args.functional, args.delta, args.threshold);
    if (f.uses_delta() && !args.has_delta) {
        throw std::invalid_argument("--delta is required for functional '" + args.functional +
                                    "'");
    }
    const rb::MethodKind method = rb::parse_method(args.method);
    rb::EstimatorConfig config = estimator_from(args.config);
    if (args.folds != 0) config.cv_folds = args.folds;
    if (args.split_fraction != 0) config.split_fraction = args.split_fraction;
    if (args.two_fold) config.two_fold = true;

    const rb::Dataset ds = rb::load_csv(args.data, args.schema.schema());
    std::cerr << "estimating " << f.name() << " with " << rb::method_name(method) << " on "
              << ds.n() << " rows\n";
    const rb::EstimateResult res = rb::cross_fit_estimate(ds, f, method, config, args.seed);

    std::cout << "psi_hat=" << rb::detail::format_double(res.psi_hat)
              << " se=" << rb::detail::format_double(res.se)
              << " ci_lower=" << rb::detail::format_double(res.ci_lower)
              << " ci_upper=" << rb::detail::format_double(res.ci_upper) << "\n";
    if (!args.out.empty()) {
        std::ofstream out(args.out);
        if (!out) {
            throw std::runtime_error("cannot open '" + args.out + "' for writing");
        }
        out << "functional,method,psi_hat,se,ci_lower,ci_upper,n,seed\n";
        out << f.name() << ',' << rb::method_name(method) << ','
            << rb::detail::format_double(res.psi_hat) << ',' << rb::detail::format_double(res.se)
            << ',' << rb::detail::format_double(res.ci_lower) << ','
            << rb::detail::format_double(res.ci_upper) << ',' << ds.n() << ',' << args.seed
            << "\n";
        if (!out) {
            throw std::runtime_error("write to '" + args.out + "' failed");
        }
        std::cerr << "wrote " << args.out << "\n";
    }
    return 0;
}

int run_simulate(const SimulateArgs& args) {
    rb::RunConfig cfg = rb::parse_config_file(args.config);
    cfg.study.jobs = args.jobs;
    std::cerr << "running study: dgp=" << rb::dgp_name(cfg.study.dgp)
              << " n=" << cfg.study.n << " n_sims=" << cfg.study.n_sims
              << " jobs=" << cfg.study.jobs << "\n";
    const rb::StudyReport report = rb::run_study(cfg.study);
    rb::write_study_csv(report, cfg.out_csv);
    rb::write_study_markdown(report, cfg.out_markdown);
    for (const auto& c : report.cells) {
        std::cout << c.functional.name() << ' ' << rb::method_name(c.method)
                  << ": avg_estimate=" << rb::detail::format_double(c.avg_estimate)
                  << " rmse=" << rb::detail::format_double(c.rmse)
                  << " coverage_95=" << rb::detail::format_double(c.coverage_95) << "\n";
    }
    std::cout << "wrote " << cfg.out_csv << " and " << cfg.out_markdown << "\n";
    return 0;
}

int run_curve(const CurveArgs& args) {
    const rb::FunctionalSpec f =
        rb::parse_functional(args.functional, args.delta, args.threshold);
    if (f.uses_delta() && !args.has_delta) {
        throw std::invalid_argument("--delta is required for functional '" + args.functional +
                                    "'");
    }
    const rb::MethodKind method = rb::parse_method(args.method);
    const rb::EstimatorConfig config = estimator_from(args.config);

    const rb::Dataset ds = rb::load_csv(args.data, args.schema.schema());
    if (ds.n_covariates() != 1) {
        throw std::invalid_argument("representer-curve needs a dataset with a single covariate");
    }
    if (args.x_count < 1) {
        throw std::invalid_argument("--x-count must be at least 1");
    }

    std::vector<double> arms;
    if (!args.a_values.empty()) {
        for (const auto& tok : rb::detail::split_list(args.a_values)) {
            arms.push_back(rb::detail::parse_double(tok, "--a-values"));
        }
    } else if (f.binary_treatment()) {
        arms = {0.0, 1.0};
    } else {
        throw std::invalid_argument("--a-values is required for " + f.name());
    }

    double x_min = args.x_min, x_max = args.x_max;
    if (!args.has_x_min || !args.has_x_max) {
        const auto& xdata = ds.x().data();
        const auto [lo, hi] = std::minmax_element(xdata.begin(), xdata.end());
        if (!args.has_x_min) x_min = *lo;
        if (!args.has_x_max) x_max = *hi;
    }
    if (!(x_min <= x_max)) {
        throw std::invalid_argument("--x-min must not exceed --x-max");
    }

    std::cerr << "fitting " << rb::method_name(method) << " representer for " << f.name()
              << " on " << ds.n() << " rows\n";
    const auto alpha = rb::fit_alpha(ds, f, method, config, args.seed);

    const bool with_truth = !args.dgp.empty();
    rb::DgpKind dgp = rb::DgpKind::binary;
    if (with_truth) {
        dgp = rb::parse_dgp(args.dgp);
    }

    std::ofstream out(args.out);
    if (!out) {
        throw std::runtime_error("cannot open '" + args.out + "' for writing");
    }
    out << "a,x,alpha_hat";
    if (with_truth) out << ",alpha_true";
    out << "\n";
    std::size_t rows = 0;
    for (double a : arms) {
        for (int i = 0; i < args.x_count; ++i) {
            const double x =
                args.x_count == 1
                    ? x_min
                    : x_min + (x_max - x_min) * static_cast<double>(i) /
                          static_cast<double>(args.x_count - 1);
            const double xs[1] = {x};
            out << rb::detail::format_double(a) << ',' << rb::detail::format_double(x) << ','
                << rb::detail::format_double(alpha(a, std::span<const double>(xs)));
            if (with_truth) {
                out << ',' << rb::detail::format_double(rb::true_alpha(dgp, f, a, x));
            }
            out << "\n";
            ++rows;
        }
    }
    if (!out) {
        throw std::runtime_error("write to '" + args.out + "' failed");
    }
    std::cout << "wrote " << args.out << " (" << rows << " rows)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gradient-boosted Riesz representers for causal estimands"};
    app.require_subcommand(1);

    TruthArgs truth;
    auto* truth_cmd = app.add_subcommand("truth", "Print the true value of a functional");
    truth_cmd->add_option("--dgp", truth.dgp, "Design: binary or continuous")->required();
    truth_cmd->add_option("--functional", truth.functional, "ate, att, ase, or lase")->required();
    truth_cmd->add_option("--mode", truth.mode, "closed-form, quadrature, or monte-carlo");
    truth_cmd->add_option("--n-draws", truth.n_draws, "Draws for monte-carlo mode");
    truth_cmd->add_option("--seed", truth.seed, "Seed for monte-carlo mode");
    truth_cmd->add_option("--delta", truth.delta, "Treatment shift for ase/lase");
    truth_cmd->add_option("--threshold", truth.threshold, "Localization cutoff for lase");

    EstimateArgs est;
    auto* est_cmd = app.add_subcommand("estimate", "Estimate a functional from a CSV dataset");
    est_cmd->add_option("--data", est.data, "Input CSV")->required();
    est_cmd->add_option("--functional", est.functional, "ate, att, ase, or lase")->required();
    est_cmd->add_option("--method", est.method, "rieszboost or indirect");
    auto* est_delta = est_cmd->add_option("--delta", est.delta, "Treatment shift for ase/lase");
    est_cmd->add_option("--threshold", est.threshold, "Localization cutoff for lase");
    est_cmd->add_option("--outcome", est.schema.outcome, "Outcome column name");
    est_cmd->add_option("--treatment", est.schema.treatment, "Treatment column name");
    est_cmd->add_option("--covariates", est.schema.covariates,
                        "Comma-separated covariate columns (default: all others)");
    est_cmd->add_option("--seed", est.seed, "Seed for splitting and tuning");
    est_cmd->add_option("--config", est.config, "Config file for grids and tuning settings");
    est_cmd->add_option("--out", est.out, "Also write the estimate as CSV");
    est_cmd->add_option("--folds", est.folds, "CV folds for tuning");
    est_cmd->add_option("--split-fraction", est.split_fraction, "Training fraction");
    est_cmd->add_flag("--two-fold", est.two_fold, "Swap halves and average both estimates");

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Run a simulation study from a config file");
    sim_cmd->add_option("--config", sim.config, "Study config file")->required();
    sim_cmd->add_option("--jobs", sim.jobs, "Worker threads");

    CurveArgs curve;
    auto* curve_cmd = app.add_subcommand(
        "representer-curve", "Fit a representer and tabulate it over a covariate grid");
    curve_cmd->add_option("--data", curve.data, "Input CSV")->required();
    curve_cmd->add_option("--functional", curve.functional, "ate, att, ase, or lase")->required();
    curve_cmd->add_option("--method", curve.method, "rieszboost or indirect");
    auto* curve_delta =
        curve_cmd->add_option("--delta", curve.delta, "Treatment shift for ase/lase");
    curve_cmd->add_option("--threshold", curve.threshold, "Localization cutoff for lase");
    curve_cmd->add_option("--outcome", curve.schema.outcome, "Outcome column name");
    curve_cmd->add_option("--treatment", curve.schema.treatment, "Treatment column name");
    curve_cmd->add_option("--covariates", curve.schema.covariates,
                          "Comma-separated covariate columns (default: all others)");
    curve_cmd->add_option("--seed", curve.seed, "Seed for tuning");
    curve_cmd->add_option("--config", curve.config, "Config file for grids and tuning settings");
    curve_cmd->add_option("--out", curve.out, "Output CSV")->required();
    curve_cmd->add_option("--dgp", curve.dgp, "Also tabulate the true representer of this design");
    auto* xmin_opt = curve_cmd->add_option("--x-min", curve.x_min, "Grid start (default: data min)");
    auto* xmax_opt = curve_cmd->add_option("--x-max", curve.x_max, "Grid end (default: data max)");
    curve_cmd->add_option("--x-count", curve.x_count, "Grid size");
    curve_cmd->add_option("--a-values", curve.a_values,
                          "Comma-separated treatment values (required for ase/lase)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    curve.has_x_min = xmin_opt->count() > 0;
    curve.has_x_max = xmax_opt->count() > 0;
    est.has_delta = est_delta->count() > 0;
    curve.has_delta = curve_delta->count() > 0;

    try {
        if (truth_cmd->parsed()) return run_truth(truth);
        if (est_cmd->parsed()) return run_estimate(est);
        if (sim_cmd->parsed()) return run_simulate(sim);
        return run_curve(curve);
    } catch (const rb::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
