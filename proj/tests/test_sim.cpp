#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rieszboost/dgp.hpp"
#include "rieszboost/estimate.hpp"
#include "rieszboost/riesz.hpp"
#include "rieszboost/study.hpp"

using namespace rieszboost;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "rieszboost_test_sim";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

StudyConfig smoke_config() {
    StudyConfig config;
    config.dgp = DgpKind::binary;
    config.functionals = {FunctionalSpec::ate(), FunctionalSpec::att()};
    config.n = 120;
    config.n_sims = 2;
    config.base_seed = 7;
    config.estimator.grid = {{0.1, 15, TreeParams{2, 5}}};
    config.estimator.cv_folds = 2;
    return config;
}

}  // namespace

TEST_CASE("math utilities have their textbook values") {
    REQUIRE(normal_cdf(0.0) == 0.5);
    REQUIRE_THAT(normal_cdf(1.959963984540054),
                 Catch::Matchers::WithinAbs(0.975, 1e-9));
    REQUIRE_THAT(normal_pdf(0.0),
                 Catch::Matchers::WithinRel(1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15));
    const std::vector<double> v = {1.0, 2.0, 3.0};
    REQUIRE(mean(v) == 2.0);
    REQUIRE(sample_sd(v) == 1.0);
    REQUIRE_THROWS_AS(mean(std::vector<double>{}), std::invalid_argument);
    REQUIRE_THROWS_AS(sample_variance(std::vector<double>{1.0}), std::invalid_argument);
    REQUIRE_THAT(simpson([](double x) { return x * x; }, 0.0, 1.0, 2000),
                 Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-12));
    REQUIRE_THROWS_AS(simpson([](double) { return 0.0; }, 1.0, 0.0, 10), std::invalid_argument);
}

TEST_CASE("synthetic draws are deterministic and match their designs") {
    SECTION("the same seed reproduces the same data") {
        Rng a(7), b(7), c(8);
        const Dataset first = draw(DgpKind::binary, 200, a);
        const Dataset second = draw(DgpKind::binary, 200, b);
        REQUIRE(first.y() == second.y());
        REQUIRE(first.a() == second.a());
        REQUIRE(first.x() == second.x());
        const Dataset third = draw(DgpKind::binary, 200, c);
        REQUIRE(first.a() != third.a());
        REQUIRE_THROWS_AS(draw(DgpKind::binary, 0, a), std::invalid_argument);
    }

    SECTION("binary design: uniform covariate, treatment share near its integral") {
        Rng rng(100);
        const Dataset ds = draw(DgpKind::binary, 40000, rng);
        REQUIRE(ds.treatment_is_binary());
        double a_mean = 0.0;
        for (std::size_t i = 0; i < ds.n(); ++i) {
            REQUIRE(ds.x_row(i)[0] >= 0.0);
            REQUIRE(ds.x_row(i)[0] <= 1.0);
            a_mean += ds.a(i);
        }
        a_mean /= static_cast<double>(ds.n());
        const double p_treated =
            simpson([](double x) { return binary_propensity(x); }, 0.0, 1.0, 20000);
        REQUIRE_THAT(p_treated, Catch::Matchers::WithinAbs(0.5127, 5e-4));
        REQUIRE_THAT(a_mean, Catch::Matchers::WithinAbs(p_treated, 0.01));
    }

    SECTION("continuous design: treatment is normal about x squared minus one") {
        Rng rng(101);
        const Dataset ds = draw(DgpKind::continuous, 40000, rng);
        REQUIRE_FALSE(ds.treatment_is_binary());
        std::vector<double> residuals(ds.n());
        double a_mean = 0.0;
        for (std::size_t i = 0; i < ds.n(); ++i) {
            const double x = ds.x_row(i)[0];
            REQUIRE(x >= 0.0);
            REQUIRE(x <= 2.0);
            residuals[i] = ds.a(i) - continuous_treatment_mean(x);
            a_mean += ds.a(i);
        }
        a_mean /= static_cast<double>(ds.n());
        REQUIRE_THAT(a_mean, Catch::Matchers::WithinAbs(1.0 / 3.0, 0.05));
        REQUIRE_THAT(mean(residuals), Catch::Matchers::WithinAbs(0.0, 0.05));
        REQUIRE_THAT(sample_sd(residuals), Catch::Matchers::WithinAbs(kTreatmentSd, 0.05));
    }

    SECTION("the treatment log-odds curve has its frozen value") {
        const double lo = binary_treatment_log_odds(0.3);
        REQUIRE_THAT(lo, Catch::Matchers::WithinAbs(
                             -0.02 * 0.3 - 0.09 + 4.0 * std::log(0.6) + 1.5, 1e-15));
        REQUIRE(binary_propensity(0.3) == expit(lo));
        REQUIRE_THAT(binary_propensity(0.3), Catch::Matchers::WithinAbs(0.34540, 5e-5));
    }
}

TEST_CASE("true outcome means at hand-checked points") {
    REQUIRE(true_mu(DgpKind::binary, 0.0, 0.0) == -50.0);
    REQUIRE_THAT(true_mu(DgpKind::binary, 1.0, 1.0),
                 Catch::Matchers::WithinAbs(-11.0, 1e-13));  // up to sin(pi) roundoff
    REQUIRE(true_mu(DgpKind::continuous, 0.0, 0.0) == 0.0);
    REQUIRE(true_mu(DgpKind::continuous, 1.0, 0.0) == 61.0);
    // Both designs are linear in the treatment with slope 9x (binary) or
    // 9(x+2)^2 + 25 (continuous).
    const double slope = true_mu(DgpKind::continuous, 2.0, 0.5) -
                         true_mu(DgpKind::continuous, 1.0, 0.5);
    REQUIRE_THAT(slope, Catch::Matchers::WithinRel(9.0 * 2.5 * 2.5 + 25.0, 1e-12));
}

TEST_CASE("true representers match their closed forms") {
    SECTION("binary functionals invert the true propensity") {
        const double p = binary_propensity(0.5);
        REQUIRE(true_alpha(DgpKind::binary, FunctionalSpec::ate(), 1.0, 0.5) == 1.0 / p);
        REQUIRE(true_alpha(DgpKind::binary, FunctionalSpec::ate(), 0.0, 0.5) ==
                -1.0 / (1.0 - p));
        REQUIRE(true_alpha(DgpKind::binary, FunctionalSpec::att(), 1.0, 0.5) == 1.0);
        REQUIRE(true_alpha(DgpKind::binary, FunctionalSpec::att(), 0.0, 0.5) ==
                -p / (1.0 - p));
    }

    SECTION("the shift representer vanishes at the symmetric point") {
        // At x = 1 the conditional mean is 0, so a = delta/2 makes the two
        // squared deviations in the density ratio cancel exactly.
        REQUIRE(true_alpha(DgpKind::continuous, FunctionalSpec::ase(1.0), 0.5, 1.0) == 0.0);
        REQUIRE_THAT(true_alpha(DgpKind::continuous, FunctionalSpec::ase(1.0),
                                continuous_treatment_mean(0.7) + 0.5, 0.7),
                     Catch::Matchers::WithinAbs(0.0, 1e-12));
    }

    SECTION("the localized representer respects both indicators") {
        const auto lase = FunctionalSpec::lase(1.0, 0.0);
        REQUIRE(true_alpha(DgpKind::continuous, lase, 1.5, 1.0) == 0.0);
        const double m = continuous_treatment_mean(0.4);
        const double a = -0.5;
        const double ratio =
            std::exp(((a - m) * (a - m) - (a - 1.0 - m) * (a - 1.0 - m)) / 8.0);
        REQUIRE_THAT(true_alpha(DgpKind::continuous, lase, a, 0.4),
                     Catch::Matchers::WithinRel(ratio - 1.0, 1e-12));
        // Between the threshold and threshold + delta only the ratio is live.
        const double mid = true_alpha(DgpKind::continuous, lase, 0.5, 0.4);
        REQUIRE(mid > 0.0);
    }

    SECTION("mismatched designs are rejected") {
        REQUIRE_THROWS_AS(true_alpha(DgpKind::binary, FunctionalSpec::ase(1.0), 0.0, 0.5),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(true_alpha(DgpKind::continuous, FunctionalSpec::ate(), 1.0, 0.5),
                          std::invalid_argument);
    }
}

TEST_CASE("true functional values across evaluation modes") {
    SECTION("closed forms are exact") {
        REQUIRE(true_psi(DgpKind::binary, FunctionalSpec::ate(), TruthMode::closed_form) ==
                29.5);
        REQUIRE(true_psi(DgpKind::continuous, FunctionalSpec::ase(1.0),
                         TruthMode::closed_form) == 109.0);
        REQUIRE(true_psi(DgpKind::continuous, FunctionalSpec::ase(2.0),
                         TruthMode::closed_form) == 218.0);
        REQUIRE_THROWS_WITH(
            true_psi(DgpKind::binary, FunctionalSpec::att(), TruthMode::closed_form),
            Catch::Matchers::ContainsSubstring("no closed form"));
        REQUIRE_THROWS_AS(true_psi(DgpKind::continuous, FunctionalSpec::lase(1.0, 0.0),
                                   TruthMode::closed_form),
                          std::invalid_argument);
    }

    SECTION("quadrature agrees with closed forms and frozen ratio values") {
        REQUIRE_THAT(true_psi(DgpKind::binary, FunctionalSpec::ate(), TruthMode::quadrature),
                     Catch::Matchers::WithinAbs(29.5, 1e-9));
        REQUIRE_THAT(true_psi(DgpKind::continuous, FunctionalSpec::ase(1.0),
                              TruthMode::quadrature),
                     Catch::Matchers::WithinAbs(109.0, 1e-9));
        REQUIRE_THAT(true_psi(DgpKind::binary, FunctionalSpec::att(), TruthMode::quadrature),
                     Catch::Matchers::WithinAbs(30.786063518720457, 1e-6));
        REQUIRE_THAT(true_psi(DgpKind::continuous, FunctionalSpec::lase(1.0, 0.0),
                              TruthMode::quadrature),
                     Catch::Matchers::WithinAbs(94.83484717711544, 1e-6));
    }

    SECTION("quadrature stays within reporting precision of the published values") {
        REQUIRE_THAT(true_psi(DgpKind::binary, FunctionalSpec::ate(), TruthMode::quadrature),
                     Catch::Matchers::WithinAbs(29.502, 0.01));
        REQUIRE_THAT(true_psi(DgpKind::binary, FunctionalSpec::att(), TruthMode::quadrature),
                     Catch::Matchers::WithinAbs(30.786, 0.01));
        REQUIRE_THAT(true_psi(DgpKind::continuous, FunctionalSpec::ase(1.0),
                              TruthMode::quadrature),
                     Catch::Matchers::WithinAbs(108.997, 0.01));
        REQUIRE_THAT(true_psi(DgpKind::continuous, FunctionalSpec::lase(1.0, 0.0),
                              TruthMode::quadrature),
                     Catch::Matchers::WithinAbs(94.814, 0.05));
    }

    SECTION("monte carlo converges to the quadrature value") {
        const std::size_t n_draws = 200000;
        for (const auto& [dgp, f] :
             {std::pair{DgpKind::binary, FunctionalSpec::ate()},
              std::pair{DgpKind::binary, FunctionalSpec::att()},
              std::pair{DgpKind::continuous, FunctionalSpec::ase(1.0)},
              std::pair{DgpKind::continuous, FunctionalSpec::lase(1.0, 0.0)}}) {
            const double quad = true_psi(dgp, f, TruthMode::quadrature);
            const double mc = true_psi(dgp, f, TruthMode::monte_carlo, n_draws, 2);
            REQUIRE_THAT(mc, Catch::Matchers::WithinAbs(quad, 0.5));
            REQUIRE(true_psi(dgp, f, TruthMode::monte_carlo, 1000, 3) ==
                    true_psi(dgp, f, TruthMode::monte_carlo, 1000, 3));
        }
        REQUIRE_THROWS_AS(
            true_psi(DgpKind::binary, FunctionalSpec::ate(), TruthMode::monte_carlo, 0),
            std::invalid_argument);
    }

    SECTION("incompatible design and functional pairs are rejected") {
        REQUIRE_THROWS_AS(true_psi(DgpKind::binary, FunctionalSpec::ase(1.0),
                                   TruthMode::quadrature),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(true_psi(DgpKind::continuous, FunctionalSpec::att(),
                                   TruthMode::quadrature),
                          std::invalid_argument);
    }
}

TEST_CASE("the true representer satisfies the defining moment identity") {
    // E[alpha0(A, X) g(A, X)] = E[m(O, g)] for bounded g, checked by Monte
    // Carlo with a 4-sigma tolerance.
    const std::size_t n_draws = 200000;
    for (const auto& [dgp, f] :
         {std::pair{DgpKind::binary, FunctionalSpec::ate()},
          std::pair{DgpKind::binary, FunctionalSpec::att()},
          std::pair{DgpKind::continuous, FunctionalSpec::ase(1.0)},
          std::pair{DgpKind::continuous, FunctionalSpec::lase(1.0, 0.0)}}) {
        Rng rng(900);
        const Dataset ds = draw(dgp, n_draws, rng);
        Rng coef(901);
        for (int rep = 0; rep < 2; ++rep) {
            const double c0 = coef.uniform(-1.0, 1.0);
            const double c1 = coef.uniform(-1.0, 1.0);
            const double c2 = coef.uniform(-1.0, 1.0);
            auto g = [&](double a, std::span<const double> x) {
                return c0 + c1 * std::sin(a) + c2 * std::cos(x[0] + a);
            };
            std::vector<double> diff(ds.n());
            for (std::size_t i = 0; i < ds.n(); ++i) {
                const auto x = ds.x_row(i);
                diff[i] = true_alpha(dgp, f, ds.a(i), x[0]) * g(ds.a(i), x) -
                          m_eval(f, ds.a(i), x, g);
            }
            const double avg = mean(diff);
            const double se = sample_sd(diff) / std::sqrt(static_cast<double>(ds.n()));
            INFO(f.name() << " rep " << rep << ": mean " << avg << " se " << se);
            REQUIRE(std::abs(avg) <= 4.0 * se);
        }
    }
}

TEST_CASE("the influence function is mean zero at the truth") {
    const std::size_t n_draws = 200000;
    for (const auto& [dgp, f] :
         {std::pair{DgpKind::binary, FunctionalSpec::ate()},
          std::pair{DgpKind::binary, FunctionalSpec::att()},
          std::pair{DgpKind::continuous, FunctionalSpec::ase(1.0)},
          std::pair{DgpKind::continuous, FunctionalSpec::lase(1.0, 0.0)}}) {
        const double psi0 = true_psi(dgp, f, TruthMode::quadrature);
        double scale = 1.0;
        if (f.kind == FunctionalKind::att) {
            scale = simpson([](double x) { return binary_propensity(x); }, 0.0, 1.0, 20000);
        } else if (f.kind == FunctionalKind::lase) {
            scale = simpson(
                        [&](double x) {
                            return normal_cdf(
                                (f.threshold - continuous_treatment_mean(x)) / kTreatmentSd);
                        },
                        0.0, 2.0, 20000) /
                    2.0;
        }
        auto mu0 = [dgp](double a, std::span<const double> x) {
            return true_mu(dgp, a, x[0]);
        };
        auto alpha0 = [dgp, &f = f](double a, std::span<const double> x) {
            return true_alpha(dgp, f, a, x[0]);
        };
        Rng rng(910);
        const Dataset ds = draw(dgp, n_draws, rng);
        std::vector<double> phi(ds.n());
        for (std::size_t i = 0; i < ds.n(); ++i) {
            phi[i] = phi_value(f, ds.y(i), ds.a(i), ds.x_row(i), mu0, alpha0, psi0, scale);
        }
        const double avg = mean(phi);
        const double se = sample_sd(phi) / std::sqrt(static_cast<double>(ds.n()));
        INFO(f.name() << ": mean " << avg << " se " << se);
        REQUIRE(std::abs(avg) <= 4.0 * se);
    }
}

TEST_CASE("the true representer minimizes the population representer loss") {
    for (const auto& [dgp, f] :
         {std::pair{DgpKind::binary, FunctionalSpec::ate()},
          std::pair{DgpKind::binary, FunctionalSpec::att()},
          std::pair{DgpKind::continuous, FunctionalSpec::ase(1.0)},
          std::pair{DgpKind::continuous, FunctionalSpec::lase(1.0, 0.0)}}) {
        Rng rng(920);
        const Dataset ds = draw(dgp, 50000, rng);
        auto alpha0 = [dgp, &f = f](double a, std::span<const double> x) {
            return true_alpha(dgp, f, a, x[0]);
        };
        const double at_truth = riesz_loss(ds, f, alpha0);

        const double inflated = riesz_loss(ds, f, [&](double a, std::span<const double> x) {
            return 1.5 * alpha0(a, x);
        });
        REQUIRE(at_truth < inflated);
        const double shifted = riesz_loss(ds, f, [&](double a, std::span<const double> x) {
            return alpha0(a, x) + 1.0;
        });
        REQUIRE(at_truth < shifted);

        Rng coef(921);
        for (int rep = 0; rep < 5; ++rep) {
            const double c0 = coef.uniform(-1.0, 1.0);
            const double c1 = coef.uniform(-1.0, 1.0);
            const double c2 = coef.uniform(-1.0, 1.0);
            const double perturbed =
                riesz_loss(ds, f, [&](double a, std::span<const double> x) {
                    return alpha0(a, x) +
                           0.5 * (c0 + c1 * std::sin(a) + c2 * std::cos(x[0]));
                });
            INFO(f.name() << " rep " << rep);
            REQUIRE(at_truth < perturbed);
        }
    }
}

TEST_CASE("representer error metrics against the truth") {
    Rng rng(930);
    const Dataset ds = draw(DgpKind::binary, 500, rng);
    const auto f = FunctionalSpec::ate();
    auto alpha0 = [](double a, std::span<const double> x) {
        return true_alpha(DgpKind::binary, FunctionalSpec::ate(), a, x[0]);
    };

    const RepresenterMetrics exact = representer_metrics(alpha0, DgpKind::binary, f, ds);
    REQUIRE(exact.rmse == 0.0);
    REQUIRE(exact.mae == 0.0);

    const RepresenterMetrics offset = representer_metrics(
        [&](double a, std::span<const double> x) { return alpha0(a, x) + 0.25; },
        DgpKind::binary, f, ds);
    REQUIRE_THAT(offset.rmse, Catch::Matchers::WithinRel(0.25, 1e-12));
    REQUIRE_THAT(offset.mae, Catch::Matchers::WithinRel(0.25, 1e-12));

    const Dataset wide(std::vector<double>{1.0}, std::vector<double>{1.0},
                       Matrix(1, 2, {0.1, 0.2}));
    REQUIRE_THROWS_AS(representer_metrics(alpha0, DgpKind::binary, f, wide),
                      std::invalid_argument);
}

TEST_CASE("simulation studies aggregate per-cell results") {
    const StudyConfig config = smoke_config();
    const StudyReport report = run_study(config);

    REQUIRE(report.n == 120);
    REQUIRE(report.n_sims == 2);
    REQUIRE(report.cells.size() == 4);

    // Cells are functional-major with methods inner, in configuration order.
    REQUIRE(report.cells[0].functional.kind == FunctionalKind::ate);
    REQUIRE(report.cells[0].method == MethodKind::rieszboost);
    REQUIRE(report.cells[1].functional.kind == FunctionalKind::ate);
    REQUIRE(report.cells[1].method == MethodKind::indirect);
    REQUIRE(report.cells[2].functional.kind == FunctionalKind::att);
    REQUIRE(report.cells[3].functional.kind == FunctionalKind::att);

    const double ate_truth = true_psi(DgpKind::binary, FunctionalSpec::ate(),
                                      TruthMode::quadrature);
    const double att_truth = true_psi(DgpKind::binary, FunctionalSpec::att(),
                                      TruthMode::quadrature);
    for (const auto& c : report.cells) {
        const double truth =
            c.functional.kind == FunctionalKind::ate ? ate_truth : att_truth;
        REQUIRE(c.truth == truth);
        REQUIRE(std::isfinite(c.avg_estimate));
        REQUIRE(c.avg_est_sd > 0.0);
        REQUIRE(c.rmse >= 0.0);
        REQUIRE(c.empirical_sd >= 0.0);
        REQUIRE(c.empirical_sd_defined);
        REQUIRE((c.coverage_95 == 0.0 || c.coverage_95 == 0.5 || c.coverage_95 == 1.0));
        REQUIRE(c.rep_rmse > 0.0);
        REQUIRE(c.rep_mae > 0.0);
        REQUIRE(c.rep_mae <= c.rep_rmse + 1e-12);
    }

    SECTION("the csv report round-trips through the table loader") {
        const auto csv = temp_file("smoke.csv");
        write_study_csv(report, csv.string());
        const std::string text = read_file(csv);
        REQUIRE(text.rfind("method,functional,avg_estimate,avg_est_sd,rmse,empirical_sd,"
                           "coverage_95,rep_rmse,rep_mae,n_sims,n,base_seed\n",
                           0) == 0);

        CsvSchema schema;
        schema.outcome = "avg_estimate";
        schema.treatment = "coverage_95";
        schema.covariates = {"rmse", "empirical_sd", "rep_rmse"};
        const Dataset table = load_csv(csv.string(), schema);
        REQUIRE(table.n() == 4);
        for (std::size_t i = 0; i < 4; ++i) {
            REQUIRE(table.y(i) == report.cells[i].avg_estimate);
            REQUIRE(table.a(i) == report.cells[i].coverage_95);
            REQUIRE(table.x_row(i)[0] == report.cells[i].rmse);
            REQUIRE(table.x_row(i)[1] == report.cells[i].empirical_sd);
            REQUIRE(table.x_row(i)[2] == report.cells[i].rep_rmse);
        }
    }

    SECTION("the markdown report names the methods and truths") {
        const auto md = temp_file("smoke.md");
        write_study_markdown(report, md.string());
        const std::string text = read_file(md);
        REQUIRE(text.find("RieszBoost") != std::string::npos);
        REQUIRE(text.find("Indirect") != std::string::npos);
        REQUIRE(text.find("ATE") != std::string::npos);
        REQUIRE(text.find("truth") != std::string::npos);
        REQUIRE(text.find("95% coverage") != std::string::npos);
    }
}

TEST_CASE("study reports do not depend on the number of jobs") {
    StudyConfig config = smoke_config();
    config.n_sims = 3;
    config.jobs = 1;
    const StudyReport serial = run_study(config);
    config.jobs = 3;
    const StudyReport parallel = run_study(config);

    REQUIRE(serial.cells.size() == parallel.cells.size());
    for (std::size_t i = 0; i < serial.cells.size(); ++i) {
        REQUIRE(serial.cells[i].avg_estimate == parallel.cells[i].avg_estimate);
        REQUIRE(serial.cells[i].avg_est_sd == parallel.cells[i].avg_est_sd);
        REQUIRE(serial.cells[i].rmse == parallel.cells[i].rmse);
        REQUIRE(serial.cells[i].empirical_sd == parallel.cells[i].empirical_sd);
        REQUIRE(serial.cells[i].coverage_95 == parallel.cells[i].coverage_95);
        REQUIRE(serial.cells[i].rep_rmse == parallel.cells[i].rep_rmse);
        REQUIRE(serial.cells[i].rep_mae == parallel.cells[i].rep_mae);
    }

    const auto csv_serial = temp_file("jobs1.csv");
    const auto csv_parallel = temp_file("jobs3.csv");
    write_study_csv(serial, csv_serial.string());
    write_study_csv(parallel, csv_parallel.string());
    REQUIRE(read_file(csv_serial) == read_file(csv_parallel));
}

TEST_CASE("study configurations are validated") {
    StudyConfig config = smoke_config();
    config.functionals = {FunctionalSpec::ase(1.0)};
    REQUIRE_THROWS_WITH(run_study(config),
                        Catch::Matchers::ContainsSubstring("not defined for the binary"));

    config = smoke_config();
    config.methods = {MethodKind::rieszboost, MethodKind::rieszboost};
    REQUIRE_THROWS_WITH(run_study(config),
                        Catch::Matchers::ContainsSubstring("duplicate method"));

    config = smoke_config();
    config.functionals.clear();
    REQUIRE_THROWS_AS(run_study(config), std::invalid_argument);

    config = smoke_config();
    config.n = 5;
    REQUIRE_THROWS_AS(run_study(config), std::invalid_argument);

    config = smoke_config();
    config.n_sims = 0;
    REQUIRE_THROWS_AS(run_study(config), std::invalid_argument);

    config = smoke_config();
    config.jobs = 0;
    REQUIRE_THROWS_AS(run_study(config), std::invalid_argument);
}

TEST_CASE("a failing replication reports its index and seed") {
    StudyConfig config;
    config.dgp = DgpKind::continuous;
    // The gate probability is positive, so the truth integral is fine, but
    // it is far too small for any of 60 draws to pass, so the replication
    // fails when it finds an empty gate.
    config.functionals = {FunctionalSpec::lase(1.0, -7.0)};
    config.methods = {MethodKind::rieszboost};
    config.n = 60;
    config.n_sims = 1;
    config.base_seed = 5;
    config.estimator.grid = {{0.1, 5, TreeParams{2, 5}}};
    config.estimator.cv_folds = 2;
    REQUIRE_THROWS_WITH(run_study(config),
                        Catch::Matchers::ContainsSubstring("replication 1") &&
                            Catch::Matchers::ContainsSubstring("seed 6"));
}

TEST_CASE("single-replication studies flag the undefined empirical sd") {
    StudyConfig config = smoke_config();
    config.functionals = {FunctionalSpec::ate()};
    config.methods = {MethodKind::rieszboost};
    config.n_sims = 1;
    const StudyReport report = run_study(config);
    REQUIRE(report.cells.size() == 1);
    REQUIRE(report.cells[0].empirical_sd == 0.0);
    REQUIRE_FALSE(report.cells[0].empirical_sd_defined);

    const auto md = temp_file("single.md");
    write_study_markdown(report, md.string());
    REQUIRE(read_file(md).find("at least two replications") != std::string::npos);
}
