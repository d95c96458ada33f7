#include <doctest.h>

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "ibstress/equity_model.hpp"
#include "ibstress/errors.hpp"

using namespace ibstress;

TEST_CASE("noiseless power-law data is recovered to numerical precision") {
    const double a = 0.7;
    const double b = 0.83;
    std::vector<std::pair<double, double>> pairs;
    for (int i = 1; i <= 40; ++i) {
        const double x = 0.5 * i;
        pairs.emplace_back(x, std::exp(a + b * std::log(x)));
    }
    const auto fit = fit_log_regression(pairs);
    CHECK(fit.slope == doctest::Approx(b).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(a).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.samples == 40);
}

TEST_CASE("noisy data at the reported correlation level recovers the slope") {
    // slope 0.83 with noise tuned so R^2 ~ 0.88
    const double b = 0.83;
    const double sigma_x = 1.2;
    const double sigma_eps = std::sqrt(0.12 / 0.88) * b * sigma_x;
    std::mt19937 gen(424242);
    std::normal_distribution<double> nx(4.0, sigma_x);
    std::normal_distribution<double> ne(0.0, sigma_eps);
    std::vector<std::pair<double, double>> pairs;
    for (int i = 0; i < 2000; ++i) {
        const double lx = nx(gen);
        const double ly = 0.4 + b * lx + ne(gen);
        pairs.emplace_back(std::exp(lx), std::exp(ly));
    }
    const auto fit = fit_log_regression(pairs);
    CHECK(std::abs(fit.slope - b) < 0.05);
    CHECK(fit.r_squared > 0.84);
    CHECK(fit.r_squared < 0.92);
    CHECK(fit.pearson_r > 0.9);
}

TEST_CASE("constant equity gives slope 0 and no explained variance") {
    std::vector<std::pair<double, double>> pairs;
    for (int i = 1; i <= 10; ++i) pairs.emplace_back(static_cast<double>(i), 4.0);
    const auto fit = fit_log_regression(pairs);
    CHECK(fit.slope == doctest::Approx(0.0));
    CHECK(fit.r_squared == doctest::Approx(0.0));
}

TEST_CASE("fit input validation") {
    using P = std::pair<double, double>;
    CHECK_THROWS_AS(fit_log_regression(std::vector<P>{{1.0, 1.0}, {2.0, 2.0}}), ValidationError);
    CHECK_THROWS_AS(fit_log_regression(std::vector<P>{{1.0, 1.0}, {2.0, 2.0}, {0.0, 3.0}}),
                    ValidationError);
    CHECK_THROWS_AS(fit_log_regression(std::vector<P>{{1.0, 1.0}, {2.0, -2.0}, {3.0, 3.0}}),
                    ValidationError);
    // degenerate x variance
    CHECK_THROWS_AS(fit_log_regression(std::vector<P>{{2.0, 1.0}, {2.0, 2.0}, {2.0, 3.0}}),
                    ValidationError);
}

TEST_CASE("imputation: identity map, direct evaluation, scale covariance") {
    RegressionFit identity;
    identity.intercept = 0.0;
    identity.slope = 1.0;
    CHECK(impute_equity_one(identity, 7.0) == doctest::Approx(7.0).epsilon(1e-15));

    RegressionFit paper_scale;
    paper_scale.intercept = 0.25;
    paper_scale.slope = 0.83;
    CHECK(impute_equity_one(paper_scale, 100.0) ==
          doctest::Approx(std::exp(0.25) * std::pow(100.0, 0.83)).epsilon(1e-14));

    // doubling the position multiplies imputed equity by 2^b
    const double e1 = impute_equity_one(paper_scale, 40.0);
    const double e2 = impute_equity_one(paper_scale, 80.0);
    CHECK(e2 / e1 == doctest::Approx(std::pow(2.0, 0.83)).epsilon(1e-13));

    CHECK_THROWS_AS(impute_equity_one(identity, 0.0), ValidationError);
}

TEST_CASE("imputation over margins uses the average interbank position") {
    InterbankNetwork net({"A", "B"}, {{0, 1, 8.0}});
    RegressionFit identity;
    identity.intercept = 0.0;
    identity.slope = 1.0;
    const auto equity = impute_equity(identity, net.margins());
    CHECK(equity[0] == doctest::Approx(4.0));  // (0 + 8)/2
    CHECK(equity[1] == doctest::Approx(4.0));

    InterbankNetwork with_isolated({"A", "B", "C"}, {{0, 1, 8.0}});
    CHECK_THROWS_AS(impute_equity(identity, with_isolated.margins()), ValidationError);
}
