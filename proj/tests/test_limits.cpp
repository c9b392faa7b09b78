#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "cavitylb/errors.hpp"
#include "cavitylb/kernels.hpp"
#include "cavitylb/limits.hpp"
#include "cavitylb/policy.hpp"

using namespace cavitylb;

TEST_CASE("closed-form high-load constants") {
    CHECK(heavy_traffic_limit(policy_spec::ll(3)) == doctest::Approx(0.5));
    CHECK(heavy_traffic_limit(policy_spec::lldk(4, 2)) == doctest::Approx(1.0));
    CHECK(heavy_traffic_limit(policy_spec::mix({{1, 0.5}, {2, 0.5}})) ==
          doctest::Approx(2.0));
    CHECK(heavy_traffic_limit(policy_spec::red(3)) == doctest::Approx(0.5));
    CHECK(heavy_traffic_limit(policy_spec::mem(2, 1)) == doctest::Approx(0.5));
    CHECK(heavy_traffic_limit(policy_spec::ll(3).as_queue_length()) ==
          doctest::Approx(1.0 / std::log(3.0)));
    CHECK(heavy_traffic_limit(policy_spec::lldk(4, 2).as_queue_length()) ==
          doctest::Approx(1.0 / std::log(2.0)));
    CHECK_THROWS_AS(heavy_traffic_limit(policy_spec::ll(1)), numeric_error);
    CHECK_THROWS_AS(heavy_traffic_limit(policy_spec::red(2).as_queue_length()),
                    numeric_error);
}

TEST_CASE("closed-form low-load constants") {
    CHECK(low_load_limit(policy_spec::ll(3)) == doctest::Approx(1.0 / 3));
    CHECK(low_load_limit(policy_spec::lldk(3, 2)) == doctest::Approx(0.5));
    CHECK(low_load_limit(policy_spec::mix({{1, 0.5}, {2, 0.5}})) == doctest::Approx(1.0));
    CHECK(low_load_limit(policy_spec::mix({{2, 0.3}, {4, 0.7}})) == doctest::Approx(0.5));
    CHECK_THROWS_AS(low_load_limit(policy_spec::red(2)), numeric_error);
    CHECK_THROWS_AS(low_load_limit(policy_spec::mem(2, 1)), numeric_error);
    CHECK_THROWS_AS(low_load_limit(policy_spec::ll(2).as_queue_length()), numeric_error);
}

TEST_CASE("numeric slope constant") {
    const auto seq = default_lambda_seq();
    CHECK(numeric_A(policy_spec::ll(2), 0, seq).value == doctest::Approx(2.0).epsilon(0.01));
    const policy_spec ll32 = policy_spec::lldk(3, 2);
    const int b = choose_b(ll32, {0.99, 0.999});
    CHECK(numeric_A(ll32, b, seq).value == doctest::Approx(1.5).epsilon(0.01));
    CHECK(numeric_A(policy_spec::mix({{2, 0.5}, {4, 0.5}}), 0, seq).value ==
          doctest::Approx(3.0).epsilon(0.01));
}

TEST_CASE("numeric exponent constant") {
    const auto seq = default_lambda_seq();
    CHECK(numeric_B(policy_spec::ll(2), 0, seq).value == doctest::Approx(1.0).epsilon(0.01));
    const policy_spec ll32 = policy_spec::lldk(3, 2);
    CHECK(numeric_B(ll32, choose_b(ll32, {0.99, 0.999}), seq).value ==
          doctest::Approx(1.0).epsilon(0.01));
    CHECK(numeric_B(policy_spec::mem(2, 1), 0, seq).value ==
          doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("scaled curve rows") {
    const auto rows = scaled_curve(policy_spec::ll(2), {0.5},
                                   curve_scaling::log_one_minus_lambda);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].ok);
    // closed form: E[W] = -log(0.75)/0.25 - 1, scaled by -log(0.5)
    CHECK(rows[0].mean_wait == doctest::Approx(0.1507282898071).epsilon(1e-8));
    CHECK(rows[0].scaled == doctest::Approx(0.2174549560928).epsilon(1e-8));
}

TEST_CASE("scaled curve vanishes at low load under the plain scaling") {
    const auto rows = scaled_curve(policy_spec::ll(2), {1e-3, 1e-2},
                                   curve_scaling::log_one_minus_lambda);
    CHECK(rows[0].scaled < 1e-3);
    CHECK(rows[1].scaled < 1e-1);
    CHECK(rows[0].scaled < rows[1].scaled);
}

TEST_CASE("row failures are flagged, not fatal") {
    const auto rows = scaled_curve(policy_spec::red(2), {0.5, 0.7},
                                   curve_scaling::log_one_minus_lambda);
    REQUIRE(rows.size() == 2);
    CHECK(!rows[0].ok);
    CHECK(rows[0].error == "UNSUPPORTED_POLICY");
    CHECK_THROWS_AS(
        scaled_curve(policy_spec::red(2), {0.5}, curve_scaling::log_p_lambda),
        numeric_error);
}

TEST_CASE("csv schema") {
    const policy_spec p = policy_spec::ll(2);
    const auto rows = scaled_curve(p, {0.3, 0.6}, curve_scaling::log_p_lambda);
    const std::string csv = scaled_curve_csv(rows, curve_scaling::log_p_lambda, p);
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);
    CHECK(line == "lambda,mean_wait,scaled,scaling,policy");
    std::getline(is, line);
    CHECK(line.find("0.3,") == 0);
    CHECK(line.find("logplambda,ll:d=2") != std::string::npos);
    int rows_seen = 1;
    while (std::getline(is, line) && !line.empty()) ++rows_seen;
    CHECK(rows_seen == 2);

    // policy names containing the delimiter are quoted
    const policy_spec batch = policy_spec::lldk(4, 2);
    const auto batch_rows =
        scaled_curve(batch, {0.5}, curve_scaling::log_one_minus_lambda);
    const std::string batch_csv =
        scaled_curve_csv(batch_rows, curve_scaling::log_one_minus_lambda, batch);
    CHECK(batch_csv.find("\"lldk:d=4,k=2\"") != std::string::npos);
}

TEST_CASE("heavy-traffic extrapolation reaches the closed form") {
    CHECK(heavy_extrapolated(policy_spec::ll(2)).value ==
          doctest::Approx(1.0).epsilon(0.02));
    CHECK(heavy_extrapolated(policy_spec::lldk(3, 2)).value ==
          doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("raw high-load points climb toward the limit") {
    for (int d : {2, 3}) {
        const policy_spec p = policy_spec::ll(d);
        std::vector<double> grid;
        for (int k = 2; k <= 8; ++k) grid.push_back(1.0 - std::pow(10.0, -k));
        const auto rows = scaled_curve(p, grid, curve_scaling::log_one_minus_lambda);
        double prev = 0.0;
        for (const auto& row : rows) {
            REQUIRE(row.ok);
            CHECK(row.scaled > prev);
            prev = row.scaled;
        }
        CHECK(prev < heavy_traffic_limit(p));
    }
}

TEST_CASE("low-load extrapolation under the idle-probability scaling") {
    CHECK(low_load_extrapolated(policy_spec::ll(2)).value ==
          doctest::Approx(0.5).epsilon(0.05));
    CHECK(low_load_extrapolated(policy_spec::lldk(3, 2)).value ==
          doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("idle-probability scaling matches the plain one near saturation") {
    // log(p_idle)/log(1-lambda) -> 1, fitted in 1/(-log(1-lambda))
    for (const policy_spec& p : {policy_spec::ll(2), policy_spec::lldk(4, 2)}) {
        std::vector<double> xs, ys;
        for (int k = 4; k <= 10; ++k) {
            const double lam = 1.0 - std::pow(10.0, -k);
            xs.push_back(-1.0 / std::log1p(-lam));
            ys.push_back(std::log(p_idle(p, lam)) / std::log1p(-lam));
        }
        const double slope = (ys.back() - ys[ys.size() - 2]) / (xs.back() - xs[xs.size() - 2]);
        const double intercept = ys.back() - slope * xs.back();
        CHECK(intercept == doctest::Approx(1.0).epsilon(0.01));
    }
}

TEST_CASE("limit report ties the numeric and closed-form routes") {
    const auto report = build_limit_report(policy_spec::lldk(4, 2));
    CHECK(report.closed_form_reference == doctest::Approx(1.0));
    CHECK(report.heavy_limit == doctest::Approx(1.0).epsilon(0.01));
    CHECK(report.A == doctest::Approx(2.0).epsilon(0.01));
    CHECK(report.B == doctest::Approx(1.0).epsilon(0.01));
    CHECK(report.low_load_limit == doctest::Approx(1.0 / 3));

    const auto sq_report = build_limit_report(policy_spec::lldk(4, 2).as_queue_length());
    CHECK(sq_report.heavy_limit == doctest::Approx(1.0 / std::log(2.0)).epsilon(0.01));
    CHECK(std::isnan(sq_report.low_load_limit));
}

TEST_CASE("idle-probability scaling flattens the two-probe curve") {
    std::vector<double> grid;
    for (double lam = 0.1; lam < 0.905; lam += 0.05) grid.push_back(lam);
    const auto rows =
        scaled_curve(policy_spec::ll(2), grid, curve_scaling::log_p_lambda);
    double lo = 1e300, hi = 0.0;
    for (const auto& row : rows) {
        REQUIRE(row.ok);
        lo = std::min(lo, row.scaled);
        hi = std::max(hi, row.scaled);
    }
    CHECK(hi / lo <= 2.0);
}

TEST_CASE("extrapolation matches the closed form for three probe counts") {
    for (int d : {2, 3, 4}) {
        CHECK(heavy_extrapolated(policy_spec::ll(d)).value ==
              doctest::Approx(1.0 / (d - 1)).epsilon(0.02));
    }
}

TEST_CASE("memory policy reaches its slower divergence rate") {
    // exponent constant 1/2 at memory size 1: half the plain rate
    CHECK(heavy_extrapolated(policy_spec::mem(2, 1)).value ==
          doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("queue-length dispatcher uses the recursion") {
    const auto rows = scaled_curve(policy_spec::ll(2).as_queue_length(), {0.5},
                                   curve_scaling::log_one_minus_lambda);
    REQUIRE(rows[0].ok);
    CHECK(rows[0].mean_wait == doctest::Approx(0.2656860360875726).epsilon(1e-10));
}
