#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "cavitylb/errors.hpp"
#include "cavitylb/kernels.hpp"
#include "cavitylb/policy.hpp"

using namespace cavitylb;

namespace {

const policy_spec ll2 = policy_spec::ll(2);
const policy_spec ll3 = policy_spec::ll(3);
const policy_spec ll32 = policy_spec::lldk(3, 2);
const policy_spec mix12 = policy_spec::mix({{1, 0.5}, {2, 0.5}});

}  // namespace

TEST_CASE("policy map values") {
    CHECK(t_map(ll2, 0.5, 0.5) == doctest::Approx(0.125).epsilon(1e-14));
    CHECK(t_map(ll32, 0.5, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
    // (0.6/2) * [2*1*0.5^3 + 1*3*0.5^2*0.5]
    CHECK(t_map(ll32, 0.6, 0.5) == doctest::Approx(0.1875).epsilon(1e-14));
    CHECK(t_map(ll2, 0.5, 0.0) == 0.0);
    CHECK(t_map(ll32, 0.9, 0.0) == 0.0);
    CHECK(t_map(mix12, 0.8, 0.0) == 0.0);
    CHECK_THROWS_AS(t_map(ll2, 1.5, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(t_map(ll2, 0.0, 0.5), std::invalid_argument);
}

TEST_CASE("memory policy map") {
    const policy_spec mem21 = policy_spec::mem(2, 1);
    const double lam = 0.5;
    const double pi0 = mem_pi0(2, 1, lam);
    CHECK(pi0 == doctest::Approx((1.0 - std::sqrt(0.75)) / 0.25).epsilon(1e-14));
    CHECK(t_map(mem21, lam, 0.7) == doctest::Approx(lam * pi0 * 0.49).epsilon(1e-14));
}

TEST_CASE("policy map derivative values") {
    CHECK(t_map_derivative(ll2, 0.5, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(t_map_derivative(ll32, 0.999999999, 1.0) == doctest::Approx(1.5).epsilon(1e-8));
    CHECK(t_map_derivative(mix12, 0.8, 1.0) == doctest::Approx(1.2).epsilon(1e-14));
}

TEST_CASE("derivative agrees with central differences") {
    const double step = 1e-5;
    for (const policy_spec& p :
         {ll2, ll3, ll32, mix12, policy_spec::lldk(5, 3), policy_spec::mem(3, 2)}) {
        for (double lam : {0.3, 0.7, 0.95}) {
            for (double u = 0.05; u < 0.99; u += 0.07) {
                const double fd =
                    (t_map(p, lam, u + step) - t_map(p, lam, u - step)) / (2.0 * step);
                const double an = t_map_derivative(p, lam, u);
                CHECK(an == doctest::Approx(fd).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("fixed point matches the closed form for plain least-loaded") {
    for (int d = 2; d <= 6; ++d) {
        const policy_spec p = policy_spec::ll(d);
        for (double lam : {0.1, 0.3, 0.5, 0.7, 0.9, 0.99}) {
            const auto res = fixed_point_u(p, lam);
            REQUIRE(res.ok());
            CHECK(res.u_lambda ==
                  doctest::Approx(std::pow(lam, 1.0 / (1.0 - d))).epsilon(1e-10));
            CHECK(res.residual <= 1e-12);
        }
    }
}

TEST_CASE("fixed point examples") {
    CHECK(fixed_point_u(ll2, 0.5).u_lambda == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(fixed_point_u(ll3, 0.81).u_lambda ==
          doctest::Approx(1.0 / 0.9).epsilon(1e-10));
    // 0.8*(0.5u + 0.5u^2) = u  =>  u = 1.5
    CHECK(fixed_point_u(mix12, 0.8).u_lambda == doctest::Approx(1.5).epsilon(1e-10));
}

TEST_CASE("minimality: no earlier sign change") {
    for (double lam : {0.92, 0.97}) {
        const auto res = fixed_point_u(ll32, lam);
        REQUIRE(res.ok());
        double u = 1.0 + 1e-6;
        while (u < res.u_lambda - 1e-4) {
            CHECK(t_map(ll32, lam, u) < u);
            u *= 1.0 + 1e-3;
        }
    }
}

TEST_CASE("no-root outcomes are reported, not thrown") {
    CHECK(fixed_point_u(ll32, 0.5).status == root_status::no_root);
    CHECK(fixed_point_u(policy_spec::ll(1), 0.5).status == root_status::no_root);
    CHECK_THROWS_AS(h_slope(ll32, 0.5, 0.1), numeric_error);
}

TEST_CASE("secant slope") {
    CHECK(h_slope(ll2, 0.5, 1.0) == doctest::Approx(1.5).epsilon(1e-10));
    // x -> 0 limit is the map derivative at the fixed point
    for (const policy_spec& p : {ll2, ll32, mix12}) {
        const double lam = p.kind == policy_kind::ll_dk ? 0.95 : 0.8;
        const double u = fixed_point_or_throw(p, lam);
        CHECK(h_slope(p, lam, 1e-7) ==
              doctest::Approx(t_map_derivative(p, lam, u)).epsilon(1e-6));
    }
    // heavy-traffic value of h at the unit offset approaches the probe count
    CHECK(h_slope(ll2, 1.0 - 1e-9, fixed_point_or_throw(ll2, 1.0 - 1e-9) - 1.0) ==
          doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("slope indicator against a finite-difference oracle") {
    const double lam = 0.95;
    const double x = 0.3;
    const double dx = 1e-6;
    const double hp = (h_slope(ll32, lam, x + dx) - h_slope(ll32, lam, x - dx)) / (2.0 * dx);
    const double oracle = ll32.k * x * x * hp;
    CHECK(zeta(ll32, lam, x) == doctest::Approx(oracle).epsilon(1e-5));
}

TEST_CASE("slope indicator decreases past the unit offset") {
    CHECK(zeta(ll32, 0.95, 0.1) > zeta(ll32, 0.95, 0.2));
}

TEST_CASE("slope indicator closed form at the unit offset") {
    const policy_spec ll21 = policy_spec::lldk(2, 1);
    const double lam = 0.9;
    const double u = fixed_point_or_throw(ll21, lam);
    const double expected = (lam * 2 - 1) * u - lam * (2 - 1);
    CHECK(zeta(ll21, lam, u - 1.0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK_THROWS_AS(zeta(ll2, 0.9, 0.1), numeric_error);
}

TEST_CASE("offset exponent search") {
    CHECK(choose_b(policy_spec::lldk(2, 1), {0.9, 0.99}) == 0);
    const int b32 = choose_b(ll32, {0.99, 0.999});
    CHECK(b32 >= 1);
    CHECK(b32 <= 64);
    // regression pin; recorded from the zeta sign search
    CHECK(b32 == 2);
    CHECK_THROWS_WITH_AS(choose_b(ll32, {0.5}), doctest::Contains("no fixed point"),
                         numeric_error);
}

TEST_CASE("idle-assignment probability") {
    CHECK(p_idle(ll2, 0.5) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(p_idle(ll32, 0.5) == doctest::Approx(0.6875).epsilon(1e-14));
    CHECK(p_idle(mix12, 0.5) == doctest::Approx(0.625).epsilon(1e-14));
    CHECK_THROWS_AS(p_idle(policy_spec::red(2), 0.5), numeric_error);
    CHECK_THROWS_AS(p_idle(policy_spec::mem(2, 1), 0.5), numeric_error);
    // identity with the busy-arrival probability
    for (const policy_spec& p : {ll2, ll3, mix12}) {
        for (double lam = 0.1; lam < 1.0; lam += 0.17) {
            CHECK(p_idle(p, lam) ==
                  doctest::Approx(1.0 - t_map(p, lam, lam) / lam).epsilon(1e-12));
        }
    }
}

TEST_CASE("map stays below the diagonal and below lambda*u") {
    // 1000+ point (lambda, u) grid per policy
    for (const policy_spec& p :
         {ll2, ll3, ll32, mix12, policy_spec::lldk(5, 3), policy_spec::red(4)}) {
        for (int i = 1; i <= 33; ++i) {
            const double lam = i / 34.0;
            for (int j = 1; j <= 33; ++j) {
                const double u = j / 33.0;
                const double t = t_map(p, lam, u);
                CHECK(t < u);
                CHECK(t <= lam * u + 1e-12);
            }
        }
    }
}

TEST_CASE("map-over-u ratio is nondecreasing") {
    for (const policy_spec& p : {ll2, ll32, mix12, policy_spec::lldk(4, 3)}) {
        for (int i = 1; i <= 9; ++i) {
            const double lam = i / 10.0;
            double prev = t_over_u(p, lam, 0.02);
            for (double u = 0.04; u < 1.0; u += 0.02) {
                const double cur = t_over_u(p, lam, u);
                CHECK(cur >= prev - 1e-12);
                prev = cur;
            }
        }
    }
}

TEST_CASE("slope monotonicity window holds with the searched offset") {
    const std::vector<double> grid{0.92, 0.95, 0.99};
    const int b = choose_b(ll32, grid);
    for (double lam : grid) {
        const double u = fixed_point_or_throw(ll32, lam);
        const double x_lo = u - std::pow(lam, b);
        double prev = h_slope(ll32, lam, x_lo);
        for (int i = 1; i <= 100; ++i) {
            const double x = x_lo + (u * (1 - 1e-9) - x_lo) * i / 100.0;
            const double cur = h_slope(ll32, lam, x);
            CHECK(cur <= prev + 1e-9);
            prev = cur;
        }
    }
}
