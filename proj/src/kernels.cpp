#include "cavitylb/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cavitylb/errors.hpp"

namespace cavitylb {

namespace {

void check_lambda(double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("lambda must lie in (0, 1)");
}

double ipow(double x, int n) {
    double r = 1.0;
    double b = x;
    for (int e = n; e > 0; e >>= 1) {
        if (e & 1) r *= b;
        b *= b;
    }
    return r;
}

// C(d, j) by multiplicative recurrence; exact in doubles for d <= 64, j small.
double binom(int d, int j) {
    double c = 1.0;
    for (int i = 1; i <= j; ++i) c = c * (d - j + i) / i;
    return c;
}

// Effective coefficient of u^d: lambda for ll/red, lambda*pi0 for memory.
double power_coefficient(const policy_spec& policy, double lambda) {
    if (policy.kind == policy_kind::mem_ll_d)
        return lambda * mem_pi0(policy.d, policy.memory_size, lambda);
    return lambda;
}

}  // namespace

double mem_pi0(int d, int memory_size, double lambda) {
    check_lambda(lambda);
    const double ld = ipow(lambda, d);
    return (1.0 - std::pow(1.0 - ld, 1.0 / (memory_size + 1))) / ld;
}

double t_map(const policy_spec& policy, double lambda, double u) {
    check_lambda(lambda);
    policy.validate();
    switch (policy.kind) {
        case policy_kind::ll_d:
        case policy_kind::red_d:
            return lambda * ipow(u, policy.d);
        case policy_kind::mem_ll_d:
            return power_coefficient(policy, lambda) * ipow(u, policy.d);
        case policy_kind::ll_mix: {
            double sum = 0.0;
            for (const auto& c : policy.choices) sum += c.p * ipow(u, c.d);
            return lambda * sum;
        }
        case policy_kind::ll_dk: {
            const int d = policy.d;
            const int K = policy.k;
            double sum = 0.0;
            double one_minus_u_pow = 1.0;  // (1-u)^j
            for (int j = 0; j < K; ++j) {
                sum += (K - j) * binom(d, j) * ipow(u, d - j) * one_minus_u_pow;
                one_minus_u_pow *= (1.0 - u);
            }
            return lambda / K * sum;
        }
    }
    throw std::invalid_argument("unknown policy kind");
}

double t_map_derivative(const policy_spec& policy, double lambda, double u) {
    check_lambda(lambda);
    policy.validate();
    switch (policy.kind) {
        case policy_kind::ll_d:
        case policy_kind::red_d:
            return lambda * policy.d * ipow(u, policy.d - 1);
        case policy_kind::mem_ll_d:
            return power_coefficient(policy, lambda) * policy.d * ipow(u, policy.d - 1);
        case policy_kind::ll_mix: {
            double sum = 0.0;
            for (const auto& c : policy.choices) sum += c.p * c.d * ipow(u, c.d - 1);
            return lambda * sum;
        }
        case policy_kind::ll_dk: {
            const int d = policy.d;
            const int K = policy.k;
            double sum = 0.0;
            double one_minus_u_pow = 1.0;
            for (int j = 0; j < K; ++j) {
                sum += (d - j) * binom(d, j) * ipow(u, d - j - 1) * one_minus_u_pow;
                one_minus_u_pow *= (1.0 - u);
            }
            return lambda / K * sum;
        }
    }
    throw std::invalid_argument("unknown policy kind");
}

double t_over_u(const policy_spec& policy, double lambda, double u) {
    if (u > 0.0) return t_map(policy, lambda, u) / u;
    if (policy.kind == policy_kind::ll_mix && policy.choices.front().d == 1)
        return lambda * policy.choices.front().p;
    if (policy.d == 1 && policy.kind != policy_kind::ll_dk)
        return power_coefficient(policy, lambda);
    return 0.0;
}

fixed_point_result fixed_point_u(const policy_spec& policy, double lambda) {
    check_lambda(lambda);
    policy.validate();
    fixed_point_result res;

    const int d_max = policy.max_probe();
    if (d_max <= 1) return res;  // T(u) = c*u with c < 1: no root above 1

    const double coeff = power_coefficient(policy, lambda);
    double u_max = 10.0 * std::pow(coeff, 1.0 / (1.0 - d_max));
    u_max = std::min(u_max, 1e6);
    u_max = std::max(u_max, 1.01);

    auto g = [&](double u) { return t_map(policy, lambda, u) - u; };

    // sign scan with geometric step 1e-3: the first bracket gives minimality
    double lo = 1.0;
    double g_lo = g(lo);
    double hi = lo;
    bool bracketed = false;
    while (hi < u_max) {
        hi = std::min(hi * (1.0 + 1e-3), u_max);
        const double g_hi = g(hi);
        if (g_hi >= 0.0) {
            bracketed = true;
            break;
        }
        lo = hi;
        g_lo = g_hi;
    }
    if (!bracketed) return res;

    res.bracket_lo = lo;
    res.bracket_hi = hi;

    const int max_iters = 200;
    int it = 0;
    while (it < max_iters) {
        const double mid = 0.5 * (lo + hi);
        if (hi - lo <= std::max(4.0 * std::numeric_limits<double>::epsilon() * mid, 1e-15))
            break;
        const double g_mid = g(mid);
        if (g_mid < 0.0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
        ++it;
    }
    res.iterations = it;
    if (it >= max_iters) {
        res.status = root_status::non_convergence;
        return res;
    }
    res.u_lambda = hi;  // the side with g >= 0 keeps u >= true root
    res.residual = std::abs(g(res.u_lambda));
    res.status = root_status::ok;
    return res;
}

double fixed_point_or_throw(const policy_spec& policy, double lambda) {
    const auto res = fixed_point_u(policy, lambda);
    if (res.status == root_status::no_root)
        throw numeric_error("NO_ROOT",
                            "no fixed point of the policy map above 1 at lambda=" +
                                std::to_string(lambda));
    if (res.status == root_status::non_convergence)
        throw numeric_error("NON_CONVERGENCE", "fixed point bisection did not converge");
    return res.u_lambda;
}

double h_slope(const policy_spec& policy, double lambda, double x) {
    const double u = fixed_point_or_throw(policy, lambda);
    if (!(x > 0.0)) throw std::invalid_argument("h_slope needs x > 0");
    return (u - t_map(policy, lambda, u - x)) / x;
}

double zeta(const policy_spec& policy, double lambda, double x) {
    if (policy.kind != policy_kind::ll_dk)
        throw numeric_error("UNSUPPORTED_POLICY", "zeta is defined for ll_dk policies only");
    const double u = fixed_point_or_throw(policy, lambda);
    const int d = policy.d;
    const int K = policy.k;
    double sum_deriv = 0.0;  // sum (d-j) C(d,j) (u-x)^{d-j-1} (1-u+x)^j
    double sum_plain = 0.0;  // sum C(d,j) (u-x)^{d-j} (1-u+x)^j
    double q_pow = 1.0;      // (1-u+x)^j
    for (int j = 0; j < K; ++j) {
        const double c = binom(d, j);
        sum_deriv += (d - j) * c * ipow(u - x, d - j - 1) * q_pow;
        sum_plain += c * ipow(u - x, d - j) * q_pow;
        q_pow *= (1.0 - u + x);
    }
    return -K * u + lambda * u * sum_deriv - lambda * (d - K) * sum_plain;
}

int choose_b(const policy_spec& policy, const std::vector<double>& lambda_grid, int b_max) {
    if (policy.kind != policy_kind::ll_dk)
        throw numeric_error("UNSUPPORTED_POLICY", "choose_b is defined for ll_dk policies only");
    if (lambda_grid.empty()) throw std::invalid_argument("choose_b needs a lambda grid");

    std::vector<double> roots;
    roots.reserve(lambda_grid.size());
    for (double lam : lambda_grid) roots.push_back(fixed_point_or_throw(policy, lam));

    double last_failing = lambda_grid.front();
    for (int b = 0; b <= b_max; ++b) {
        bool all_ok = true;
        for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
            const double lam = lambda_grid[i];
            const double x = roots[i] - ipow(lam, b);
            if (!(x > 0.0) || zeta(policy, lam, x) > 0.0) {
                all_ok = false;
                last_failing = lam;
                break;
            }
        }
        if (all_ok) return b;
    }
    throw numeric_error("B_NOT_FOUND", "no b <= " + std::to_string(b_max) +
                                           " makes zeta nonpositive on the whole grid"
                                           " (still failing at lambda=" +
                                           std::to_string(last_failing) + ")");
}

double busy_arrival_probability(const policy_spec& policy, double lambda) {
    check_lambda(lambda);
    policy.validate();
    switch (policy.kind) {
        case policy_kind::ll_d:
            return ipow(lambda, policy.d);
        case policy_kind::ll_mix: {
            double busy = 0.0;
            for (const auto& c : policy.choices) busy += c.p * ipow(lambda, c.d);
            return busy;
        }
        case policy_kind::ll_dk: {
            const int d = policy.d;
            const int K = policy.k;
            double busy = 0.0;
            double q_pow = 1.0;  // (1-lambda)^j
            for (int j = 0; j < K; ++j) {
                busy += static_cast<double>(K - j) / K * binom(d, j) * q_pow * ipow(lambda, d - j);
                q_pow *= (1.0 - lambda);
            }
            return busy;
        }
        case policy_kind::red_d:
        case policy_kind::mem_ll_d:
            throw numeric_error("UNSUPPORTED_POLICY",
                                "idle-assignment probability is not defined for " + policy.name());
    }
    throw std::invalid_argument("unknown policy kind");
}

double p_idle(const policy_spec& policy, double lambda) {
    return 1.0 - busy_arrival_probability(policy, lambda);
}

}  // namespace cavitylb
