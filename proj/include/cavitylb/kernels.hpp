#pragma once

#include <vector>

#include "cavitylb/policy.hpp"

namespace cavitylb {

enum class root_status { ok, no_root, non_convergence };

// Minimal root of T_lambda(u) = u on (1, u_max]. no_root is a reportable
// outcome, not an error: roots only exist above a policy-dependent load.
struct fixed_point_result {
    root_status status = root_status::no_root;
    double u_lambda = 0.0;
    double residual = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    int iterations = 0;

    bool ok() const { return status == root_status::ok; }
};

// Probability an arrival is routed by the probe path for memory policies;
// the remaining mass goes straight to an idle server.
double mem_pi0(int d, int memory_size, double lambda);

// Arrival rate of work to servers holding >= w work when the workload ccdf
// equals u. Accepts u in [0, u_lambda + 1]; lambda must lie in (0, 1).
double t_map(const policy_spec& policy, double lambda, double u);

// Analytic d/du of t_map.
double t_map_derivative(const policy_spec& policy, double lambda, double u);

fixed_point_result fixed_point_u(const policy_spec& policy, double lambda);

// As fixed_point_u, but throws numeric_error("NO_ROOT"/"NON_CONVERGENCE").
double fixed_point_or_throw(const policy_spec& policy, double lambda);

// Secant slope (u_lambda - T(u_lambda - x)) / x for x in (0, u_lambda].
double h_slope(const policy_spec& policy, double lambda, double x);

// K x^2 h'(x) in closed form; its sign decides where h decreases.
// Only defined for ll_dk policies.
double zeta(const policy_spec& policy, double lambda, double x);

// Smallest b in {0..b_max} with zeta(u_lambda - lambda^b) <= 0 for every
// grid lambda. Throws numeric_error("B_NOT_FOUND") when none works and
// propagates NO_ROOT.
int choose_b(const policy_spec& policy, const std::vector<double>& lambda_grid,
             int b_max = 64);

// Probability an arriving job lands on an idle server.
double p_idle(const policy_spec& policy, double lambda);

// Complement of p_idle computed directly (no 1-x cancellation); needed for
// log(p_idle) at vanishing loads where the busy mass drops below 1e-16.
double busy_arrival_probability(const policy_spec& policy, double lambda);

// T(u)/u extended continuously to u = 0 (limit 0, or lambda*p_1 when the
// policy has a single-probe component).
double t_over_u(const policy_spec& policy, double lambda, double u);

}  // namespace cavitylb
