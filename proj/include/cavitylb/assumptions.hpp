#pragma once

#include <string>
#include <vector>

#include "cavitylb/policy.hpp"

namespace cavitylb {

struct assumption_options {
    double limit_tol = 0.01;   // relative tolerance on extrapolated constants
    double mono_slack = 1e-9;  // slack for monotonicity comparisons
    int x_points = 100;        // grid size for the slope-monotonicity scan
};

enum class check_status { pass, fail, skipped };

struct check_witness {
    double lambda = 0.0;
    double x = 0.0;         // probe location (x, u or w depending on the check)
    double observed = 0.0;  // offending or summarizing value
};

struct assumption_report {
    std::string id;  // "A1".."A7", "T_DOMINATED", "U_PRIME"
    std::string policy;
    std::vector<double> lambda_grid;
    check_status status = check_status::skipped;
    std::vector<check_witness> witnesses;
    std::string note;
};

// High-load grid used by default for the numeric verification harness.
std::vector<double> default_check_grid();

// Grid/sample verification of sufficient condition `id` in 1..7. SKIPPED when
// a precondition (fixed-point existence, p_idle support) fails.
assumption_report check_assumption(const policy_spec& policy, int id,
                                   const std::vector<double>& lambda_grid,
                                   const assumption_options& opts = {});

// T(u) <= lambda*u over a dense (lambda, u) grid; batch policies only.
assumption_report check_T_dominated(const policy_spec& policy, int points_per_axis = 101);

// Finite-difference limits of the fixed-point derivatives against the closed
// forms (first derivative always, higher orders where they stay stable).
assumption_report check_u_prime_limit(const policy_spec& policy,
                                      const assumption_options& opts = {});

// JSON serialization: {assumption_id, policy, status, witnesses[]}.
std::string report_to_json(const assumption_report& report);

struct majorization_result {
    bool holds = false;
    // rows follow the original (p, a) entries, columns the floor/ceil pair
    std::vector<std::vector<double>> matrix;
    std::string diagnostics;
};

// Builds and verifies the transfer matrix showing that the floor/ceil pair
// (q, b) is dominated by (p, a) for every convex test function, then checks
// the implied mean-wait ordering on a load grid. (q, b) must come from
// floor_ceil_mix. Throws numeric_error("CONSTRUCTION_FAILED") when the fill
// cannot meet the two equality constraints.
majorization_result majorization_certificate(const std::vector<double>& p,
                                             const std::vector<int>& a,
                                             const std::vector<double>& q,
                                             const std::vector<int>& b);

// The two-point (or degenerate one-point) probe distribution with the same
// mean probe count: weights on (floor(mean), ceil(mean)).
void floor_ceil_mix(const std::vector<double>& p, const std::vector<int>& a,
                    std::vector<double>& q_out, std::vector<int>& b_out);

}  // namespace cavitylb
