#pragma once

#include <vector>

#include "cavitylb/policy.hpp"

namespace cavitylb {

struct solver_options {
    double local_tol = 1e-10;      // per-step error control
    double tail_epsilon = 1e-12;   // stop once the ccdf falls below this
    double consistency_tol = 1e-8; // integral-identity probe tolerance
    double w_max_factor = 50.0;    // integration window safety factor
};

// Sampled stationary ccdf on an adaptive grid. Slopes are stored alongside
// values so interpolation and quadrature stay at integrator accuracy.
struct workload_curve {
    std::vector<double> grid;    // w, strictly increasing from 0
    std::vector<double> values;  // ccdf, strictly decreasing, in [0, 1]
    std::vector<double> derivs;  // d/dw of the ccdf at the grid points
    double boundary = 0.0;       // value at w = 0
    double lambda = 0.0;
    double tail_cut = 0.0;             // last grid point
    double tail_remainder_bound = 0.0; // certified bound on the mass beyond tail_cut

    // Monotone cubic value at w; callers should check beyond_tail first.
    double value_at(double w) const;
    bool beyond_tail(double w) const { return w > tail_cut; }
};

// Integrates ccdf' = T(ccdf) - ccdf from the boundary value down to
// tail_epsilon with an adaptive 5(4) explicit pair. Boundary must lie in
// [lambda, 1] (lambda for workload policies, 1 for replication response
// curves). Throws numeric_error on STEP_UNDERFLOW / INVALID_BOUNDARY and
// when the integral-identity probes exceed consistency_tol.
workload_curve solve_ccdf(const policy_spec& policy, double lambda, double boundary,
                          const solver_options& opts = {});

// Quadrature of the curve plus half the certified tail remainder; the
// reported error is at most tail_remainder_bound.
double mean_workload(const workload_curve& curve);

// Mean waiting time of the stationary policy at this load. Equals
// mean_workload/lambda - 1; evaluated through the arrival-rate integral of
// the same identity, which stays well conditioned at small lambda.
double mean_waiting(const policy_spec& policy, double lambda,
                    const solver_options& opts = {});

struct ccdf_point {
    double value = 0.0;
    bool tail_flagged = false;  // true when w is past tail_cut and the value
                                // is the certified bound, not an interpolant
};

// Probability an arriving job waits more than w: T(ccdf(w)) / lambda.
ccdf_point waiting_ccdf(const policy_spec& policy, double lambda,
                        const workload_curve& curve, double w);

// Queue-length variant: iterates the tail recursion seeded at lambda and
// returns the mean waiting time from the summed tail probabilities.
double sq_mean_waiting(const policy_spec& policy, double lambda, double tol = 1e-14);

}  // namespace cavitylb
