#pragma once

#include <optional>
#include <utility>

#include "cavitylb/policy.hpp"

namespace cavitylb {

// Parameters of the LL(d,p) family: a fraction p of arrivals probes d servers,
// the rest are routed blindly. p = 1 recovers plain least-loaded-of-d.
struct lldp_params {
    int d = 2;          // >= 2
    double p = 1.0;     // in (0, 1]
    double lambda = 0;  // in (0, 1)

    void validate() const;  // throws std::invalid_argument

    double mixing_b() const;   // 1 - (1-p)*lambda, in (0, 1]
    double series_z() const;   // p*lambda^d / mixing_b, in (0, 1)
};

// Stationary workload ccdf in closed form.
double lldp_ccdf(const lldp_params& params, double w);

// Mean queue length via the explicit series; switches to the exact log form
// (d = 2) or an integral evaluation of the same series when the ratio is too
// close to 1 for direct summation.
double lldp_mean_queue(const lldp_params& params, double tol = 1e-14);

// Mean waiting time, mean_queue/lambda - 1.
double lldp_mean_waiting(const lldp_params& params, double tol = 1e-14);

// (lower, upper) bracket for the mean queue length.
std::pair<double, double> lldp_bounds(const lldp_params& params);

// Upper-bound expression used by lldp_bounds; exposed for the heavy-traffic
// scaling checks.
double lldp_q_tilde(const lldp_params& params);

// M/M/1 workload ccdf lambda*e^{-(1-lambda)w}; the random-routing reference.
double mm1_ccdf(double lambda, double w);

// Maps ll:d and two-point mixes with a single-probe component onto
// lldp_params; empty when the policy has no closed form.
std::optional<lldp_params> as_lldp(const policy_spec& policy, double lambda);

}  // namespace cavitylb
