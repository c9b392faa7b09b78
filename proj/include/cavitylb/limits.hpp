#pragma once

#include <string>
#include <vector>

#include "cavitylb/ode.hpp"
#include "cavitylb/policy.hpp"

namespace cavitylb {

// Closed-form high-load constant: scaled mean waiting time converges to this
// as the load approaches 1. Throws numeric_error("UNSUPPORTED") when the
// policy has no published formula.
double heavy_traffic_limit(const policy_spec& policy);

// Closed-form low-load constant under the -log(p_idle) scaling.
double low_load_limit(const policy_spec& policy);

// Closed-form values of the two limit constants behind the heavy-traffic
// result (slope constant A, exponent constant B).
double closed_form_A(const policy_spec& policy);
double closed_form_B(const policy_spec& policy);

struct extrapolated_value {
    double value = 0.0;
    double residual = 0.0;  // max abs fit deviation over the points used
};

// 1 - 10^-k for k = 2..10; the default approach sequence for the limit fits.
std::vector<double> default_lambda_seq();

// Numeric slope constant: h(u - lambda^b) along lambda_seq, linear fit in
// (1 - lambda) over the four points closest to 1.
extrapolated_value numeric_A(const policy_spec& policy, int b,
                             const std::vector<double>& lambda_seq);

// Numeric exponent constant: log(u - lambda^b)/log(1 - lambda), linear fit in
// 1/(-log(1 - lambda)) (this ratio converges logarithmically).
extrapolated_value numeric_B(const policy_spec& policy, int b,
                             const std::vector<double>& lambda_seq);

enum class curve_scaling { log_one_minus_lambda, log_p_lambda };

struct scaled_row {
    double lambda = 0.0;
    double mean_wait = 0.0;
    double scaled = 0.0;
    bool ok = false;
    std::string error;
};

// One row per lambda: mean waiting time and its scaled value. Errors are
// recorded per row, not fatal. Rows come back sorted by lambda.
std::vector<scaled_row> scaled_curve(const policy_spec& policy,
                                     std::vector<double> lambda_grid,
                                     curve_scaling scaling,
                                     const solver_options& opts = {});

// CSV per the fixed schema: lambda,mean_wait,scaled,scaling,policy.
std::string scaled_curve_csv(const std::vector<scaled_row>& rows, curve_scaling scaling,
                             const policy_spec& policy);

// Quotes a CSV field when it contains a delimiter (policy names carry
// commas).
std::string csv_field(const std::string& text);

// Mean waiting time dispatcher: tail recursion for the queue-length
// discipline, closed form once the load passes 1 - 1e-8 when one exists,
// the cavity ODE otherwise.
double mean_waiting_auto(const policy_spec& policy, double lambda,
                         const solver_options& opts = {});

// Extrapolated -E[W]/log(1-lambda) over lambda = 1 - 10^-k, k in
// [k_lo, k_hi], fitted as c0 + c1/(-log(1-lambda)) on the last four points.
extrapolated_value heavy_extrapolated(const policy_spec& policy, int k_lo = 2,
                                      int k_hi = 8, const solver_options& opts = {});

// Extrapolated -E[W]/log(p_idle) over lambda in {1e-2, 1e-3, 1e-4}, linear
// fit in lambda.
extrapolated_value low_load_extrapolated(const policy_spec& policy,
                                         const solver_options& opts = {});

struct limit_report {
    std::string policy;
    int b = 0;
    double A = 0.0;
    double B = 0.0;
    double heavy_limit = 0.0;            // from the numeric constants
    double closed_form_reference = 0.0;  // published formula
    double low_load_limit = 0.0;         // NaN when unsupported
    double extrapolation_residual = 0.0;
};

limit_report build_limit_report(const policy_spec& policy,
                                const solver_options& opts = {});

}  // namespace cavitylb
