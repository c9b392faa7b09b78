#include "cavitylb/closed_form.hpp"

#include <cmath>
#include <stdexcept>

namespace cavitylb {

namespace {

double ipow(double x, int n) {
    double r = 1.0;
    double b = x;
    for (int e = n; e > 0; e >>= 1) {
        if (e & 1) r *= b;
        b *= b;
    }
    return r;
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb,
                        double tol, int depth) {
    const double mid = 0.5 * (a + b);
    const double lm = 0.5 * (a + mid);
    const double rm = 0.5 * (mid + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double left = (mid - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - mid) / 6.0 * (fm + 4.0 * frm + fb);
    const double refined = left + right;
    if (depth <= 0 || std::abs(refined - whole) <= 15.0 * tol)
        return refined + (refined - whole) / 15.0;
    return adaptive_simpson(f, a, mid, fa, flm, fm, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, mid, b, fm, frm, fb, 0.5 * tol, depth - 1);
}

// sum_{n>=0} z^n / (1 + n*m) evaluated as the integral of 1/(1 - z t^m) over
// [0, 1]. The integrand peaks at height 1/(1-z) in a window of width
// (1-z)/m at t = 1; that mass is peeled off through the linearized
// denominator (exact log) and only the bounded remainder is quadratured.
double series_by_integral(double z, int m) {
    const double analytic = std::log1p(z * m / (1.0 - z)) / (z * m);
    auto rest = [z, m](double t) {
        return 1.0 / (1.0 - z * ipow(t, m)) - 1.0 / ((1.0 - z) + z * m * (1.0 - t));
    };
    const double smooth = adaptive_simpson(rest, 0.0, 1.0, rest(0.0), rest(0.5), rest(1.0),
                                           1e-13 * (1.0 + analytic), 40);
    return analytic + smooth;
}

}  // namespace

void lldp_params::validate() const {
    if (d < 2) throw std::invalid_argument("lldp needs d >= 2");
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("lldp needs p in (0, 1]");
    if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("lldp needs lambda in (0, 1)");
}

double lldp_params::mixing_b() const { return 1.0 - (1.0 - p) * lambda; }

double lldp_params::series_z() const { return p * ipow(lambda, d) / mixing_b(); }

double lldp_ccdf(const lldp_params& params, double w) {
    params.validate();
    if (w < 0.0) throw std::invalid_argument("lldp_ccdf needs w >= 0");
    const double b = params.mixing_b();
    const double pld = params.p * ipow(params.lambda, params.d);
    const double grow = std::exp((params.d - 1) * b * w);
    const double denom = pld + (b - pld) * grow;
    if (!std::isfinite(denom)) return 0.0;
    return params.lambda * std::pow(b / denom, 1.0 / (params.d - 1));
}

double lldp_mean_queue(const lldp_params& params, double tol) {
    params.validate();
    const double b = params.mixing_b();
    const double z = params.series_z();
    const int m = params.d - 1;

    if (z > 1.0 - 1e-6) {
        // direct summation is too slow here
        if (params.d == 2)
            return -std::log1p(-z) / (params.p * params.lambda);
        return params.lambda / b * series_by_integral(z, m);
    }

    // compensated partial sums of z^n / (1 + n*m)
    double sum = 0.0;
    double comp = 0.0;
    double z_pow = 1.0;
    for (int n = 0; n < 100000000; ++n) {
        const double term = z_pow / (1.0 + static_cast<double>(n) * m);
        const double y = term - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if (n > 0 && term < tol * sum) break;
        z_pow *= z;
    }
    return params.lambda / b * sum;
}

double lldp_mean_waiting(const lldp_params& params, double tol) {
    return lldp_mean_queue(params, tol) / params.lambda - 1.0;
}

double lldp_q_tilde(const lldp_params& params) {
    params.validate();
    const double b = params.mixing_b();
    const double pld = params.p * ipow(params.lambda, params.d);
    return params.lambda / b * (1.0 + std::log(b / (b - pld)) / (params.d - 1));
}

std::pair<double, double> lldp_bounds(const lldp_params& params) {
    const double upper = lldp_q_tilde(params);
    const double b = params.mixing_b();
    const double pi2_6 = 1.6449340668482264;  // sum 1/n^2
    const double slack = ipow(params.lambda, params.d + 1) /
                         (params.p * (params.d - 1) * (params.d - 1) * b * b) * pi2_6;
    return {upper - slack, upper};
}

double mm1_ccdf(double lambda, double w) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("lambda must lie in (0, 1)");
    if (w < 0.0) throw std::invalid_argument("mm1_ccdf needs w >= 0");
    return lambda * std::exp(-(1.0 - lambda) * w);
}

std::optional<lldp_params> as_lldp(const policy_spec& policy, double lambda) {
    if (policy.discipline != discipline_kind::workload) return std::nullopt;
    if (policy.kind == policy_kind::ll_d && policy.d >= 2)
        return lldp_params{policy.d, 1.0, lambda};
    if (policy.kind == policy_kind::ll_mix) {
        if (policy.choices.size() == 1 && policy.choices[0].d >= 2)
            return lldp_params{policy.choices[0].d, 1.0, lambda};
        if (policy.choices.size() == 2 && policy.choices[0].d == 1)
            return lldp_params{policy.choices[1].d, policy.choices[1].p, lambda};
    }
    return std::nullopt;
}

}  // namespace cavitylb
