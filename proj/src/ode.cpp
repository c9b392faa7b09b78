#include "cavitylb/ode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cavitylb/errors.hpp"
#include "cavitylb/kernels.hpp"

namespace cavitylb {

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

// Closed-form heavy-traffic constant used only to size the integration
// window; 0 means "no plateau" (single-probe policies).
double plateau_scale(const policy_spec& policy) {
    switch (policy.kind) {
        case policy_kind::ll_d:
        case policy_kind::red_d:
            return policy.d >= 2 ? 1.0 / (policy.d - 1) : 0.0;
        case policy_kind::mem_ll_d:
            return policy.d >= 2 ? 1.0 / ((policy.memory_size + 1.0) * (policy.d - 1)) : 0.0;
        case policy_kind::ll_dk:
            return static_cast<double>(policy.k) / (policy.d - policy.k);
        case policy_kind::ll_mix:
            return 1.0 / (policy.mean_probe() - 1.0);
    }
    return 1.0;
}

double hermite_value(double y0, double m0, double y1, double m1, double h, double theta) {
    const double t2 = theta * theta;
    const double omt = 1.0 - theta;
    return omt * omt * (1.0 + 2.0 * theta) * y0 + t2 * (3.0 - 2.0 * theta) * y1 +
           theta * omt * omt * h * m0 + t2 * (theta - 1.0) * h * m1;
}

struct quad_fn {
    const std::vector<double>& grid;
    const std::vector<double>& vals;
    const std::vector<double>& ders;
};

// Trapezoid with endpoint-slope correction: O(h^5) per interval.
double corrected_trapezoid(const quad_fn& f) {
    double sum = 0.0;
    double comp = 0.0;
    for (std::size_t i = 0; i + 1 < f.grid.size(); ++i) {
        const double h = f.grid[i + 1] - f.grid[i];
        const double term = 0.5 * h * (f.vals[i] + f.vals[i + 1]) -
                            h * h / 12.0 * (f.ders[i + 1] - f.ders[i]);
        const double y = term - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

// integral over [0, upper] of T(v)/v dv by adaptive Simpson; the integrand is
// bounded by lambda and smooth.
double integral_t_over_u(const policy_spec& policy, double lambda, double upper) {
    if (upper <= 0.0) return 0.0;
    struct rec {
        const policy_spec& pol;
        double lam;
        double operator()(double v) const { return t_over_u(pol, lam, v); }
        double run(double a, double b, double fa, double fm, double fb, double tol,
                   int depth) const {
            const double mid = 0.5 * (a + b);
            const double lm = 0.5 * (a + mid), rm = 0.5 * (mid + b);
            const double flm = (*this)(lm), frm = (*this)(rm);
            const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
            const double fine = (mid - a) / 6.0 * (fa + 4.0 * flm + fm) +
                                (b - mid) / 6.0 * (fm + 4.0 * frm + fb);
            if (depth <= 0 || std::abs(fine - whole) <= 15.0 * tol)
                return fine + (fine - whole) / 15.0;
            return run(a, mid, fa, flm, fm, 0.5 * tol, depth - 1) +
                   run(mid, b, fm, frm, fb, 0.5 * tol, depth - 1);
        }
    } f{policy, lambda};
    const double fa = f(0.0), fm = f(0.5 * upper), fb = f(upper);
    return f.run(0.0, upper, fa, fm, fb, 1e-12 * lambda * upper + 1e-300, 48);
}

// Certified bound on the waiting-probability mass past the tail cut. Past the
// cut the ccdf is dominated by y_cut*e^{-(1-lambda)s}, so substituting
// v = ccdf gives (1/(lambda(1-lambda))) * integral_0^{y_cut} T(v)/v dv.
double waiting_tail_bound(const policy_spec& policy, double lambda, double y_cut) {
    return integral_t_over_u(policy, lambda, y_cut) / (lambda * (1.0 - lambda));
}

// Fixed-point identity probe: ccdf(w) must equal
// boundary*e^{-w} + integral_0^w T(ccdf(u)) e^{u-w} du. The integral is done
// exactly on the piecewise-cubic model of T along the curve.
void check_integral_identity(const policy_spec& policy, double lambda,
                             const workload_curve& c, double tol) {
    const std::size_t n = c.grid.size();
    if (n < 4) return;
    std::vector<double> t_val(n), t_der(n);
    for (std::size_t i = 0; i < n; ++i) {
        t_val[i] = t_map(policy, lambda, c.values[i]);
        t_der[i] = t_map_derivative(policy, lambda, c.values[i]) * c.derivs[i];
    }
    for (int probe = 1; probe <= 10; ++probe) {
        const std::size_t pi = static_cast<std::size_t>(probe * (n - 1) / 11);
        if (pi == 0) continue;
        const double w = c.grid[pi];
        double integral = 0.0;
        for (std::size_t i = 0; i < pi; ++i) {
            const double a = c.grid[i], b = c.grid[i + 1];
            if (b - w < -700.0) continue;
            const double h = b - a;
            const double c0 = t_val[i];
            const double c1 = t_der[i];
            const double c2 = (3.0 * (t_val[i + 1] - t_val[i]) / h - 2.0 * c1 - t_der[i + 1]) / h;
            const double c3 =
                (2.0 * (t_val[i] - t_val[i + 1]) / h + c1 + t_der[i + 1]) / (h * h);
            auto q = [&](double s) {
                // p - p' + p'' - p''' for the cubic p
                return (c0 - c1 + 2.0 * c2 - 6.0 * c3) + (c1 - 2.0 * c2 + 6.0 * c3) * s +
                       (c2 - 3.0 * c3) * s * s + c3 * s * s * s;
            };
            integral += std::exp(b - w) * q(h) - std::exp(a - w) * q(0.0);
        }
        const double rhs = c.boundary * std::exp(-w) + integral;
        if (std::abs(c.values[pi] - rhs) > tol)
            throw numeric_error("CONSISTENCY",
                                "integral identity off by " +
                                    std::to_string(std::abs(c.values[pi] - rhs)) + " at w=" +
                                    std::to_string(w));
    }
}

}  // namespace

double workload_curve::value_at(double w) const {
    if (grid.empty()) return 0.0;
    if (w <= grid.front()) return values.front();
    if (w >= grid.back()) return values.back();
    auto it = std::upper_bound(grid.begin(), grid.end(), w);
    const std::size_t i = static_cast<std::size_t>(it - grid.begin()) - 1;
    const double h = grid[i + 1] - grid[i];
    const double theta = (w - grid[i]) / h;
    return hermite_value(values[i], derivs[i], values[i + 1], derivs[i + 1], h, theta);
}

workload_curve solve_ccdf(const policy_spec& policy, double lambda, double boundary,
                          const solver_options& opts) {
    policy.validate();
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("lambda must lie in (0, 1)");
    if (!(boundary >= lambda - 1e-12 && boundary <= 1.0 + 1e-12))
        throw numeric_error("INVALID_BOUNDARY", "boundary must lie in [lambda, 1]");
    boundary = std::clamp(boundary, 0.0, 1.0);

    workload_curve curve;
    curve.boundary = boundary;
    curve.lambda = lambda;

    auto rhs = [&](double y) { return t_map(policy, lambda, y) - y; };

    curve.grid.push_back(0.0);
    curve.values.push_back(boundary);
    curve.derivs.push_back(rhs(boundary));

    if (boundary < opts.tail_epsilon) {
        curve.tail_cut = 0.0;
        curve.tail_remainder_bound = boundary / (1.0 - lambda);
        return curve;
    }

    const double w_guard =
        opts.w_max_factor * (-std::log1p(-lambda)) * std::min(plateau_scale(policy), 100.0) +
        (-std::log(opts.tail_epsilon) + 20.0) / (1.0 - lambda);

    const double rate = std::max(1.0, lambda * policy.max_probe());
    const double emit_target = 3.84e-7 / (rate * rate * rate);
    // largest interval a cubic can represent to ~1e-9 given the local slope
    auto resolution = [&](double slope) {
        return std::clamp(std::pow(emit_target / std::max(std::abs(slope), 1e-300), 0.25),
                          0.02, 2.0);
    };

    double w = 0.0;
    double y = boundary;
    double k1 = curve.derivs.front();
    double h = std::clamp(0.01 * std::abs(y / k1), 1e-8, 1.0);

    auto emit = [&](double w_pt, double y_pt, double slope) {
        if (y_pt >= curve.values.back() || !(y_pt > 0.0)) return;
        curve.grid.push_back(w_pt);
        curve.values.push_back(y_pt);
        curve.derivs.push_back(slope);
    };

    while (y >= opts.tail_epsilon) {
        if (w > w_guard)
            throw numeric_error("NON_CONVERGENCE", "integration window guard exceeded");

        h = std::min(h, 1.5 * resolution(k1));
        const double k2 = rhs(y + h * (a21 * k1));
        const double k3 = rhs(y + h * (a31 * k1 + a32 * k2));
        const double k4 = rhs(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const double k5 = rhs(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const double k6 = rhs(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const double y_next = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const double k7 = rhs(y_next);
        const double err =
            h * std::abs(e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        // error measured against the step's own change, so the long plateau
        // keeps full relative accuracy; the floor absorbs the cancellation
        // noise of T(y) - y near saturation (both terms ~ 1, difference tiny)
        const double scale = opts.local_tol * std::abs(h * k1) +
                             1e-15 * h * std::abs(y) + 1e-300;
        const double ratio = err / scale;
        const double factor = std::clamp(0.9 * std::pow(std::max(ratio, 1e-10), -0.2), 0.2, 5.0);

        if (ratio > 1.0 || !(y_next > 0.0) || !std::isfinite(y_next)) {
            h *= !(y_next > 0.0) || !std::isfinite(y_next) ? 0.5 : factor;
            if (h < 1e-14)
                throw numeric_error("STEP_UNDERFLOW", "adaptive step fell below 1e-14");
            continue;
        }

        // accepted: emit dense-output points so interpolation and quadrature
        // stay accurate where the curve bends
        const double spacing = resolution(std::max(std::abs(k1), std::abs(k7)));
        const int n_sub = static_cast<int>(std::ceil(h / spacing));
        for (int i = 1; i < n_sub; ++i) {
            const double theta = static_cast<double>(i) / n_sub;
            const double yi = hermite_value(y, k1, y_next, k7, h, theta);
            emit(w + theta * h, yi, rhs(yi));
        }
        emit(w + h, y_next, k7);

        w += h;
        y = y_next;
        k1 = k7;
        h *= factor;
    }

    curve.tail_cut = curve.grid.back();
    curve.tail_remainder_bound = curve.values.back() / (1.0 - lambda);

    check_integral_identity(policy, lambda, curve, opts.consistency_tol);
    return curve;
}

double mean_workload(const workload_curve& curve) {
    if (curve.grid.size() < 2) return 0.5 * curve.tail_remainder_bound;
    return corrected_trapezoid({curve.grid, curve.values, curve.derivs}) +
           0.5 * curve.tail_remainder_bound;
}

double mean_waiting(const policy_spec& policy, double lambda, const solver_options& opts) {
    if (policy.kind == policy_kind::red_d)
        throw numeric_error("UNSUPPORTED_POLICY",
                            "waiting time is not defined for replication policies");
    if (policy.discipline != discipline_kind::workload)
        throw std::invalid_argument("mean_waiting needs the workload discipline");

    const workload_curve curve = solve_ccdf(policy, lambda, lambda, opts);
    const std::size_t n = curve.grid.size();
    std::vector<double> g(n), gd(n);
    for (std::size_t i = 0; i < n; ++i) {
        // T evaluated directly: reconstructing it as ccdf' + ccdf cancels
        // catastrophically at low load where T is orders below the ccdf
        g[i] = t_map(policy, lambda, curve.values[i]) / lambda;
        gd[i] = t_map_derivative(policy, lambda, curve.values[i]) * curve.derivs[i] / lambda;
    }
    double integral = n >= 2 ? corrected_trapezoid({curve.grid, g, gd}) : 0.0;
    integral += 0.5 * waiting_tail_bound(policy, lambda, curve.values.back());
    return std::max(0.0, integral);
}

ccdf_point waiting_ccdf(const policy_spec& policy, double lambda,
                        const workload_curve& curve, double w) {
    if (w < 0.0) throw std::invalid_argument("waiting_ccdf needs w >= 0");
    if (curve.beyond_tail(w))
        return {t_map(policy, lambda, curve.values.back()) / lambda, true};
    return {t_map(policy, lambda, curve.value_at(w)) / lambda, false};
}

double sq_mean_waiting(const policy_spec& policy, double lambda, double tol) {
    if (policy.discipline != discipline_kind::queue_length)
        throw std::invalid_argument("sq_mean_waiting needs the queue-length discipline");
    if (policy.kind == policy_kind::red_d)
        throw numeric_error("UNSUPPORTED_POLICY",
                            "the tail recursion is not defined for replication policies");
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("lambda must lie in (0, 1)");

    double u = lambda;
    double sum = 0.0;
    double comp = 0.0;
    for (long iter = 0; iter < 1000000; ++iter) {
        if (u < tol) {
            return sum / lambda - 1.0;
        }
        const double y = u - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        const double next = t_map(policy, lambda, u);
        if (next >= u)
            throw numeric_error("DIVERGENCE", "tail recursion failed to decrease");
        u = next;
    }
    throw numeric_error("NON_CONVERGENCE", "tail recursion exceeded 1e6 terms");
}

}  // namespace cavitylb
