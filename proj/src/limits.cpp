#include "cavitylb/limits.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "cavitylb/closed_form.hpp"
#include "cavitylb/errors.hpp"
#include "cavitylb/kernels.hpp"
#include "cavitylb/parallel.hpp"

namespace cavitylb {

namespace {

double ipow(double x, int n) {
    double r = 1.0, b = x;
    for (int e = n; e > 0; e >>= 1) {
        if (e & 1) r *= b;
        b *= b;
    }
    return r;
}

struct line_fit {
    double intercept = 0.0;
    double slope = 0.0;
    double max_resid = 0.0;
};

line_fit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    line_fit f;
    const std::size_t n = xs.size();
    if (n == 1) {
        f.intercept = ys[0];
        return f;
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    for (std::size_t i = 0; i < n; ++i)
        f.max_resid = std::max(f.max_resid, std::abs(ys[i] - (f.intercept + f.slope * xs[i])));
    return f;
}

// keep the `count` entries with lambda closest to 1 (sequence is increasing)
template <typename T>
std::vector<T> tail_of(const std::vector<T>& v, std::size_t count) {
    if (v.size() <= count) return v;
    return std::vector<T>(v.end() - count, v.end());
}

[[noreturn]] void unsupported(const policy_spec& policy, const char* what) {
    throw numeric_error("UNSUPPORTED",
                        std::string(what) + " has no published formula for " + policy.name());
}

}  // namespace

double closed_form_A(const policy_spec& policy) {
    switch (policy.kind) {
        case policy_kind::ll_d:
        case policy_kind::red_d:
        case policy_kind::mem_ll_d:
            if (policy.d < 2) unsupported(policy, "slope constant");
            return policy.d;
        case policy_kind::ll_dk:
            return static_cast<double>(policy.d) / policy.k;
        case policy_kind::ll_mix:
            return policy.mean_probe();
    }
    unsupported(policy, "slope constant");
}

double closed_form_B(const policy_spec& policy) {
    if (policy.kind == policy_kind::mem_ll_d) return 1.0 / (policy.memory_size + 1.0);
    return 1.0;
}

double heavy_traffic_limit(const policy_spec& policy) {
    const double A = closed_form_A(policy);
    const double B = closed_form_B(policy);
    if (policy.discipline == discipline_kind::queue_length) {
        if (policy.kind == policy_kind::red_d) unsupported(policy, "heavy-traffic limit");
        return B / std::log(A);
    }
    return B / (A - 1.0);
}

double low_load_limit(const policy_spec& policy) {
    if (policy.discipline != discipline_kind::workload)
        unsupported(policy, "low-load limit");
    switch (policy.kind) {
        case policy_kind::ll_d:
            return 1.0 / policy.d;
        case policy_kind::ll_dk:
            return 1.0 / (policy.d - policy.k + 1);
        case policy_kind::ll_mix:
            return 1.0 / policy.choices.front().d;
        case policy_kind::red_d:
        case policy_kind::mem_ll_d:
            unsupported(policy, "low-load limit");
    }
    unsupported(policy, "low-load limit");
}

std::vector<double> default_lambda_seq() {
    std::vector<double> seq;
    for (int k = 2; k <= 10; ++k) seq.push_back(1.0 - std::pow(10.0, -k));
    return seq;
}

extrapolated_value numeric_A(const policy_spec& policy, int b,
                             const std::vector<double>& lambda_seq) {
    std::vector<double> xs, ys;
    for (double lam : lambda_seq) {
        const double u = fixed_point_or_throw(policy, lam);
        const double x = u - ipow(lam, b);
        xs.push_back(1.0 - lam);
        ys.push_back((u - t_map(policy, lam, u - x)) / x);
    }
    const auto fit = fit_line(tail_of(xs, 4), tail_of(ys, 4));
    if (fit.max_resid > 1e-2)
        throw numeric_error("EXTRAPOLATION_UNSTABLE",
                            "slope-constant fit residual " + std::to_string(fit.max_resid));
    return {fit.intercept, fit.max_resid};
}

extrapolated_value numeric_B(const policy_spec& policy, int b,
                             const std::vector<double>& lambda_seq) {
    std::vector<double> xs, ys;
    for (double lam : lambda_seq) {
        const double u = fixed_point_or_throw(policy, lam);
        const double x = u - ipow(lam, b);
        xs.push_back(-1.0 / std::log1p(-lam));
        ys.push_back(std::log(x) / std::log1p(-lam));
    }
    const auto fit = fit_line(tail_of(xs, 4), tail_of(ys, 4));
    if (fit.max_resid > 1e-2)
        throw numeric_error("EXTRAPOLATION_UNSTABLE",
                            "exponent-constant fit residual " + std::to_string(fit.max_resid));
    return {fit.intercept, fit.max_resid};
}

double mean_waiting_auto(const policy_spec& policy, double lambda,
                         const solver_options& opts) {
    if (policy.discipline == discipline_kind::queue_length)
        return sq_mean_waiting(policy, lambda);
    if (lambda >= 1.0 - 1e-8) {
        if (const auto params = as_lldp(policy, lambda)) return lldp_mean_waiting(*params);
    }
    return mean_waiting(policy, lambda, opts);
}

std::vector<scaled_row> scaled_curve(const policy_spec& policy,
                                     std::vector<double> lambda_grid,
                                     curve_scaling scaling, const solver_options& opts) {
    std::sort(lambda_grid.begin(), lambda_grid.end());
    if (scaling == curve_scaling::log_p_lambda)
        p_idle(policy, 0.5);  // reject unsupported policies up front

    std::vector<scaled_row> rows(lambda_grid.size());
    parallel_for_index(lambda_grid.size(), [&](std::size_t i) {
        scaled_row& row = rows[i];
        row.lambda = lambda_grid[i];
        try {
            row.mean_wait = mean_waiting_auto(policy, row.lambda, opts);
            const double denom =
                scaling == curve_scaling::log_p_lambda
                    ? std::log1p(-busy_arrival_probability(policy, row.lambda))
                    : std::log1p(-row.lambda);
            row.scaled = -row.mean_wait / denom;
            row.ok = true;
        } catch (const numeric_error& e) {
            row.error = e.code();
            row.mean_wait = std::numeric_limits<double>::quiet_NaN();
            row.scaled = std::numeric_limits<double>::quiet_NaN();
        }
    });
    return rows;
}

std::string csv_field(const std::string& text) {
    if (text.find(',') == std::string::npos && text.find('"') == std::string::npos)
        return text;
    std::string quoted = "\"";
    for (char ch : text) {
        if (ch == '"') quoted += '"';
        quoted += ch;
    }
    quoted += '"';
    return quoted;
}

std::string scaled_curve_csv(const std::vector<scaled_row>& rows, curve_scaling scaling,
                             const policy_spec& policy) {
    const char* scaling_name =
        scaling == curve_scaling::log_p_lambda ? "logplambda" : "log1mlambda";
    std::ostringstream os;
    os << "lambda,mean_wait,scaled,scaling,policy\n";
    char buf[128];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,", row.lambda, row.mean_wait,
                      row.scaled);
        os << buf << scaling_name << ',' << csv_field(policy.name()) << '\n';
    }
    return os.str();
}

extrapolated_value heavy_extrapolated(const policy_spec& policy, int k_lo, int k_hi,
                                      const solver_options& opts) {
    std::vector<double> grid;
    for (int k = k_lo; k <= k_hi; ++k) grid.push_back(1.0 - std::pow(10.0, -k));
    const auto rows = scaled_curve(policy, grid, curve_scaling::log_one_minus_lambda, opts);
    std::vector<double> xs, ys;
    for (const auto& row : rows) {
        if (!row.ok) throw numeric_error(row.error, "scaled curve row failed in extrapolation");
        xs.push_back(-1.0 / std::log1p(-row.lambda));
        ys.push_back(row.scaled);
    }
    const auto fit = fit_line(tail_of(xs, 4), tail_of(ys, 4));
    return {fit.intercept, fit.max_resid};
}

extrapolated_value low_load_extrapolated(const policy_spec& policy,
                                         const solver_options& opts) {
    const std::vector<double> grid{1e-2, 1e-3, 1e-4};
    const auto rows = scaled_curve(policy, grid, curve_scaling::log_p_lambda, opts);
    std::vector<double> xs, ys;
    for (const auto& row : rows) {
        if (!row.ok) throw numeric_error(row.error, "scaled curve row failed in extrapolation");
        xs.push_back(row.lambda);
        ys.push_back(row.scaled);
    }
    const auto fit = fit_line(xs, ys);
    return {fit.intercept, fit.max_resid};
}

limit_report build_limit_report(const policy_spec& policy, const solver_options& opts) {
    limit_report report;
    report.policy = policy.name();
    report.b = 0;
    if (policy.kind == policy_kind::ll_dk)
        report.b = choose_b(policy, {0.92, 0.95, 0.99, 0.999, 0.9999});
    const auto seq = default_lambda_seq();
    const auto a = numeric_A(policy, report.b, seq);
    const auto b_const = numeric_B(policy, report.b, seq);
    report.A = a.value;
    report.B = b_const.value;
    report.heavy_limit = policy.discipline == discipline_kind::queue_length
                             ? report.B / std::log(report.A)
                             : report.B / (report.A - 1.0);
    report.closed_form_reference = heavy_traffic_limit(policy);
    try {
        report.low_load_limit = low_load_limit(policy);
    } catch (const numeric_error&) {
        report.low_load_limit = std::numeric_limits<double>::quiet_NaN();
    }
    report.extrapolation_residual = std::max(a.residual, b_const.residual);
    (void)opts;
    return report;
}

}  // namespace cavitylb
