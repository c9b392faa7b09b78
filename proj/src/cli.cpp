#include "cavitylb/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "cavitylb/assumptions.hpp"
#include "cavitylb/closed_form.hpp"
#include "cavitylb/errors.hpp"
#include "cavitylb/kernels.hpp"
#include "cavitylb/limits.hpp"
#include "cavitylb/ode.hpp"
#include "cavitylb/policy.hpp"
#include "cavitylb/sim.hpp"

namespace cavitylb {

namespace {

using nlohmann::json;

// all floats leave the tool with 12 significant digits
double sig12(double v) {
    if (!std::isfinite(v)) return v;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::strtod(buf, nullptr);
}

std::string fmt12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw std::invalid_argument("unknown key '" + it.key() + "' in " + where);
}

solver_options parse_solver(const json& config) {
    solver_options opts;
    if (!config.contains("solver")) return opts;
    const json& s = config.at("solver");
    reject_unknown_keys(s, {"local_tol", "tail_epsilon", "consistency_tol", "w_max_factor"},
                        "solver");
    if (s.contains("local_tol")) opts.local_tol = s.at("local_tol").get<double>();
    if (s.contains("tail_epsilon")) opts.tail_epsilon = s.at("tail_epsilon").get<double>();
    if (s.contains("consistency_tol"))
        opts.consistency_tol = s.at("consistency_tol").get<double>();
    if (s.contains("w_max_factor")) opts.w_max_factor = s.at("w_max_factor").get<double>();
    return opts;
}

std::vector<double> parse_lambda_grid(const json& config) {
    if (config.contains("grid")) return parse_grid(config.at("grid").get<std::string>());
    if (config.contains("lambda_grid"))
        return config.at("lambda_grid").get<std::vector<double>>();
    throw std::invalid_argument("need 'grid' or 'lambda_grid'");
}

curve_scaling parse_scaling(const json& config) {
    const std::string name = config.value("scaling", "log1mlambda");
    if (name == "log1mlambda") return curve_scaling::log_one_minus_lambda;
    if (name == "logplambda") return curve_scaling::log_p_lambda;
    throw std::invalid_argument("scaling must be log1mlambda or logplambda");
}

void deliver(const json& config, const std::string& text, std::ostream& out) {
    if (config.contains("out")) {
        const std::string path = config.at("out").get<std::string>();
        std::ofstream file(path);
        if (!file) throw std::invalid_argument("cannot write output file " + path);
        file << text;
    } else {
        out << text;
    }
}

int cmd_analyze(const json& config, std::ostream& out) {
    reject_unknown_keys(config, {"command", "policy", "lambda", "solver", "out"}, "analyze");
    const policy_spec policy = parse_policy(config.at("policy").get<std::string>());
    const double lambda = config.at("lambda").get<double>();
    const solver_options opts = parse_solver(config);

    json result;
    result["policy"] = policy.name();
    result["lambda"] = sig12(lambda);
    if (policy.kind == policy_kind::red_d && policy.is_workload()) {
        const auto curve = solve_ccdf(policy, lambda, 1.0, opts);
        result["E_R"] = sig12(mean_workload(curve));
        result["E_W"] = nullptr;
        result["E_Q"] = nullptr;
        result["E_L"] = nullptr;
    } else {
        const double ew = policy.discipline == discipline_kind::queue_length
                              ? sq_mean_waiting(policy, lambda)
                              : mean_waiting(policy, lambda, opts);
        result["E_W"] = sig12(ew);
        result["E_R"] = sig12(1.0 + ew);
        result["E_L"] = sig12(lambda * (1.0 + ew));
        result["E_Q"] = sig12(lambda * (1.0 + ew));
    }
    deliver(config, result.dump(2) + "\n", out);
    return 0;
}

int cmd_curve(const json& config, std::ostream& out) {
    reject_unknown_keys(config,
                        {"command", "policy", "grid", "lambda_grid", "scaling", "solver", "out"},
                        "curve");
    const policy_spec policy = parse_policy(config.at("policy").get<std::string>());
    const auto grid = parse_lambda_grid(config);
    const auto scaling = parse_scaling(config);
    const auto rows = scaled_curve(policy, grid, scaling, parse_solver(config));
    deliver(config, scaled_curve_csv(rows, scaling, policy), out);
    return 0;
}

int cmd_limits(const json& config, std::ostream& out) {
    reject_unknown_keys(config, {"command", "policy", "solver", "out"}, "limits");
    const policy_spec policy = parse_policy(config.at("policy").get<std::string>());
    const limit_report report = build_limit_report(policy, parse_solver(config));
    json result;
    result["policy"] = report.policy;
    result["b"] = report.b;
    result["A"] = sig12(report.A);
    result["B"] = sig12(report.B);
    result["heavy_limit"] = sig12(report.heavy_limit);
    result["closed_form_reference"] = sig12(report.closed_form_reference);
    if (std::isnan(report.low_load_limit))
        result["low_load_limit"] = nullptr;
    else
        result["low_load_limit"] = sig12(report.low_load_limit);
    result["extrapolation_residual"] = sig12(report.extrapolation_residual);
    deliver(config, result.dump(2) + "\n", out);
    return 0;
}

int cmd_verify(const json& config, std::ostream& out) {
    reject_unknown_keys(config,
                        {"command", "policy", "assumptions", "lambda_grid", "grid", "out"},
                        "verify");
    const policy_spec policy = parse_policy(config.at("policy").get<std::string>());
    std::vector<int> ids{1, 2, 3, 4, 5, 6, 7};
    if (config.contains("assumptions")) ids = config.at("assumptions").get<std::vector<int>>();
    std::vector<double> grid = default_check_grid();
    if (config.contains("lambda_grid") || config.contains("grid"))
        grid = parse_lambda_grid(config);

    json result = json::array();
    for (int id : ids)
        result.push_back(json::parse(report_to_json(check_assumption(policy, id, grid))));
    if (policy.kind == policy_kind::ll_dk)
        result.push_back(json::parse(report_to_json(check_T_dominated(policy))));
    if (policy.kind == policy_kind::ll_dk || policy.kind == policy_kind::ll_mix)
        result.push_back(json::parse(report_to_json(check_u_prime_limit(policy))));
    deliver(config, result.dump(2) + "\n", out);
    return 0;
}

int cmd_simulate(const json& config, std::ostream& out) {
    reject_unknown_keys(config, {"command", "policy", "lambda", "sim", "out", "ccdf_out"},
                        "simulate");
    sim_config cfg;
    cfg.policy = parse_policy(config.at("policy").get<std::string>());
    cfg.lambda = config.at("lambda").get<double>();
    if (config.contains("sim")) {
        const json& s = config.at("sim");
        reject_unknown_keys(s, {"n_servers", "horizon", "warmup", "seed", "replications"},
                            "sim");
        if (s.contains("n_servers")) cfg.n_servers = s.at("n_servers").get<int>();
        if (s.contains("horizon")) cfg.horizon = s.at("horizon").get<double>();
        if (s.contains("warmup")) cfg.warmup = s.at("warmup").get<double>();
        if (s.contains("seed")) cfg.seed = s.at("seed").get<std::uint64_t>();
        if (s.contains("replications")) cfg.replications = s.at("replications").get<int>();
    }
    const sim_report report = simulate(cfg);

    json result;
    result["policy"] = cfg.policy.name();
    result["lambda"] = sig12(cfg.lambda);
    result["mean_wait"] = sig12(report.mean_wait);
    result["stderr"] = sig12(report.stderr_wait);
    result["n_jobs"] = report.n_jobs;
    result["seed_echo"] = report.seed_echo;
    result["conservation_rel_err"] = sig12(report.conservation_rel_err);
    result["empirical_ccdf"] = json::array();
    for (const auto& [w, frac] : report.empirical_ccdf)
        result["empirical_ccdf"].push_back({sig12(w), sig12(frac)});
    deliver(config, result.dump(2) + "\n", out);

    if (config.contains("ccdf_out")) {
        std::ofstream file(config.at("ccdf_out").get<std::string>());
        if (!file) throw std::invalid_argument("cannot write ccdf output file");
        file << "w,fraction\n";
        for (const auto& [w, frac] : report.empirical_ccdf)
            file << fmt12(w) << ',' << fmt12(frac) << '\n';
    }
    return 0;
}

int cmd_compare(const json& config, std::ostream& out) {
    reject_unknown_keys(config,
                        {"command", "policies", "grid", "lambda_grid", "solver", "out"},
                        "compare");
    std::vector<policy_spec> policies;
    for (const auto& text : config.at("policies").get<std::vector<std::string>>())
        policies.push_back(parse_policy(text));
    auto grid = parse_lambda_grid(config);
    std::sort(grid.begin(), grid.end());
    const solver_options opts = parse_solver(config);

    std::ostringstream csv;
    csv << "lambda,policy,mean_wait,floorceil_policy,floorceil_mean_wait,majorization_holds\n";
    for (double lambda : grid) {
        for (const auto& policy : policies) {
            const double mw = mean_waiting_auto(policy, lambda, opts);
            std::string fc_name, fc_mw, verdict;
            if (policy.kind == policy_kind::ll_d || policy.kind == policy_kind::ll_mix) {
                std::vector<double> p;
                std::vector<int> a;
                if (policy.kind == policy_kind::ll_d) {
                    p = {1.0};
                    a = {policy.d};
                } else {
                    for (const auto& c : policy.choices) {
                        p.push_back(c.p);
                        a.push_back(c.d);
                    }
                }
                std::vector<double> q;
                std::vector<int> b;
                floor_ceil_mix(p, a, q, b);
                const auto cert = majorization_certificate(p, a, q, b);
                policy_spec fc = q.size() == 1
                                     ? policy_spec::ll(b[0])
                                     : policy_spec::mix({{b[0], q[0]}, {b[1], q[1]}});
                const double fc_wait = mean_waiting_auto(fc, lambda, opts);
                fc_name = fc.name();
                fc_mw = fmt12(fc_wait);
                verdict = (cert.holds && fc_wait <= mw + 1e-6) ? "true" : "false";
            }
            csv << fmt12(lambda) << ',' << csv_field(policy.name()) << ',' << fmt12(mw)
                << ',' << csv_field(fc_name) << ',' << fc_mw << ',' << verdict << '\n';
        }
    }
    deliver(config, csv.str(), out);
    return 0;
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> parts;
    std::string cur;
    for (char ch : text + ":") {
        if (ch == ':') {
            std::size_t pos = 0;
            parts.push_back(std::stod(cur, &pos));
            if (pos != cur.size()) throw std::invalid_argument("bad grid number: " + cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (parts.size() == 1) return parts;
    if (parts.size() != 3) throw std::invalid_argument("grid must be 'lo:hi:step'");
    const double lo = parts[0], hi = parts[1], step = parts[2];
    if (!(step > 0.0) || hi < lo) throw std::invalid_argument("grid must be 'lo:hi:step'");
    std::vector<double> grid;
    for (int i = 0;; ++i) {
        const double v = lo + i * step;
        if (v > hi + 0.5 * step) break;
        grid.push_back(std::min(v, hi));
    }
    return grid;
}

nlohmann::json load_config_file(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw std::invalid_argument("cannot read config file " + path);
    return nlohmann::json::parse(file);
}

int run_command(const nlohmann::json& config, std::ostream& out, std::ostream& err) {
    try {
        const std::string command = config.at("command").get<std::string>();
        if (command == "analyze") return cmd_analyze(config, out);
        if (command == "curve") return cmd_curve(config, out);
        if (command == "limits") return cmd_limits(config, out);
        if (command == "verify") return cmd_verify(config, out);
        if (command == "simulate") return cmd_simulate(config, out);
        if (command == "compare") return cmd_compare(config, out);
        throw std::invalid_argument("unknown command: " + command);
    } catch (const numeric_error& e) {
        err << nlohmann::json{{"error", e.code()}, {"message", e.what()}}.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << nlohmann::json{{"error", "CONFIG"}, {"message", e.what()}}.dump() << "\n";
        return 1;
    }
}

}  // namespace cavitylb
