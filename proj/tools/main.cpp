#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cavitylb/cli.hpp"

namespace {

using nlohmann::json;

struct common_flags {
    std::string policy;
    std::string out;
    std::string grid;
    std::vector<double> lambda_grid;
    double local_tol = -1.0;
    double tail_epsilon = -1.0;
    double consistency_tol = -1.0;
    double w_max_factor = -1.0;
};

void add_policy_flag(CLI::App* cmd, common_flags& flags) {
    cmd->add_option("--policy", flags.policy,
                    "policy, e.g. ll:d=2, lldk:d=4,k=2, mix:d=1,2;p=0.5,0.5, red:d=2, "
                    "mem:d=2,m=1; append :sq for the queue-length variant")
        ->required();
}

void add_out_flag(CLI::App* cmd, common_flags& flags) {
    cmd->add_option("--out", flags.out, "write the result to this file instead of stdout");
}

void add_solver_flags(CLI::App* cmd, common_flags& flags) {
    cmd->add_option("--local-tol", flags.local_tol, "ODE per-step error control");
    cmd->add_option("--tail-epsilon", flags.tail_epsilon, "ccdf truncation threshold");
    cmd->add_option("--consistency-tol", flags.consistency_tol,
                    "integral-identity probe tolerance");
    cmd->add_option("--w-max-factor", flags.w_max_factor, "integration window factor");
}

void fill_common(json& config, const common_flags& flags) {
    if (!flags.out.empty()) config["out"] = flags.out;
    json solver;
    if (flags.local_tol > 0) solver["local_tol"] = flags.local_tol;
    if (flags.tail_epsilon > 0) solver["tail_epsilon"] = flags.tail_epsilon;
    if (flags.consistency_tol > 0) solver["consistency_tol"] = flags.consistency_tol;
    if (flags.w_max_factor > 0) solver["w_max_factor"] = flags.w_max_factor;
    if (!solver.empty()) config["solver"] = solver;
}

void fill_grid(json& config, const common_flags& flags) {
    if (!flags.grid.empty()) config["grid"] = flags.grid;
    if (!flags.lambda_grid.empty()) config["lambda_grid"] = flags.lambda_grid;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mean-field load balancing toolkit"};
    app.require_subcommand(0, 1);

    std::string config_path;
    app.add_option("--config", config_path, "run a JSON config instead of flags");

    common_flags flags;
    double lambda = 0.5;
    std::string scaling = "log1mlambda";
    std::vector<int> assumptions;
    int n_servers = 1000, replications = 1;
    double horizon = 1000, warmup = 100;
    std::uint64_t seed = 1;
    std::string ccdf_out;
    std::vector<std::string> policies;

    auto* analyze = app.add_subcommand("analyze", "waiting/queue metrics for one load");
    add_policy_flag(analyze, flags);
    analyze->add_option("--lambda", lambda, "arrival rate in (0,1)")->required();
    add_solver_flags(analyze, flags);
    add_out_flag(analyze, flags);

    auto* curve = app.add_subcommand("curve", "scaled mean-wait curve over a load grid");
    add_policy_flag(curve, flags);
    curve->add_option("--grid", flags.grid, "lambda grid lo:hi:step");
    curve->add_option("--lambda-grid", flags.lambda_grid, "explicit lambda list");
    curve->add_option("--scaling", scaling, "log1mlambda or logplambda");
    add_solver_flags(curve, flags);
    add_out_flag(curve, flags);

    auto* limits = app.add_subcommand("limits", "numeric and closed-form limit constants");
    add_policy_flag(limits, flags);
    add_solver_flags(limits, flags);
    add_out_flag(limits, flags);

    auto* verify = app.add_subcommand("verify", "numeric verification of the sufficient conditions");
    add_policy_flag(verify, flags);
    verify->add_option("--assumptions", assumptions, "subset of 1..7 (default: all)");
    verify->add_option("--lambda-grid", flags.lambda_grid, "explicit lambda list");
    add_out_flag(verify, flags);

    auto* simulate = app.add_subcommand("simulate", "finite-fleet validation run");
    add_policy_flag(simulate, flags);
    simulate->add_option("--lambda", lambda, "arrival rate in (0,1)")->required();
    simulate->add_option("--n", n_servers, "fleet size");
    simulate->add_option("--horizon", horizon, "simulated time units");
    simulate->add_option("--warmup", warmup, "discard jobs before this time");
    simulate->add_option("--seed", seed, "64-bit stream seed");
    simulate->add_option("--reps", replications, "independent replications");
    simulate->add_option("--ccdf-out", ccdf_out, "also write the workload ccdf CSV here");
    add_out_flag(simulate, flags);

    auto* compare = app.add_subcommand("compare", "side-by-side policies with majorization verdicts");
    compare->add_option("--policies", policies, "two or more policy strings")->required();
    compare->add_option("--grid", flags.grid, "lambda grid lo:hi:step");
    compare->add_option("--lambda-grid", flags.lambda_grid, "explicit lambda list");
    add_solver_flags(compare, flags);
    add_out_flag(compare, flags);

    CLI11_PARSE(app, argc, argv);

    json config;
    try {
        if (!config_path.empty()) {
            config = cavitylb::load_config_file(config_path);
        } else if (analyze->parsed()) {
            config = {{"command", "analyze"}, {"policy", flags.policy}, {"lambda", lambda}};
            fill_common(config, flags);
        } else if (curve->parsed()) {
            config = {{"command", "curve"}, {"policy", flags.policy}, {"scaling", scaling}};
            fill_grid(config, flags);
            fill_common(config, flags);
        } else if (limits->parsed()) {
            config = {{"command", "limits"}, {"policy", flags.policy}};
            fill_common(config, flags);
        } else if (verify->parsed()) {
            config = {{"command", "verify"}, {"policy", flags.policy}};
            if (!assumptions.empty()) config["assumptions"] = assumptions;
            fill_grid(config, flags);
            if (!flags.out.empty()) config["out"] = flags.out;
        } else if (simulate->parsed()) {
            config = {{"command", "simulate"},
                      {"policy", flags.policy},
                      {"lambda", lambda},
                      {"sim",
                       {{"n_servers", n_servers},
                        {"horizon", horizon},
                        {"warmup", warmup},
                        {"seed", seed},
                        {"replications", replications}}}};
            if (!ccdf_out.empty()) config["ccdf_out"] = ccdf_out;
            if (!flags.out.empty()) config["out"] = flags.out;
        } else if (compare->parsed()) {
            config = {{"command", "compare"}, {"policies", policies}};
            fill_grid(config, flags);
            fill_common(config, flags);
        } else {
            std::cerr << app.help();
            return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", "CONFIG"}, {"message", e.what()}}.dump() << "\n";
        return 1;
    }

    return cavitylb::run_command(config, std::cout, std::cerr);
}
