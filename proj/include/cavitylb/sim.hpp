#pragma once

#include <cstdint>
#include <vector>

#include "cavitylb/policy.hpp"

namespace cavitylb {

struct sim_config {
    policy_spec policy;
    double lambda = 0.5;
    int n_servers = 1000;
    double horizon = 1000.0;  // simulated time units
    double warmup = 100.0;
    std::uint64_t seed = 1;
    int replications = 1;
    // thresholds for the sampled workload ccdf; defaults set in validate()
    std::vector<double> ccdf_grid;

    void validate() const;  // throws std::invalid_argument
};

struct sim_report {
    double mean_wait = 0.0;
    double stderr_wait = 0.0;  // across replications
    long n_jobs = 0;           // post-warmup jobs over all replications
    // (w, fraction of servers with more than w work), averaged over sweeps
    std::vector<std::pair<double, double>> empirical_ccdf;
    std::uint64_t seed_echo = 0;
    double conservation_rel_err = 0.0;  // worst replication
};

// Finite-fleet run of the workload model: Poisson arrivals (batched for
// batch policies), unit-mean exponential job sizes, least-work assignment
// among sampled servers. Replication r uses stream seed^r; identical
// configs give bit-identical reports.
sim_report simulate(const sim_config& config);

struct convergence_row {
    int n_servers = 0;
    double mean_wait = 0.0;
    double stderr_wait = 0.0;
    double gap = 0.0;  // |mean_wait - mean-field prediction|
};

// Reruns the config at each fleet size and reports the gap to the
// mean-field prediction.
std::vector<convergence_row> convergence_study(const sim_config& config,
                                               const std::vector<int>& n_list);

}  // namespace cavitylb
