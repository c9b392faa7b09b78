#include "cavitylb/sim.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "cavitylb/errors.hpp"
#include "cavitylb/ode.hpp"
#include "cavitylb/parallel.hpp"
#include "cavitylb/rng.hpp"

namespace cavitylb {

namespace {

constexpr long sweep_every_jobs = 10000;

struct probe_entry {
    double work;
    std::uint64_t tiebreak;
    int server;
};

struct rep_result {
    double mean_wait = 0.0;
    long n_jobs = 0;
    std::vector<double> ccdf;
    double conservation_rel_err = 0.0;
};

rep_result run_replication(const sim_config& cfg, const std::vector<double>& grid, int rep) {
    philox_stream rng(cfg.seed ^ static_cast<std::uint64_t>(rep));
    const int n = cfg.n_servers;
    const int batch = cfg.policy.kind == policy_kind::ll_dk ? cfg.policy.k : 1;
    const double mean_interarrival = batch / (cfg.lambda * n);

    std::vector<double> work(n, 0.0);
    std::vector<double> touched(n, 0.0);
    double drained = 0.0;
    double added = 0.0;

    // lazy decay: positive workloads shrink at rate 1, settled on touch
    auto current = [&](int i, double now) {
        const double elapsed = now - touched[i];
        const double before = work[i];
        const double cur = before > elapsed ? before - elapsed : 0.0;
        drained += before - cur;
        work[i] = cur;
        touched[i] = now;
        return cur;
    };

    std::vector<probe_entry> probes;
    probes.reserve(cfg.policy.max_probe());

    double wait_sum = 0.0;
    long jobs = 0;
    long sweeps = 0;
    std::vector<double> above(grid.size(), 0.0);
    auto sweep = [&](double now) {
        for (int i = 0; i < n; ++i) {
            const double cw = current(i, now);
            for (std::size_t g = 0; g < grid.size(); ++g)
                if (cw > grid[g]) above[g] += 1.0;
        }
        ++sweeps;
    };

    double t = 0.0;
    for (;;) {
        t += rng.next_exponential(mean_interarrival);
        if (t >= cfg.horizon) break;

        int d = cfg.policy.d;
        if (cfg.policy.kind == policy_kind::ll_mix) {
            const double pick = rng.next_unit();
            double acc = 0.0;
            d = cfg.policy.choices.back().d;
            for (const auto& c : cfg.policy.choices) {
                acc += c.p;
                if (pick < acc) {
                    d = c.d;
                    break;
                }
            }
        }

        probes.clear();
        for (int j = 0; j < d; ++j) {
            int idx;
            bool fresh;
            do {
                idx = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
                fresh = true;
                for (const auto& e : probes)
                    if (e.server == idx) {
                        fresh = false;
                        break;
                    }
            } while (!fresh);
            probes.push_back({current(idx, t), rng.next_u64(), idx});
        }
#ifndef NDEBUG
        for (std::size_t i = 0; i < probes.size(); ++i)
            for (std::size_t j = i + 1; j < probes.size(); ++j)
                assert(probes[i].server != probes[j].server);
#endif
        std::sort(probes.begin(), probes.end(), [](const probe_entry& a, const probe_entry& b) {
            if (a.work != b.work) return a.work < b.work;
            return a.tiebreak < b.tiebreak;
        });

        for (int j = 0; j < batch; ++j) {
            const probe_entry& target = probes[j];
            if (t >= cfg.warmup) {
                wait_sum += target.work;
                ++jobs;
                if (jobs % sweep_every_jobs == 0) sweep(t);
            }
            const double size = rng.next_exponential();
            added += size;
            work[target.server] += size;
        }
    }

    if (sweeps == 0) sweep(cfg.horizon);

    double remaining = 0.0;
    for (int i = 0; i < n; ++i) remaining += current(i, cfg.horizon);

    rep_result out;
    out.mean_wait = jobs > 0 ? wait_sum / jobs : 0.0;
    out.n_jobs = jobs;
    out.ccdf.resize(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g)
        out.ccdf[g] = above[g] / (static_cast<double>(sweeps) * n);
    out.conservation_rel_err =
        std::abs(added - drained - remaining) / std::max(added, 1.0);
    return out;
}

}  // namespace

void sim_config::validate() const {
    policy.validate();
    if (policy.discipline != discipline_kind::workload)
        throw numeric_error("UNSUPPORTED_POLICY",
                            "the simulator covers workload policies only");
    if (policy.kind == policy_kind::red_d || policy.kind == policy_kind::mem_ll_d)
        throw numeric_error("UNSUPPORTED_POLICY",
                            "replication and memory policies are outside simulator scope");
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("lambda must lie in (0, 1)");
    if (n_servers < 2) throw std::invalid_argument("need at least 2 servers");
    if (policy.max_probe() > n_servers)
        throw std::invalid_argument("probe count exceeds the fleet size");
    if (!(warmup >= 0.0 && warmup < horizon))
        throw std::invalid_argument("need 0 <= warmup < horizon");
    if (replications < 1) throw std::invalid_argument("need at least one replication");
}

sim_report simulate(const sim_config& config) {
    config.validate();
    std::vector<double> grid = config.ccdf_grid;
    if (grid.empty())
        for (int i = 0; i <= 32; ++i) grid.push_back(0.25 * i);

    std::vector<rep_result> reps(config.replications);
    parallel_for_index(static_cast<std::size_t>(config.replications),
                       [&](std::size_t r) {
                           reps[r] = run_replication(config, grid, static_cast<int>(r));
                       });

    sim_report report;
    report.seed_echo = config.seed;
    double mean = 0.0;
    for (const auto& r : reps) {
        mean += r.mean_wait;
        report.n_jobs += r.n_jobs;
        report.conservation_rel_err = std::max(report.conservation_rel_err, r.conservation_rel_err);
    }
    mean /= config.replications;
    report.mean_wait = mean;
    if (config.replications >= 2) {
        double ss = 0.0;
        for (const auto& r : reps) ss += (r.mean_wait - mean) * (r.mean_wait - mean);
        report.stderr_wait =
            std::sqrt(ss / (config.replications - 1.0) / config.replications);
    }
    report.empirical_ccdf.reserve(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double frac = 0.0;
        for (const auto& r : reps) frac += r.ccdf[g];
        report.empirical_ccdf.emplace_back(grid[g], frac / config.replications);
    }
    return report;
}

std::vector<convergence_row> convergence_study(const sim_config& config,
                                               const std::vector<int>& n_list) {
    const double mean_field = mean_waiting(config.policy, config.lambda);
    std::vector<convergence_row> rows;
    for (int n : n_list) {
        sim_config cfg = config;
        cfg.n_servers = n;
        const sim_report rep = simulate(cfg);
        rows.push_back({n, rep.mean_wait, rep.stderr_wait,
                        std::abs(rep.mean_wait - mean_field)});
    }
    return rows;
}

}  // namespace cavitylb
