#pragma once

#include <string>
#include <utility>
#include <vector>

namespace cavitylb {

enum class policy_kind { ll_d, ll_dk, ll_mix, red_d, mem_ll_d };

// workload: least-work-left semantics, analyzed through the cavity ODE.
// queue_length: shortest-queue analog, analyzed through the tail recursion.
enum class discipline_kind { workload, queue_length };

struct mix_choice {
    int d;
    double p;
};

// One policy instance. Probe counts are capped at 64 so binomial terms stay
// exactly representable in doubles.
struct policy_spec {
    policy_kind kind = policy_kind::ll_d;
    int d = 0;                       // ll_d, red_d, mem_ll_d
    int k = 0;                       // ll_dk batch size, 1 <= k < d
    std::vector<mix_choice> choices; // ll_mix, ascending d, p_i > 0
    int memory_size = 0;             // mem_ll_d
    discipline_kind discipline = discipline_kind::workload;

    static policy_spec ll(int d);
    static policy_spec lldk(int d, int k);
    static policy_spec mix(std::vector<mix_choice> choices);
    static policy_spec red(int d);
    static policy_spec mem(int d, int memory_size);
    policy_spec as_queue_length() const;

    // Throws std::invalid_argument on malformed specs.
    void validate() const;

    int max_probe() const;     // largest probe count / largest exponent in T
    int min_probe() const;     // smallest probe count with positive weight
    double mean_probe() const; // d, or sum p_i d_i for mixes

    bool is_workload() const { return discipline == discipline_kind::workload; }

    // Mini-language form, e.g. "ll:d=2", "lldk:d=4,k=2", "mix:d=1,2;p=0.5,0.5".
    std::string name() const;
};

// Parses the CLI mini-language ("ll:d=2", "lldk:d=4,k=2",
// "mix:d=1,2;p=0.5,0.5", "red:d=2", "mem:d=2,m=1", optional ":sq" suffix).
// Throws std::invalid_argument on malformed text.
policy_spec parse_policy(const std::string& text);

}  // namespace cavitylb
