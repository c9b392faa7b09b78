#include "cavitylb/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace cavitylb {

namespace {

constexpr int max_probe_cap = 64;

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

policy_spec policy_spec::ll(int d) {
    policy_spec s;
    s.kind = policy_kind::ll_d;
    s.d = d;
    s.validate();
    return s;
}

policy_spec policy_spec::lldk(int d, int k) {
    policy_spec s;
    s.kind = policy_kind::ll_dk;
    s.d = d;
    s.k = k;
    s.validate();
    return s;
}

policy_spec policy_spec::mix(std::vector<mix_choice> choices) {
    policy_spec s;
    s.kind = policy_kind::ll_mix;
    std::sort(choices.begin(), choices.end(),
              [](const mix_choice& a, const mix_choice& b) { return a.d < b.d; });
    // merge duplicate probe counts, drop zero-weight entries
    for (const auto& c : choices) {
        if (c.p == 0.0) continue;
        if (!s.choices.empty() && s.choices.back().d == c.d)
            s.choices.back().p += c.p;
        else
            s.choices.push_back(c);
    }
    s.validate();
    return s;
}

policy_spec policy_spec::red(int d) {
    policy_spec s;
    s.kind = policy_kind::red_d;
    s.d = d;
    s.validate();
    return s;
}

policy_spec policy_spec::mem(int d, int memory_size) {
    policy_spec s;
    s.kind = policy_kind::mem_ll_d;
    s.d = d;
    s.memory_size = memory_size;
    s.validate();
    return s;
}

policy_spec policy_spec::as_queue_length() const {
    policy_spec s = *this;
    s.discipline = discipline_kind::queue_length;
    return s;
}

void policy_spec::validate() const {
    switch (kind) {
        case policy_kind::ll_d:
        case policy_kind::red_d:
            require(d >= 1 && d <= max_probe_cap, "probe count d must be in [1, 64]");
            break;
        case policy_kind::mem_ll_d:
            require(d >= 1 && d <= max_probe_cap, "probe count d must be in [1, 64]");
            require(memory_size >= 0, "memory size must be nonnegative");
            break;
        case policy_kind::ll_dk:
            require(d >= 2 && d <= max_probe_cap, "probe count d must be in [2, 64]");
            require(k >= 1 && k < d, "batch size k must satisfy 1 <= k < d");
            break;
        case policy_kind::ll_mix: {
            require(!choices.empty(), "mix needs at least one choice");
            double psum = 0.0;
            double dmean = 0.0;
            int prev_d = 0;
            for (const auto& c : choices) {
                require(c.d >= 1 && c.d <= max_probe_cap, "mix probe counts must be in [1, 64]");
                require(c.d > prev_d, "mix choices must be ascending and distinct in d");
                require(c.p > 0.0 && c.p <= 1.0, "mix probabilities must be in (0, 1]");
                prev_d = c.d;
                psum += c.p;
                dmean += c.p * c.d;
            }
            require(std::abs(psum - 1.0) <= 1e-12, "mix probabilities must sum to 1");
            require(dmean > 1.0, "mix mean probe count must exceed 1");
            break;
        }
    }
}

int policy_spec::max_probe() const {
    if (kind == policy_kind::ll_mix) return choices.back().d;
    return d;
}

int policy_spec::min_probe() const {
    if (kind == policy_kind::ll_mix) return choices.front().d;
    return d;
}

double policy_spec::mean_probe() const {
    if (kind == policy_kind::ll_mix) {
        double m = 0.0;
        for (const auto& c : choices) m += c.p * c.d;
        return m;
    }
    return static_cast<double>(d);
}

std::string policy_spec::name() const {
    std::ostringstream os;
    switch (kind) {
        case policy_kind::ll_d:
            os << "ll:d=" << d;
            break;
        case policy_kind::ll_dk:
            os << "lldk:d=" << d << ",k=" << k;
            break;
        case policy_kind::red_d:
            os << "red:d=" << d;
            break;
        case policy_kind::mem_ll_d:
            os << "mem:d=" << d << ",m=" << memory_size;
            break;
        case policy_kind::ll_mix: {
            os << "mix:d=";
            for (std::size_t i = 0; i < choices.size(); ++i)
                os << (i ? "," : "") << choices[i].d;
            os << ";p=";
            for (std::size_t i = 0; i < choices.size(); ++i) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.12g", choices[i].p);
                os << (i ? "," : "") << buf;
            }
            break;
        }
    }
    if (discipline == discipline_kind::queue_length) os << ":sq";
    return os.str();
}

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

int parse_int(const std::string& text) {
    std::size_t pos = 0;
    int v = std::stoi(text, &pos);
    require(pos == text.size(), "bad integer in policy: " + text);
    return v;
}

double parse_prob(const std::string& text) {
    std::size_t pos = 0;
    double v = std::stod(text, &pos);
    require(pos == text.size(), "bad probability in policy: " + text);
    return v;
}

// key=value fields separated by commas, e.g. "d=4,k=2"
int field_int(const std::string& body, const std::string& key) {
    for (const auto& part : split(body, ',')) {
        auto kv = split(part, '=');
        require(kv.size() == 2, "bad policy field: " + part);
        if (kv[0] == key) return parse_int(kv[1]);
    }
    throw std::invalid_argument("policy field '" + key + "' missing in: " + body);
}

}  // namespace

policy_spec parse_policy(const std::string& text) {
    std::string body = text;
    bool sq = false;
    if (body.size() >= 3 && body.compare(body.size() - 3, 3, ":sq") == 0) {
        sq = true;
        body = body.substr(0, body.size() - 3);
    }
    auto colon = body.find(':');
    require(colon != std::string::npos, "policy must look like 'kind:fields': " + text);
    std::string head = body.substr(0, colon);
    std::string rest = body.substr(colon + 1);

    policy_spec s;
    if (head == "ll") {
        s = policy_spec::ll(field_int(rest, "d"));
    } else if (head == "lldk") {
        s = policy_spec::lldk(field_int(rest, "d"), field_int(rest, "k"));
    } else if (head == "red") {
        s = policy_spec::red(field_int(rest, "d"));
    } else if (head == "mem") {
        s = policy_spec::mem(field_int(rest, "d"), field_int(rest, "m"));
    } else if (head == "mix") {
        // mix:d=1,2;p=0.5,0.5
        auto sections = split(rest, ';');
        require(sections.size() == 2, "mix needs 'd=...;p=...': " + text);
        auto dkv = split(sections[0], '=');
        auto pkv = split(sections[1], '=');
        require(dkv.size() == 2 && dkv[0] == "d", "mix needs 'd=...': " + text);
        require(pkv.size() == 2 && pkv[0] == "p", "mix needs 'p=...': " + text);
        auto ds = split(dkv[1], ',');
        auto ps = split(pkv[1], ',');
        require(ds.size() == ps.size(), "mix d and p lists must have equal length");
        std::vector<mix_choice> choices;
        for (std::size_t i = 0; i < ds.size(); ++i)
            choices.push_back({parse_int(ds[i]), parse_prob(ps[i])});
        s = policy_spec::mix(std::move(choices));
    } else {
        throw std::invalid_argument("unknown policy kind: " + head);
    }
    if (sq) s = s.as_queue_length();
    return s;
}

}  // namespace cavitylb
