#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "cavitylb/cli.hpp"

using namespace cavitylb;
using nlohmann::json;

namespace {

struct run_output {
    int code;
    std::string out;
    std::string err;
};

run_output run(const json& config) {
    std::ostringstream out, err;
    const int code = run_command(config, out, err);
    return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("grid parsing") {
    const auto grid = parse_grid("0.1:0.5:0.2");
    REQUIRE(grid.size() == 3);
    CHECK(grid[0] == doctest::Approx(0.1));
    CHECK(grid[2] == doctest::Approx(0.5));
    CHECK(parse_grid("0.4").size() == 1);
    CHECK(parse_grid("0.05:0.95:0.05").size() == 19);
    CHECK_THROWS_AS(parse_grid("1:2"), std::invalid_argument);
    CHECK_THROWS_AS(parse_grid("a:b:c"), std::invalid_argument);
}

TEST_CASE("analyze emits the waiting metrics") {
    const auto res = run({{"command", "analyze"}, {"policy", "ll:d=1"}, {"lambda", 0.5}});
    REQUIRE(res.code == 0);
    const json j = json::parse(res.out);
    CHECK(j.at("E_W").get<double>() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(j.at("E_R").get<double>() == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(j.at("E_L").get<double>() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(j.at("E_Q").get<double>() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("analyze handles replication and queue-length policies") {
    const auto red = run({{"command", "analyze"}, {"policy", "red:d=2"}, {"lambda", 0.5}});
    REQUIRE(red.code == 0);
    const json jr = json::parse(red.out);
    CHECK(jr.at("E_W").is_null());
    CHECK(jr.at("E_R").get<double>() > 1.0);

    const auto sq = run({{"command", "analyze"}, {"policy", "ll:d=2:sq"}, {"lambda", 0.5}});
    REQUIRE(sq.code == 0);
    CHECK(json::parse(sq.out).at("E_W").get<double>() ==
          doctest::Approx(0.2656860360875726).epsilon(1e-9));
}

TEST_CASE("unknown keys are rejected with exit code 1") {
    const auto res = run({{"command", "analyze"},
                          {"policy", "ll:d=2"},
                          {"lambda", 0.5},
                          {"typo_key", 1}});
    CHECK(res.code == 1);
    const json err = json::parse(res.err);
    CHECK(err.at("error") == "CONFIG");
}

TEST_CASE("numeric failures exit with code 2 and an error payload") {
    // replication policies have no idle-assignment probability
    const auto res = run({{"command", "curve"},
                          {"policy", "red:d=2"},
                          {"grid", "0.1:0.5:0.2"},
                          {"scaling", "logplambda"}});
    CHECK(res.code == 2);
    const json err = json::parse(res.err);
    CHECK(err.at("error") == "UNSUPPORTED_POLICY");
}

TEST_CASE("curve emits the fixed CSV schema") {
    const auto res = run({{"command", "curve"},
                          {"policy", "ll:d=2"},
                          {"grid", "0.2:0.6:0.2"},
                          {"scaling", "log1mlambda"}});
    REQUIRE(res.code == 0);
    std::istringstream is(res.out);
    std::string header;
    std::getline(is, header);
    CHECK(header == "lambda,mean_wait,scaled,scaling,policy");
    int rows = 0;
    std::string line;
    while (std::getline(is, line) && !line.empty()) ++rows;
    CHECK(rows == 3);
}

TEST_CASE("limits command reports both routes") {
    const auto res = run({{"command", "limits"}, {"policy", "lldk:d=4,k=2"}});
    REQUIRE(res.code == 0);
    const json j = json::parse(res.out);
    CHECK(j.at("heavy_limit").get<double>() == doctest::Approx(1.0).epsilon(0.01));
    CHECK(j.at("closed_form_reference").get<double>() == doctest::Approx(1.0));
    CHECK(j.at("low_load_limit").get<double>() == doctest::Approx(1.0 / 3).epsilon(1e-9));
}

TEST_CASE("verify emits a report array") {
    const auto res = run({{"command", "verify"},
                          {"policy", "ll:d=2"},
                          {"assumptions", {1, 2}},
                          {"lambda_grid", {0.92, 0.95}}});
    REQUIRE(res.code == 0);
    const json j = json::parse(res.out);
    REQUIRE(j.is_array());
    REQUIRE(j.size() == 2);
    CHECK(j[0].at("assumption_id") == "A1");
    CHECK(j[0].at("status") == "PASS");
}

TEST_CASE("simulate round trip") {
    const auto res = run({{"command", "simulate"},
                          {"policy", "ll:d=2"},
                          {"lambda", 0.5},
                          {"sim",
                           {{"n_servers", 60},
                            {"horizon", 60.0},
                            {"warmup", 10.0},
                            {"seed", 9},
                            {"replications", 2}}}});
    REQUIRE(res.code == 0);
    const json j = json::parse(res.out);
    CHECK(j.at("mean_wait").is_number());
    CHECK(j.at("seed_echo") == 9);
    CHECK(j.at("empirical_ccdf").is_array());
}

TEST_CASE("compare includes majorization verdicts") {
    const auto res = run({{"command", "compare"},
                          {"policies", {"mix:d=2,4;p=0.5,0.5", "ll:d=3"}},
                          {"lambda_grid", {0.6}}});
    REQUIRE(res.code == 0);
    std::istringstream is(res.out);
    std::string header;
    std::getline(is, header);
    CHECK(header ==
          "lambda,policy,mean_wait,floorceil_policy,floorceil_mean_wait,majorization_holds");
    std::string line;
    std::getline(is, line);
    CHECK(line.find("mix:d=2,4;p=0.5,0.5") != std::string::npos);
    CHECK(line.find("true") != std::string::npos);
}

TEST_CASE("every emitted json reparses") {
    for (const json cfg :
         {json{{"command", "analyze"}, {"policy", "ll:d=3"}, {"lambda", 0.4}},
          json{{"command", "limits"}, {"policy", "ll:d=3"}}}) {
        const auto res = run(cfg);
        REQUIRE(res.code == 0);
        CHECK_NOTHROW(json::parse(res.out));
    }
}
