// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <sstream>

#include "sparsebf/montecarlo.hpp"
#include "sparsebf/scenario_io.hpp"

using namespace sparsebf;
using Catch::Matchers::WithinRel;

namespace {

std::string fixture(const char* name) { return std::string(SPARSEBF_SCENARIO_DIR) + "/" + name; }

const char* kMinimal = R"(
sensors: 6
carrier_ratio: 10
taps: 2
budget: 3
desired: {doa: 50, band: full, power_db: 0}
)";

}  // namespace

TEST_CASE("first fixture parses into the expected scene", "[scenario]") {
    const NamedScenario ns = load_scenario(fixture("example1.yaml"));
    const Scenario& sc = ns.scenario;
    CHECK(ns.name == "example1");
    CHECK(sc.n() == 20);
    CHECK(sc.taps == 8);
    CHECK(sc.budget == 8);
    CHECK_THAT(sc.grid.carrier_ratio, WithinRel(2.0 / 0.22, 1e-12));
    CHECK_THAT(sc.noise_var, WithinRel(1.0, 1e-12));
    CHECK(sc.desired.doa_deg == 40.0);
    CHECK(sc.desired.band.low == -0.5);
    CHECK(sc.desired.band.high == 0.5);
    REQUIRE(sc.jammers.size() == 5);
    CHECK_THAT(sc.jammers[0].power, WithinRel(1000.0, 1e-12));
    CHECK(sc.jammers[4].band.narrowband());
    CHECK(sc.jammers[4].band.low == 0.0);
}

TEST_CASE("second fixture parses", "[scenario]") {
    const Scenario sc = load_scenario(fixture("example2.yaml")).scenario;
    CHECK(sc.budget == 14);
    CHECK(sc.jammers.size() == 6);
    CHECK(sc.desired.band.width() == 2.0);
}

TEST_CASE("scenes survive a write and read back", "[scenario]") {
    const Scenario sc = load_scenario(fixture("example1.yaml")).scenario;
    std::ostringstream os;
    write_scenario(os, sc, "copy");
    const NamedScenario back = parse_scenario(os.str());
    CHECK(back.name == "copy");
    const Scenario& b = back.scenario;
    CHECK(b.n() == sc.n());
    CHECK(b.taps == sc.taps);
    CHECK(b.budget == sc.budget);
    CHECK_THAT(b.grid.carrier_ratio, WithinRel(sc.grid.carrier_ratio, 1e-10));
    REQUIRE(b.jammers.size() == sc.jammers.size());
    for (std::size_t k = 0; k < b.jammers.size(); ++k) {
        CHECK(b.jammers[k].doa_deg == sc.jammers[k].doa_deg);
        CHECK_THAT(b.jammers[k].power, WithinRel(sc.jammers[k].power, 1e-10));
        CHECK(b.jammers[k].band.low == sc.jammers[k].band.low);
        CHECK(b.jammers[k].band.high == sc.jammers[k].band.high);
    }
}

TEST_CASE("defaults fill optional keys", "[scenario]") {
    const NamedScenario ns = parse_scenario(std::string(kMinimal));
    CHECK(ns.name == "scenario");
    CHECK(ns.scenario.noise_var == 1.0);
    CHECK(ns.scenario.jammers.empty());
}

TEST_CASE("malformed scenes name the problem", "[scenario]") {
    const std::string base(kMinimal);
    auto bad = [&](const std::string& from, const std::string& to) {
        std::string s = base;
        s.replace(s.find(from), from.size(), to);
        return s;
    };
    CHECK_THROWS_AS(parse_scenario(bad("taps: 2", "")), ScenarioError);
    CHECK_THROWS_AS(parse_scenario(bad("carrier_ratio: 10", "carrier_ratio: 10\nfractional_bandwidth: 0.2")),
                    ScenarioError);
    CHECK_THROWS_AS(parse_scenario(bad("band: full", "band: wide")), ScenarioError);
    CHECK_THROWS_AS(parse_scenario(bad("doa: 50", "doa: 190")), ScenarioError);
    CHECK_THROWS_AS(parse_scenario(bad("budget: 3", "budget: 9")), ScenarioError);
    CHECK_THROWS_AS(parse_scenario(bad("taps: 2", "taps: two")), ScenarioError);
    CHECK_THROWS_AS(parse_scenario(std::string("sensors: [")), ScenarioError);
    CHECK_THROWS_WITH(load_scenario("/nonexistent.yaml"), Catch::Matchers::ContainsSubstring("cannot open"));
}

TEST_CASE("Monte Carlo config fixture parses", "[scenario][montecarlo]") {
    const MonteCarloConfig c = load_montecarlo(fixture("desk_montecarlo.yaml"));
    CHECK(c.grid.sensors == 10);
    CHECK(c.budget == 4);
    CHECK(c.desired_doas.size() == 5);
    CHECK(c.jammer_count == 4);
    CHECK(c.jammer_doa_min == 30.0);
    CHECK(c.jammer_power_db_max == 20.0);
    CHECK(c.trials == 10);
    CHECK(c.seed == 7);
    CHECK(c.model == DesignModel::Dft);
    CHECK(c.methods.size() == 6);
    CHECK(c.benchmarks.size() == 3);
    CHECK(c.benchmarks[2] == Benchmark::McLss);
}

TEST_CASE("Monte Carlo configs reject bad entries", "[scenario][montecarlo]") {
    const std::string base = R"(
sensors: 8
carrier_ratio: 10
taps: 2
budget: 3
desired: {band: full, doas: [60]}
)";
    CHECK_NOTHROW(parse_montecarlo(YAML::Load(base)));
    CHECK_THROWS_AS(parse_montecarlo(YAML::Load(base + "methods: [given]\n")), ScenarioError);
    CHECK_THROWS_AS(parse_montecarlo(YAML::Load(base + "benchmarks: [nope]\n")), ScenarioError);
    CHECK_THROWS_AS(parse_montecarlo(YAML::Load(base + "jammers: {count: 2, doa_range: [30]}\n")), ScenarioError);
    CHECK_THROWS_AS(load_montecarlo("/nonexistent.yaml"), ScenarioError);
}
