// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "sparsebf/montecarlo.hpp"
#include "sparsebf/pipeline.hpp"

using namespace sparsebf;
using Catch::Matchers::WithinAbs;

namespace {

Scenario small_scene() {
    Scenario sc;
    sc.grid = {8, 1.0 / 0.11};
    sc.taps = 2;
    sc.budget = 4;
    sc.noise_var = 1.0;
    sc.desired = {50.0, FrequencyBand::from_cycles(-0.25, 0.25), 1.0};
    sc.jammers = {{62.0, FrequencyBand::full(), from_db(20)}, {125.0, FrequencyBand::full(), from_db(15)}};
    return sc;
}

// All pairwise differences of an index set.
std::set<int> coarray(const SensorSelection& s) {
    std::set<int> d;
    for (int a : s.active())
        for (int b : s.active()) d.insert(std::abs(a - b));
    return d;
}

MonteCarloConfig tiny_config() {
    MonteCarloConfig c;
    c.grid = {8, 1.0 / 0.11};
    c.taps = 2;
    c.budget = 3;
    c.desired_doas = {50.0, 95.0};
    c.trials = 2;
    c.jammer_count = 2;
    c.snapshots = 200;
    c.seed = 11;
    c.methods = {Method::Enum, Method::Random, Method::Ula, Method::Worst};
    return c;
}

}  // namespace

TEST_CASE("baseline geometries", "[pipeline]") {
    CHECK(ula_selection(10, 4).active() == std::vector<int>{0, 1, 2, 3});
    CHECK_THROWS_AS(ula_selection(3, 4), DomainError);

    const auto nested = nested_selection(10, 5);
    REQUIRE(nested);
    CHECK(nested->size() == 5);
    // A two-level nested array has a hole-free difference set up to its aperture.
    const int ap = nested->active().back();
    CHECK(static_cast<int>(coarray(*nested).size()) == ap + 1);
    CHECK_FALSE(nested_selection(3, 4));

    const auto cop = coprime_selection(20, 6);
    REQUIRE(cop);
    CHECK(cop->size() == 6);
    CHECK(cop->active().front() == 0);
    CHECK(cop->active().back() <= 19);

    const SensorSelection r1 = random_selection(12, 5, 3), r2 = random_selection(12, 5, 3);
    CHECK(r1 == r2);
    CHECK(r1.size() == 5);
    bool differs = false;
    for (std::uint64_t s = 4; s < 10; ++s) differs = differs || !(random_selection(12, 5, s) == r1);
    CHECK(differs);
}

TEST_CASE("method and model names round trip", "[pipeline]") {
    for (Method m : {Method::Sdr, Method::Sca, Method::Enum, Method::Worst, Method::Random, Method::Ula, Method::Nested,
                     Method::Coprime, Method::Given})
        CHECK(parse_method(to_string(m)) == m);
    for (DesignModel m : {DesignModel::Tdl, DesignModel::Dft, DesignModel::Dual})
        CHECK(parse_design_model(to_string(m)) == m);
    CHECK(design_domain(DesignModel::Dual) == Model::Dft);
    CHECK_THROWS_AS(parse_method("greedy"), DomainError);
    CHECK(parse_benchmark("mc-lss") == Benchmark::McLss);
}

TEST_CASE("analytic input without completion is the exact model", "[pipeline]") {
    const Scenario sc = small_scene();
    const Estimate est = estimate_input(sc, Model::Tdl, {});
    const TdlCorrelations t = scenario_correlations_tdl(sc);
    CHECK((est.input.tdl.total - t.total).norm() < 1e-12);
    CHECK(est.sensing == SensorSelection::full(sc.n()));
    CHECK(est.diagnostics.empty());
}

TEST_CASE("snapshot input is reproducible and near the model", "[pipeline]") {
    const Scenario sc = small_scene();
    DataOptions d;
    d.kind = DataKind::Snapshots;
    d.snapshots = 20000;
    d.seed = 5;
    const Estimate a = estimate_input(sc, Model::Tdl, d), b = estimate_input(sc, Model::Tdl, d);
    CHECK(a.input.tdl.total == b.input.tdl.total);
    const TdlCorrelations t = scenario_correlations_tdl(sc);
    CHECK((a.input.tdl.total - t.total).norm() / t.total.norm() < 0.05);
    d.snapshots = 1;
    CHECK_THROWS_AS(estimate_input(sc, Model::Tdl, d), InsufficientDataError);
}

TEST_CASE("completion input reports one diagnostic per block or bin", "[pipeline]") {
    const Scenario sc = small_scene();
    DataOptions d;
    d.complete = true;
    d.initial = SensorSelection(8, {0, 1, 4, 6, 7});
    const Estimate t = estimate_input(sc, Model::Tdl, d);
    CHECK(t.sensing == *d.initial);
    CHECK(t.diagnostics.size() == 2);
    const Estimate f = estimate_input(sc, Model::Dft, d);
    CHECK(f.diagnostics.size() == 2);
    CHECK_FALSE(f.input.has_tdl);
    d.initial = SensorSelection(6, {0, 1});
    CHECK_THROWS_AS(estimate_input(sc, Model::Tdl, d), DimensionError);
}

TEST_CASE("every method returns P sensors and scores consistently", "[pipeline]") {
    const Scenario sc = small_scene();
    const Truth truth = Truth::of(sc, true);
    for (Model domain : {Model::Tdl, Model::Dft}) {
        const DesignInput in = DesignInput::from_scenario(sc, domain);
        PipelineSettings set;
        set.enumeration.keep_ranked = true;
        const SelectionOutcome best = select_sensors(Method::Enum, in, set);
        const SelectionOutcome worst = select_sensors(Method::Worst, in, set);
        REQUIRE(best.enumeration);
        CHECK(best.enumeration->ranked.size() == 70);
        const double hi = input_sinr(in, best.selection), lo = input_sinr(in, worst.selection);
        for (Method m : {Method::Sdr, Method::Sca, Method::Random, Method::Ula, Method::Nested, Method::Coprime}) {
            INFO(to_string(m) << " in " << (domain == Model::Tdl ? "tdl" : "dft"));
            std::optional<SelectionOutcome> o;
            try {
                o = select_sensors(m, in, set, 9);
            } catch (const DomainError&) {
                // Coprime needs more room than eight sensors give for P = 4.
                CHECK(m == Method::Coprime);
                continue;
            }
            CHECK(o->selection.size() == sc.budget);
            const double v = input_sinr(in, o->selection);
            CHECK(v <= hi + 1e-9);
            CHECK(v >= lo - 1e-9);
        }
        const DesignModel dm = domain == Model::Tdl ? DesignModel::Tdl : DesignModel::Dft;
        CHECK_THAT(score(truth, dm, best.selection), WithinAbs(hi, 1e-9));
    }
    const DesignInput in = DesignInput::from_scenario(sc, Model::Tdl);
    const SensorSelection g(8, {0, 2, 4, 7});
    CHECK(select_sensors(Method::Given, in, {}, 1, g).selection == g);
    CHECK_THROWS_AS(select_sensors(Method::Given, in), DomainError);
    CHECK_THROWS_AS(score(Truth::of(sc, false), DesignModel::Dft, g), DomainError);
}

TEST_CASE("Monte Carlo results do not depend on the thread count", "[pipeline][montecarlo]") {
    MonteCarloConfig c = tiny_config();
    c.threads = 1;
    const MonteCarloResult a = run_montecarlo(c);
    c.threads = 3;
    const MonteCarloResult b = run_montecarlo(c);
    REQUIRE(a.records.size() == 2 * 2 * 3 * 4);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].ok == b.records[i].ok);
        CHECK(a.records[i].selection == b.records[i].selection);
        CHECK(a.records[i].sinr_db == b.records[i].sinr_db);
    }
    for (Benchmark bm : c.benchmarks) {
        CHECK(a.overall(bm, Method::Enum) >= a.overall(bm, Method::Random));
        CHECK(a.overall(bm, Method::Random) >= a.overall(bm, Method::Worst));
    }
    c.seed = 12;
    const MonteCarloResult d = run_montecarlo(c);
    CHECK(d.records.front().selection.size() == 3);
    CHECK(d.overall(Benchmark::KfmUss, Method::Enum) != a.overall(Benchmark::KfmUss, Method::Enum));
}

TEST_CASE("failed trials are recorded and left out of the means", "[pipeline][montecarlo]") {
    MonteCarloConfig c = tiny_config();
    c.desired_doas = {60.5};
    c.jammer_doa_min = 60.0;
    c.jammer_doa_max = 61.0;
    c.jammer_count = 3;
    const MonteCarloResult r = run_montecarlo(c);
    for (const auto& t : r.records) {
        CHECK_FALSE(t.ok);
        CHECK_FALSE(t.error.empty());
    }
    for (const auto& s : r.summary) {
        CHECK(s.trials == 0);
        CHECK(s.failures == 2);
    }

    const MonteCarloConfig ok = tiny_config();
    std::vector<TrialRecord> recs{{50.0, 0, Benchmark::KfmUss, Method::Enum, true, {}, 4.0, {}},
                                  {50.0, 1, Benchmark::KfmUss, Method::Enum, false, {}, 99.0, "x"},
                                  {95.0, 0, Benchmark::KfmUss, Method::Enum, true, {}, 8.0, {}}};
    MonteCarloResult m;
    m.summary = summarize(ok, recs);
    CHECK(m.overall(Benchmark::KfmUss, Method::Enum) == 6.0);
    for (const auto& s : m.summary)
        if (s.doa == 50.0 && s.benchmark == Benchmark::KfmUss && s.method == Method::Enum) {
            CHECK(s.trials == 1);
            CHECK(s.failures == 1);
            CHECK(s.mean_sinr_db == 4.0);
        }

    std::ostringstream os;
    write_summary_csv(os, m.summary);
    CHECK(os.str().rfind("doa_deg,benchmark,method,trials,failures,mean_sinr_db\n", 0) == 0);
    CHECK(os.str().find("all,kfm-uss,enum,2,1,") != std::string::npos);
}

TEST_CASE("Monte Carlo configs are validated", "[pipeline][montecarlo]") {
    MonteCarloConfig c = tiny_config();
    c.methods = {Method::Given};
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = tiny_config();
    c.snapshots = 1;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = tiny_config();
    c.jammer_doa_max = 190;
    CHECK_THROWS_AS(c.validate(), DomainError);
}
