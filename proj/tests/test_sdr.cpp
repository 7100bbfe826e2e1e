// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <random>

#include "sparsebf/beamforming.hpp"
#include "sparsebf/sdr_select.hpp"

using namespace sparsebf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

CMatrix random_pd(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    CMatrix x(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) x(i, j) = {g(rng), g(rng)};
    return x * x.adjoint() / n + 0.2 * CMatrix::Identity(n, n);
}

CMatrix random_low_rank(int n, int rank, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    CMatrix v(n, rank);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < rank; ++j) v(i, j) = {g(rng), g(rng)};
    return v * v.adjoint();
}

// Largest eigenvalue of R^-1 Rs through Eigen's generalized solver.
double top_generalized(const CMatrix& r, const CMatrix& rs) {
    Eigen::GeneralizedSelfAdjointEigenSolver<CMatrix> es(rs, r, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

Scenario small_scene(double doa = 50.0) {
    Scenario sc;
    sc.grid = {6, 1.0 / 0.11};
    sc.taps = 2;
    sc.budget = 3;
    sc.noise_var = 1.0;
    sc.desired = {doa, FrequencyBand::from_cycles(-0.25, 0.25), 1.0};
    sc.jammers = {{doa + 12.0, FrequencyBand::full(), from_db(20)}, {130.0, FrequencyBand::full(), from_db(20)}};
    return sc;
}

}  // namespace

TEST_CASE("unpenalized relaxation attains the generalized eigenvalue bound with a rank-one optimum", "[sdr]") {
    std::mt19937_64 rng(2024);
    const int orders[] = {2, 3, 4, 6, 8, 12, 16, 20, 24};
    for (int trial = 0; trial < 20; ++trial) {
        const int dim = orders[trial % 9];
        const int sub = dim % 2 == 0 && trial % 3 == 0 ? 2 : 1;
        const CMatrix r = random_pd(dim, rng);
        const CMatrix rs = random_low_rank(dim, 1 + trial % 3, rng);
        SdrRelaxation relax({r}, {rs}, dim / sub, sub, false, SdrSettings::default_final_solver());
        const SdrIterate it = relax.solve(RMatrix(), 0.0);
        REQUIRE(it.status == conic::Status::Optimal);
        const double lam = top_generalized(r, rs);
        INFO("trial " << trial << " order " << dim);
        CHECK_THAT(1.0 / it.objective, WithinRel(lam, 1e-3));
        CHECK(rank_ratio(it.W.front()) >= 0.95);
    }
}

TEST_CASE("relaxation value against total correlation equals (1 + SINR) / SINR", "[sdr]") {
    const Scenario sc = small_scene();
    const TdlCorrelations c = scenario_correlations_tdl(sc);
    SdrRelaxation relax({c.total}, {c.signal}, sc.n(), sc.taps, false, SdrSettings::default_final_solver());
    const SdrIterate it = relax.solve(RMatrix(), 0.0);
    REQUIRE(it.status == conic::Status::Optimal);
    const double sinr = top_generalized(c.noise, c.signal);
    CHECK_THAT(it.objective, WithinRel((1.0 + sinr) / sinr, 1e-4));
}

TEST_CASE("unit-rank reweighting penalises weak sensors more", "[sdr]") {
    const int n = 4, taps = 2;
    CVector v(n * taps);
    v << 1.0, 0.5, 0.0, 2.0, 1.0, 0.5, 0.0, 2.0;
    const CMatrix w = v * v.adjoint();
    const RMatrix u = reweight_unit_rank(w, n, taps, 0.05);
    // Tap-averaged squared magnitudes over the unit eigenvector, unit peak:
    // y = (0.25, 0.0625, 0, 1).
    const RVector y = (RVector(4) << 0.25, 0.0625, 0.0, 1.0).finished();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) CHECK_THAT(u(i, j), WithinRel(1.0 / (y(i) * y(j) + 0.05), 1e-9));
    CHECK(u(2, 2) > u(1, 1));
    CHECK(u(1, 1) > u(3, 3));
    CHECK_THROWS_AS(reweight_unit_rank(w, 3, taps), DimensionError);
}

TEST_CASE("DFT reweighting and active-set thresholding", "[sdr]") {
    RMatrix wt(3, 3);
    wt << 1.0, 0.1, -0.2, 0.1, 5e-4, 0.0, -0.2, 0.0, 0.3;
    const RMatrix u = reweight_dft(wt, 0.05);
    CHECK_THAT(u(0, 0), WithinRel(1.0 / 1.05, 1e-12));
    CHECK_THAT(u(0, 2), WithinRel(1.0 / 0.05, 1e-12));
    const SensorSelection s = active_set(wt, 1e-3);
    CHECK(s.active() == std::vector<int>{0, 2});
    CHECK(active_set(wt, 1e-4).size() == 3);
}

TEST_CASE("SDR selects exactly P sensors and never beats enumeration", "[sdr]") {
    for (Model model : {Model::Tdl, Model::Dft}) {
        for (double doa : {40.0, 65.0}) {
            const Scenario sc = small_scene(doa);
            const DesignInput in = DesignInput::from_scenario(sc, model);
            const DesignResult r = run_sdr(in);
            INFO("model " << (model == Model::Tdl ? "tdl" : "dft") << " doa " << doa);
            REQUIRE(r.selection.size() == sc.budget);
            const EnumerationResult e = enumerate_optimal(sc, model);
            CHECK(r.optimal_sinr_db <= e.best_sinr_db + 1e-9);
            CHECK(r.optimal_sinr_db >= e.worst_sinr_db - 1e-9);
            CHECK(r.sinr_db <= r.optimal_sinr_db + 1e-6);
            CHECK(r.rank_ratio >= 0.95);
            CHECK_FALSE(r.trace.empty());
            CHECK(r.trace.back().stage == "final");
        }
    }
}

TEST_CASE("a full budget skips the search", "[sdr]") {
    Scenario sc = small_scene();
    sc.budget = sc.n();
    const DesignInput in = DesignInput::from_scenario(sc, Model::Tdl);
    const DesignResult r = run_sdr(in);
    CHECK(r.selection == SensorSelection::full(sc.n()));
    CHECK_THAT(r.sinr_db, WithinAbs(to_db(top_generalized(in.tdl.noise, in.tdl.signal)), 1e-3));
}

TEST_CASE("invalid SDR settings are rejected", "[sdr]") {
    SdrSettings s;
    s.mu_min = 2.0;
    s.mu_max = 1.0;
    CHECK_THROWS_AS(s.validate(), DomainError);
    s = {};
    s.gamma = 1.5;
    CHECK_THROWS_AS(s.validate(), DomainError);
}
