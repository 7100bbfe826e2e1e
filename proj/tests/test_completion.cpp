// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "sparsebf/pipeline.hpp"
#include "sparsebf/toeplitz_completion.hpp"

using namespace sparsebf;

namespace {

// Every difference 0..9 appears among {0, 1, 2, 6, 9}.
const SensorSelection kRuler(10, {0, 1, 2, 6, 9});

Scenario ruler_scene(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> doa(30.0, 150.0), pw(10.0, 20.0);
    Scenario sc;
    sc.grid = {10, 1.0 / 0.11};
    sc.taps = 2;
    sc.budget = 4;
    sc.noise_var = 1.0;
    sc.desired = {doa(rng), FrequencyBand::from_cycles(-0.25, 0.25), 1.0};
    for (int j = 0; j < 3; ++j) sc.jammers.push_back({doa(rng), FrequencyBand::full(), from_db(pw(rng))});
    return sc;
}

LagVector tone_lags(int n, double phase, cdouble scale, int gap = 0) {
    LagVector v(n);
    for (int d = -(n - 1); d < n; ++d)
        if (gap == 0 || std::abs(d) != gap) v.set(d, scale * std::polar(1.0, phase * d));
    return v;
}

double rel_frob(const CMatrix& a, const CMatrix& b) { return (a - b).norm() / b.norm(); }

double min_eig(const CMatrix& m) {
    return Eigen::SelfAdjointEigenSolver<CMatrix>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("lag vectors map onto Toeplitz matrices", "[completion]") {
    LagVector v(3);
    v.set(0, 2.0);
    v.set(1, {0.0, 1.0});
    v.set(-1, {0.0, -1.0});
    CHECK_FALSE(v.complete());
    v.set(2, 0.5);
    v.set(-2, 0.5);
    REQUIRE(v.complete());
    const CMatrix t = toeplitz_from_lags(v);
    CHECK(t(1, 0) == cdouble(0.0, 1.0));
    CHECK(t(0, 1) == cdouble(0.0, -1.0));
    CHECK(t(2, 0) == cdouble(0.5));
    CHECK(t(2, 2) == cdouble(2.0));
}

TEST_CASE("a full lag set is returned without solving", "[completion]") {
    const LagVector v = tone_lags(5, 0.7, 2.0);
    const BlockCompletion c = complete_hermitian_toeplitz(v);
    CHECK_FALSE(c.solved);
    CHECK(rel_frob(c.matrix, toeplitz_from_lags(v)) < 1e-15);
}

TEST_CASE("only lag zero gives a flagged scaled identity", "[completion]") {
    LagVector v(4);
    v.set(0, 3.0);
    const BlockCompletion c = complete_hermitian_toeplitz(v);
    CHECK(c.degenerate);
    CHECK(rel_frob(c.matrix, 3.0 * CMatrix::Identity(4, 4)) < 1e-15);
}

TEST_CASE("a missing Hermitian lag of a single tone is recovered", "[completion]") {
    for (int gap : {2, 3, 4}) {
        const LagVector v = tone_lags(6, 1.1, 1.0, gap);
        const BlockCompletion c = complete_hermitian_toeplitz(v);
        INFO("missing lag " << gap);
        REQUIRE(c.status == conic::Status::Optimal);
        CHECK(c.solved);
        CHECK(rel_frob(c.matrix, toeplitz_from_lags(tone_lags(6, 1.1, 1.0))) < 1e-4);
    }
}

TEST_CASE("a missing lag pair of a non-Hermitian block is recovered", "[completion]") {
    const cdouble scale = std::polar(0.8, 0.4);
    const LagVector v = tone_lags(6, -0.9, scale, 2);
    const BlockCompletion c = complete_indefinite_toeplitz(v);
    REQUIRE(c.status == conic::Status::Optimal);
    CHECK(rel_frob(c.matrix, toeplitz_from_lags(tone_lags(6, -0.9, scale))) < 1e-4);
}

TEST_CASE("coarray-complete noiseless scenes recover every block", "[completion]") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Scenario sc = ruler_scene(seed);
        const TdlCorrelations truth = scenario_correlations_tdl(sc);
        const MaskedCorrelation obs = observe(truth.total, stacked_mask(kRuler, sc.taps));
        const CompletedCorrelation c = complete_tdl(obs, sc.n(), sc.taps, sc.noise_var);
        const int n = sc.n();
        INFO("seed " << seed);
        for (int k = 0; k < sc.taps; ++k) {
            const CMatrix want = truth.total.block(0, k * n, n, n);
            const CMatrix got = c.unrepaired.block(0, k * n, n, n);
            CHECK(rel_frob(got, want) < 1e-6);
        }
        REQUIRE(c.diagnostics.size() == static_cast<std::size_t>(sc.taps));
        for (const auto& d : c.diagnostics) {
            CHECK(d.lag_bitmap.find('0') == std::string::npos);
            CHECK(d.residual < 1e-9);
        }

        const DftCorrelations dft = scenario_correlations_dft(sc);
        std::vector<MaskedCorrelation> bins;
        for (const auto& r : dft.total) bins.push_back(observe(r, stacked_mask(kRuler, 1)));
        const auto cd = complete_dft(bins, dft.bin_noise_var);
        for (std::size_t l = 0; l < cd.size(); ++l) CHECK(rel_frob(cd[l].unrepaired, dft.total[l]) < 1e-6);
    }
}

TEST_CASE("noise-floor repair keeps every eigenvalue above the noise variance", "[completion]") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const Scenario sc = ruler_scene(seed);
        const SensorSelection sensing = random_selection(sc.n(), 5, seed);
        const SnapshotBlock block = synthesize_snapshots(sc, sensing, 200, seed);
        const CompletedCorrelation c =
            complete_tdl(sample_correlation_tdl(block, sc.taps), sc.n(), sc.taps, sc.noise_var);
        INFO("seed " << seed);
        CHECK(min_eig(c.matrix) >= sc.noise_var * (1.0 - 1e-6));
        CHECK((c.matrix - c.matrix.adjoint()).norm() < 1e-12);

        const auto bins = complete_dft(sample_correlation_dft(block, sc.taps), sc.noise_var / sc.taps);
        for (const auto& b : bins) CHECK(min_eig(b.matrix) >= sc.noise_var / sc.taps * (1.0 - 1e-6));
    }
    CHECK_THROWS_AS(mle_floor(CMatrix::Identity(2, 2), 0.0), DomainError);
}

TEST_CASE("completion from analytic blocks leaves every selection's SINR in place", "[completion]") {
    for (std::uint64_t seed : {2, 7}) {
        const Scenario sc = ruler_scene(seed);
        const Truth truth = Truth::of(sc, true);
        for (Model model : {Model::Tdl, Model::Dft}) {
            DataOptions data;
            data.complete = true;
            data.initial = kRuler;
            const Estimate est = estimate_input(sc, model, data);
            double worst = 0.0;
            for (const auto& idx : combinations(sc.n(), sc.budget)) {
                const SensorSelection s(sc.n(), idx);
                const double est_db = input_sinr(est.input, s);
                const double true_db = model == Model::Tdl ? sinr_tdl(truth.tdl, s, sc.taps) : sinr_dft(truth.dft, s);
                worst = std::max(worst, std::abs(est_db - true_db));
            }
            INFO("seed " << seed << " model " << (model == Model::Tdl ? "tdl" : "dft"));
            CHECK(worst <= 0.1);
        }
    }
}

TEST_CASE("block assembly and diagnostics export", "[completion]") {
    const CMatrix t0 = CMatrix::Identity(2, 2);
    CMatrix t1(2, 2);
    t1 << cdouble(0, 1), 2.0, 3.0, cdouble(4, -1);
    const CMatrix r = assemble_block_toeplitz({t0, t1});
    CHECK(r.block(0, 2, 2, 2) == t1);
    CHECK(r.block(2, 0, 2, 2) == CMatrix(t1.adjoint()));
    CHECK_THROWS_AS(assemble_block_toeplitz({t0, CMatrix::Identity(3, 3)}), DimensionError);

    BlockDiagnostics d;
    d.block = 1;
    d.lag_bitmap = "1101";
    d.rank = 2;
    std::ostringstream os;
    write_diagnostics_csv(os, {d}, "block");
    const std::string text = os.str();
    CHECK(text.rfind("block,", 0) == 0);
    CHECK(text.find("1101") != std::string::npos);
}
