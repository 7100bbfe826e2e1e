// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "sparsebf/signal_model.hpp"

using namespace sparsebf;
using Catch::Matchers::WithinAbs;

namespace {

// Direct evaluation of the space-time steering entry for sensor k, tap m.
cdouble steering_entry(double theta, double x, double rho, int k, int m) {
    const double pi = std::acos(-1.0);
    return std::polar(1.0, pi * (rho + x) / (rho + 1.0) * k * std::cos(theta * pi / 180.0) + pi * x * m);
}

// Midpoint-rule band integral of a a^H, independent of the library's table.
CMatrix brute_correlation(const SourceSpec& s, const ArrayGrid& g, int taps, int points) {
    const int nl = g.sensors * taps;
    CMatrix r = CMatrix::Zero(nl, nl);
    const int count = s.band.narrowband() ? 1 : points;
    for (int i = 0; i < count; ++i) {
        const double x = s.band.narrowband() ? s.band.low : s.band.low + (i + 0.5) * s.band.width() / points;
        CVector a(nl);
        for (int m = 0; m < taps; ++m)
            for (int k = 0; k < g.sensors; ++k) a(m * g.sensors + k) = steering_entry(s.doa_deg, x, g.carrier_ratio, k, m);
        r += a * a.adjoint();
    }
    return s.power * r / static_cast<double>(count);
}

Scenario small_scene() {
    Scenario sc;
    sc.grid = {6, 1.0 / 0.11};
    sc.taps = 3;
    sc.budget = 3;
    sc.noise_var = 0.5;
    sc.desired = {50.0, FrequencyBand::from_cycles(-0.25, 0.25), 1.0};
    sc.jammers = {{110.0, FrequencyBand::full(), 100.0}, {140.0, FrequencyBand::tone(0.0), 30.0}};
    return sc;
}

}  // namespace

TEST_CASE("bands in cycles per sample map onto the unit frequency axis", "[signal]") {
    const auto b = FrequencyBand::from_cycles(-0.25, 0.25);
    CHECK(b.low == -0.5);
    CHECK(b.high == 0.5);
    CHECK(FrequencyBand::full().width() == 2.0);
    CHECK_THROWS_AS((FrequencyBand{0.5, 0.2}.validate()), DomainError);
}

TEST_CASE("space-time steering follows the stacked k + mN layout", "[signal]") {
    const ArrayGrid g{5, 7.5};
    const int taps = 4;
    for (double theta : {0.0, 33.0, 90.0, 151.0})
        for (double x : {-1.0, -0.3, 0.0, 0.8}) {
            const CVector v = steering_tdl(theta, x, g, taps);
            REQUIRE(v.size() == 20);
            for (int m = 0; m < taps; ++m)
                for (int k = 0; k < g.sensors; ++k)
                    CHECK(std::abs(v(m * g.sensors + k) - steering_entry(theta, x, g.carrier_ratio, k, m)) < 1e-12);
        }
    CHECK_THROWS_AS(steering_tdl(190.0, 0.0, g, 2), DomainError);
    CHECK_THROWS_AS(steering_tdl(40.0, 1.5, g, 2), DomainError);
}

TEST_CASE("broadside spatial factor is frequency independent", "[signal]") {
    const ArrayGrid g{8, 9.0};
    const CVector a = spatial_steering(90.0, 0.7, g);
    CHECK((a - CVector::Ones(8)).norm() < 1e-12);
}

TEST_CASE("analytic source correlation matches brute-force band integration", "[signal]") {
    const ArrayGrid g{5, 1.0 / 0.11};
    for (const SourceSpec& s : {SourceSpec{40.0, FrequencyBand::full(), 2.0},
                                SourceSpec{125.0, FrequencyBand::from_cycles(-0.1, 0.3), 1.0},
                                SourceSpec{70.0, FrequencyBand::tone(0.4), 3.0}}) {
        const CMatrix exact = source_correlation_tdl(s, g, 3);
        const CMatrix brute = brute_correlation(s, g, 3, 20000);
        CHECK((exact - brute).norm() / brute.norm() < 1e-6);
        CHECK(hermitian_defect(exact) < 1e-12);
    }
}

TEST_CASE("scenario correlation is signal plus jammers plus white noise", "[signal]") {
    const Scenario sc = small_scene();
    const TdlCorrelations c = scenario_correlations_tdl(sc);
    CHECK((c.total - c.signal - c.noise).norm() < 1e-12);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(c.total, Eigen::EigenvaluesOnly);
    CHECK_THAT(es.eigenvalues().minCoeff(), WithinAbs(sc.noise_var, 1e-6 * es.eigenvalues().maxCoeff()));
    CHECK(es.eigenvalues().minCoeff() >= sc.noise_var * (1 - 1e-9));
    CHECK_THAT(c.signal.trace().real(), WithinAbs(sc.desired.power * sc.stacked_size(), 1e-9));
}

TEST_CASE("DFT bins tile the baseband axis", "[signal]") {
    for (int taps : {1, 2, 5, 8})
        for (const FrequencyBand& b : {FrequencyBand::full(), FrequencyBand::from_cycles(-0.25, 0.25),
                                       FrequencyBand::from_cycles(0.1, 0.45), FrequencyBand::tone(0.0),
                                       FrequencyBand::tone(-1.0)}) {
            double total = 0;
            for (int l = 0; l < taps; ++l) total += bin_power_fraction(b, l, taps);
            CHECK_THAT(total, WithinAbs(1.0, 1e-12));
        }
    CHECK(dft_bin_center(0, 8) == -1.0);
    CHECK(dft_bin_center(4, 8) == 0.0);
}

TEST_CASE("per-bin noise carries sigma squared over L", "[signal]") {
    const Scenario sc = small_scene();
    const DftCorrelations d = scenario_correlations_dft(sc);
    REQUIRE(d.total.size() == static_cast<std::size_t>(sc.taps));
    CHECK_THAT(d.bin_noise_var, WithinAbs(sc.noise_var / sc.taps, 1e-15));
    double signal = 0;
    for (const auto& s : d.signal) signal += s.trace().real();
    CHECK_THAT(signal, WithinAbs(sc.desired.power * sc.n(), 1e-9));
}

TEST_CASE("sample correlation converges to the analytic one", "[signal]") {
    Scenario sc = small_scene();
    sc.grid.sensors = 4;
    sc.taps = 2;
    const auto full = SensorSelection::full(4);
    const SnapshotBlock blk = synthesize_snapshots(sc, full, 40000, 11);
    const MaskedCorrelation m = sample_correlation_tdl(blk, sc.taps);
    const CMatrix r = scenario_correlations_tdl(sc).total;
    CHECK((m.value - r).norm() / r.norm() < 0.05);
    CHECK(m.missing() == 0);
}

TEST_CASE("snapshots from unselected sensors are masked out", "[signal]") {
    const Scenario sc = small_scene();
    const SensorSelection sel(6, {0, 2, 5});
    const SnapshotBlock blk = synthesize_snapshots(sc, sel, 64, 3);
    CHECK(blk.samples.row(1).norm() == 0.0);
    const MaskedCorrelation m = sample_correlation_tdl(blk, sc.taps);
    CHECK(m.missing() == 36L * 3 * 3 - 9L * 3 * 3);
    const auto bins = sample_correlation_dft(blk, sc.taps);
    REQUIRE(bins.size() == 3);
    CHECK(bins[0].missing() == 36 - 9);
    CHECK(synthesize_snapshots(sc, sel, 64, 3).samples == blk.samples);
    CHECK_THROWS_AS(sample_correlation_tdl(synthesize_snapshots(sc, sel, 2, 1), 3), InsufficientDataError);
}

TEST_CASE("scenario validation rejects inconsistent scenes", "[signal]") {
    Scenario sc = small_scene();
    sc.jammers.push_back({50.0, FrequencyBand::full(), 1.0});
    CHECK_THROWS_AS(sc.validate(), DomainError);
    sc = small_scene();
    sc.budget = 7;
    CHECK_THROWS_AS(sc.validate(), DomainError);
    sc = small_scene();
    sc.noise_var = 0;
    CHECK_THROWS_AS(sc.validate(), DomainError);
}
