// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <random>

#include "sparsebf/sca_select.hpp"

using namespace sparsebf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

CMatrix random_hermitian(int n, std::mt19937_64& rng, double shift) {
    std::normal_distribution<double> g;
    CMatrix x(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) x(i, j) = {g(rng), g(rng)};
    return x * x.adjoint() / n + shift * CMatrix::Identity(n, n);
}

RMatrix random_spd(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    RMatrix x(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) x(i, j) = g(rng);
    return x * x.transpose() / n + 0.3 * RMatrix::Identity(n, n);
}

RVector random_vector(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    RVector v(n);
    for (int i = 0; i < n; ++i) v(i) = g(rng);
    return v;
}

Scenario small_scene(double doa) {
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

TEST_CASE("real embedding preserves quadratic forms and doubles the spectrum", "[sca][realify]") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + trial % 7;
        const CMatrix a = random_hermitian(n, rng, 0.0);
        const RMatrix ar = realify(a);
        CHECK((ar - ar.transpose()).cwiseAbs().maxCoeff() < 1e-14);

        Eigen::SelfAdjointEigenSolver<CMatrix> ec(a, Eigen::EigenvaluesOnly);
        Eigen::SelfAdjointEigenSolver<RMatrix> er(ar, Eigen::EigenvaluesOnly);
        for (int i = 0; i < n; ++i) {
            CHECK_THAT(er.eigenvalues()(2 * i), WithinAbs(ec.eigenvalues()(i), 1e-8));
            CHECK_THAT(er.eigenvalues()(2 * i + 1), WithinAbs(ec.eigenvalues()(i), 1e-8));
        }

        std::normal_distribution<double> g;
        CVector w(n);
        for (int i = 0; i < n; ++i) w(i) = {g(rng), g(rng)};
        const double quad = (w.adjoint() * a * w)(0).real();
        const RVector wr = realify(w);
        CHECK_THAT(wr.dot(ar * wr), WithinAbs(quad, 1e-8 * std::max(1.0, std::abs(quad))));
        CHECK(derealify(wr) == w);
    }
    CHECK_THROWS_AS(realify(CMatrix(CMatrix::Ones(2, 3))), DimensionError);
    CHECK_THROWS_AS(derealify(RVector::Ones(3)), DimensionError);
}

TEST_CASE("linearisation is the tangent of the signal power", "[sca]") {
    std::mt19937_64 rng(3);
    const RMatrix rs = random_spd(6, rng);
    const RVector w0 = random_vector(6, rng);
    const Linearization lin = linearize(rs, w0);
    CHECK_THAT(lin.m.dot(w0) + lin.b, WithinAbs(-w0.dot(rs * w0), 1e-12));
    // -w'Rs w is concave, so the tangent lies above it everywhere.
    for (int k = 0; k < 10; ++k) {
        const RVector w = random_vector(6, rng);
        CHECK(lin.m.dot(w) + lin.b >= -w.dot(rs * w) - 1e-12);
    }
}

TEST_CASE("unpenalised group QCQP has the closed-form ellipsoid minimiser", "[sca][qcqp]") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 4 + 2 * (trial % 4);
        const RMatrix q = random_spd(n, rng);
        const RVector m = random_vector(n, rng);
        conic::GroupQcqpProblem p;
        p.linear = m;
        for (int i = 0; i < n; ++i) p.group_of.push_back(i % (n / 2));
        p.group_weights = RVector::Zero(n / 2);
        p.constraints.push_back({0, q});
        // min m'w over w'Qw <= 1 is -sqrt(m' Q^-1 m).
        const double expect = -std::sqrt(m.dot(q.llt().solve(m)));
        const auto closed = conic::solve_group_qcqp(p);
        CHECK_THAT(closed.objective, WithinRel(expect, 1e-10));
        conic::GroupQcqpSettings admm;
        admm.closed_form_when_unpenalized = false;
        admm.abs_tol = 1e-10;
        admm.rel_tol = 1e-10;
        const auto iter = conic::solve_group_qcqp(p, admm);
        CHECK(iter.status == conic::Status::Optimal);
        CHECK_THAT(iter.objective, WithinRel(expect, 1e-5));
    }
}

TEST_CASE("group weights at the gradient norm switch every group off", "[sca][qcqp]") {
    std::mt19937_64 rng(8);
    const int n = 8;
    conic::GroupQcqpProblem p;
    p.linear = random_vector(n, rng);
    for (int i = 0; i < n; ++i) p.group_of.push_back(i % 4);
    RVector gn = RVector::Zero(4);
    for (int i = 0; i < n; ++i) gn(i % 4) += p.linear(i) * p.linear(i);
    // Zero is optimal iff ||m_g|| <= lambda_g for every group.
    p.group_weights = 1.01 * gn.cwiseSqrt();
    p.constraints.push_back({0, random_spd(n, rng)});
    const auto s = conic::solve_group_qcqp(p);
    CHECK(s.w.norm() < 1e-6);
    p.group_weights(2) = 0.5 * std::sqrt(gn(2));
    const auto t = conic::solve_group_qcqp(p);
    RVector tn = RVector::Zero(4);
    for (int i = 0; i < n; ++i) tn(i % 4) += t.w(i) * t.w(i);
    CHECK(tn(2) > 1e-6);
}

TEST_CASE("ellipsoid projection satisfies its optimality conditions", "[sca][qcqp]") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + trial % 5;
        const RMatrix q = random_spd(n, rng);
        const RVector p = 5.0 * random_vector(n, rng);
        Eigen::SelfAdjointEigenSolver<RMatrix> es(q);
        const RVector x = conic::detail::project_ellipsoid(p, es.eigenvectors(), es.eigenvalues());
        if (p.dot(q * p) <= 1.0) {
            CHECK(x == p);
            continue;
        }
        CHECK_THAT(x.dot(q * x), WithinAbs(1.0, 1e-9));
        // p - x = nu Q x with nu >= 0.
        const RVector qx = q * x;
        const double nu = (p - x).dot(qx) / qx.squaredNorm();
        CHECK(nu >= 0);
        CHECK((p - x - nu * qx).norm() <= 1e-8 * p.norm());
    }
}

TEST_CASE("SCA phase-one signal power never decreases", "[sca]") {
    std::mt19937_64 rng(99);
    for (int run = 0; run < 100; ++run) {
        const int sensors = 3 + run % 4;
        const int taps = 1 + run % 3;
        const int d = sensors * taps;
        std::normal_distribution<double> g;
        CMatrix v(d, 1 + run % 2);
        for (int i = 0; i < v.rows(); ++i)
            for (int j = 0; j < v.cols(); ++j) v(i, j) = {g(rng), g(rng)};
        const CMatrix rs = v * v.adjoint();
        const CMatrix r = rs + random_hermitian(d, rng, 0.5);
        const ScaModel model = ScaModel::build({r}, {rs}, sensors, taps);
        std::vector<TraceRow> trace;
        ScaSettings set;
        set.phase1_tol = 1e-10;
        set.phase1_max_iters = 50000;
        const RVector w = detail::sca_phase1(model, set, trace, "phase1");
        REQUIRE(trace.size() >= 2);
        INFO("run " << run);
        for (std::size_t k = 1; k < trace.size(); ++k)
            CHECK(trace[k].objective >= trace[k - 1].objective * (1.0 - 1e-9));
        // Power iteration towards the top generalized eigenvalue of (Rs, R).
        Eigen::GeneralizedSelfAdjointEigenSolver<CMatrix> es(rs, r, Eigen::EigenvaluesOnly);
        const double top = es.eigenvalues().maxCoeff();
        CHECK(model.signal_power(w) <= top * (1.0 + 1e-9));
        CHECK(model.signal_power(w) >= top * (1.0 - 1e-4));
    }
}

TEST_CASE("SCA selects exactly P sensors and never beats enumeration", "[sca]") {
    for (Model model : {Model::Tdl, Model::Dft}) {
        for (double doa : {40.0, 65.0}) {
            const Scenario sc = small_scene(doa);
            const DesignInput in = DesignInput::from_scenario(sc, model);
            const DesignResult r = run_sca(in);
            INFO("model " << (model == Model::Tdl ? "tdl" : "dft") << " doa " << doa);
            REQUIRE(r.selection.size() == sc.budget);
            const EnumerationResult e = enumerate_optimal(sc, model);
            CHECK(r.optimal_sinr_db <= e.best_sinr_db + 1e-9);
            CHECK(r.sinr_db <= r.optimal_sinr_db + 1e-6);
            CHECK(r.trace.front().stage == "phase1");
        }
    }
}

TEST_CASE("SCA subproblems validate their shapes", "[sca]") {
    const RMatrix r = RMatrix::Identity(8, 8);
    CHECK_THROWS_AS(sca_subproblem_tdl(RVector::Zero(8), 0.0, r, RVector::Ones(3), 1.0, 2, 2), DimensionError);
    const auto s = sca_subproblem_tdl(RVector::Ones(8), 0.0, r, RVector::Ones(2), 0.0, 2, 2);
    CHECK_THAT(s.objective, WithinRel(-std::sqrt(8.0), 1e-9));
    const auto d = sca_subproblem_dft({RVector::Ones(4), RVector::Ones(4)}, {0.0, 0.0},
                                      {RMatrix::Identity(4, 4), RMatrix::Identity(4, 4)}, RVector::Ones(2), 0.0);
    CHECK_THAT(d.objective, WithinRel(-4.0, 1e-9));
}
