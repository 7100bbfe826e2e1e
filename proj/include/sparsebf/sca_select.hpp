// SPDX-License-Identifier: Apache-2.0
//
// Sensor selection by successive convex approximation: the concave
// objective -w'Rs w is linearised around the current iterate and each
// convex subproblem carries a reweighted l1-l2 group penalty.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "sparsebf/beamforming.hpp"
#include "sparsebf/design.hpp"
#include "sparsebf/group_qcqp.hpp"

namespace sparsebf {

struct ScaSettings {
    double mu_min = 0.01;
    double mu_max = 3.0;
    double mu_tol = 1e-4;
    double gamma = 1e-3;
    double epsilon = 0.05;
    double phase1_tol = 1e-5;
    int phase1_max_iters = 1000;
    double fixed_point_tol = 1e-5;
    int max_relinearizations = 30;
    conic::GroupQcqpSettings qcqp;

    void validate() const {
        if (!(mu_min >= 0 && mu_min < mu_max)) throw DomainError("sca: need 0 <= mu_min < mu_max");
        if (!(mu_tol > 0) || !(gamma > 0 && gamma < 1) || !(epsilon > 0))
            throw DomainError("sca: mu_tol, gamma and epsilon must be positive (gamma < 1)");
        if (!(phase1_tol > 0) || phase1_max_iters < 1 || !(fixed_point_tol > 0) || max_relinearizations < 1)
            throw DomainError("sca: iteration limits must be positive");
    }
};

/// Real embedding [Re A, -Im A; Im A, Re A] of a Hermitian matrix.
inline RMatrix realify(const CMatrix& a) {
    if (a.rows() != a.cols()) throw DimensionError("realify: matrix must be square");
    if (hermitian_defect(a) > 1e-10) throw DomainError("realify: matrix must be Hermitian");
    const Eigen::Index n = a.rows();
    RMatrix r(2 * n, 2 * n);
    r.topLeftCorner(n, n) = a.real();
    r.topRightCorner(n, n) = -a.imag();
    r.bottomLeftCorner(n, n) = a.imag();
    r.bottomRightCorner(n, n) = a.real();
    return r;
}

inline RVector realify(const CVector& w) {
    RVector r(2 * w.size());
    r << w.real(), w.imag();
    return r;
}

inline CVector derealify(const RVector& r) {
    if (r.size() % 2) throw DimensionError("derealify: length must be even");
    const Eigen::Index n = r.size() / 2;
    CVector w(n);
    for (Eigen::Index i = 0; i < n; ++i) w(i) = {r(i), r(n + i)};
    return w;
}

/// Linearisation of -w'Rs w at w0: m = -2 Rs w0, b = w0' Rs w0.
struct Linearization {
    RVector m;
    double b = 0.0;
};

inline Linearization linearize(const RMatrix& rs_real, const RVector& w0) {
    const RVector g = rs_real * w0;
    return {-2.0 * g, w0.dot(g)};
}

/// Index layout and real-form matrices for one design. Segments are the
/// independent constraint blocks: one 2NL block (TDL) or L blocks of 2N (DFT).
struct ScaModel {
    int sensors = 0;
    std::vector<RMatrix> r, rs;   // per segment
    std::vector<int> offset;      // per segment
    std::vector<int> group_of;    // real index -> sensor
    std::vector<char> live;       // segment carries desired power

    int size() const { return offset.empty() ? 0 : offset.back() + static_cast<int>(r.back().rows()); }

    static ScaModel build(const std::vector<CMatrix>& total, const std::vector<CMatrix>& signal, int sensors, int taps) {
        ScaModel m;
        m.sensors = sensors;
        int off = 0;
        for (std::size_t s = 0; s < total.size(); ++s) {
            m.r.push_back(realify(total[s]));
            m.rs.push_back(realify(signal[s]));
            m.offset.push_back(off);
            m.live.push_back(signal[s].trace().real() > 0.0);
            // Complex index i = k + tN belongs to sensor k, in both halves.
            const int d = static_cast<int>(total[s].rows());
            if (d != sensors * taps) throw DimensionError("sca: segment size must be N * taps");
            for (int i = 0; i < 2 * d; ++i) m.group_of.push_back((i % d) % sensors);
            off += 2 * d;
        }
        return m;
    }

    Linearization linearize_all(const RVector& w) const {
        Linearization lin{RVector::Zero(size()), 0.0};
        for (std::size_t s = 0; s < r.size(); ++s) {
            const int d = static_cast<int>(r[s].rows());
            const Linearization part = sparsebf::linearize(rs[s], w.segment(offset[s], d));
            lin.m.segment(offset[s], d) = part.m;
            lin.b += part.b;
        }
        return lin;
    }

    /// Sum over segments of w_s' Rs_s w_s.
    double signal_power(const RVector& w) const {
        double acc = 0.0;
        for (std::size_t s = 0; s < r.size(); ++s) {
            const int d = static_cast<int>(r[s].rows());
            acc += w.segment(offset[s], d).dot(rs[s] * w.segment(offset[s], d));
        }
        return acc;
    }

    RVector group_norms(const RVector& w) const {
        RVector g = RVector::Zero(sensors);
        for (int i = 0; i < w.size(); ++i) g(group_of[static_cast<std::size_t>(i)]) += w(i) * w(i);
        return g.cwiseSqrt();
    }

    conic::GroupQcqpProblem problem(const Linearization& lin, const RVector& weights) const {
        conic::GroupQcqpProblem p;
        p.linear = lin.m;
        p.constant = lin.b;
        p.group_of = group_of;
        p.group_weights = weights;
        for (std::size_t s = 0; s < r.size(); ++s) p.constraints.push_back({offset[s], r[s]});
        return p;
    }

    /// Feasible start (1+j) * ones scaled onto each ellipsoid boundary.
    RVector initial_point() const {
        RVector w(size());
        for (std::size_t s = 0; s < r.size(); ++s) {
            const int d = static_cast<int>(r[s].rows());
            RVector v = RVector::Ones(d);
            v /= std::sqrt(v.dot(r[s] * v));
            w.segment(offset[s], d) = v;
        }
        return w;
    }
};

/// One linearised subproblem: min m'w + b + mu sum_k u_k ||w_k|| over the
/// ellipsoid w'Rw <= 1. TDL form.
inline conic::GroupQcqpSolution sca_subproblem_tdl(const RVector& m, double b, const RMatrix& r_real,
                                                   const RVector& u, double mu, int sensors, int taps,
                                                   const conic::GroupQcqpSettings& set = {}) {
    const int nl = sensors * taps;
    if (r_real.rows() != 2 * nl || m.size() != 2 * nl || u.size() != sensors)
        throw DimensionError("sca subproblem: sizes disagree with N and L");
    conic::GroupQcqpProblem p;
    p.linear = m;
    p.constant = b;
    for (int i = 0; i < 2 * nl; ++i) p.group_of.push_back((i % nl) % sensors);
    p.group_weights = mu * u;
    p.constraints.push_back({0, r_real});
    return conic::solve_group_qcqp(p, set);
}

/// DFT form: per-bin linear terms and ellipsoids, groups shared across bins.
/// Each bin vector is stacked as [Re w(l); Im w(l)].
inline conic::GroupQcqpSolution sca_subproblem_dft(const std::vector<RVector>& m, const std::vector<double>& b,
                                                   const std::vector<RMatrix>& r_real, const RVector& u, double mu,
                                                   const conic::GroupQcqpSettings& set = {}) {
    if (m.size() != r_real.size() || b.size() != r_real.size() || r_real.empty())
        throw DimensionError("sca subproblem: bin lists disagree");
    const int n = static_cast<int>(r_real.front().rows()) / 2;
    conic::GroupQcqpProblem p;
    p.linear.resize(static_cast<Eigen::Index>(2 * n * r_real.size()));
    for (std::size_t l = 0; l < r_real.size(); ++l) {
        if (r_real[l].rows() != 2 * n || m[l].size() != 2 * n) throw DimensionError("sca subproblem: bin size mismatch");
        p.linear.segment(static_cast<Eigen::Index>(2 * n * l), 2 * n) = m[l];
        p.constant += b[l];
        for (int i = 0; i < 2 * n; ++i) p.group_of.push_back(i % n);
        p.constraints.push_back({static_cast<int>(2 * n * l), r_real[l]});
    }
    if (u.size() != n) throw DimensionError("sca subproblem: u must have one entry per sensor");
    p.group_weights = mu * u;
    return conic::solve_group_qcqp(p, set);
}

namespace detail {

inline ScaModel sca_model(const DesignInput& in, const SensorSelection& sel) {
    if (in.model == Model::Tdl)
        return ScaModel::build({restrict(in.tdl.total, sel, in.taps)}, {restrict(in.tdl.signal, sel, in.taps)},
                               sel.size(), in.taps);
    return ScaModel::build(restrict(in.dft.total, sel), restrict(in.dft.signal, sel), sel.size(), 1);
}

inline SensorSelection sca_active(const RVector& norms, double gamma) {
    const double top = norms.maxCoeff();
    std::vector<int> idx;
    for (int k = 0; k < norms.size(); ++k)
        if (top > 0 && norms(k) > gamma * top) idx.push_back(k);
    return {static_cast<int>(norms.size()), std::move(idx)};
}

/// Unpenalised SCA to convergence: each step has the closed form
/// w ~ R^-1 Rs w_prev, so the objective w'Rs w never decreases.
inline RVector sca_phase1(const ScaModel& model, const ScaSettings& set, std::vector<TraceRow>& trace,
                          const std::string& stage) {
    RVector w = model.initial_point();
    conic::GroupQcqpSolver solver(model.problem(model.linearize_all(w), RVector::Zero(model.sensors)));
    double prev = model.signal_power(w);
    trace.push_back({stage, 0.0, 0, model.sensors, prev, 1.0, 0});
    for (int it = 1; it <= set.phase1_max_iters; ++it) {
        const Linearization lin = model.linearize_all(w);
        solver.update(lin.m, lin.b, RVector::Zero(model.sensors));
        w = solver.solve().w;
        const double cur = model.signal_power(w);
        trace.push_back({stage, 0.0, it, model.sensors, cur, 1.0, 0});
        if (std::abs(cur - prev) <= set.phase1_tol * std::abs(cur)) return w;
        prev = cur;
    }
    throw Error("sca: unpenalised iterations did not converge within " + std::to_string(set.phase1_max_iters) +
                " steps");
}

}  // namespace detail

/// Full selection: unpenalised phase on all sensors, binary search on mu
/// with reweighting and relinearisation, then a reduced unpenalised phase.
inline DesignResult run_sca(const DesignInput& in, const ScaSettings& set = {}) {
    in.validate();
    set.validate();
    const int n = in.sensors;
    DesignResult res;
    res.model = in.model;
    res.method = "sca";

    SensorSelection chosen = SensorSelection::full(n);
    const ScaModel full = detail::sca_model(in, SensorSelection::full(n));
    const RVector w_full = detail::sca_phase1(full, set, res.trace, "phase1");

    if (in.budget < n) {
        const Linearization lin0 = full.linearize_all(w_full);
        conic::GroupQcqpSolver solver(full.problem(lin0, RVector::Ones(n)));
        conic::GroupQcqpSettings qs = set.qcqp;
        qs.closed_form_when_unpenalized = false;

        double lo = set.mu_min, hi = set.mu_max;
        std::optional<BracketExhaustedError::Nearest> below, above;
        bool found = false;
        while (true) {
            const double mu = 0.5 * (lo + hi);
            RVector u = RVector::Ones(n);
            Linearization lin = lin0;
            RVector w = w_full;
            SensorSelection support;
            for (int r = 0; r < set.max_relinearizations; ++r) {
                solver.update(lin.m, lin.b, mu * u);
                const conic::GroupQcqpSolution sol = solver.solve(qs, &w);
                if (sol.status != conic::Status::Optimal)
                    res.warnings.push_back("group qcqp stopped at max iterations (mu=" + std::to_string(mu) + ")");
                const double change = (sol.w - w).norm() / std::max(w.norm(), 1e-300);
                w = sol.w;
                const RVector norms = full.group_norms(w);
                support = detail::sca_active(norms, set.gamma);
                res.trace.push_back({"search", mu, r, support.size(), sol.objective, 1.0, sol.iterations});
                if (change < set.fixed_point_tol || support.size() == in.budget || w.squaredNorm() == 0.0) break;
                u = (norms.array() + set.epsilon).inverse().matrix();
                lin = full.linearize_all(w);
            }
            const int card = support.size();
            if (card == in.budget) {
                chosen = support;
                res.final_mu = mu;
                found = true;
                break;
            }
            if (card > in.budget) {
                lo = mu;
                if (!above || card < above->selection.size()) above = BracketExhaustedError::Nearest{mu, support};
            } else {
                hi = mu;
                if (!below || card > below->selection.size()) below = BracketExhaustedError::Nearest{mu, support};
            }
            if (hi - lo < set.mu_tol) break;
        }
        if (!found) {
            const auto bridged = detail::bridge_supports(in, below ? &below->selection : nullptr,
                                                         above ? &above->selection : nullptr);
            if (bridged) {
                chosen = *bridged;
                found = true;
                res.final_mu = above->mu;
                res.warnings.push_back("no mu gave " + std::to_string(in.budget) + " sensors; filled " +
                                       (below ? below->selection.to_bitmask() : std::string("an empty support")) +
                                       " from " + above->selection.to_bitmask() + " by exact SINR");
                res.trace.push_back({"bridge", above->mu, 0, chosen.size(), 0.0, 1.0, 0});
            }
        }
        if (!found) {
            std::vector<BracketExhaustedError::Nearest> near;
            if (below) near.push_back(*below);
            if (above) near.push_back(*above);
            std::string msg = "sca: mu bracket exhausted without reaching " + std::to_string(in.budget) + " sensors";
            for (const auto& c : near)
                msg += "; mu=" + std::to_string(c.mu) + " gives " + std::to_string(c.selection.size()) + " (" +
                       c.selection.to_bitmask() + ")";
            throw BracketExhaustedError(msg, std::move(near));
        }
    }

    res.selection = chosen;
    const ScaModel red = detail::sca_model(in, chosen);
    const RVector w = detail::sca_phase1(red, set, res.trace, "final");
    res.weights.model = in.model;
    res.weights.selection = chosen;
    double acc = 0.0;
    int used = 0;
    for (std::size_t s = 0; s < red.r.size(); ++s) {
        const int d = static_cast<int>(red.r[s].rows());
        CVector wc = derealify(w.segment(red.offset[s], d));
        if (red.live[s]) {
            const double g = w.segment(red.offset[s], d).dot(red.rs[s] * w.segment(red.offset[s], d));
            const double q = w.segment(red.offset[s], d).dot((red.r[s] - red.rs[s]) * w.segment(red.offset[s], d));
            acc += g / q;
            ++used;
            if (g > 0) wc /= std::sqrt(g);
        }
        res.weights.weights.push_back(std::move(wc));
    }
    res.sinr_db = to_db(acc / std::max(used, 1));
    res.weights.sinr_db = res.sinr_db;
    detail::score_selection(in, res);
    return res;
}

}  // namespace sparsebf
