// SPDX-License-Identifier: Apache-2.0
//
// Sensor selection by semidefinite relaxation with a reweighted group
// penalty and a binary search on the sparsity weight.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sparsebf/beamforming.hpp"
#include "sparsebf/conic.hpp"
#include "sparsebf/design.hpp"

namespace sparsebf {

struct SdrSettings {
    double mu_min = 0.01;
    double mu_max = 3.0;
    double mu_tol = 1e-4;
    double gamma = 1e-3;      // active-set threshold relative to the largest group
    double epsilon = 0.05;    // reweighting guard
    int max_reweights = 8;
    double rank_threshold = 0.95;
    conic::SolverSettings solver = default_solver();
    conic::SolverSettings final_solver = default_final_solver();

    static conic::SolverSettings default_solver() {
        conic::SolverSettings s;
        s.abs_tol = 1e-6;
        s.rel_tol = 1e-5;
        s.max_iters = 5000;
        return s;
    }

    // Nearly equal top eigenvalues need a tight solve to show rank one.
    static conic::SolverSettings default_final_solver() {
        conic::SolverSettings s;
        s.abs_tol = 1e-8;
        s.rel_tol = 1e-8;
        s.max_iters = 20000;
        return s;
    }

    void validate() const {
        if (!(mu_min >= 0 && mu_min < mu_max)) throw DomainError("sdr: need 0 <= mu_min < mu_max");
        if (!(mu_tol > 0) || !(gamma > 0 && gamma < 1) || !(epsilon > 0))
            throw DomainError("sdr: mu_tol, gamma and epsilon must be positive (gamma < 1)");
        if (max_reweights < 1) throw DomainError("sdr: max_reweights must be at least 1");
        solver.validate();
        final_solver.validate();
    }
};

struct SdrIterate {
    std::vector<CMatrix> W;  // one NL x NL block (TDL) or L blocks of N x N (DFT)
    RMatrix Wt;              // N x N auxiliary bound on |W_ll|; empty without penalty
    RMatrix U;
    double mu = 0.0;
    double objective = 0.0;
    int iteration = 0;
    int solver_iterations = 0;
    conic::Status status = conic::Status::Optimal;
};

/// The relaxed problem for one set of correlations. Each Hermitian block
/// W_b is made of `sub_blocks` diagonal N x N sub-blocks that share the
/// auxiliary bound W~ elementwise. Constraints are fixed at construction;
/// U and mu only change the objective, so successive solves warm-start.
class SdrRelaxation {
public:
    SdrRelaxation(std::vector<CMatrix> total, std::vector<CMatrix> signal, int sensors, int sub_blocks,
                  bool with_penalty, const conic::SolverSettings& settings)
        : total_(std::move(total)), signal_(std::move(signal)), n_(sensors), sub_(sub_blocks), penalty_(with_penalty) {
        if (total_.empty() || total_.size() != signal_.size()) throw DimensionError("sdr: block lists disagree");
        for (std::size_t b = 0; b < total_.size(); ++b) {
            const Eigen::Index d = static_cast<Eigen::Index>(n_) * sub_;
            if (total_[b].rows() != d || total_[b].cols() != d || signal_[b].rows() != d || signal_[b].cols() != d)
                throw DimensionError("sdr: block size does not match sensors x sub-blocks");
            if (hermitian_defect(total_[b]) > 1e-10 || hermitian_defect(signal_[b]) > 1e-10)
                throw DomainError("sdr: correlation blocks must be Hermitian");
        }

        conic::SdpProblem p;
        const int dim = n_ * sub_;
        for (std::size_t b = 0; b < total_.size(); ++b) p.add_block(dim);
        if (penalty_) wt_block_ = p.add_block(n_, conic::BlockKind::RealSymmetric, false);

        double smax = 0;
        for (const auto& s : signal_) smax = std::max(smax, s.cwiseAbs().maxCoeff());
        for (std::size_t b = 0; b < signal_.size(); ++b) {
            // A block without desired power cannot meet a normalisation.
            if (signal_[b].trace().real() <= 1e-12 * std::max(smax, 1e-300)) continue;
            p.constraints.push_back({conic::trace_inner(static_cast<int>(b), signal_[b]), conic::Relation::GreaterEqual, 1.0});
            constrained_.push_back(static_cast<int>(b));
        }
        if (constrained_.empty()) throw DomainError("sdr: no block carries desired-signal power");

        if (penalty_)
            for (std::size_t b = 0; b < total_.size(); ++b)
                for (int l = 0; l < sub_; ++l)
                    for (int j = 0; j < n_; ++j)
                        for (int i = 0; i <= j; ++i)
                            p.abs_bounds.push_back({static_cast<int>(b), l * n_ + i, l * n_ + j, wt_block_, i, j});

        base_objective_.clear();
        for (std::size_t b = 0; b < total_.size(); ++b) conic::append(base_objective_, conic::trace_inner(static_cast<int>(b), total_[b]));
        p.objective = base_objective_;
        solver_.emplace(std::move(p), settings);
    }

    int sensors() const noexcept { return n_; }
    int sub_blocks() const noexcept { return sub_; }
    const std::vector<int>& constrained_blocks() const noexcept { return constrained_; }

    SdrIterate solve(const RMatrix& U, double mu) {
        if (mu < 0) throw DomainError("sdr: mu must be nonnegative");
        conic::LinearExpr obj = base_objective_;
        if (penalty_) {
            if (U.rows() != n_ || U.cols() != n_) throw DimensionError("sdr: U must be N x N");
            if ((U.array() <= 0).any()) throw DomainError("sdr: U entries must be positive");
            conic::append(obj, conic::trace_inner(wt_block_, U), mu);
        }
        solver_->set_objective(obj);
        const conic::SdpSolution sol = solver_->solve();
        SdrIterate it;
        it.mu = mu;
        it.U = U;
        it.status = sol.status;
        it.objective = sol.objective;
        it.solver_iterations = sol.iterations;
        for (std::size_t b = 0; b < total_.size(); ++b) it.W.push_back(sol.blocks[b]);
        if (penalty_) it.Wt = sol.blocks[static_cast<std::size_t>(wt_block_)].real();
        return it;
    }

private:
    std::vector<CMatrix> total_, signal_;
    int n_, sub_;
    bool penalty_;
    int wt_block_ = -1;
    std::vector<int> constrained_;
    conic::LinearExpr base_objective_;
    std::optional<conic::SdpSolver> solver_;
};

/// Largest eigenvalue over trace; 1 for a rank-one matrix.
inline double rank_ratio(const CMatrix& w) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(w), Eigen::EigenvaluesOnly);
    const double tr = es.eigenvalues().sum();
    return tr > 0 ? es.eigenvalues().maxCoeff() / tr : 0.0;
}

/// Unit principal eigenvector.
inline CVector principal_vector(const CMatrix& w) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(w));
    return es.eigenvectors().col(w.rows() - 1);
}

/// U(m,n) = 1/(y_m y_n + eps) with y the tap-averaged squared magnitudes
/// of the principal eigenvectors of the diagonal N x N blocks of W, scaled
/// to unit peak so eps is relative to the strongest sensor.
inline RMatrix reweight_unit_rank(const CMatrix& w, int sensors, int taps, double epsilon = 0.05) {
    if (w.rows() != static_cast<Eigen::Index>(sensors) * taps || w.cols() != w.rows())
        throw DimensionError("reweight: W must be NL x NL");
    RVector y = RVector::Zero(sensors);
    for (int l = 0; l < taps; ++l) y += principal_vector(w.block(l * sensors, l * sensors, sensors, sensors)).cwiseAbs2();
    const double peak = y.maxCoeff();
    if (peak > 0) y /= peak;
    const RMatrix yy = y * y.transpose();
    return (yy.array() + epsilon).inverse().matrix();
}

/// U(m,n) = 1/(W~(m,n) + eps).
inline RMatrix reweight_dft(const RMatrix& wt, double epsilon = 0.05) {
    return (wt.array().max(0.0) + epsilon).inverse().matrix();
}

/// Sensors whose W~ diagonal exceeds gamma times the largest one.
inline SensorSelection active_set(const RMatrix& wt, double gamma) {
    const RVector d = wt.diagonal();
    const double top = d.maxCoeff();
    std::vector<int> idx;
    for (int k = 0; k < d.size(); ++k)
        if (top > 0 && d(k) > gamma * top) idx.push_back(k);
    return {static_cast<int>(d.size()), std::move(idx)};
}

namespace detail {

inline double iterate_rank_ratio(const SdrIterate& it, const std::vector<int>& blocks) {
    double r = 1.0;
    for (int b : blocks) r = std::min(r, rank_ratio(it.W[static_cast<std::size_t>(b)]));
    return r;
}

struct SdrBlocks {
    std::vector<CMatrix> total, signal;
    int sub = 1;
};

inline SdrBlocks sdr_blocks(const DesignInput& in, const SensorSelection& sel) {
    SdrBlocks b;
    if (in.model == Model::Tdl) {
        b.total.push_back(restrict(in.tdl.total, sel, in.taps));
        b.signal.push_back(restrict(in.tdl.signal, sel, in.taps));
        b.sub = in.taps;
    } else {
        b.total = restrict(in.dft.total, sel);
        b.signal = restrict(in.dft.signal, sel);
    }
    return b;
}

}  // namespace detail

/// Runs the full selection: binary search on mu with reweighting at each
/// mu, then a reduced unpenalised solve on the chosen sensors.
inline DesignResult run_sdr(const DesignInput& in, const SdrSettings& set = {}) {
    in.validate();
    set.validate();
    const int n = in.sensors;
    DesignResult res;
    res.model = in.model;
    res.method = "sdr";

    SensorSelection chosen = SensorSelection::full(n);
    if (in.budget < n) {
        const auto full = detail::sdr_blocks(in, SensorSelection::full(n));
        SdrRelaxation relax(full.total, full.signal, n, full.sub, true, set.solver);
        const RMatrix ones = RMatrix::Ones(n, n);

        double lo = set.mu_min, hi = set.mu_max;
        std::optional<BracketExhaustedError::Nearest> below, above;
        int last_card = n + 1;
        double last_mu = -1;
        bool found = false;
        while (true) {
            const double mu = 0.5 * (lo + hi);
            RMatrix u = ones;
            SensorSelection support;
            SdrIterate it;
            for (int r = 0; r < set.max_reweights; ++r) {
                it = relax.solve(u, mu);
                it.iteration = r;
                if (it.status == conic::Status::Infeasible)
                    throw conic::SolverError("sdr: relaxation reported infeasible", it.status);
                const SensorSelection s = active_set(it.Wt, set.gamma);
                res.trace.push_back({"search", mu, r, s.size(), it.objective,
                                     detail::iterate_rank_ratio(it, relax.constrained_blocks()), it.solver_iterations});
                if (it.status != conic::Status::Optimal)
                    res.warnings.push_back("solver stopped at max iterations (mu=" + std::to_string(mu) + ")");
                const bool stable = r > 0 && s == support;
                support = s;
                if (stable || s.size() == in.budget) break;
                u = in.model == Model::Tdl ? reweight_unit_rank(it.W.front(), n, in.taps, set.epsilon)
                                           : reweight_dft(it.Wt, set.epsilon);
            }
            const int card = support.size();
            if (last_mu >= 0 && ((mu > last_mu && card > last_card) || (mu < last_mu && card < last_card))) {
                res.warnings.push_back("cardinality not monotone in mu near mu=" + std::to_string(mu));
            }
            last_mu = mu;
            last_card = card;

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
            std::string msg = "sdr: mu bracket exhausted without reaching " + std::to_string(in.budget) + " sensors";
            for (const auto& c : near)
                msg += "; mu=" + std::to_string(c.mu) + " gives " + std::to_string(c.selection.size()) + " (" +
                       c.selection.to_bitmask() + ")";
            throw BracketExhaustedError(msg, std::move(near));
        }
    }

    // Reduced solve on the chosen sensors without the penalty.
    res.selection = chosen;
    const auto red = detail::sdr_blocks(in, chosen);
    SdrRelaxation final_relax(red.total, red.signal, chosen.size(), red.sub, false, set.final_solver);
    const SdrIterate fin = final_relax.solve(RMatrix(), 0.0);
    res.trace.push_back({"final", 0.0, 0, chosen.size(), fin.objective,
                         detail::iterate_rank_ratio(fin, final_relax.constrained_blocks()), fin.solver_iterations});
    if (fin.status != conic::Status::Optimal) res.warnings.push_back("final solve stopped at max iterations");
    res.rank_ratio = detail::iterate_rank_ratio(fin, final_relax.constrained_blocks());
    if (res.rank_ratio < set.rank_threshold)
        res.warnings.push_back("final relaxation is not rank one (ratio " + std::to_string(res.rank_ratio) + ")");

    res.weights.model = in.model;
    res.weights.selection = chosen;
    double acc = 0.0;
    int used = 0;
    for (std::size_t b = 0; b < fin.W.size(); ++b) {
        const bool live = std::find(final_relax.constrained_blocks().begin(), final_relax.constrained_blocks().end(),
                                    static_cast<int>(b)) != final_relax.constrained_blocks().end();
        if (!live) {
            res.weights.weights.push_back(CVector::Zero(fin.W[b].rows()));
            continue;
        }
        CVector w = principal_vector(fin.W[b]);
        const double g = (w.adjoint() * red.signal[b] * w)(0).real();
        if (g > 0) w /= std::sqrt(g);
        acc += sinr_of(w, red.signal[b], red.total[b] - red.signal[b]);
        ++used;
        res.weights.weights.push_back(std::move(w));
    }
    res.sinr_db = to_db(acc / std::max(used, 1));
    res.weights.sinr_db = res.sinr_db;
    detail::score_selection(in, res);
    return res;
}

}  // namespace sparsebf
