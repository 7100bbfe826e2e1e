// SPDX-License-Identifier: Apache-2.0
//
// Linear objective plus weighted group norms over a product of ellipsoids:
//
//     minimize    m'w + b + sum_g lambda_g ||w_g||_2
//     subject to  w_s' Q_s w_s <= 1   for each disjoint segment s
//
// Solved by ADMM on the split w = z: the w-step projects onto the ellipsoids,
// the z-step is a block soft-threshold, so deselected groups come out exactly
// zero.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "sparsebf/common.hpp"
#include "sparsebf/conic.hpp"

namespace sparsebf::conic {

/// w.segment(offset, Q.rows())' Q w.segment(offset, Q.rows()) <= 1.
struct QuadraticConstraint {
    int offset = 0;
    RMatrix Q;
};

struct GroupQcqpProblem {
    RVector linear;
    double constant = 0.0;
    std::vector<int> group_of;  // index -> group id, ids 0..G-1
    RVector group_weights;      // lambda_g >= 0
    std::vector<QuadraticConstraint> constraints;

    int size() const { return static_cast<int>(linear.size()); }
    int n_groups() const { return static_cast<int>(group_weights.size()); }

    void validate() const {
        const int n = size();
        if (static_cast<int>(group_of.size()) != n) throw DimensionError("group qcqp: group map length mismatch");
        std::vector<char> seen(static_cast<std::size_t>(n_groups()), 0);
        for (int g : group_of) {
            if (g < 0 || g >= n_groups()) throw DomainError("group qcqp: group id out of range");
            seen[static_cast<std::size_t>(g)] = 1;
        }
        for (char s : seen)
            if (!s) throw DomainError("group qcqp: empty group");
        if ((group_weights.array() < 0).any() || !group_weights.allFinite())
            throw DomainError("group qcqp: group weights must be finite and nonnegative");
        if (!linear.allFinite()) throw DomainError("group qcqp: non-finite linear term");
        std::vector<char> used(static_cast<std::size_t>(n), 0);
        for (const QuadraticConstraint& c : constraints) {
            if (c.Q.rows() != c.Q.cols() || c.offset < 0 || c.offset + c.Q.rows() > n)
                throw DimensionError("group qcqp: constraint segment out of range");
            for (int i = 0; i < c.Q.rows(); ++i) {
                char& u = used[static_cast<std::size_t>(c.offset + i)];
                if (u) throw DomainError("group qcqp: constraint segments overlap");
                u = 1;
            }
            if ((c.Q - c.Q.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, c.Q.cwiseAbs().maxCoeff()))
                throw DomainError("group qcqp: constraint matrix is not symmetric");
        }
        for (int i = 0; i < n; ++i)
            if (!used[static_cast<std::size_t>(i)] && linear(i) != 0.0)
                throw DomainError("group qcqp: unbounded direction outside every constraint");
    }

    double objective(const RVector& w) const {
        RVector gn = RVector::Zero(n_groups());
        for (int i = 0; i < size(); ++i) gn(group_of[static_cast<std::size_t>(i)]) += w(i) * w(i);
        return linear.dot(w) + constant + group_weights.dot(gn.cwiseSqrt());
    }
};

struct GroupQcqpSettings {
    double abs_tol = 1e-7;
    double rel_tol = 1e-6;
    int max_iters = 20000;
    double rho = 1.0;
    double alpha = 1.6;
    bool adaptive_rho = true;
    bool closed_form_when_unpenalized = true;
    bool record_history = false;
};

struct GroupQcqpSolution {
    Status status = Status::MaxIterations;
    RVector w;
    double objective = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    int iterations = 0;
    std::vector<double> history;  // objective at the z iterate, per iteration
};

namespace detail {

/// Euclidean projection onto {x : x' Q x <= 1} given Q = V diag(lam) V'.
inline RVector project_ellipsoid(const RVector& p, const RMatrix& v, const RVector& lam) {
    const RVector ph = v.transpose() * p;
    auto phi = [&](double nu) {
        double f = 0, df = 0;
        for (Eigen::Index i = 0; i < ph.size(); ++i) {
            const double d = 1.0 + nu * lam(i);
            const double t = lam(i) * ph(i) * ph(i);
            f += t / (d * d);
            df -= 2.0 * lam(i) * t / (d * d * d);
        }
        return std::pair{f - 1.0, df};
    };
    auto [f0, d0] = phi(0.0);
    if (f0 <= 0) return p;
    double nu = 0.0;
    // phi is convex and decreasing, so Newton from the left converges monotonically.
    for (int it = 0; it < 200; ++it) {
        auto [f, df] = phi(nu);
        if (f <= 1e-14 || df >= 0) break;
        const double step = f / df;
        nu -= step;
        if (std::abs(step) <= 1e-15 * std::max(1.0, nu)) break;
    }
    RVector q(ph.size());
    for (Eigen::Index i = 0; i < ph.size(); ++i) q(i) = ph(i) / (1.0 + nu * lam(i));
    return v * q;
}

}  // namespace detail

class GroupQcqpSolver {
public:
    explicit GroupQcqpSolver(GroupQcqpProblem problem) : prob_(std::move(problem)) {
        prob_.validate();
        for (const QuadraticConstraint& c : prob_.constraints) {
            Eigen::SelfAdjointEigenSolver<RMatrix> es(c.Q);
            if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, es.eigenvalues().maxCoeff()))
                throw DomainError("group qcqp: constraint matrix is not PSD");
            eig_.push_back({es.eigenvectors(), es.eigenvalues().cwiseMax(0.0)});
        }
    }

    GroupQcqpProblem& problem() noexcept { return prob_; }
    const GroupQcqpProblem& problem() const noexcept { return prob_; }

    /// Replace the linear term and group weights, keeping the constraints.
    void update(const RVector& linear, double constant, const RVector& group_weights) {
        if (linear.size() != prob_.linear.size() || group_weights.size() != prob_.group_weights.size())
            throw DimensionError("group qcqp: update has wrong sizes");
        prob_.linear = linear;
        prob_.constant = constant;
        prob_.group_weights = group_weights;
        prob_.validate();
    }

    GroupQcqpSolution solve(const GroupQcqpSettings& set = {}, const RVector* warm = nullptr) const {
        if (set.closed_form_when_unpenalized && (prob_.group_weights.array() == 0).all()) return closed_form();
        const int n = prob_.size();
        const int ng = prob_.n_groups();
        RVector z = warm ? *warm : RVector::Zero(n);
        if (z.size() != n) throw DimensionError("group qcqp: warm start has wrong length");
        RVector y = RVector::Zero(n), w(n), wh(n), zold(n), gn(ng);
        double rho = set.rho;
        GroupQcqpSolution out;
        const double sqrt_n = std::sqrt(static_cast<double>(n));

        for (int it = 1; it <= set.max_iters; ++it) {
            w = project(z - (prob_.linear + y) / rho);
            wh = set.alpha * w + (1.0 - set.alpha) * z;
            zold = z;
            z = wh + y / rho;
            shrink(z, prob_.group_weights / rho, gn);
            y += rho * (wh - z);

            const double rp = (w - z).norm();
            const double rd = rho * (z - zold).norm();
            if (set.record_history) out.history.push_back(prob_.objective(z));
            const double ep = set.abs_tol * sqrt_n + set.rel_tol * std::max(w.norm(), z.norm());
            const double ed = set.abs_tol * sqrt_n + set.rel_tol * y.norm();
            out.iterations = it;
            out.primal_residual = rp;
            out.dual_residual = rd;
            if (rp <= ep && rd <= ed) {
                out.status = Status::Optimal;
                break;
            }
            if (set.adaptive_rho && it % 10 == 0) {
                // The w-step does not depend on rho, so rebalancing is free.
                if (rp > 10 * rd) {
                    rho *= 2;
                } else if (rd > 10 * rp) {
                    rho /= 2;
                }
            }
        }
        out.w = make_feasible(z);
        out.objective = prob_.objective(out.w);
        return out;
    }

private:
    struct Eig {
        RMatrix v;
        RVector lam;
    };

    RVector project(const RVector& p) const {
        RVector out = p;
        for (std::size_t k = 0; k < prob_.constraints.size(); ++k) {
            const auto& c = prob_.constraints[k];
            const int d = static_cast<int>(c.Q.rows());
            out.segment(c.offset, d) = detail::project_ellipsoid(p.segment(c.offset, d), eig_[k].v, eig_[k].lam);
        }
        return out;
    }

    void shrink(RVector& v, const RVector& thresh, RVector& gn) const {
        gn.setZero();
        for (int i = 0; i < prob_.size(); ++i) gn(prob_.group_of[static_cast<std::size_t>(i)]) += v(i) * v(i);
        gn = gn.cwiseSqrt();
        for (int i = 0; i < prob_.size(); ++i) {
            const int g = prob_.group_of[static_cast<std::size_t>(i)];
            v(i) = gn(g) <= thresh(g) ? 0.0 : v(i) * (1.0 - thresh(g) / gn(g));
        }
    }

    // Rescales each segment onto its ellipsoid if it sits outside; zero
    // entries stay zero.
    RVector make_feasible(RVector w) const {
        for (const auto& c : prob_.constraints) {
            const int d = static_cast<int>(c.Q.rows());
            const double q = w.segment(c.offset, d).dot(c.Q * w.segment(c.offset, d));
            if (q > 1.0) w.segment(c.offset, d) /= std::sqrt(q);
        }
        return w;
    }

    GroupQcqpSolution closed_form() const {
        GroupQcqpSolution out;
        out.w = RVector::Zero(prob_.size());
        for (const auto& c : prob_.constraints) {
            const int d = static_cast<int>(c.Q.rows());
            const RVector m = prob_.linear.segment(c.offset, d);
            if (m.squaredNorm() == 0) continue;
            Eigen::LDLT<RMatrix> ldlt(c.Q);
            if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
                throw ConditioningError("group qcqp: constraint matrix must be positive definite for the closed form");
            const RVector qm = ldlt.solve(m);
            const double den = m.dot(qm);
            if (!(den > 0)) throw ConditioningError("group qcqp: constraint matrix is singular along the objective");
            out.w.segment(c.offset, d) = -qm / std::sqrt(den);
        }
        out.status = Status::Optimal;
        out.objective = prob_.objective(out.w);
        return out;
    }

    GroupQcqpProblem prob_;
    std::vector<Eig> eig_;
};

inline GroupQcqpSolution solve_group_qcqp(const GroupQcqpProblem& problem, const GroupQcqpSettings& settings = {}) {
    return GroupQcqpSolver(problem).solve(settings);
}

}  // namespace sparsebf::conic
