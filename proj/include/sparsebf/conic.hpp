// SPDX-License-Identifier: Apache-2.0
//
// Operator-splitting conic solver and a small SDP modelling layer on top of it.
//
// The solver handles
//     minimize    c'x
//     subject to  A x + s = b,   s in K
// where K is a product of zero, nonnegative, second-order and PSD cones. PSD
// cones act on svec-packed upper triangles (off-diagonals scaled by sqrt 2),
// so the Euclidean inner product on the packed vector is the trace inner
// product. Each iteration solves one quasi-definite KKT system with a cached
// sparse LDL' factorisation and projects onto K.

#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "sparsebf/common.hpp"

namespace sparsebf::conic {

enum class Status { Optimal, MaxIterations, Infeasible };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::MaxIterations: return "max-iters";
        case Status::Infeasible: return "infeasible";
    }
    return "unknown";
}

/// Raised by callers that cannot continue without an optimal solve.
class SolverError : public Error {
public:
    SolverError(const std::string& what, Status status) : Error(what), status_(status) {}
    Status status() const noexcept { return status_; }

private:
    Status status_;
};

struct SolverSettings {
    double abs_tol = 1e-6;
    double rel_tol = 1e-6;
    int max_iters = 20000;
    double infeasibility_tol = 1e-6;

    double rho = 0.1;
    double sigma = 1e-6;
    double alpha = 1.6;
    int check_interval = 10;
    bool adaptive_rho = true;
    int adaptive_rho_interval = 40;
    double adaptive_rho_tolerance = 5.0;
    int scaling_iters = 10;
    int divergence_window = 500;

    void validate() const {
        if (!(abs_tol > 0) || !(rel_tol >= 0) || !(infeasibility_tol > 0))
            throw DomainError("solver tolerances must be positive");
        if (max_iters < 1) throw DomainError("max_iters must be at least 1");
        if (!(rho > 0) || !(sigma > 0)) throw DomainError("rho and sigma must be positive");
        if (!(alpha > 0 && alpha < 2)) throw DomainError("relaxation alpha must lie in (0, 2)");
        if (check_interval < 1 || divergence_window < 1 || adaptive_rho_interval < 1)
            throw DomainError("solver intervals must be at least 1");
    }
};

// ---------------------------------------------------------------------------
// Cones and packed storage

enum class ConeKind { Zero, Nonnegative, SecondOrder, HermitianPsd, SymmetricPsd };

struct Cone {
    ConeKind kind = ConeKind::Zero;
    int dim = 0;
    int order = 0;  // matrix order for PSD cones
};

inline int svec_dim(int n, bool complex) { return complex ? n * n : n * (n + 1) / 2; }

inline Cone zero_cone(int dim) { return {ConeKind::Zero, dim, 0}; }
inline Cone nonnegative_cone(int dim) { return {ConeKind::Nonnegative, dim, 0}; }
inline Cone second_order_cone(int dim) { return {ConeKind::SecondOrder, dim, 0}; }
inline Cone hermitian_psd_cone(int n) { return {ConeKind::HermitianPsd, svec_dim(n, true), n}; }
inline Cone symmetric_psd_cone(int n) { return {ConeKind::SymmetricPsd, svec_dim(n, false), n}; }

inline bool is_separable(ConeKind k) { return k == ConeKind::Zero || k == ConeKind::Nonnegative; }

/// Packed position of entry (i, j), i <= j, in column-major upper-triangle
/// order. For complex storage an off-diagonal entry occupies two slots (real
/// part, then imaginary part).
inline int svec_index(int i, int j, bool complex) {
    if (complex) return j * j + 2 * i;
    return j * (j + 1) / 2 + i;
}

inline void svec_unpack(const double* v, int n, CMatrix& x) {
    static const double r = 1.0 / std::sqrt(2.0);
    x.resize(n, n);
    int p = 0;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < j; ++i) {
            const cdouble z(v[p] * r, v[p + 1] * r);
            x(i, j) = z;
            x(j, i) = std::conj(z);
            p += 2;
        }
        x(j, j) = v[p++];
    }
}

inline void svec_pack(const CMatrix& x, double* v) {
    static const double s = std::sqrt(2.0);
    const int n = static_cast<int>(x.rows());
    int p = 0;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < j; ++i) {
            const cdouble z = 0.5 * (x(i, j) + std::conj(x(j, i)));
            v[p++] = s * z.real();
            v[p++] = s * z.imag();
        }
        v[p++] = x(j, j).real();
    }
}

inline void svec_unpack(const double* v, int n, RMatrix& x) {
    static const double r = 1.0 / std::sqrt(2.0);
    x.resize(n, n);
    int p = 0;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < j; ++i) x(i, j) = x(j, i) = v[p++] * r;
        x(j, j) = v[p++];
    }
}

inline void svec_pack(const RMatrix& x, double* v) {
    static const double s = std::sqrt(2.0);
    const int n = static_cast<int>(x.rows());
    int p = 0;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < j; ++i) v[p++] = s * 0.5 * (x(i, j) + x(j, i));
        v[p++] = x(j, j);
    }
}

/// Nearest positive semidefinite matrix in Frobenius norm.
template <typename Matrix>
Matrix project_psd(const Matrix& x) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(x);
    const auto& lam = es.eigenvalues();
    const auto& v = es.eigenvectors();
    const int n = static_cast<int>(lam.size());
    int n_pos = 0;
    for (int k = 0; k < n; ++k)
        if (lam(k) > 0) ++n_pos;
    if (n_pos == n) return x;
    if (n_pos == 0) return Matrix::Zero(x.rows(), x.cols());
    // Eigenvalues are ascending; rebuild from whichever side is smaller.
    if (n_pos <= n / 2) {
        const auto vp = v.rightCols(n_pos);
        return vp * lam.tail(n_pos).asDiagonal() * vp.adjoint();
    }
    const int n_neg = n - n_pos;
    const auto vn = v.leftCols(n_neg);
    Matrix out = x;
    out.noalias() -= vn * lam.head(n_neg).asDiagonal() * vn.adjoint();
    return out;
}

namespace detail {

inline void project_soc(double* v, int dim) {
    const double t = v[0];
    double nu = 0.0;
    for (int k = 1; k < dim; ++k) nu += v[k] * v[k];
    nu = std::sqrt(nu);
    if (nu <= t) return;
    if (nu <= -t) {
        std::fill(v, v + dim, 0.0);
        return;
    }
    const double a = 0.5 * (t + nu);
    v[0] = a;
    for (int k = 1; k < dim; ++k) v[k] *= a / nu;
}

template <typename Matrix>
void project_packed_psd(double* v, int n) {
    Matrix x;
    svec_unpack(v, n, x);
    svec_pack(project_psd(x), v);
}

inline void project_cone(const Cone& c, double* v) {
    switch (c.kind) {
        case ConeKind::Zero: std::fill(v, v + c.dim, 0.0); break;
        case ConeKind::Nonnegative:
            for (int k = 0; k < c.dim; ++k) v[k] = std::max(v[k], 0.0);
            break;
        case ConeKind::SecondOrder: project_soc(v, c.dim); break;
        case ConeKind::HermitianPsd: project_packed_psd<CMatrix>(v, c.order); break;
        case ConeKind::SymmetricPsd: project_packed_psd<RMatrix>(v, c.order); break;
    }
}

inline double inf_norm(const RVector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Cone program

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

struct ConeProgram {
    SparseMatrix A;
    RVector b;
    RVector c;
    std::vector<Cone> cones;

    int n_vars() const { return static_cast<int>(A.cols()); }
    int n_rows() const { return static_cast<int>(A.rows()); }

    void validate() const {
        if (b.size() != A.rows() || c.size() != A.cols())
            throw DimensionError("cone program: A, b and c sizes disagree");
        long total = 0;
        for (const Cone& k : cones) {
            if (k.dim < 0) throw DomainError("cone program: negative cone dimension");
            if ((k.kind == ConeKind::HermitianPsd && k.dim != svec_dim(k.order, true)) ||
                (k.kind == ConeKind::SymmetricPsd && k.dim != svec_dim(k.order, false)))
                throw DimensionError("cone program: PSD cone dimension does not match its order");
            if (k.kind == ConeKind::SecondOrder && k.dim < 1)
                throw DomainError("cone program: second-order cone needs dimension >= 1");
            total += k.dim;
        }
        if (total != A.rows()) throw DimensionError("cone program: cones do not cover every row");
        if (!b.allFinite() || !c.allFinite())
            throw DomainError("cone program: non-finite data");
    }
};

struct ConeSolution {
    Status status = Status::MaxIterations;
    RVector x, s, y;
    double objective = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    int iterations = 0;
};

/// ADMM solver bound to one constraint structure. The objective can be
/// swapped between solves; iterates and the factorisation are reused.
class ConeSolver {
public:
    explicit ConeSolver(ConeProgram program, SolverSettings settings = {})
        : prog_(std::move(program)), set_(settings) {
        set_.validate();
        prog_.validate();
        n_ = prog_.n_vars();
        m_ = prog_.n_rows();
        equilibrate();
        rho_ = set_.rho;
        factorize(true);
        reset();
    }

    const ConeProgram& program() const noexcept { return prog_; }
    const SolverSettings& settings() const noexcept { return set_; }
    void set_settings(const SolverSettings& s) {
        s.validate();
        set_ = s;
    }

    void set_cost(const RVector& c) {
        if (c.size() != n_) throw DimensionError("cone solver: cost has wrong length");
        if (!c.allFinite()) throw DomainError("cone solver: non-finite cost");
        prog_.c = c;
        const double old = cost_scale_;
        scale_cost();
        y_ *= cost_scale_ / old;
    }

    /// Cold start from zero iterates.
    void reset() {
        x_ = RVector::Zero(n_);
        s_ = RVector::Zero(m_);
        y_ = RVector::Zero(m_);
    }

    ConeSolution solve() {
        const double alpha = set_.alpha;
        RVector rhs(n_ + m_), sol(n_ + m_), xt(n_), st(m_), s_hat(m_), x_prev(n_);
        ConeSolution out;
        int last_rho_update = 0;
        double window_rp = -1.0;
        RVector window_y = y_, prev_dy;

        for (int it = 1; it <= set_.max_iters; ++it) {
            rhs.head(n_) = set_.sigma * x_ - c_;
            rhs.tail(m_) = b_ - s_ + y_.cwiseQuotient(rho_vec_);
            sol = ldlt_.solve(rhs);
            xt = sol.head(n_);
            st = s_ - (sol.tail(m_) + y_).cwiseQuotient(rho_vec_);

            x_ = alpha * xt + (1.0 - alpha) * x_;
            s_hat = alpha * st + (1.0 - alpha) * s_;
            s_ = s_hat + y_.cwiseQuotient(rho_vec_);
            project(s_);
            y_ += rho_vec_.cwiseProduct(s_hat - s_);

            const bool window_end = it % set_.divergence_window == 0;
            if (it % set_.check_interval != 0 && !window_end && it != set_.max_iters) continue;

            Residuals r = residuals();
            out.iterations = it;
            if (r.converged) {
                finish(out, Status::Optimal, r);
                return out;
            }
            if (window_end) {
                const RVector dy = E_.cwiseProduct(y_ - window_y) / cost_scale_;
                if (window_rp >= 0 && infeasible(r, window_rp, dy, prev_dy)) {
                    finish(out, Status::Infeasible, r);
                    return out;
                }
                window_rp = r.rp;
                window_y = y_;
                prev_dy = dy;
            }
            if (set_.adaptive_rho && it - last_rho_update >= set_.adaptive_rho_interval) {
                const double ratio = std::sqrt((r.rp_scaled / std::max(r.rp_norm_scaled, 1e-12)) /
                                               std::max(r.rd_scaled / std::max(r.rd_norm_scaled, 1e-12), 1e-12));
                const double proposed = std::clamp(rho_ * ratio, 1e-6, 1e6);
                if (proposed > rho_ * set_.adaptive_rho_tolerance ||
                    proposed < rho_ / set_.adaptive_rho_tolerance) {
                    rho_ = proposed;
                    factorize(false);
                    last_rho_update = it;
                }
            }
        }
        finish(out, Status::MaxIterations, residuals());
        out.iterations = set_.max_iters;
        return out;
    }

private:
    struct Residuals {
        double rp = 0, rd = 0;                    // unscaled infinity norms
        double rp_scaled = 0, rd_scaled = 0;      // scaled, for rho balancing
        double rp_norm_scaled = 0, rd_norm_scaled = 0;
        bool converged = false;
    };

    void equilibrate() {
        D_ = RVector::Ones(n_);
        E_ = RVector::Ones(m_);
        A_ = prog_.A;
        A_.makeCompressed();
        RVector dcol(n_), erow(m_);
        for (int pass = 0; pass < set_.scaling_iters; ++pass) {
            RVector cn = RVector::Zero(n_), rn = RVector::Zero(m_);
            for (int j = 0; j < n_; ++j)
                for (SparseMatrix::InnerIterator itr(A_, j); itr; ++itr) {
                    const double a = std::abs(itr.value());
                    cn(j) = std::max(cn(j), a);
                    rn(itr.row()) = std::max(rn(itr.row()), a);
                }
            for (int j = 0; j < n_; ++j)
                dcol(j) = cn(j) < 1e-4 ? 1.0 : std::clamp(1.0 / std::sqrt(cn(j)), 1e-4, 1e4);
            for (int i = 0; i < m_; ++i)
                erow(i) = rn(i) < 1e-4 ? 1.0 : std::clamp(1.0 / std::sqrt(rn(i)), 1e-4, 1e4);
            int off = 0;
            for (const Cone& k : prog_.cones) {
                if (!is_separable(k.kind) && k.dim > 0) erow.segment(off, k.dim).setConstant(erow.segment(off, k.dim).mean());
                off += k.dim;
            }
            A_ = erow.asDiagonal() * A_ * dcol.asDiagonal();
            D_ = D_.cwiseProduct(dcol);
            E_ = E_.cwiseProduct(erow);
        }
        A_.makeCompressed();
        At_ = A_.transpose();
        b_ = E_.cwiseProduct(prog_.b);
        scale_cost();

        // Equality rows get a stiffer penalty.
        is_eq_ = std::vector<bool>(static_cast<std::size_t>(m_), false);
        int off = 0;
        for (const Cone& k : prog_.cones) {
            if (k.kind == ConeKind::Zero)
                for (int i = 0; i < k.dim; ++i) is_eq_[static_cast<std::size_t>(off + i)] = true;
            off += k.dim;
        }
    }

    void scale_cost() {
        const RVector dc = D_.cwiseProduct(prog_.c);
        const double nc = detail::inf_norm(dc);
        cost_scale_ = nc < 1e-6 ? 1.0 : std::clamp(1.0 / nc, 1e-4, 1e4);
        c_ = cost_scale_ * dc;
    }

    void factorize(bool analyze) {
        rho_vec_.resize(m_);
        for (int i = 0; i < m_; ++i) rho_vec_(i) = is_eq_[static_cast<std::size_t>(i)] ? 1e3 * rho_ : rho_;
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(static_cast<std::size_t>(n_ + m_ + A_.nonZeros()));
        for (int j = 0; j < n_; ++j) t.emplace_back(j, j, set_.sigma);
        for (int j = 0; j < n_; ++j)
            for (SparseMatrix::InnerIterator itr(A_, j); itr; ++itr)
                t.emplace_back(n_ + static_cast<int>(itr.row()), j, itr.value());
        for (int i = 0; i < m_; ++i) t.emplace_back(n_ + i, n_ + i, -1.0 / rho_vec_(i));
        kkt_.resize(n_ + m_, n_ + m_);
        kkt_.setFromTriplets(t.begin(), t.end());
        if (analyze) ldlt_.analyzePattern(kkt_);
        ldlt_.factorize(kkt_);
        if (ldlt_.info() != Eigen::Success) throw ConditioningError("cone solver: KKT factorisation failed");
    }

    void project(RVector& v) const {
        int off = 0;
        for (const Cone& k : prog_.cones) {
            detail::project_cone(k, v.data() + off);
            off += k.dim;
        }
    }

    Residuals residuals() const {
        Residuals r;
        const RVector ax = A_ * x_;
        const RVector aty = At_ * y_;
        const RVector einv = E_.cwiseInverse();
        const RVector dinv = D_.cwiseInverse();
        const RVector pr = ax + s_ - b_;
        const RVector dr = c_ - aty;
        r.rp = detail::inf_norm(einv.cwiseProduct(pr));
        r.rd = detail::inf_norm(dinv.cwiseProduct(dr)) / cost_scale_;
        const double pnorm = std::max({detail::inf_norm(einv.cwiseProduct(ax)), detail::inf_norm(einv.cwiseProduct(s_)),
                                       detail::inf_norm(einv.cwiseProduct(b_))});
        const double dnorm =
            std::max(detail::inf_norm(dinv.cwiseProduct(aty)), detail::inf_norm(dinv.cwiseProduct(c_))) / cost_scale_;
        r.rp_scaled = detail::inf_norm(pr);
        r.rd_scaled = detail::inf_norm(dr);
        r.rp_norm_scaled = std::max({detail::inf_norm(ax), detail::inf_norm(s_), detail::inf_norm(b_)});
        r.rd_norm_scaled = std::max(detail::inf_norm(aty), detail::inf_norm(c_));
        r.converged = r.rp < set_.abs_tol && r.rp <= set_.abs_tol + set_.rel_tol * pnorm &&
                      r.rd <= set_.abs_tol + set_.rel_tol * dnorm;
        return r;
    }

    // Linear divergence: the primal residual stalls while the dual iterate
    // drifts by the same step in consecutive windows, and that step is an
    // approximate certificate (A' dy ~ 0, b' dy > 0).
    bool infeasible(const Residuals& r, double window_rp, const RVector& dy, const RVector& prev_dy) const {
        if (r.rp <= set_.infeasibility_tol || r.rp < 0.5 * window_rp) return false;
        const double ny = detail::inf_norm(dy);
        if (!(ny > 0) || prev_dy.size() != dy.size()) return false;
        if (detail::inf_norm(dy - prev_dy) > 0.1 * ny) return false;
        const RVector atdy = prog_.A.transpose() * dy;
        const double bdy = prog_.b.dot(dy);
        // A drifting but bounded dual (an unattained optimum) also has
        // A' dy ~ 0; only a b' dy that no point near the iterate could offset
        // through A' dy counts as a certificate.
        const double xn = std::max(1.0, D_.cwiseProduct(x_).norm());
        return detail::inf_norm(atdy) <= 1e-3 * ny && bdy > set_.infeasibility_tol * ny * std::max(1.0, detail::inf_norm(prog_.b)) &&
               bdy > 1e-4 * dy.norm() * prog_.b.norm() && bdy > 10.0 * atdy.norm() * xn;
    }

    void finish(ConeSolution& out, Status st, const Residuals& r) const {
        out.status = st;
        out.x = D_.cwiseProduct(x_);
        out.s = E_.cwiseInverse().cwiseProduct(s_);
        out.y = E_.cwiseProduct(y_) / cost_scale_;
        out.objective = prog_.c.dot(out.x);
        out.primal_residual = r.rp;
        out.dual_residual = r.rd;
    }

    ConeProgram prog_;
    SolverSettings set_;
    int n_ = 0, m_ = 0;
    SparseMatrix A_, At_, kkt_;
    RVector b_, c_, D_, E_, rho_vec_;
    std::vector<bool> is_eq_;
    double cost_scale_ = 1.0, rho_ = 0.1;
    Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
    RVector x_, s_, y_;
};

inline ConeSolution solve_cone_program(const ConeProgram& p, const SolverSettings& s = {}) {
    ConeSolver solver(p, s);
    return solver.solve();
}

// ---------------------------------------------------------------------------
// Plain-text dump format
//
//   sparsebf-cone-program 1
//   dims <rows> <vars>
//   cones <count>
//   <kind> <dim> <order>        one line per cone; kind in {zero, nonneg, soc, hpsd, spsd}
//   c
//   <vars values>
//   b
//   <rows values>
//   A
//   <rows lines of vars values>

namespace detail {

inline const char* cone_tag(ConeKind k) {
    switch (k) {
        case ConeKind::Zero: return "zero";
        case ConeKind::Nonnegative: return "nonneg";
        case ConeKind::SecondOrder: return "soc";
        case ConeKind::HermitianPsd: return "hpsd";
        case ConeKind::SymmetricPsd: return "spsd";
    }
    return "?";
}

inline ConeKind cone_from_tag(const std::string& t) {
    if (t == "zero") return ConeKind::Zero;
    if (t == "nonneg") return ConeKind::Nonnegative;
    if (t == "soc") return ConeKind::SecondOrder;
    if (t == "hpsd") return ConeKind::HermitianPsd;
    if (t == "spsd") return ConeKind::SymmetricPsd;
    throw DomainError("unknown cone kind '" + t + "'");
}

inline void expect_token(std::istream& in, const std::string& want) {
    std::string got;
    if (!(in >> got) || got != want) throw DomainError("cone program file: expected '" + want + "', got '" + got + "'");
}

}  // namespace detail

inline void write_program(std::ostream& out, const ConeProgram& p) {
    out << "sparsebf-cone-program 1\n";
    out << "dims " << p.n_rows() << ' ' << p.n_vars() << '\n';
    out << "cones " << p.cones.size() << '\n';
    for (const Cone& k : p.cones) out << detail::cone_tag(k.kind) << ' ' << k.dim << ' ' << k.order << '\n';
    out << std::setprecision(17);
    auto row = [&](const RVector& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? " " : "") << v(i);
        out << '\n';
    };
    out << "c\n";
    row(p.c);
    out << "b\n";
    row(p.b);
    out << "A\n";
    const RMatrix dense(p.A);
    for (int i = 0; i < p.n_rows(); ++i) row(dense.row(i).transpose());
}

inline ConeProgram read_program(std::istream& in) {
    detail::expect_token(in, "sparsebf-cone-program");
    int version = 0, m = 0, n = 0;
    std::size_t nc = 0;
    if (!(in >> version) || version != 1) throw DomainError("cone program file: unsupported version");
    detail::expect_token(in, "dims");
    if (!(in >> m >> n) || m < 0 || n < 0) throw DomainError("cone program file: bad dims");
    detail::expect_token(in, "cones");
    if (!(in >> nc)) throw DomainError("cone program file: bad cone count");
    ConeProgram p;
    for (std::size_t k = 0; k < nc; ++k) {
        std::string tag;
        Cone c;
        if (!(in >> tag >> c.dim >> c.order)) throw DomainError("cone program file: bad cone line");
        c.kind = detail::cone_from_tag(tag);
        p.cones.push_back(c);
    }
    auto read_vec = [&](int len) {
        RVector v(len);
        for (int i = 0; i < len; ++i)
            if (!(in >> v(i))) throw DomainError("cone program file: truncated numeric data");
        return v;
    };
    detail::expect_token(in, "c");
    p.c = read_vec(n);
    detail::expect_token(in, "b");
    p.b = read_vec(m);
    detail::expect_token(in, "A");
    std::vector<Eigen::Triplet<double>> t;
    for (int i = 0; i < m; ++i) {
        const RVector r = read_vec(n);
        for (int j = 0; j < n; ++j)
            if (r(j) != 0.0) t.emplace_back(i, j, r(j));
    }
    p.A.resize(m, n);
    p.A.setFromTriplets(t.begin(), t.end());
    p.validate();
    return p;
}

// ---------------------------------------------------------------------------
// SDP modelling layer

enum class BlockKind { Hermitian, RealSymmetric };

struct BlockSpec {
    int dim = 0;
    BlockKind kind = BlockKind::Hermitian;
    bool psd = true;
};

/// Contributes Re(coef * X_block(row, col)).
struct Term {
    int block = 0;
    int row = 0;
    int col = 0;
    cdouble coef = 1.0;
};

using LinearExpr = std::vector<Term>;

enum class Relation { GreaterEqual, LessEqual, Equal };

struct LinearConstraint {
    LinearExpr expr;
    Relation rel = Relation::Equal;
    double rhs = 0.0;
};

/// |X_block(row, col)| <= Y_bound_block(bound_row, bound_col).
struct AbsBound {
    int block = 0;
    int row = 0;
    int col = 0;
    int bound_block = 0;
    int bound_row = 0;
    int bound_col = 0;
};

/// Re Tr(C X) for a block X; C need not be Hermitian.
template <typename Derived>
LinearExpr trace_inner(int block, const Eigen::MatrixBase<Derived>& m) {
    const CMatrix c = m.template cast<cdouble>();
    LinearExpr e;
    e.reserve(static_cast<std::size_t>(c.size()));
    for (int i = 0; i < c.rows(); ++i)
        for (int j = 0; j < c.cols(); ++j)
            if (c(i, j) != cdouble(0)) e.push_back({block, j, i, c(i, j)});
    return e;
}

inline LinearExpr entry_expr(int block, int row, int col, cdouble coef = 1.0) { return {{block, row, col, coef}}; }

inline LinearExpr& append(LinearExpr& a, const LinearExpr& b, double scale = 1.0) {
    for (Term t : b) {
        t.coef *= scale;
        a.push_back(t);
    }
    return a;
}

struct SdpProblem {
    std::vector<BlockSpec> blocks;
    LinearExpr objective;
    std::vector<LinearConstraint> constraints;
    std::vector<AbsBound> abs_bounds;

    int add_block(int dim, BlockKind kind = BlockKind::Hermitian, bool psd = true) {
        blocks.push_back({dim, kind, psd});
        return static_cast<int>(blocks.size()) - 1;
    }

    void validate() const {
        for (const BlockSpec& b : blocks)
            if (b.dim < 1) throw DomainError("sdp: block dimension must be positive");
        auto check = [&](int blk, int r, int c) {
            if (blk < 0 || blk >= static_cast<int>(blocks.size())) throw DomainError("sdp: reference to undeclared block");
            const int d = blocks[static_cast<std::size_t>(blk)].dim;
            if (r < 0 || r >= d || c < 0 || c >= d) throw DomainError("sdp: entry index outside its block");
        };
        auto check_expr = [&](const LinearExpr& e) {
            for (const Term& t : e) {
                check(t.block, t.row, t.col);
                if (!std::isfinite(t.coef.real()) || !std::isfinite(t.coef.imag()))
                    throw DomainError("sdp: non-finite coefficient");
            }
        };
        check_expr(objective);
        for (const LinearConstraint& c : constraints) {
            check_expr(c.expr);
            if (!std::isfinite(c.rhs)) throw DomainError("sdp: non-finite right-hand side");
        }
        for (const AbsBound& a : abs_bounds) {
            check(a.block, a.row, a.col);
            check(a.bound_block, a.bound_row, a.bound_col);
        }
    }
};

struct SdpSolution {
    Status status = Status::MaxIterations;
    double objective = 0.0;
    std::vector<CMatrix> blocks;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    int iterations = 0;
};

/// Compiles an SdpProblem once; the objective may be replaced between solves
/// and each solve warm-starts from the previous iterate.
class SdpSolver {
public:
    explicit SdpSolver(SdpProblem problem, SolverSettings settings = {}) : prob_(std::move(problem)) {
        prob_.validate();
        layout();
        solver_.emplace(compile(), settings);
    }

    const SdpProblem& problem() const noexcept { return prob_; }
    const ConeProgram& program() const { return solver_->program(); }

    void set_objective(const LinearExpr& objective) {
        SdpProblem tmp;
        tmp.blocks = prob_.blocks;
        tmp.objective = objective;
        tmp.validate();
        prob_.objective = objective;
        solver_->set_cost(cost_vector());
    }

    void set_settings(const SolverSettings& s) { solver_->set_settings(s); }
    void reset() { solver_->reset(); }

    SdpSolution solve() {
        const ConeSolution cs = solver_->solve();
        SdpSolution out;
        out.status = cs.status;
        out.objective = cs.objective;
        out.primal_residual = cs.primal_residual;
        out.dual_residual = cs.dual_residual;
        out.iterations = cs.iterations;
        for (std::size_t k = 0; k < prob_.blocks.size(); ++k) {
            const BlockSpec& b = prob_.blocks[k];
            // PSD blocks are read from the cone slack, which is exactly PSD.
            const double* src = b.psd ? cs.s.data() + psd_row_[k] : cs.x.data() + offset_[k];
            if (b.kind == BlockKind::Hermitian) {
                CMatrix x;
                svec_unpack(src, b.dim, x);
                out.blocks.push_back(std::move(x));
            } else {
                RMatrix x;
                svec_unpack(src, b.dim, x);
                out.blocks.push_back(x.cast<cdouble>());
            }
        }
        return out;
    }

private:
    void layout() {
        offset_.clear();
        int off = 0;
        for (const BlockSpec& b : prob_.blocks) {
            offset_.push_back(off);
            off += svec_dim(b.dim, b.kind == BlockKind::Hermitian);
        }
        n_vars_ = off;
    }

    // (variable index, coefficient) pairs whose sum equals Re(coef X(r, c)).
    template <typename F>
    void emit(const Term& t, F&& f) const {
        static const double r2 = 1.0 / std::sqrt(2.0);
        const BlockSpec& b = prob_.blocks[static_cast<std::size_t>(t.block)];
        const int base = offset_[static_cast<std::size_t>(t.block)];
        const bool cplx = b.kind == BlockKind::Hermitian;
        const int i = std::min(t.row, t.col), j = std::max(t.row, t.col);
        const int p = base + svec_index(i, j, cplx);
        if (i == j) {
            f(p, t.coef.real());
        } else if (!cplx) {
            f(p, t.coef.real() * r2);
        } else if (t.row < t.col) {
            f(p, t.coef.real() * r2);
            f(p + 1, -t.coef.imag() * r2);
        } else {
            f(p, t.coef.real() * r2);
            f(p + 1, t.coef.imag() * r2);
        }
    }

    RVector cost_vector() const {
        RVector c = RVector::Zero(n_vars_);
        for (const Term& t : prob_.objective) emit(t, [&](int p, double v) { c(p) += v; });
        return c;
    }

    ConeProgram compile() {
        std::vector<Eigen::Triplet<double>> trip;
        std::vector<double> rhs;
        std::vector<Cone> cones;
        int row = 0;
        auto add_expr_row = [&](const LinearExpr& e, double scale) {
            for (const Term& t : e) emit(t, [&](int p, double v) { trip.emplace_back(row, p, scale * v); });
        };

        int n_eq = 0;
        for (const LinearConstraint& c : prob_.constraints) {
            if (c.rel != Relation::Equal) continue;
            add_expr_row(c.expr, 1.0);
            rhs.push_back(c.rhs);
            ++row;
            ++n_eq;
        }
        if (n_eq) cones.push_back(zero_cone(n_eq));

        int n_ineq = 0;
        for (const LinearConstraint& c : prob_.constraints) {
            if (c.rel == Relation::Equal) continue;
            const double sg = c.rel == Relation::LessEqual ? 1.0 : -1.0;
            add_expr_row(c.expr, sg);
            rhs.push_back(sg * c.rhs);
            ++row;
            ++n_ineq;
        }
        if (n_ineq) cones.push_back(nonnegative_cone(n_ineq));

        for (const AbsBound& a : prob_.abs_bounds) {
            const bool real_entry =
                a.row == a.col || prob_.blocks[static_cast<std::size_t>(a.block)].kind == BlockKind::RealSymmetric;
            add_expr_row(entry_expr(a.bound_block, a.bound_row, a.bound_col), -1.0);
            rhs.push_back(0.0);
            ++row;
            add_expr_row(entry_expr(a.block, a.row, a.col), -1.0);
            rhs.push_back(0.0);
            ++row;
            if (!real_entry) {
                add_expr_row(entry_expr(a.block, a.row, a.col, cdouble(0, -1)), -1.0);
                rhs.push_back(0.0);
                ++row;
            }
            cones.push_back(second_order_cone(real_entry ? 2 : 3));
        }

        psd_row_.assign(prob_.blocks.size(), -1);
        for (std::size_t k = 0; k < prob_.blocks.size(); ++k) {
            const BlockSpec& b = prob_.blocks[k];
            if (!b.psd) continue;
            const bool cplx = b.kind == BlockKind::Hermitian;
            const int d = svec_dim(b.dim, cplx);
            psd_row_[k] = row;
            for (int q = 0; q < d; ++q) {
                trip.emplace_back(row + q, offset_[k] + q, -1.0);
                rhs.push_back(0.0);
            }
            row += d;
            cones.push_back(cplx ? hermitian_psd_cone(b.dim) : symmetric_psd_cone(b.dim));
        }

        ConeProgram p;
        p.A.resize(row, n_vars_);
        p.A.setFromTriplets(trip.begin(), trip.end());
        p.A.prune(0.0);
        p.b = Eigen::Map<const RVector>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
        p.c = cost_vector();
        p.cones = std::move(cones);
        return p;
    }

    SdpProblem prob_;
    std::vector<int> offset_, psd_row_;
    int n_vars_ = 0;
    std::optional<ConeSolver> solver_;
};

inline SdpSolution solve_sdp(const SdpProblem& problem, const SolverSettings& settings = {}) {
    SdpSolver s(problem, settings);
    return s.solve();
}

}  // namespace sparsebf::conic
