// SPDX-License-Identifier: Apache-2.0
//
// Recovery of full-aperture correlations from a sparse selection: lag
// averaging, trace-minimising Toeplitz completion, block-Toeplitz assembly
// and a noise-floor eigenvalue repair.

#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "sparsebf/conic.hpp"
#include "sparsebf/signal_model.hpp"

namespace sparsebf {

/// Lag values t(d) = T(m, n) for d = m - n in [-(N-1), N-1].
struct LagVector {
    int n = 0;
    std::vector<cdouble> value;  // index d + n - 1
    std::vector<int> count;      // observed pairs per lag

    explicit LagVector(int size = 0)
        : n(size), value(static_cast<std::size_t>(std::max(0, 2 * size - 1)), 0.0),
          count(static_cast<std::size_t>(std::max(0, 2 * size - 1)), 0) {}

    bool present(int d) const { return count[idx(d)] > 0; }
    cdouble at(int d) const { return value[idx(d)]; }
    void set(int d, cdouble v) {
        value[idx(d)] = v;
        count[idx(d)] = std::max(count[idx(d)], 1);
    }

    /// Every lag in [-(n-1), n-1] observed.
    bool complete() const {
        return std::all_of(count.begin(), count.end(), [](int c) { return c > 0; });
    }

    /// Lag-presence string over d = -(n-1)..n-1.
    std::string bitmap() const {
        std::string s;
        for (int c : count) s += c > 0 ? '1' : '0';
        return s;
    }

private:
    std::size_t idx(int d) const {
        if (d <= -n || d >= n) throw DomainError("lag out of range");
        return static_cast<std::size_t>(d + n - 1);
    }
};

/// Toeplitz matrix with T(m, n) = t(m - n); absent lags are zero.
inline CMatrix toeplitz_from_lags(const LagVector& lags) {
    CMatrix t(lags.n, lags.n);
    for (int m = 0; m < lags.n; ++m)
        for (int c = 0; c < lags.n; ++c) t(m, c) = lags.at(m - c);
    return t;
}

/// Mean of observed entries per lag of block k (block (i, i+k) of the
/// stacked matrix), pooled over all L - k copies.
inline LagVector average_lags(const MaskedCorrelation& obs, int sensors, int taps, int k) {
    if (sensors < 1 || taps < 1) throw DomainError("average_lags: need sensors and taps >= 1");
    if (k < 0 || k >= taps) throw DomainError("average_lags: block index must lie in [0, L-1]");
    if (obs.value.rows() != static_cast<Eigen::Index>(sensors) * taps || obs.observed.rows() != obs.value.rows())
        throw DimensionError("average_lags: matrix must be NL x NL");
    LagVector lv(sensors);
    std::vector<cdouble> sum(lv.value.size(), 0.0);
    for (int i = 0; i + k < taps; ++i)
        for (int m = 0; m < sensors; ++m)
            for (int c = 0; c < sensors; ++c) {
                const int r = i * sensors + m, col = (i + k) * sensors + c;
                if (!obs.observed(r, col)) continue;
                const auto p = static_cast<std::size_t>(m - c + sensors - 1);
                sum[p] += obs.value(r, col);
                ++lv.count[p];
            }
    for (std::size_t p = 0; p < sum.size(); ++p)
        if (lv.count[p] > 0) lv.value[p] = sum[p] / static_cast<double>(lv.count[p]);
    if (k == 0) {
        // Hermitian block: keep t(-d) = conj t(d) exact and lag 0 real.
        for (int d = 1; d < sensors; ++d)
            if (lv.present(d) || lv.present(-d)) {
                const int cd = lv.count[static_cast<std::size_t>(d + sensors - 1)];
                const int cm = lv.count[static_cast<std::size_t>(-d + sensors - 1)];
                const cdouble v = (static_cast<double>(cd) * lv.at(d) + static_cast<double>(cm) * std::conj(lv.at(-d))) /
                                  static_cast<double>(cd + cm);
                lv.value[static_cast<std::size_t>(d + sensors - 1)] = v;
                lv.value[static_cast<std::size_t>(-d + sensors - 1)] = std::conj(v);
            }
        lv.value[static_cast<std::size_t>(sensors - 1)] = lv.at(0).real();
    }
    return lv;
}

/// Lags of one N x N correlation (a single DFT bin).
inline LagVector average_lags(const MaskedCorrelation& obs) {
    return average_lags(obs, static_cast<int>(obs.value.rows()), 1, 0);
}

struct CompletionSettings {
    conic::SolverSettings solver = default_solver();

    static conic::SolverSettings default_solver() {
        conic::SolverSettings s;
        s.abs_tol = 1e-6;
        s.rel_tol = 1e-6;
        s.max_iters = 50000;
        return s;
    }
};

struct BlockCompletion {
    CMatrix matrix;
    conic::Status status = conic::Status::Optimal;
    bool degenerate = false;  // no off-zero lag: returned a scaled identity
    bool solved = false;      // an SDP was needed
    int iterations = 0;
};

namespace detail {

/// One free coordinate of an affine Hermitian matrix: upper-triangle
/// entries (i <= j) it contributes, and its cost.
struct AffineColumn {
    std::vector<std::pair<std::pair<int, int>, cdouble>> entries;
    double cost = 0.0;
};

/// minimize c'x  subject to  M0 + sum_k x_k B_k >= 0, with B_k Hermitian
/// given by their upper triangles.
inline conic::ConeSolution solve_affine_psd(const CMatrix& m0, const std::vector<AffineColumn>& cols,
                                            const conic::SolverSettings& set) {
    const int d = static_cast<int>(m0.rows());
    const int rows = conic::svec_dim(d, true);
    const double r2 = std::sqrt(2.0);
    // Solve at unit data scale; x scales with the data.
    const double scale = std::max(m0.cwiseAbs().maxCoeff(), 1e-300);
    conic::ConeProgram p;
    p.b.resize(rows);
    conic::svec_pack(CMatrix(m0 / scale), p.b.data());
    p.c.resize(static_cast<Eigen::Index>(cols.size()));
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t k = 0; k < cols.size(); ++k) {
        p.c(static_cast<Eigen::Index>(k)) = cols[k].cost;
        const int col = static_cast<int>(k);
        for (const auto& [ij, v] : cols[k].entries) {
            const auto [i, j] = ij;
            const int pos = conic::svec_index(i, j, true);
            // s = b - A x, so A carries the negated basis.
            if (i == j) {
                trip.emplace_back(pos, col, -v.real());
            } else {
                trip.emplace_back(pos, col, -r2 * v.real());
                trip.emplace_back(pos + 1, col, -r2 * v.imag());
            }
        }
    }
    p.A.resize(rows, static_cast<Eigen::Index>(cols.size()));
    p.A.setFromTriplets(trip.begin(), trip.end());
    p.cones = {conic::hermitian_psd_cone(d)};
    conic::ConeSolution sol = conic::solve_cone_program(p, set);
    sol.x *= scale;
    sol.s *= scale;
    sol.objective *= scale;
    return sol;
}

/// Columns for the real and imaginary part of lag d of an n x n Toeplitz
/// matrix placed at (row0, col0). Only entries with row <= col are kept,
/// which covers every entry when the matrix sits strictly above the diagonal.
inline std::pair<AffineColumn, AffineColumn> lag_columns(int n, int d, int row0, int col0) {
    AffineColumn re, im;
    for (int c = 0; c < n; ++c) {
        const int m = c + d;
        if (m < 0 || m >= n) continue;
        const int r = row0 + m, k = col0 + c;
        if (r < k) {
            re.entries.push_back({{r, k}, 1.0});
            im.entries.push_back({{r, k}, cdouble(0, 1)});
        } else if (r > k) {
            // Stored through the conjugate entry (k, r).
            re.entries.push_back({{k, r}, 1.0});
            im.entries.push_back({{k, r}, cdouble(0, -1)});
        }
    }
    return {re, im};
}

}  // namespace detail

/// Hermitian PSD Toeplitz completion with minimum trace. Lags d >= 1 that are
/// present are held fixed; lag 0 is free and acts as the smallest diagonal
/// loading that keeps the matrix PSD. A fully observed lag set needs no
/// completion and is returned as is.
inline BlockCompletion complete_hermitian_toeplitz(const LagVector& lags, const CompletionSettings& set = {}) {
    const int n = lags.n;
    if (n < 1) throw DomainError("complete_hermitian_toeplitz: empty lag vector");
    BlockCompletion out;
    if (lags.complete()) {
        out.matrix = hermitian_part(toeplitz_from_lags(lags));
        return out;
    }
    bool any = false;
    for (int d = 1; d < n; ++d) any = any || lags.present(d) || lags.present(-d);
    if (!any) {
        out.degenerate = true;
        out.matrix = CMatrix::Identity(n, n) * std::max(lags.at(0).real(), 0.0);
        return out;
    }

    LagVector known(n);
    std::vector<detail::AffineColumn> cols;
    detail::AffineColumn diag;
    for (int i = 0; i < n; ++i) diag.entries.push_back({{i, i}, 1.0});
    diag.cost = n;
    cols.push_back(std::move(diag));
    std::vector<int> missing;
    for (int d = 1; d < n; ++d) {
        if (lags.present(d)) {
            known.set(d, lags.at(d));
            known.set(-d, std::conj(lags.at(d)));
            continue;
        }
        // Upper entries hold lag -d = conj(t(d)): the imaginary basis flips sign.
        auto [re, im] = detail::lag_columns(n, -d, 0, 0);
        for (auto& e : im.entries) e.second = -e.second;
        cols.push_back(std::move(re));
        cols.push_back(std::move(im));
        missing.push_back(d);
    }
    const conic::ConeSolution sol = detail::solve_affine_psd(toeplitz_from_lags(known), cols, set.solver);
    out.status = sol.status;
    out.solved = true;
    out.iterations = sol.iterations;
    LagVector rec = known;
    rec.set(0, sol.x(0));
    for (std::size_t k = 0; k < missing.size(); ++k) {
        const cdouble v(sol.x(static_cast<Eigen::Index>(1 + 2 * k)), sol.x(static_cast<Eigen::Index>(2 + 2 * k)));
        rec.set(missing[k], v);
        rec.set(-missing[k], std::conj(v));
    }
    out.matrix = toeplitz_from_lags(rec);
    return out;
}

/// Minimum-nuclear-norm Toeplitz completion of a general (non-Hermitian)
/// block through Z = [W1, T; T^H, W2] >= 0 with minimum Tr(W1) + Tr(W2).
inline BlockCompletion complete_indefinite_toeplitz(const LagVector& lags, const CompletionSettings& set = {}) {
    const int n = lags.n;
    if (n < 1) throw DomainError("complete_indefinite_toeplitz: empty lag vector");
    BlockCompletion out;
    if (lags.complete()) {
        out.matrix = toeplitz_from_lags(lags);
        return out;
    }
    bool any = false;
    for (int d = -(n - 1); d < n; ++d) any = any || lags.present(d);
    if (!any) {
        out.degenerate = true;
        out.matrix = CMatrix::Zero(n, n);
        return out;
    }

    LagVector known(n);
    std::vector<detail::AffineColumn> cols;
    for (int off : {0, n})
        for (int j = 0; j < n; ++j)
            for (int i = 0; i <= j; ++i) {
                detail::AffineColumn re;
                re.entries.push_back({{off + i, off + j}, 1.0});
                if (i == j) {
                    re.cost = 1.0;
                    cols.push_back(std::move(re));
                    continue;
                }
                detail::AffineColumn im;
                im.entries.push_back({{off + i, off + j}, cdouble(0, 1)});
                cols.push_back(std::move(re));
                cols.push_back(std::move(im));
            }
    const std::size_t lag_start = cols.size();
    std::vector<int> missing;
    for (int d = -(n - 1); d < n; ++d) {
        if (lags.present(d)) {
            known.set(d, lags.at(d));
            continue;
        }
        auto [re, im] = detail::lag_columns(n, d, 0, n);
        cols.push_back(std::move(re));
        cols.push_back(std::move(im));
        missing.push_back(d);
    }
    CMatrix z0 = CMatrix::Zero(2 * n, 2 * n);
    z0.topRightCorner(n, n) = toeplitz_from_lags(known);
    z0.bottomLeftCorner(n, n) = z0.topRightCorner(n, n).adjoint();
    const conic::ConeSolution sol = detail::solve_affine_psd(z0, cols, set.solver);
    out.status = sol.status;
    out.solved = true;
    out.iterations = sol.iterations;
    LagVector rec = known;
    for (std::size_t k = 0; k < missing.size(); ++k) {
        const auto p = static_cast<Eigen::Index>(lag_start + 2 * k);
        rec.set(missing[k], cdouble(sol.x(p), sol.x(p + 1)));
    }
    out.matrix = toeplitz_from_lags(rec);
    return out;
}

/// Raises eigenvalues below the noise floor to the floor.
inline CMatrix mle_floor(const CMatrix& r, double noise_var) {
    if (!(noise_var > 0)) throw DomainError("noise variance must be positive");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(r));
    const RVector lam = es.eigenvalues().cwiseMax(noise_var);
    const CMatrix out = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
    return hermitian_part(out);
}

/// Block-Toeplitz matrix with block (i, i+k) = T_k and block (i+k, i) = T_k^H.
inline CMatrix assemble_block_toeplitz(const std::vector<CMatrix>& blocks) {
    if (blocks.empty()) throw DomainError("assemble: need at least one block");
    const auto n = blocks.front().rows();
    const int taps = static_cast<int>(blocks.size());
    CMatrix r(n * taps, n * taps);
    for (int i = 0; i < taps; ++i)
        for (int j = 0; j < taps; ++j) {
            const CMatrix& b = blocks[static_cast<std::size_t>(std::abs(j - i))];
            if (b.rows() != n || b.cols() != n) throw DimensionError("assemble: blocks must share one size");
            r.block(i * n, j * n, n, n) = j >= i ? b : CMatrix(b.adjoint());
        }
    return r;
}

struct BlockDiagnostics {
    int block = 0;
    std::string lag_bitmap;
    int rank = 0;
    double residual = 0.0;  // largest deviation from the observed lags
    bool degenerate = false;
    bool solved = false;
    conic::Status status = conic::Status::Optimal;
};

struct CompletedCorrelation {
    CMatrix matrix;      // after the noise-floor repair
    CMatrix unrepaired;  // assembled completion before the repair
    std::vector<BlockDiagnostics> diagnostics;
};

namespace detail {

inline int numeric_rank(const CMatrix& m) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<CMatrix> svd(m);
    const RVector s = svd.singularValues();
    if (s(0) <= 0) return 0;
    return static_cast<int>((s.array() > 1e-6 * s(0)).count());
}

inline BlockDiagnostics diagnose(int k, const LagVector& lags, const BlockCompletion& c) {
    BlockDiagnostics d;
    d.block = k;
    d.lag_bitmap = lags.bitmap();
    d.rank = numeric_rank(c.matrix);
    d.degenerate = c.degenerate;
    d.solved = c.solved;
    d.status = c.status;
    for (int lag = -(lags.n - 1); lag < lags.n; ++lag) {
        if (!lags.present(lag) || (k == 0 && lag == 0 && c.solved)) continue;
        const int r = std::max(lag, 0), col = std::max(-lag, 0);
        d.residual = std::max(d.residual, std::abs(c.matrix(r, col) - lags.at(lag)));
    }
    return d;
}

}  // namespace detail

/// Assembles completed blocks T_0..T_{L-1} and applies the noise floor.
inline CompletedCorrelation assemble_and_repair(const std::vector<CMatrix>& blocks, double noise_var) {
    CompletedCorrelation out;
    out.unrepaired = assemble_block_toeplitz(blocks);
    out.matrix = mle_floor(out.unrepaired, noise_var);
    return out;
}

/// Full TDL pipeline from a masked stacked correlation.
inline CompletedCorrelation complete_tdl(const MaskedCorrelation& obs, int sensors, int taps, double noise_var,
                                         const CompletionSettings& set = {}) {
    std::vector<CMatrix> blocks;
    std::vector<BlockDiagnostics> diag;
    for (int k = 0; k < taps; ++k) {
        const LagVector lags = average_lags(obs, sensors, taps, k);
        const BlockCompletion c =
            k == 0 ? complete_hermitian_toeplitz(lags, set) : complete_indefinite_toeplitz(lags, set);
        diag.push_back(detail::diagnose(k, lags, c));
        blocks.push_back(c.matrix);
    }
    CompletedCorrelation out = assemble_and_repair(blocks, noise_var);
    out.diagnostics = std::move(diag);
    return out;
}

/// Per-bin Hermitian Toeplitz completion and noise floor.
inline std::vector<CompletedCorrelation> complete_dft(const std::vector<MaskedCorrelation>& bins, double bin_noise_var,
                                                      const CompletionSettings& set = {}) {
    std::vector<CompletedCorrelation> out;
    for (std::size_t l = 0; l < bins.size(); ++l) {
        const LagVector lags = average_lags(bins[l]);
        const BlockCompletion c = complete_hermitian_toeplitz(lags, set);
        CompletedCorrelation cc;
        cc.unrepaired = c.matrix;
        cc.matrix = mle_floor(c.matrix, bin_noise_var);
        cc.diagnostics.push_back(detail::diagnose(0, lags, c));
        cc.diagnostics.back().block = static_cast<int>(l);
        out.push_back(std::move(cc));
    }
    return out;
}

inline void write_diagnostics_csv(std::ostream& os, const std::vector<BlockDiagnostics>& rows,
                                  const std::string& kind = "block") {
    os.precision(10);
    os << kind << ",lag_bitmap,rank,residual,degenerate,solved,status\n";
    for (const auto& d : rows)
        os << d.block << ',' << d.lag_bitmap << ',' << d.rank << ',' << d.residual << ',' << (d.degenerate ? 1 : 0)
           << ',' << (d.solved ? 1 : 0) << ',' << conic::to_string(d.status) << '\n';
}

}  // namespace sparsebf
