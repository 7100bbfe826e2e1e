// SPDX-License-Identifier: Apache-2.0
//
// MaxSINR weights, SINR of a sensor selection under the TDL and DFT models,
// exhaustive enumeration and beampattern evaluation.

#pragma once

#include <algorithm>
#include <limits>
#include <ostream>
#include <thread>
#include <utility>
#include <vector>

#include "sparsebf/common.hpp"
#include "sparsebf/selection.hpp"
#include "sparsebf/signal_model.hpp"

namespace sparsebf {

/// Principal submatrix on the stacked index set of `sel`. `taps` = 1 gives a
/// plain N x N restriction.
inline CMatrix restrict(const CMatrix& m, const SensorSelection& sel, int taps) {
    if (m.rows() != m.cols() || m.rows() != static_cast<Eigen::Index>(sel.n_sensors()) * taps)
        throw DimensionError("matrix size does not match selection grid and tap count");
    const auto idx = sel.stacked_indices(taps);
    const auto p = static_cast<Eigen::Index>(idx.size());
    CMatrix out(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j) out(i, j) = m(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    return out;
}

inline std::vector<CMatrix> restrict(const std::vector<CMatrix>& bins, const SensorSelection& sel) {
    std::vector<CMatrix> out;
    out.reserve(bins.size());
    for (const auto& b : bins) out.push_back(restrict(b, sel, 1));
    return out;
}

/// Scatter a weight vector defined on the stacked active indices back onto
/// the full NL grid (zeros elsewhere).
inline CVector expand_weights(const CVector& w, const SensorSelection& sel, int taps) {
    const auto idx = sel.stacked_indices(taps);
    if (w.size() != static_cast<Eigen::Index>(idx.size())) throw DimensionError("weight length mismatch");
    CVector full = CVector::Zero(static_cast<Eigen::Index>(sel.n_sensors()) * taps);
    for (std::size_t i = 0; i < idx.size(); ++i) full(idx[i]) = w(static_cast<Eigen::Index>(i));
    return full;
}

struct MaxSinrResult {
    CVector weights;   ///< principal generalized eigenvector, scaled to w^H Rs w = 1
    double sinr = 0.0; ///< linear
};

inline constexpr double kMaxCondition = 1e12;

namespace detail {

/// Cholesky of a Hermitian positive definite matrix with a cheap condition
/// estimate from the factor's diagonal.
inline Eigen::LLT<CMatrix> checked_cholesky(const CMatrix& r) {
    Eigen::LLT<CMatrix> llt(r);
    if (llt.info() != Eigen::Success) throw ConditioningError("correlation matrix is not positive definite");
    const RVector d = llt.matrixLLT().diagonal().real();
    const double ratio = d.maxCoeff() / d.minCoeff();
    if (!(ratio * ratio < kMaxCondition)) throw ConditioningError("correlation matrix is numerically singular");
    return llt;
}

inline double ratio_to_sinr(double lambda) {
    // lambda = Lambda_max{R^-1 Rs} = s / (1 + s)
    if (lambda >= 1.0) return std::numeric_limits<double>::infinity();
    return std::max(lambda, 0.0) / (1.0 - lambda);
}

}  // namespace detail

/// Optimal weights w = P{R^-1 Rs} and the SINR Lambda_max{Rn^-1 Rs}, with
/// Rn = R - Rs. Solved as a generalized Hermitian eigenproblem by whitening
/// with the Cholesky factor of R.
inline MaxSinrResult max_sinr_weights(const CMatrix& r, const CMatrix& rs) {
    if (r.rows() != rs.rows() || r.cols() != rs.cols() || r.rows() != r.cols())
        throw DimensionError("R and Rs must be square and of equal size");
    const auto llt = detail::checked_cholesky(r);
    CMatrix c = llt.matrixL().solve(rs);
    c = llt.matrixL().solve(c.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(c));
    const Eigen::Index top = c.rows() - 1;
    const double lambda = es.eigenvalues()(top);
    CVector w = llt.matrixU().solve(es.eigenvectors().col(top));
    const double g = (w.adjoint() * rs * w)(0).real();
    if (g > 0.0) w /= std::sqrt(g);
    return {std::move(w), detail::ratio_to_sinr(lambda)};
}

/// Linear optimal SINR only (eigenvalues, no vectors).
inline double max_sinr(const CMatrix& r, const CMatrix& rs) {
    const auto llt = detail::checked_cholesky(r);
    CMatrix c = llt.matrixL().solve(rs);
    c = llt.matrixL().solve(c.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(c), Eigen::EigenvaluesOnly);
    return detail::ratio_to_sinr(es.eigenvalues()(c.rows() - 1));
}

/// Output SINR of given weights: w^H Rs w / w^H Rn w.
inline double sinr_of(const CVector& w, const CMatrix& rs, const CMatrix& rn) {
    return (w.adjoint() * rs * w)(0).real() / (w.adjoint() * rn * w)(0).real();
}

inline double sinr_tdl(const TdlCorrelations& corr, const SensorSelection& sel, int taps) {
    return to_db(max_sinr(restrict(corr.total, sel, taps), restrict(corr.signal, sel, taps)));
}

inline double sinr_tdl(const Scenario& sc, const SensorSelection& sel) {
    return sinr_tdl(scenario_correlations_tdl(sc), sel, sc.taps);
}

/// Bins that carry desired-signal power.
inline std::vector<int> contributing_bins(const std::vector<CMatrix>& signal_bins) {
    std::vector<int> out;
    for (std::size_t l = 0; l < signal_bins.size(); ++l)
        if (signal_bins[l].trace().real() > 0.0) out.push_back(static_cast<int>(l));
    return out;
}

/// Linear average of per-bin optimal SINR over bins carrying desired power.
inline double sinr_dft_bins(const std::vector<CMatrix>& total, const std::vector<CMatrix>& signal,
                            const SensorSelection& sel) {
    const auto bins = contributing_bins(signal);
    if (bins.empty()) throw DomainError("no DFT bin carries desired-signal power");
    double acc = 0.0;
    for (int l : bins)
        acc += max_sinr(restrict(total[static_cast<std::size_t>(l)], sel, 1), restrict(signal[static_cast<std::size_t>(l)], sel, 1));
    return to_db(acc / static_cast<double>(bins.size()));
}

inline double sinr_dft(const DftCorrelations& corr, const SensorSelection& sel) {
    return sinr_dft_bins(corr.total, corr.signal, sel);
}

inline double sinr_dft(const Scenario& sc, const SensorSelection& sel) {
    return sinr_dft(scenario_correlations_dft(sc), sel);
}

// ---------------------------------------------------------------------------
// Weights

/// TDL: one stacked vector of length PL. DFT: L vectors of length P.
struct BeamformerWeights {
    Model model = Model::Tdl;
    std::vector<CVector> weights;
    SensorSelection selection;
    double sinr_db = 0.0;
};

inline BeamformerWeights optimal_weights_tdl(const TdlCorrelations& corr, const SensorSelection& sel, int taps) {
    const CMatrix rs = restrict(corr.signal, sel, taps);
    auto res = max_sinr_weights(restrict(corr.total, sel, taps), rs);
    return {Model::Tdl, {std::move(res.weights)}, sel, to_db(res.sinr)};
}

inline BeamformerWeights optimal_weights_dft(const DftCorrelations& corr, const SensorSelection& sel) {
    BeamformerWeights out{Model::Dft, {}, sel, sinr_dft(corr, sel)};
    for (std::size_t l = 0; l < corr.total.size(); ++l) {
        const CMatrix rs = restrict(corr.signal[l], sel, 1);
        if (rs.trace().real() > 0.0) {
            out.weights.push_back(max_sinr_weights(restrict(corr.total[l], sel, 1), rs).weights);
        } else {
            out.weights.push_back(CVector::Zero(sel.size()));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Enumeration

struct RankedSelection {
    SensorSelection selection;
    double sinr_db;
};

struct EnumerationOptions {
    unsigned long long cap = 200000;
    bool keep_ranked = true;
    unsigned threads = 0;  ///< 0: hardware concurrency
};

struct EnumerationResult {
    SensorSelection best;
    double best_sinr_db = 0.0;
    SensorSelection worst;
    double worst_sinr_db = 0.0;
    unsigned long long evaluations = 0;
    std::vector<RankedSelection> ranked;  ///< descending SINR
};

/// All P-subsets of {0..N-1} in lexicographic order.
inline std::vector<std::vector<int>> combinations(int n, int p) {
    std::vector<std::vector<int>> out;
    std::vector<int> c(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) c[static_cast<std::size_t>(i)] = i;
    if (p > n) return out;
    while (true) {
        out.push_back(c);
        int i = p - 1;
        while (i >= 0 && c[static_cast<std::size_t>(i)] == n - p + i) --i;
        if (i < 0) break;
        ++c[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < p; ++j) c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

/// Exhaustive search for the P-sensor selection maximizing `eval`. Work is
/// split over threads; the reduction runs in lexicographic order so ties go
/// to the lexicographically smallest selection regardless of scheduling.
template <typename Eval>
EnumerationResult enumerate_selections(int n, int p, Eval&& eval, const EnumerationOptions& opt = {}) {
    const auto count = binomial(static_cast<unsigned>(n), static_cast<unsigned>(p));
    if (count > opt.cap)
        throw CapacityError("enumeration would evaluate " + std::to_string(count) +
                                " configurations (cap " + std::to_string(opt.cap) + ")",
                            count);
    const auto combos = combinations(n, p);
    std::vector<double> values(combos.size());
    unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, combos.size()));
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) values[i] = eval(SensorSelection(n, combos[i]));
    };
    if (threads <= 1) {
        work(0, combos.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (combos.size() + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t b = t * chunk, e = std::min(combos.size(), b + chunk);
            if (b < e) pool.emplace_back(work, b, e);
        }
        for (auto& th : pool) th.join();
    }

    EnumerationResult res;
    res.evaluations = combos.size();
    std::size_t best = 0, worst = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
        if (values[i] < values[worst]) worst = i;
    }
    res.best = SensorSelection(n, combos[best]);
    res.best_sinr_db = values[best];
    res.worst = SensorSelection(n, combos[worst]);
    res.worst_sinr_db = values[worst];
    if (opt.keep_ranked) {
        std::vector<std::size_t> order(values.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
        res.ranked.reserve(order.size());
        for (auto i : order) res.ranked.push_back({SensorSelection(n, combos[i]), values[i]});
    }
    return res;
}

inline EnumerationResult enumerate_optimal(const Scenario& sc, Model model, const EnumerationOptions& opt = {}) {
    sc.validate();
    if (model == Model::Tdl) {
        const auto corr = scenario_correlations_tdl(sc);
        return enumerate_selections(sc.n(), sc.budget, [&](const SensorSelection& s) { return sinr_tdl(corr, s, sc.taps); }, opt);
    }
    const auto corr = scenario_correlations_dft(sc);
    return enumerate_selections(sc.n(), sc.budget, [&](const SensorSelection& s) { return sinr_dft(corr, s); }, opt);
}

// ---------------------------------------------------------------------------
// Beampattern

inline std::vector<double> linspace(double a, double b, int count) {
    std::vector<double> v(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = count == 1 ? a : a + (b - a) * i / (count - 1);
    return v;
}

/// Angles 0..180 degrees in 0.5 degree steps.
inline std::vector<double> default_theta_grid() { return linspace(0.0, 180.0, 361); }

/// |w^H a(theta, x)| in dB over the grid (rows: theta, cols: x), normalized
/// to a 0 dB peak. `weights` must be TDL weights.
inline RMatrix beampattern(const BeamformerWeights& bw, const ArrayGrid& grid, int taps,
                           const std::vector<double>& theta_grid, const std::vector<double>& x_grid) {
    if (bw.model != Model::Tdl || bw.weights.size() != 1) throw DomainError("beampattern requires TDL weights");
    const CVector w = expand_weights(bw.weights.front(), bw.selection, taps);
    RMatrix out(static_cast<Eigen::Index>(theta_grid.size()), static_cast<Eigen::Index>(x_grid.size()));
    for (std::size_t i = 0; i < theta_grid.size(); ++i)
        for (std::size_t j = 0; j < x_grid.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                std::abs(w.dot(steering_tdl(theta_grid[i], x_grid[j], grid, taps)));
    const double peak = out.maxCoeff();
    if (peak <= 0.0) throw DomainError("weights have no response on the grid");
    return (out / peak).array().max(1e-300).log10().matrix() * 20.0;
}

/// Header row carries the frequency axis; first column carries theta.
inline void write_beampattern_csv(std::ostream& os, const std::vector<double>& theta_grid,
                                  const std::vector<double>& x_grid, const RMatrix& pattern) {
    os.precision(10);
    os << "theta_deg";
    for (double x : x_grid) os << ',' << x;
    os << '\n';
    for (std::size_t i = 0; i < theta_grid.size(); ++i) {
        os << theta_grid[i];
        for (std::size_t j = 0; j < x_grid.size(); ++j) os << ',' << pattern(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        os << '\n';
    }
}

inline void write_ranked_csv(std::ostream& os, const std::vector<RankedSelection>& ranked) {
    os.precision(17);
    os << "selection,sinr_db\n";
    for (const auto& r : ranked) os << r.selection.to_bitmask() << ',' << r.sinr_db << '\n';
}

}  // namespace sparsebf
