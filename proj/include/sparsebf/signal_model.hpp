// SPDX-License-Identifier: Apache-2.0
//
// Wideband scene model: steering vectors, analytic space-time (TDL) and
// per-bin (DFT) correlation matrices, and snapshot synthesis.
//
// Frequencies are baseband and normalized to the maximum baseband frequency,
// x = omega / omega_max in [-1, 1]. One cycle/sample corresponds to x = 2.
// The array is a half-wavelength grid at the highest spatial frequency
// Omega_max = omega_c + omega_max, so with rho = omega_c / omega_max the
// spatial phase progression at frequency x is pi (rho + x) / (rho + 1) cos(theta).

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "sparsebf/common.hpp"
#include "sparsebf/selection.hpp"

namespace sparsebf {

/// Occupied baseband interval, in units of omega_max.
struct FrequencyBand {
    double low = 0.0;
    double high = 0.0;

    /// Band given in normalized cycles/sample (Nyquist = 0.5).
    static FrequencyBand from_cycles(double low_cycles, double high_cycles) {
        return {2.0 * low_cycles, 2.0 * high_cycles};
    }
    static FrequencyBand tone(double x) { return {x, x}; }
    static FrequencyBand full() { return {-1.0, 1.0}; }

    double width() const noexcept { return high - low; }
    double center() const noexcept { return 0.5 * (low + high); }
    bool narrowband() const noexcept { return high == low; }

    void validate() const {
        if (!(low >= -1.0 && high <= 1.0 && low <= high))
            throw DomainError("frequency band must satisfy -1 <= low <= high <= 1");
    }
};

/// Point source with a uniform power spectral density over its band.
struct SourceSpec {
    double doa_deg = 90.0;
    FrequencyBand band;
    double power = 1.0;  ///< linear variance

    void validate() const {
        if (!(doa_deg > 0.0 && doa_deg < 180.0))
            throw DomainError("source DOA must lie in (0, 180) degrees");
        if (!(power > 0.0)) throw DomainError("source power must be positive");
        band.validate();
    }
};

/// Uniform linear grid with half-wavelength spacing at the top of the band.
struct ArrayGrid {
    int sensors = 2;
    double carrier_ratio = 1.0;  ///< omega_c / omega_max

    void validate() const {
        if (sensors < 2) throw DomainError("array grid needs at least two sensors");
        if (!(carrier_ratio > 0.0)) throw DomainError("carrier ratio must be positive");
    }

    /// Spatial phase slope (rho + x) / (rho + 1) for baseband frequency x.
    double spatial_scale(double x) const { return (carrier_ratio + x) / (carrier_ratio + 1.0); }
};

struct Scenario {
    ArrayGrid grid;
    SourceSpec desired;
    std::vector<SourceSpec> jammers;
    double noise_var = 1.0;
    int taps = 1;    ///< L: TDL length or DFT size
    int budget = 1;  ///< P: number of sensors to select

    int n() const noexcept { return grid.sensors; }
    int stacked_size() const noexcept { return grid.sensors * taps; }

    void validate() const {
        grid.validate();
        desired.validate();
        for (const auto& j : jammers) j.validate();
        if (!(noise_var > 0.0)) throw DomainError("noise variance must be positive");
        if (taps < 1) throw DomainError("tap/bin count must be at least 1");
        if (budget < 1 || budget > grid.sensors) throw DomainError("budget must satisfy 1 <= P <= N");
        std::vector<double> doas{desired.doa_deg};
        for (const auto& j : jammers) doas.push_back(j.doa_deg);
        std::sort(doas.begin(), doas.end());
        if (std::adjacent_find(doas.begin(), doas.end()) != doas.end())
            throw DomainError("source DOAs must be distinct");
    }
};

/// Frequency integration rule for the wideband correlation integral.
struct QuadratureOptions {
    enum class Rule { Exact, Midpoint };
    Rule rule = Rule::Exact;
    int points_per_band = 64;  ///< midpoint rule only
};

// ---------------------------------------------------------------------------
// Steering vectors

namespace detail {

inline void check_angle(double theta_deg) {
    if (!(theta_deg >= 0.0 && theta_deg <= 180.0))
        throw DomainError("angle must lie in [0, 180] degrees");
}

}  // namespace detail

/// Spatial factor a_theta(x): entries exp(j pi (rho + x)/(rho + 1) n cos(theta)).
inline CVector spatial_steering(double theta_deg, double x, const ArrayGrid& grid) {
    detail::check_angle(theta_deg);
    if (!(std::abs(x) <= 1.0)) throw DomainError("baseband frequency must satisfy |x| <= 1");
    const double phase = kPi * grid.spatial_scale(x) * std::cos(deg_to_rad(theta_deg));
    CVector a(grid.sensors);
    for (int n = 0; n < grid.sensors; ++n) a(n) = std::polar(1.0, phase * n);
    return a;
}

/// Space-time steering vector phi_x (kron) a_theta(x) of length N*L, with
/// temporal factor phi_x(m) = exp(j pi x m).
inline CVector steering_tdl(double theta_deg, double x, const ArrayGrid& grid, int taps) {
    if (taps < 1) throw DomainError("tap count must be at least 1");
    const CVector a = spatial_steering(theta_deg, x, grid);
    const int n = grid.sensors;
    CVector v(n * taps);
    for (int m = 0; m < taps; ++m) v.segment(m * n, n) = std::polar(1.0, kPi * x * m) * a;
    return v;
}

/// Baseband center of DFT bin l: the bins start at the lower passband edge and
/// are spaced 2/L apart.
inline double dft_bin_center(int bin, int taps) { return -1.0 + 2.0 * bin / taps; }

/// Steering vector of DFT bin l (spatial factor at the bin center).
inline CVector steering_dft(double theta_deg, int bin, const ArrayGrid& grid, int taps) {
    if (taps < 1) throw DomainError("bin count must be at least 1");
    if (bin < 0 || bin >= taps) throw DomainError("DFT bin index out of range");
    return spatial_steering(theta_deg, dft_bin_center(bin, taps), grid);
}

// ---------------------------------------------------------------------------
// Analytic correlations

namespace detail {

/// Band average of exp(j pi x c) for x uniform over the band.
inline cdouble band_average(double c, const FrequencyBand& band, const QuadratureOptions& quad) {
    if (band.narrowband()) return std::polar(1.0, kPi * c * band.low);
    if (quad.rule == QuadratureOptions::Rule::Exact) {
        const double u = kPi * c * 0.5 * band.width();
        const double sinc = std::abs(u) < 1e-8 ? 1.0 - u * u / 6.0 : std::sin(u) / u;
        return std::polar(sinc, kPi * c * band.center());
    }
    const int k = std::max(1, quad.points_per_band);
    const double h = band.width() / k;
    cdouble acc = 0.0;
    for (int i = 0; i < k; ++i) acc += std::polar(1.0, kPi * c * (band.low + (i + 0.5) * h));
    return acc / static_cast<double>(k);
}

}  // namespace detail

/// Correlation of one source over the stacked NL vector:
/// power * avg_{x in band} a(theta, x) a(theta, x)^H.
inline CMatrix source_correlation_tdl(const SourceSpec& src, const ArrayGrid& grid, int taps,
                                      const QuadratureOptions& quad = {}) {
    src.validate();
    grid.validate();
    if (taps < 1) throw DomainError("tap count must be at least 1");
    const int n = grid.sensors;
    const double rho = grid.carrier_ratio;
    const double cos_t = std::cos(deg_to_rad(src.doa_deg));

    // The entry for stacked indices (m, k), (m', k') only depends on the tap
    // difference dm and the sensor difference dk.
    const int nt = 2 * taps - 1;
    const int ns = 2 * n - 1;
    std::vector<cdouble> table(static_cast<std::size_t>(nt * ns));
    for (int dm = -(taps - 1); dm <= taps - 1; ++dm) {
        for (int dk = -(n - 1); dk <= n - 1; ++dk) {
            const double c = dm + dk * cos_t / (rho + 1.0);
            const cdouble carrier = std::polar(1.0, kPi * rho / (rho + 1.0) * dk * cos_t);
            table[static_cast<std::size_t>((dm + taps - 1) * ns + dk + n - 1)] =
                src.power * carrier * detail::band_average(c, src.band, quad);
        }
    }
    CMatrix r(n * taps, n * taps);
    for (int m1 = 0; m1 < taps; ++m1)
        for (int k1 = 0; k1 < n; ++k1)
            for (int m2 = 0; m2 < taps; ++m2)
                for (int k2 = 0; k2 < n; ++k2)
                    r(m1 * n + k1, m2 * n + k2) =
                        table[static_cast<std::size_t>((m1 - m2 + taps - 1) * ns + k1 - k2 + n - 1)];
    return r;
}

/// R = Rs + Rn with Rn = sum of jammers + noise_var * I.
struct TdlCorrelations {
    CMatrix total;
    CMatrix signal;
    CMatrix noise;
};

inline TdlCorrelations scenario_correlations_tdl(const Scenario& sc, const QuadratureOptions& quad = {}) {
    sc.validate();
    const int nl = sc.stacked_size();
    TdlCorrelations out;
    out.signal = source_correlation_tdl(sc.desired, sc.grid, sc.taps, quad);
    out.noise = sc.noise_var * CMatrix::Identity(nl, nl);
    for (const auto& j : sc.jammers) out.noise += source_correlation_tdl(j, sc.grid, sc.taps, quad);
    out.total = out.signal + out.noise;
    return out;
}

/// Fraction of a source's power that falls in DFT bin l. Bin l covers
/// [c_l - 1/L, c_l + 1/L) around its center, taken modulo the 2-periodic
/// baseband axis so that the L bins tile the band exactly.
inline double bin_power_fraction(const FrequencyBand& band, int bin, int taps) {
    const double half = 1.0 / taps;
    const double lo = dft_bin_center(bin, taps) - half;
    const double hi = dft_bin_center(bin, taps) + half;
    if (band.narrowband()) {
        // Index arithmetic keeps a tone on a bin edge in exactly one bin.
        const long idx = static_cast<long>(std::floor((band.low + 1.0) * taps / 2.0 + 0.5));
        return ((idx % taps) + taps) % taps == bin ? 1.0 : 0.0;
    }
    double overlap = 0.0;
    for (double shift : {0.0, 2.0, -2.0}) {
        const double a = std::max(band.low, lo + shift);
        const double b = std::min(band.high, hi + shift);
        if (b > a) overlap += b - a;
    }
    return overlap / band.width();
}

/// Per-bin correlations: each source contributes a rank-one term at the bin
/// center weighted by its in-bin power; white noise spreads evenly over the
/// L bins (noise_var / L each).
struct DftCorrelations {
    std::vector<CMatrix> total;
    std::vector<CMatrix> signal;
    std::vector<CMatrix> noise;
    double bin_noise_var = 0.0;
};

inline DftCorrelations scenario_correlations_dft(const Scenario& sc) {
    sc.validate();
    const int n = sc.n();
    DftCorrelations out;
    out.bin_noise_var = sc.noise_var / sc.taps;
    for (int l = 0; l < sc.taps; ++l) {
        CMatrix rs = CMatrix::Zero(n, n);
        const double ps = sc.desired.power * bin_power_fraction(sc.desired.band, l, sc.taps);
        if (ps > 0.0) {
            const CVector a = steering_dft(sc.desired.doa_deg, l, sc.grid, sc.taps);
            rs = ps * a * a.adjoint();
        }
        CMatrix rn = out.bin_noise_var * CMatrix::Identity(n, n);
        for (const auto& j : sc.jammers) {
            const double pj = j.power * bin_power_fraction(j.band, l, sc.taps);
            if (pj > 0.0) {
                const CVector a = steering_dft(j.doa_deg, l, sc.grid, sc.taps);
                rn += pj * a * a.adjoint();
            }
        }
        out.total.push_back(rs + rn);
        out.signal.push_back(std::move(rs));
        out.noise.push_back(std::move(rn));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Snapshots

/// Sensor time series sampled at the Nyquist rate. Only sensors in
/// `selection` carry data; the remaining rows are zero and flagged missing.
struct SnapshotBlock {
    SensorSelection selection;
    RMatrix::Index n_samples = 0;
    CMatrix samples;  ///< N x T, column t is x(t)

    int n_sensors() const noexcept { return selection.n_sensors(); }
};

/// Circulant frequency-domain synthesis: every source draws independent
/// CN(0, power / K) coefficients on the K grid frequencies x_f = -1 + 2f/T
/// inside its band, maps them through the spatial steering vector and returns
/// to the time domain with an FFT; white CN(0, noise_var) noise is added.
/// A band narrower than the grid spacing becomes a constant-power tone with
/// random phase at the nearest grid frequency.
inline SnapshotBlock synthesize_snapshots(const Scenario& sc, const SensorSelection& selection,
                                          int n_samples, std::uint64_t seed) {
    sc.validate();
    if (n_samples < 1) throw DomainError("snapshot count must be at least 1");
    if (selection.n_sensors() != sc.n()) throw DimensionError("selection does not match grid size");

    const int t_len = n_samples;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    auto cn = [&](double var) { return std::sqrt(var) * cdouble(gauss(rng), gauss(rng)); };
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    std::vector<SourceSpec> sources{sc.desired};
    sources.insert(sources.end(), sc.jammers.begin(), sc.jammers.end());

    const auto& active = selection.active();
    const int p = selection.size();
    // spectrum(f, i): Fourier coefficient of active sensor i at grid frequency f.
    CMatrix spectrum = CMatrix::Zero(t_len, p);
    for (const auto& src : sources) {
        std::vector<int> freqs;
        for (int f = 0; f < t_len; ++f) {
            const double x = -1.0 + 2.0 * f / t_len;
            if (x >= src.band.low && x < src.band.high) freqs.push_back(f);
        }
        const bool tone = freqs.empty();
        if (tone) {
            const double pos = (src.band.center() + 1.0) * t_len / 2.0;
            freqs.push_back(static_cast<int>(std::lround(pos)) % t_len);
        }
        const double var = src.power / static_cast<double>(freqs.size());
        const double cos_t = std::cos(deg_to_rad(src.doa_deg));
        for (int f : freqs) {
            // A tone keeps its power and only the phase is random.
            const cdouble c = tone ? std::polar(std::sqrt(var), 2.0 * kPi * uniform(rng)) : cn(var);
            const double x = -1.0 + 2.0 * f / t_len;
            const double phase = kPi * sc.grid.spatial_scale(x) * cos_t;
            for (int i = 0; i < p; ++i) spectrum(f, i) += c * std::polar(1.0, phase * active[static_cast<std::size_t>(i)]);
        }
    }

    SnapshotBlock block;
    block.selection = selection;
    block.n_samples = t_len;
    block.samples = CMatrix::Zero(sc.n(), t_len);
    Eigen::FFT<double> fft;
    std::vector<cdouble> in(static_cast<std::size_t>(t_len)), out;
    for (int i = 0; i < p; ++i) {
        for (int f = 0; f < t_len; ++f) in[static_cast<std::size_t>(f)] = spectrum(f, i);
        // x(t) = sum_f c_f exp(-j pi x_f t) = (-1)^t * sum_f c_f exp(-j 2 pi f t / T)
        fft.fwd(out, in);
        const int k = active[static_cast<std::size_t>(i)];
        for (int t = 0; t < t_len; ++t)
            block.samples(k, t) = (t % 2 == 0 ? 1.0 : -1.0) * out[static_cast<std::size_t>(t)];
    }
    for (int k : active)
        for (int t = 0; t < t_len; ++t) block.samples(k, t) += cn(sc.noise_var);
    return block;
}

/// Sample correlation together with its observation mask.
struct MaskedCorrelation {
    CMatrix value;                        ///< zero where unobserved
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> observed;

    long missing() const { return static_cast<long>((!observed.array()).count()); }
};

enum class Model { Tdl, Dft };

/// Observation mask of an NL x NL stacked matrix for a selection.
inline Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> stacked_mask(const SensorSelection& sel, int taps) {
    const int n = sel.n_sensors();
    const auto m = sel.mask();
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> obs(n * taps, n * taps);
    for (int i = 0; i < n * taps; ++i)
        for (int j = 0; j < n * taps; ++j)
            obs(i, j) = m[static_cast<std::size_t>(i % n)] && m[static_cast<std::size_t>(j % n)];
    return obs;
}

/// TDL: (1/(T-L+1)) sum_t X(t) X(t)^H over stacked vectors
/// X(t) = [x(t); x(t-1); ...; x(t-L+1)].
inline MaskedCorrelation sample_correlation_tdl(const SnapshotBlock& block, int taps) {
    if (taps < 1) throw DomainError("tap count must be at least 1");
    const int n = block.n_sensors();
    const auto t_len = block.n_samples;
    if (t_len < taps) throw InsufficientDataError("need at least L samples to stack L taps");
    const auto count = t_len - taps + 1;
    CMatrix stacked(n * taps, count);
    for (Eigen::Index t = 0; t < count; ++t)
        for (int m = 0; m < taps; ++m) stacked.col(t).segment(m * n, n) = block.samples.col(t + taps - 1 - m);
    MaskedCorrelation out;
    out.value = stacked * stacked.adjoint() / static_cast<double>(count);
    out.observed = stacked_mask(block.selection, taps);
    for (Eigen::Index i = 0; i < out.value.rows(); ++i)
        for (Eigen::Index j = 0; j < out.value.cols(); ++j)
            if (!out.observed(i, j)) out.value(i, j) = 0.0;
    return out;
}

/// DFT: sliding L-sample windows transformed onto the bin centers,
/// X^(l)(t) = (1/L) sum_m x(t-m) exp(-j pi c_l m), averaged per bin.
inline std::vector<MaskedCorrelation> sample_correlation_dft(const SnapshotBlock& block, int taps) {
    if (taps < 1) throw DomainError("bin count must be at least 1");
    const int n = block.n_sensors();
    const auto t_len = block.n_samples;
    if (t_len < taps) throw InsufficientDataError("need at least L samples per DFT window");
    const auto count = t_len - taps + 1;
    const auto sel_mask = block.selection.mask();
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> obs(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) obs(i, j) = sel_mask[static_cast<std::size_t>(i)] && sel_mask[static_cast<std::size_t>(j)];

    std::vector<MaskedCorrelation> out;
    for (int l = 0; l < taps; ++l) {
        const double c = dft_bin_center(l, taps);
        CVector kernel(taps);
        for (int m = 0; m < taps; ++m) kernel(m) = std::polar(1.0 / taps, -kPi * c * m);
        CMatrix bins(n, count);
        for (Eigen::Index t = 0; t < count; ++t) {
            CVector acc = CVector::Zero(n);
            for (int m = 0; m < taps; ++m) acc += kernel(m) * block.samples.col(t + taps - 1 - m);
            bins.col(t) = acc;
        }
        MaskedCorrelation mc;
        mc.value = bins * bins.adjoint() / static_cast<double>(count);
        mc.observed = obs;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (!obs(i, j)) mc.value(i, j) = 0.0;
        out.push_back(std::move(mc));
    }
    return out;
}

/// Masked view of an analytic matrix, as if observed through a selection.
inline MaskedCorrelation observe(const CMatrix& full, const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& mask) {
    if (full.rows() != mask.rows() || full.cols() != mask.cols()) throw DimensionError("mask shape mismatch");
    MaskedCorrelation mc{full, mask};
    for (Eigen::Index i = 0; i < full.rows(); ++i)
        for (Eigen::Index j = 0; j < full.cols(); ++j)
            if (!mask(i, j)) mc.value(i, j) = 0.0;
    return mc;
}

}  // namespace sparsebf
