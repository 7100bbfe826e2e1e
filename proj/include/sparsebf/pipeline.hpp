// SPDX-License-Identifier: Apache-2.0
//
// End-to-end selection pipeline: correlation estimate (analytic, sampled,
// completed), a selection method, and scoring against the true scene.

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sparsebf/beamforming.hpp"
#include "sparsebf/design.hpp"
#include "sparsebf/sca_select.hpp"
#include "sparsebf/sdr_select.hpp"
#include "sparsebf/signal_model.hpp"
#include "sparsebf/toeplitz_completion.hpp"

namespace sparsebf {

enum class Method { Sdr, Sca, Enum, Worst, Random, Ula, Nested, Coprime, Given };

/// Design model. Dual designs in the DFT domain and scores under TDL.
enum class DesignModel { Tdl, Dft, Dual };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::Sdr: return "sdr";
        case Method::Sca: return "sca";
        case Method::Enum: return "enum";
        case Method::Worst: return "worst";
        case Method::Random: return "random";
        case Method::Ula: return "ula";
        case Method::Nested: return "nested";
        case Method::Coprime: return "coprime";
        case Method::Given: return "given";
    }
    return "?";
}

inline const char* to_string(DesignModel m) {
    switch (m) {
        case DesignModel::Tdl: return "tdl";
        case DesignModel::Dft: return "dft";
        case DesignModel::Dual: return "dual";
    }
    return "?";
}

inline Method parse_method(const std::string& s) {
    for (Method m : {Method::Sdr, Method::Sca, Method::Enum, Method::Worst, Method::Random, Method::Ula, Method::Nested,
                     Method::Coprime, Method::Given})
        if (s == to_string(m)) return m;
    if (s == "given-selection") return Method::Given;
    throw DomainError("unknown method '" + s + "'");
}

inline DesignModel parse_design_model(const std::string& s) {
    for (DesignModel m : {DesignModel::Tdl, DesignModel::Dft, DesignModel::Dual})
        if (s == to_string(m)) return m;
    throw DomainError("unknown model '" + s + "'");
}

/// Correlation model the design itself runs in.
inline Model design_domain(DesignModel m) { return m == DesignModel::Tdl ? Model::Tdl : Model::Dft; }

// ---------------------------------------------------------------------------
// Baseline geometries

/// Compact ULA on the first P positions.
inline SensorSelection ula_selection(int n, int p) {
    if (p < 1 || p > n) throw DomainError("ula: need 1 <= P <= N");
    std::vector<int> idx(static_cast<std::size_t>(p));
    std::iota(idx.begin(), idx.end(), 0);
    return {n, std::move(idx)};
}

/// Two-level nested array {0..N1-1} U {(N1+1)k - 1 : k = 1..N2} with
/// N1 + N2 = P, choosing the split with the largest aperture that fits.
inline std::optional<SensorSelection> nested_selection(int n, int p) {
    std::optional<SensorSelection> best;
    int best_ap = -1;
    for (int n1 = 1; n1 < p; ++n1) {
        const int n2 = p - n1;
        const int ap = (n1 + 1) * n2 - 1;
        if (ap > n - 1 || ap <= best_ap) continue;
        std::vector<int> idx;
        for (int i = 0; i < n1; ++i) idx.push_back(i);
        for (int k = 1; k <= n2; ++k) idx.push_back((n1 + 1) * k - 1);
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
        if (static_cast<int>(idx.size()) != p) continue;
        best = SensorSelection(n, std::move(idx));
        best_ap = ap;
    }
    return best;
}

/// Extended coprime array {M a : a = 0..Q-1} U {Q b : b = 1..2M-1} for
/// coprime M < Q with Q + 2M - 1 = P, largest aperture that fits.
inline std::optional<SensorSelection> coprime_selection(int n, int p) {
    std::optional<SensorSelection> best;
    int best_ap = -1;
    for (int m = 1; 2 * m - 1 < p; ++m) {
        const int q = p - 2 * m + 1;
        if (q <= m || std::gcd(m, q) != 1) continue;
        const int ap = std::max(m * (q - 1), q * (2 * m - 1));
        if (ap > n - 1 || ap <= best_ap) continue;
        std::vector<int> idx;
        for (int a = 0; a < q; ++a) idx.push_back(m * a);
        for (int b = 1; b < 2 * m; ++b) idx.push_back(q * b);
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
        if (static_cast<int>(idx.size()) != p) continue;
        best = SensorSelection(n, std::move(idx));
        best_ap = ap;
    }
    return best;
}

/// Uniform draw over all P-subsets.
inline SensorSelection random_selection(int n, int p, std::uint64_t seed) {
    if (p < 1 || p > n) throw DomainError("random selection: need 1 <= P <= N");
    std::vector<int> all(static_cast<std::size_t>(n)), idx;
    std::iota(all.begin(), all.end(), 0);
    std::mt19937_64 rng(seed);
    std::sample(all.begin(), all.end(), std::back_inserter(idx), p, rng);
    return {n, std::move(idx)};
}

// ---------------------------------------------------------------------------
// Correlation estimates

enum class DataKind { Analytic, Snapshots };

struct DataOptions {
    DataKind kind = DataKind::Analytic;
    int snapshots = 500;
    std::uint64_t seed = 1;
    bool complete = false;
    std::optional<SensorSelection> initial;  // sensing array when completing
};

struct Estimate {
    DesignInput input;
    SensorSelection sensing;                  // sensors that produced the data
    std::vector<BlockDiagnostics> diagnostics;
};

/// Correlations the design sees. The desired-signal part is always the
/// analytic model; the total correlation is analytic, sampled on the full
/// array, or completed from a sparse sensing array.
inline Estimate estimate_input(const Scenario& sc, Model model, const DataOptions& data,
                               const CompletionSettings& cset = {}) {
    sc.validate();
    Estimate est;
    est.input = DesignInput::from_scenario(sc, model);
    est.sensing = SensorSelection::full(sc.n());
    if (data.kind == DataKind::Analytic && !data.complete) return est;
    if (data.complete) est.sensing = data.initial ? *data.initial : random_selection(sc.n(), sc.budget, data.seed);
    if (est.sensing.n_sensors() != sc.n()) throw DimensionError("sensing selection does not match the grid");

    std::optional<SnapshotBlock> block;
    if (data.kind == DataKind::Snapshots) {
        if (data.snapshots < sc.taps) throw InsufficientDataError("snapshot count must be at least the tap count");
        block = synthesize_snapshots(sc, est.sensing, data.snapshots, data.seed);
    }

    if (model == Model::Tdl) {
        MaskedCorrelation obs = block ? sample_correlation_tdl(*block, sc.taps)
                                      : observe(est.input.tdl.total, stacked_mask(est.sensing, sc.taps));
        CMatrix total;
        if (data.complete) {
            CompletedCorrelation c = complete_tdl(obs, sc.n(), sc.taps, sc.noise_var, cset);
            total = c.matrix;
            est.diagnostics = std::move(c.diagnostics);
        } else {
            total = hermitian_part(obs.value);
        }
        est.input.tdl.total = total;
        est.input.tdl.noise = total - est.input.tdl.signal;
    } else {
        std::vector<MaskedCorrelation> obs;
        if (block) {
            obs = sample_correlation_dft(*block, sc.taps);
        } else {
            const auto mask = stacked_mask(est.sensing, 1);
            for (const auto& r : est.input.dft.total) obs.push_back(observe(r, mask));
        }
        for (std::size_t l = 0; l < obs.size(); ++l) {
            CMatrix total;
            if (data.complete) {
                auto c = complete_dft({obs[l]}, est.input.dft.bin_noise_var, cset);
                total = c.front().matrix;
                BlockDiagnostics d = c.front().diagnostics.front();
                d.block = static_cast<int>(l);
                est.diagnostics.push_back(d);
            } else {
                total = hermitian_part(obs[l].value);
            }
            est.input.dft.total[l] = total;
            est.input.dft.noise[l] = total - est.input.dft.signal[l];
        }
        // A DFT design is scored elsewhere; the TDL view is not estimated.
        est.input.has_tdl = false;
    }
    return est;
}

// ---------------------------------------------------------------------------
// Selection

struct PipelineSettings {
    SdrSettings sdr;
    ScaSettings sca;
    EnumerationOptions enumeration{200000, false, 0};
    CompletionSettings completion;
};

struct SelectionOutcome {
    Method method = Method::Given;
    SensorSelection selection;
    std::optional<DesignResult> design;        // relaxation methods only
    std::optional<EnumerationResult> enumeration;
};

/// SINR in dB of the best weights for `sel` under the input's own model.
inline double input_sinr(const DesignInput& in, const SensorSelection& sel) {
    return in.model == Model::Tdl ? sinr_tdl(in.tdl, sel, in.taps) : sinr_dft(in.dft, sel);
}

inline SelectionOutcome select_sensors(Method method, const DesignInput& in, const PipelineSettings& set = {},
                                       std::uint64_t seed = 1, const std::optional<SensorSelection>& given = {}) {
    SelectionOutcome out;
    out.method = method;
    switch (method) {
        case Method::Sdr:
            out.design = run_sdr(in, set.sdr);
            out.selection = out.design->selection;
            break;
        case Method::Sca:
            out.design = run_sca(in, set.sca);
            out.selection = out.design->selection;
            break;
        case Method::Enum:
        case Method::Worst: {
            out.enumeration = enumerate_selections(
                in.sensors, in.budget, [&](const SensorSelection& s) { return input_sinr(in, s); }, set.enumeration);
            out.selection = method == Method::Enum ? out.enumeration->best : out.enumeration->worst;
            break;
        }
        case Method::Random: out.selection = random_selection(in.sensors, in.budget, seed); break;
        case Method::Ula: out.selection = ula_selection(in.sensors, in.budget); break;
        case Method::Nested: {
            auto s = nested_selection(in.sensors, in.budget);
            if (!s) throw DomainError("no nested array with P sensors fits the grid");
            out.selection = *s;
            break;
        }
        case Method::Coprime: {
            auto s = coprime_selection(in.sensors, in.budget);
            if (!s) throw DomainError("no coprime array with P sensors fits the grid");
            out.selection = *s;
            break;
        }
        case Method::Given:
            if (!given) throw DomainError("given-selection method needs a selection");
            if (given->n_sensors() != in.sensors) throw DimensionError("given selection does not match the grid");
            out.selection = *given;
            break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scoring

/// True correlations of a scene, built once per model.
struct Truth {
    TdlCorrelations tdl;
    DftCorrelations dft;
    bool has_dft = false;
    int taps = 1;

    static Truth of(const Scenario& sc, bool with_dft) {
        Truth t;
        t.tdl = scenario_correlations_tdl(sc);
        if (with_dft) {
            t.dft = scenario_correlations_dft(sc);
            t.has_dft = true;
        }
        t.taps = sc.taps;
        return t;
    }
};

/// SINR (dB) reported for a selection under a design model.
inline double score(const Truth& truth, DesignModel model, const SensorSelection& sel) {
    if (model == DesignModel::Dft) {
        if (!truth.has_dft) throw DomainError("score: DFT truth not built");
        return sinr_dft(truth.dft, sel);
    }
    return sinr_tdl(truth.tdl, sel, truth.taps);
}

}  // namespace sparsebf
