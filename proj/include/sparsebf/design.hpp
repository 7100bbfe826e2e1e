// SPDX-License-Identifier: Apache-2.0
//
// Inputs and outputs shared by the sparse-array design algorithms.

#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sparsebf/beamforming.hpp"
#include "sparsebf/signal_model.hpp"

namespace sparsebf {

/// Correlations the design works from, analytic or estimated. Both model
/// views are carried so a DFT design can also be scored under TDL.
struct DesignInput {
    Model model = Model::Tdl;
    int sensors = 0;
    int taps = 1;
    int budget = 1;
    TdlCorrelations tdl;
    DftCorrelations dft;
    bool has_tdl = false;
    bool has_dft = false;

    static DesignInput from_scenario(const Scenario& sc, Model model) {
        sc.validate();
        DesignInput in;
        in.model = model;
        in.sensors = sc.n();
        in.taps = sc.taps;
        in.budget = sc.budget;
        in.tdl = scenario_correlations_tdl(sc);
        in.has_tdl = true;
        if (model == Model::Dft) {
            in.dft = scenario_correlations_dft(sc);
            in.has_dft = true;
        }
        return in;
    }

    void validate() const {
        if (sensors < 1 || taps < 1) throw DomainError("design input needs sensors >= 1 and taps >= 1");
        if (budget < 1 || budget > sensors) throw DomainError("budget must satisfy 1 <= P <= N");
        const Eigen::Index nl = static_cast<Eigen::Index>(sensors) * taps;
        if (model == Model::Tdl || has_tdl) {
            if (!has_tdl) throw DomainError("TDL design requires TDL correlations");
            if (tdl.total.rows() != nl || tdl.total.cols() != nl || tdl.signal.rows() != nl || tdl.signal.cols() != nl)
                throw DimensionError("TDL correlations must be NL x NL");
        }
        if (model == Model::Dft) {
            if (!has_dft) throw DomainError("DFT design requires bin correlations");
            if (static_cast<int>(dft.total.size()) != taps || dft.signal.size() != dft.total.size())
                throw DimensionError("DFT design requires L bin matrices");
            for (std::size_t l = 0; l < dft.total.size(); ++l)
                if (dft.total[l].rows() != sensors || dft.signal[l].rows() != sensors)
                    throw DimensionError("bin correlations must be N x N");
        }
    }
};

/// One row of a per-iteration design trace.
struct TraceRow {
    std::string stage;
    double mu = 0.0;
    int iteration = 0;
    int cardinality = 0;
    double objective = 0.0;
    double rank_ratio = 0.0;
    int solver_iterations = 0;
};

struct DesignResult {
    Model model = Model::Tdl;
    std::string method;
    SensorSelection selection;
    BeamformerWeights weights;        // weights extracted by the algorithm
    double sinr_db = 0.0;             // SINR of the extracted weights, design model
    double optimal_sinr_db = 0.0;     // optimal weights on the selection, design model
    double tdl_sinr_db = 0.0;         // optimal TDL weights on the selection
    double final_mu = 0.0;
    double rank_ratio = 1.0;
    std::vector<std::string> warnings;
    std::vector<TraceRow> trace;
};

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
    os.precision(12);
    os << "stage,mu,iteration,cardinality,objective,rank_ratio,solver_iterations\n";
    for (const auto& r : rows)
        os << r.stage << ',' << r.mu << ',' << r.iteration << ',' << r.cardinality << ',' << r.objective << ','
           << r.rank_ratio << ',' << r.solver_iterations << '\n';
}

/// A binary search on the sparsity weight ended without the target
/// cardinality. Carries the closest selections seen on either side.
class BracketExhaustedError : public Error {
public:
    struct Nearest {
        double mu = 0.0;
        SensorSelection selection;
    };

    BracketExhaustedError(const std::string& what, std::vector<Nearest> nearest)
        : Error(what), nearest_(std::move(nearest)) {}
    const std::vector<Nearest>& nearest() const noexcept { return nearest_; }

private:
    std::vector<Nearest> nearest_;
};

namespace detail {

/// Scores a selection under the design model and, when TDL correlations
/// are present, under TDL.
inline void score_selection(const DesignInput& in, DesignResult& r) {
    if (in.model == Model::Tdl) {
        r.optimal_sinr_db = sinr_tdl(in.tdl, r.selection, in.taps);
        r.tdl_sinr_db = r.optimal_sinr_db;
    } else {
        r.optimal_sinr_db = sinr_dft(in.dft, r.selection);
        r.tdl_sinr_db = in.has_tdl ? sinr_tdl(in.tdl, r.selection, in.taps) : r.optimal_sinr_db;
    }
}

/// Fallback for a bracket that closes without any mu giving P sensors. In a
/// mirror-symmetric scene sensors k and N-1-k leave the support together,
/// so an odd budget can be skipped. Keeps the smaller support and fills it
/// from the larger one by exact SINR under the design model.
inline std::optional<SensorSelection> bridge_supports(const DesignInput& in, const SensorSelection* below,
                                                      const SensorSelection* above, unsigned long long cap = 5000) {
    if (!above) return std::nullopt;
    std::vector<int> base = below ? below->active() : std::vector<int>{};
    std::vector<int> pool;
    for (int k : above->active())
        if (!std::binary_search(base.begin(), base.end(), k)) pool.push_back(k);
    const int need = in.budget - static_cast<int>(base.size());
    if (need < 0 || need > static_cast<int>(pool.size())) return std::nullopt;
    if (binomial(static_cast<unsigned>(pool.size()), static_cast<unsigned>(need)) > cap) return std::nullopt;
    std::optional<SensorSelection> best;
    double best_sinr = -std::numeric_limits<double>::infinity();
    for (const auto& combo : combinations(static_cast<int>(pool.size()), need)) {
        std::vector<int> idx = base;
        for (int c : combo) idx.push_back(pool[static_cast<std::size_t>(c)]);
        SensorSelection cand(in.sensors, std::move(idx));
        const double v = in.model == Model::Tdl ? sinr_tdl(in.tdl, cand, in.taps) : sinr_dft(in.dft, cand);
        if (v > best_sinr) {
            best_sinr = v;
            best = std::move(cand);
        }
    }
    return best;
}

}  // namespace detail

}  // namespace sparsebf
