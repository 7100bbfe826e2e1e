// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo comparison of selection methods over random jammer scenes,
// with three data regimes: full correlation knowledge (kfm-uss), completion
// from exact sparse-array lags (mc-uss), and completion from T snapshots of
// the sparse array (mc-lss).

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "sparsebf/pipeline.hpp"
#include "sparsebf/scenario_io.hpp"

namespace sparsebf {

enum class Benchmark { KfmUss, McUss, McLss };

inline const char* to_string(Benchmark b) {
    switch (b) {
        case Benchmark::KfmUss: return "kfm-uss";
        case Benchmark::McUss: return "mc-uss";
        case Benchmark::McLss: return "mc-lss";
    }
    return "?";
}

inline Benchmark parse_benchmark(const std::string& s) {
    for (Benchmark b : {Benchmark::KfmUss, Benchmark::McUss, Benchmark::McLss})
        if (s == to_string(b)) return b;
    throw DomainError("unknown benchmark '" + s + "'");
}

struct MonteCarloConfig {
    ArrayGrid grid{16, 1.0 / 0.11};
    int taps = 8;
    int budget = 8;
    double noise_var = 1.0;
    FrequencyBand desired_band = FrequencyBand::from_cycles(-0.25, 0.25);
    double desired_power = 1.0;
    std::vector<double> desired_doas{40.0};
    int trials = 10;  // per desired DOA
    int jammer_count = 6;
    double jammer_doa_min = 30.0, jammer_doa_max = 150.0;
    double jammer_power_db_min = 10.0, jammer_power_db_max = 20.0;
    FrequencyBand jammer_band = FrequencyBand::full();
    double min_separation_deg = 1.0;
    int snapshots = 500;
    std::uint64_t seed = 1;
    DesignModel model = DesignModel::Dft;
    std::vector<Method> methods{Method::Enum, Method::Sca, Method::Random, Method::Ula, Method::Worst};
    std::vector<Benchmark> benchmarks{Benchmark::KfmUss, Benchmark::McUss, Benchmark::McLss};
    unsigned threads = 1;

    void validate() const {
        grid.validate();
        if (trials < 1) throw DomainError("montecarlo: trials must be at least 1");
        if (desired_doas.empty()) throw DomainError("montecarlo: need at least one desired DOA");
        if (jammer_count < 0) throw DomainError("montecarlo: jammer count must be nonnegative");
        if (!(jammer_doa_min > 0 && jammer_doa_max < 180 && jammer_doa_min <= jammer_doa_max))
            throw DomainError("montecarlo: jammer DOA range must lie in (0, 180)");
        if (jammer_power_db_min > jammer_power_db_max) throw DomainError("montecarlo: empty jammer power range");
        if (budget < 1 || budget > grid.sensors || taps < 1) throw DomainError("montecarlo: need 1 <= P <= N, L >= 1");
        if (snapshots < taps) throw DomainError("montecarlo: snapshots must be at least the tap count");
        if (methods.empty() || benchmarks.empty()) throw DomainError("montecarlo: need methods and benchmarks");
        for (Method m : methods)
            if (m == Method::Given) throw DomainError("montecarlo: given-selection is not a Monte Carlo method");
    }
};

/// One method under one benchmark in one trial.
struct TrialRecord {
    double doa = 0.0;
    int trial = 0;
    Benchmark benchmark = Benchmark::KfmUss;
    Method method = Method::Enum;
    bool ok = false;
    SensorSelection selection;
    double sinr_db = 0.0;
    std::string error;
};

struct SummaryRow {
    double doa = 0.0;  // negative: average over all DOAs
    Benchmark benchmark = Benchmark::KfmUss;
    Method method = Method::Enum;
    int trials = 0;
    int failures = 0;
    double mean_sinr_db = 0.0;
};

struct MonteCarloResult {
    std::vector<TrialRecord> records;
    std::vector<SummaryRow> summary;

    /// Mean over every DOA for one benchmark and method.
    double overall(Benchmark b, Method m) const {
        for (const auto& r : summary)
            if (r.doa < 0 && r.benchmark == b && r.method == m) return r.mean_sinr_db;
        throw DomainError("montecarlo: no summary for that benchmark and method");
    }
};

namespace detail {

inline std::uint64_t trial_seed(std::uint64_t master, std::size_t doa_index, int trial, std::uint64_t salt = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(doa_index), static_cast<std::uint32_t>(trial),
                      static_cast<std::uint32_t>(salt)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace detail

/// Random scene for one trial: jammers uniform in DOA (kept apart from the
/// desired source and each other) and uniform in dB power.
inline Scenario draw_scenario(const MonteCarloConfig& cfg, double doa, std::uint64_t seed) {
    Scenario sc;
    sc.grid = cfg.grid;
    sc.taps = cfg.taps;
    sc.budget = cfg.budget;
    sc.noise_var = cfg.noise_var;
    sc.desired = {doa, cfg.desired_band, cfg.desired_power};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ang(cfg.jammer_doa_min, cfg.jammer_doa_max);
    std::uniform_real_distribution<double> pow_db(cfg.jammer_power_db_min, cfg.jammer_power_db_max);
    std::vector<double> taken{doa};
    for (int j = 0; j < cfg.jammer_count; ++j) {
        double a = 0;
        for (int attempt = 0;; ++attempt) {
            if (attempt > 10000) throw DomainError("montecarlo: cannot place jammers with the required separation");
            a = ang(rng);
            if (std::all_of(taken.begin(), taken.end(),
                            [&](double t) { return std::abs(t - a) >= cfg.min_separation_deg; }))
                break;
        }
        taken.push_back(a);
        sc.jammers.push_back({a, cfg.jammer_band, from_db(pow_db(rng))});
    }
    sc.validate();
    return sc;
}

/// All records of one trial, in benchmark-major, method-minor order.
inline std::vector<TrialRecord> run_trial(const MonteCarloConfig& cfg, std::size_t doa_index, int trial,
                                          const PipelineSettings& set = {}) {
    const double doa = cfg.desired_doas[doa_index];
    const std::uint64_t seed = detail::trial_seed(cfg.seed, doa_index, trial);
    std::vector<TrialRecord> out;
    auto fail_all = [&](Benchmark b, const std::string& why) {
        for (Method m : cfg.methods) out.push_back({doa, trial, b, m, false, {}, 0.0, why});
    };
    Scenario sc;
    try {
        sc = draw_scenario(cfg, doa, seed);
    } catch (const Error& e) {
        for (Benchmark b : cfg.benchmarks) fail_all(b, e.what());
        return out;
    }
    const Truth truth = Truth::of(sc, cfg.model == DesignModel::Dft);
    const Model domain = design_domain(cfg.model);
    const SensorSelection initial = random_selection(sc.n(), sc.budget, detail::trial_seed(cfg.seed, doa_index, trial, 1));

    for (Benchmark b : cfg.benchmarks) {
        DataOptions data;
        data.seed = detail::trial_seed(cfg.seed, doa_index, trial, 2);
        data.snapshots = cfg.snapshots;
        data.initial = initial;
        data.complete = b != Benchmark::KfmUss;
        data.kind = b == Benchmark::McLss ? DataKind::Snapshots : DataKind::Analytic;
        Estimate est;
        try {
            est = estimate_input(sc, domain, data, set.completion);
        } catch (const Error& e) {
            fail_all(b, e.what());
            continue;
        }
        for (Method m : cfg.methods) {
            TrialRecord rec{doa, trial, b, m, false, {}, 0.0, {}};
            try {
                const SelectionOutcome o =
                    select_sensors(m, est.input, set, detail::trial_seed(cfg.seed, doa_index, trial, 3));
                rec.selection = o.selection;
                rec.sinr_db = score(truth, cfg.model, o.selection);
                rec.ok = true;
            } catch (const Error& e) {
                rec.error = e.what();
            }
            out.push_back(std::move(rec));
        }
    }
    return out;
}

inline std::vector<SummaryRow> summarize(const MonteCarloConfig& cfg, const std::vector<TrialRecord>& records) {
    std::vector<SummaryRow> rows;
    auto add = [&](double doa, Benchmark b, Method m, bool all_doas) {
        SummaryRow r{all_doas ? -1.0 : doa, b, m, 0, 0, 0.0};
        double acc = 0;
        for (const auto& t : records) {
            if (t.benchmark != b || t.method != m || (!all_doas && t.doa != doa)) continue;
            if (t.ok) {
                ++r.trials;
                acc += t.sinr_db;
            } else {
                ++r.failures;
            }
        }
        r.mean_sinr_db = r.trials ? acc / r.trials : 0.0;
        rows.push_back(r);
    };
    for (double doa : cfg.desired_doas)
        for (Benchmark b : cfg.benchmarks)
            for (Method m : cfg.methods) add(doa, b, m, false);
    for (Benchmark b : cfg.benchmarks)
        for (Method m : cfg.methods) add(0.0, b, m, true);
    return rows;
}

/// Runs every trial; trials are spread over `cfg.threads` workers and merged
/// in index order, so the result does not depend on the thread count.
inline MonteCarloResult run_montecarlo(const MonteCarloConfig& cfg, const PipelineSettings& set = {}) {
    cfg.validate();
    const std::size_t n_doa = cfg.desired_doas.size();
    const std::size_t total = n_doa * static_cast<std::size_t>(cfg.trials);
    std::vector<std::vector<TrialRecord>> per(total);
    auto work = [&](std::size_t worker, std::size_t stride) {
        for (std::size_t i = worker; i < total; i += stride)
            per[i] = run_trial(cfg, i / static_cast<std::size_t>(cfg.trials), static_cast<int>(i % static_cast<std::size_t>(cfg.trials)), set);
    };
    const std::size_t threads = std::clamp<std::size_t>(cfg.threads ? cfg.threads : std::thread::hardware_concurrency(), 1, total);
    if (threads == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
        for (auto& th : pool) th.join();
    }
    MonteCarloResult res;
    for (auto& v : per) res.records.insert(res.records.end(), v.begin(), v.end());
    res.summary = summarize(cfg, res.records);
    return res;
}

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
    os.precision(12);
    os << "doa_deg,benchmark,method,trials,failures,mean_sinr_db\n";
    for (const auto& r : rows) {
        if (r.doa < 0) {
            os << "all";
        } else {
            os << r.doa;
        }
        os << ',' << to_string(r.benchmark) << ',' << to_string(r.method) << ',' << r.trials << ',' << r.failures << ','
           << r.mean_sinr_db << '\n';
    }
}

inline void write_trials_csv(std::ostream& os, const std::vector<TrialRecord>& recs) {
    os.precision(12);
    os << "doa_deg,trial,benchmark,method,ok,selection,sinr_db,error\n";
    for (const auto& r : recs) {
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        os << r.doa << ',' << r.trial << ',' << to_string(r.benchmark) << ',' << to_string(r.method) << ','
           << (r.ok ? 1 : 0) << ',' << (r.ok ? r.selection.to_bitmask() : std::string()) << ',' << r.sinr_db << ','
           << err << '\n';
    }
}

// ---------------------------------------------------------------------------
// Config files
//
//   sensors: 16
//   fractional_bandwidth: 0.22
//   taps: 8
//   budget: 8
//   noise_db: 0
//   desired: {band: [-0.25, 0.25], power_db: 0, doas: [30, 40, 50]}
//   jammers: {count: 6, doa_range: [30, 150], power_db_range: [10, 20], band: full}
//   trials: 20
//   snapshots: 500
//   seed: 7
//   model: dft
//   methods: [enum, sca, random, ula, worst]
//   benchmarks: [kfm-uss, mc-uss, mc-lss]

inline MonteCarloConfig parse_montecarlo(const YAML::Node& root, const std::string& where = "montecarlo") {
    if (!root.IsMap()) throw ScenarioError(where + ": top level must be a mapping");
    MonteCarloConfig c;
    c.grid = parse_grid(root, where);
    c.taps = detail::yaml_get<int>(root, "taps", where);
    c.budget = detail::yaml_get<int>(root, "budget", where);
    if (root["noise_db"]) c.noise_var = from_db(detail::yaml_get<double>(root, "noise_db", where));
    const YAML::Node d = root["desired"];
    if (!d || !d.IsMap()) throw ScenarioError(where + ": missing mapping 'desired'");
    c.desired_band = detail::parse_band(d, where + ".desired");
    if (d["power_db"]) c.desired_power = from_db(detail::yaml_get<double>(d, "power_db", where + ".desired"));
    c.desired_doas = detail::yaml_get<std::vector<double>>(d, "doas", where + ".desired");
    if (const YAML::Node j = root["jammers"]) {
        if (!j.IsMap()) throw ScenarioError(where + ": jammers must be a mapping");
        c.jammer_count = detail::yaml_get<int>(j, "count", where + ".jammers");
        if (j["doa_range"]) {
            const auto r = detail::yaml_get<std::vector<double>>(j, "doa_range", where + ".jammers");
            if (r.size() != 2) throw ScenarioError(where + ".jammers: doa_range must be [min, max]");
            c.jammer_doa_min = r[0];
            c.jammer_doa_max = r[1];
        }
        if (j["power_db_range"]) {
            const auto r = detail::yaml_get<std::vector<double>>(j, "power_db_range", where + ".jammers");
            if (r.size() != 2) throw ScenarioError(where + ".jammers: power_db_range must be [min, max]");
            c.jammer_power_db_min = r[0];
            c.jammer_power_db_max = r[1];
        }
        if (j["band"]) c.jammer_band = detail::parse_band(j, where + ".jammers");
        if (j["min_separation"]) c.min_separation_deg = detail::yaml_get<double>(j, "min_separation", where + ".jammers");
    }
    if (root["trials"]) c.trials = detail::yaml_get<int>(root, "trials", where);
    if (root["snapshots"]) c.snapshots = detail::yaml_get<int>(root, "snapshots", where);
    if (root["seed"]) c.seed = detail::yaml_get<std::uint64_t>(root, "seed", where);
    if (root["threads"]) c.threads = detail::yaml_get<unsigned>(root, "threads", where);
    try {
        if (root["model"]) c.model = parse_design_model(detail::yaml_get<std::string>(root, "model", where));
        if (root["methods"]) {
            c.methods.clear();
            for (const auto& s : detail::yaml_get<std::vector<std::string>>(root, "methods", where))
                c.methods.push_back(parse_method(s));
        }
        if (root["benchmarks"]) {
            c.benchmarks.clear();
            for (const auto& s : detail::yaml_get<std::vector<std::string>>(root, "benchmarks", where))
                c.benchmarks.push_back(parse_benchmark(s));
        }
        c.validate();
    } catch (const DomainError& e) {
        throw ScenarioError(where + ": " + e.what());
    }
    return c;
}

inline MonteCarloConfig load_montecarlo(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open Monte Carlo config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_montecarlo(YAML::Load(ss.str()), path);
    } catch (const YAML::ParserException& e) {
        throw ScenarioError(path + ": " + e.what());
    }
}

}  // namespace sparsebf
