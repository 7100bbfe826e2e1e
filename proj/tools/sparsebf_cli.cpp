// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: run, montecarlo, audit, beampattern.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sparsebf/sparsebf.hpp"

namespace fs = std::filesystem;
using namespace sparsebf;

namespace {

struct Options {
    std::string scenario;
    std::string config;
    std::string model = "tdl";
    std::string method = "enum";
    int snapshots = 0;  // 0: analytic correlations
    std::uint64_t seed = 1;
    bool complete = false;
    std::string initial;
    std::string selection;
    std::string out = "out";
    std::string summary;
    bool verbose = false;
    bool pattern = false;
    int freq_points = 101;
    unsigned threads = 0;
    std::size_t enum_cap = 200000;
};

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const ScenarioError*>(&e)) return "scenario";
    if (dynamic_cast<const BracketExhaustedError*>(&e)) return "bracket_exhausted";
    if (dynamic_cast<const ConditioningError*>(&e)) return "conditioning";
    if (dynamic_cast<const InsufficientDataError*>(&e)) return "insufficient_data";
    if (dynamic_cast<const CapacityError*>(&e)) return "capacity";
    if (dynamic_cast<const DimensionError*>(&e)) return "dimension";
    if (dynamic_cast<const DomainError*>(&e)) return "domain";
    if (dynamic_cast<const Error*>(&e)) return "pipeline";
    return "internal";
}

// Machine-readable failure: stderr always, error.json when the output
// directory can be written.
int fail(const std::string& command, const std::exception& e, const Options& opt) {
    nlohmann::json j = {{"status", "error"}, {"command", command}, {"kind", error_kind(e)}, {"message", e.what()}};
    if (!opt.scenario.empty()) j["scenario"] = opt.scenario;
    std::cerr << j.dump() << '\n';
    std::error_code ec;
    fs::create_directories(opt.out, ec);
    if (!ec) std::ofstream(fs::path(opt.out) / "error.json") << j.dump(2) << '\n';
    return 1;
}

std::ofstream open_out(const Options& opt, const std::string& name) {
    fs::create_directories(opt.out);
    std::ofstream f(fs::path(opt.out) / name);
    if (!f) throw Error("cannot write " + (fs::path(opt.out) / name).string());
    return f;
}

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

PipelineSettings pipeline_settings(const Options& opt) {
    PipelineSettings set;
    set.enumeration.cap = opt.enum_cap;
    set.enumeration.threads = opt.threads;
    set.enumeration.keep_ranked = true;
    return set;
}

DataOptions data_options(const Options& opt, int n) {
    DataOptions d;
    d.kind = opt.snapshots > 0 ? DataKind::Snapshots : DataKind::Analytic;
    d.snapshots = opt.snapshots;
    d.seed = opt.seed;
    d.complete = opt.complete;
    if (!opt.initial.empty()) {
        d.initial = SensorSelection::from_bitmask(opt.initial);
        if (d.initial->n_sensors() != n) throw DimensionError("--initial must have one digit per sensor");
    }
    if (opt.complete && d.kind == DataKind::Analytic && !d.initial)
        throw DomainError("--complete on analytic data needs a sensing array (--initial)");
    return d;
}

std::string data_label(const Options& opt) {
    std::string s = opt.snapshots > 0 ? "snapshots" : "analytic";
    if (opt.complete) s += "+completion";
    return s;
}

struct RunOutcome {
    NamedScenario scene;
    DesignModel model;
    SelectionOutcome sel;
    Estimate est;
};

RunOutcome design(const Options& opt) {
    RunOutcome r{load_scenario(opt.scenario), parse_design_model(opt.model), {}, {}};
    const Scenario& sc = r.scene.scenario;
    const Method method = parse_method(opt.method);
    std::optional<SensorSelection> given;
    if (!opt.selection.empty()) given = SensorSelection::from_bitmask(opt.selection);
    r.est = estimate_input(sc, design_domain(r.model), data_options(opt, sc.n()), CompletionSettings{});
    r.sel = select_sensors(method, r.est.input, pipeline_settings(opt), opt.seed, given);
    return r;
}

int cmd_run(const Options& opt) {
    RunOutcome r = design(opt);
    const Scenario& sc = r.scene.scenario;
    const Truth truth = Truth::of(sc, r.model == DesignModel::Dft);
    const double sinr = score(truth, r.model, r.sel.selection);
    const double tdl = score(truth, DesignModel::Tdl, r.sel.selection);
    const std::string bits = r.sel.selection.to_bitmask();

    {
        auto f = open_out(opt, "summary.csv");
        f.precision(17);
        f << "scenario,method,model,data,selection,sinr_db,tdl_sinr_db\n";
        f << r.scene.name << ',' << to_string(r.sel.method) << ',' << to_string(r.model) << ',' << data_label(opt) << ','
          << bits << ',' << sinr << ',' << tdl << '\n';
    }
    open_out(opt, "selection.txt") << bits << '\n';
    if (r.sel.design) {
        auto f = open_out(opt, "trace.csv");
        write_trace_csv(f, r.sel.design->trace);
        for (const auto& w : r.sel.design->warnings) std::cerr << "warning: " << w << '\n';
    }
    if (r.sel.enumeration) {
        auto f = open_out(opt, "ranked.csv");
        write_ranked_csv(f, r.sel.enumeration->ranked);
    }
    if (!r.est.diagnostics.empty()) {
        auto f = open_out(opt, "diagnostics.csv");
        write_diagnostics_csv(f, r.est.diagnostics, r.model == DesignModel::Tdl ? "block" : "bin");
    }
    if (opt.pattern) {
        const auto bw = optimal_weights_tdl(truth.tdl, r.sel.selection, sc.taps);
        const auto theta = default_theta_grid();
        const auto x = linspace(-1.0, 1.0, opt.freq_points);
        auto f = open_out(opt, "beampattern.csv");
        write_beampattern_csv(f, theta, x, beampattern(bw, sc.grid, sc.taps, theta, x));
    }

    if (opt.verbose && r.sel.design)
        for (const auto& t : r.sel.design->trace)
            std::cerr << t.stage << " mu=" << t.mu << " it=" << t.iteration << " card=" << t.cardinality
                      << " obj=" << t.objective << " rank=" << t.rank_ratio << '\n';
    if (opt.verbose)
        for (const auto& d : r.est.diagnostics)
            std::cerr << "completion " << d.block << " status=" << conic::to_string(d.status) << " rank=" << d.rank
                      << " residual=" << d.residual << (d.degenerate ? " degenerate" : "") << '\n';

    std::cout << r.scene.name << "  " << to_string(r.sel.method) << "  " << to_string(r.model) << "  " << bits << "  SINR "
              << fmt2(sinr) << " dB";
    if (r.model != DesignModel::Tdl) std::cout << "  (TDL " << fmt2(tdl) << " dB)";
    std::cout << '\n';
    return 0;
}

int cmd_beampattern(const Options& opt) {
    SensorSelection sel;
    NamedScenario scene;
    if (!opt.selection.empty()) {
        scene = load_scenario(opt.scenario);
        sel = SensorSelection::from_bitmask(opt.selection);
    } else {
        RunOutcome r = design(opt);
        scene = r.scene;
        sel = r.sel.selection;
    }
    const Scenario& sc = scene.scenario;
    const auto bw = optimal_weights_tdl(scenario_correlations_tdl(sc), sel, sc.taps);
    const auto theta = default_theta_grid();
    const auto x = linspace(-1.0, 1.0, opt.freq_points);
    auto f = open_out(opt, "beampattern.csv");
    write_beampattern_csv(f, theta, x, beampattern(bw, sc.grid, sc.taps, theta, x));
    std::cout << scene.name << "  " << sel.to_bitmask() << "  TDL SINR " << fmt2(bw.sinr_db) << " dB  -> "
              << (fs::path(opt.out) / "beampattern.csv").string() << '\n';
    return 0;
}

int cmd_montecarlo(const Options& opt, bool seed_given) {
    MonteCarloConfig cfg = load_montecarlo(opt.config);
    if (seed_given) cfg.seed = opt.seed;
    if (opt.snapshots > 0) cfg.snapshots = opt.snapshots;
    if (opt.threads) cfg.threads = opt.threads;
    PipelineSettings set = pipeline_settings(opt);
    set.enumeration.threads = 1;
    set.enumeration.keep_ranked = false;
    const MonteCarloResult res = run_montecarlo(cfg, set);
    {
        auto f = open_out(opt, "mc_summary.csv");
        write_summary_csv(f, res.summary);
    }
    {
        auto f = open_out(opt, "mc_trials.csv");
        write_trials_csv(f, res.records);
    }
    for (const auto& r : res.summary) {
        if (r.doa >= 0 && !opt.verbose) continue;
        std::cout << (r.doa < 0 ? std::string("all") : fmt2(r.doa)) << "  " << to_string(r.benchmark) << "  "
                  << to_string(r.method) << "  " << fmt2(r.mean_sinr_db) << " dB  (" << r.trials << " ok, "
                  << r.failures << " failed)\n";
    }
    return 0;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

// Recomputes every SINR in a summary from its selection and the scenario.
int cmd_audit(const Options& opt) {
    const NamedScenario scene = load_scenario(opt.scenario);
    const std::string path = opt.summary.empty() ? (fs::path(opt.out) / "summary.csv").string() : opt.summary;
    std::ifstream in(path);
    if (!in) throw Error("cannot open summary '" + path + "'");
    std::string line;
    std::getline(in, line);
    const auto header = split_csv(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* k : {"model", "selection", "sinr_db"})
        if (!col.count(k)) throw Error("summary lacks column '" + std::string(k) + "'");

    const Truth truth = Truth::of(scene.scenario, true);
    int rows = 0, bad = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size()) throw Error("malformed summary row: " + line);
        const auto sel = SensorSelection::from_bitmask(cells[col["selection"]]);
        const auto model = parse_design_model(cells[col["model"]]);
        auto check = [&](const char* name, DesignModel m) {
            if (!col.count(name)) return;
            const double claimed = std::stod(cells[col[name]]);
            const double derived = score(truth, m, sel);
            const bool ok = std::abs(claimed - derived) <= 1e-9 * std::max(1.0, std::abs(derived));
            ++rows;
            if (!ok) ++bad;
            std::cout << (ok ? "ok   " : "FAIL ") << sel.to_bitmask() << "  " << name << "  claimed " << fmt2(claimed)
                      << "  derived " << fmt2(derived) << '\n';
        };
        check("sinr_db", model);
        check("tdl_sinr_db", DesignModel::Tdl);
    }
    std::cout << rows - bad << '/' << rows << " values reproduced\n";
    return bad == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse array selection for wideband MaxSINR beamforming"};
    app.require_subcommand(1);
    Options opt;

    auto add_design = [&](CLI::App* c) {
        c->add_option("--scenario", opt.scenario, "Scenario YAML file")->required()->check(CLI::ExistingFile);
        c->add_option("--model", opt.model, "tdl, dft or dual")->check(CLI::IsMember({"tdl", "dft", "dual"}));
        c->add_option("--method", opt.method, "sdr, sca, enum, worst, random, ula, nested, coprime, given-selection");
        c->add_option("--snapshots", opt.snapshots, "Estimate correlations from T snapshots (0: analytic)")
            ->check(CLI::NonNegativeNumber);
        c->add_option("--seed", opt.seed, "Random seed");
        c->add_flag("--complete", opt.complete, "Estimate on a sparse array and complete the correlation");
        c->add_option("--initial", opt.initial, "Sensing array bitmask used with --complete");
        c->add_option("--selection", opt.selection, "Selection bitmask for given-selection");
        c->add_option("--enum-cap", opt.enum_cap, "Largest enumeration allowed");
        c->add_option("--threads", opt.threads, "Worker threads (0: all cores)");
    };
    auto add_common = [&](CLI::App* c) {
        c->add_option("--out", opt.out, "Output directory");
        c->add_flag("--verbose", opt.verbose, "Print traces and diagnostics");
    };

    auto* run = app.add_subcommand("run", "Design an array for one scenario");
    add_design(run);
    add_common(run);
    run->add_flag("--beampattern", opt.pattern, "Also write the TDL beampattern grid");
    run->add_option("--freq-points", opt.freq_points, "Frequency samples in the beampattern")->check(CLI::PositiveNumber);

    auto* bp = app.add_subcommand("beampattern", "Beampattern grid of a given or designed selection");
    add_design(bp);
    add_common(bp);
    bp->add_option("--freq-points", opt.freq_points, "Frequency samples")->check(CLI::PositiveNumber);

    auto* mc = app.add_subcommand("montecarlo", "Monte Carlo comparison over random jammer scenes");
    mc->add_option("--config", opt.config, "Monte Carlo YAML file")->required()->check(CLI::ExistingFile);
    auto* mc_seed = mc->add_option("--seed", opt.seed, "Override the master seed");
    mc->add_option("--snapshots", opt.snapshots, "Override the snapshot count")->check(CLI::NonNegativeNumber);
    mc->add_option("--threads", opt.threads, "Worker threads (0: all cores)");
    add_common(mc);

    auto* au = app.add_subcommand("audit", "Re-derive the SINRs of a run summary");
    au->add_option("--scenario", opt.scenario, "Scenario YAML file")->required()->check(CLI::ExistingFile);
    au->add_option("--summary", opt.summary, "summary.csv (default: OUT/summary.csv)");
    add_common(au);

    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        if (run->parsed()) return cmd_run(opt);
        if (bp->parsed()) return cmd_beampattern(opt);
        if (mc->parsed()) return cmd_montecarlo(opt, mc_seed->count() > 0);
        if (au->parsed()) return cmd_audit(opt);
    } catch (const std::exception& e) {
        return fail(command, e, opt);
    }
    return 0;
}
