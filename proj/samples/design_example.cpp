// SPDX-License-Identifier: Apache-2.0
//
// Designs a sparse array for a scenario file with both relaxations and
// compares them with a compact ULA of the same size.
//
//   sample_design_example scenarios/example2.yaml

#include <iostream>

#include "sparsebf/sparsebf.hpp"

using namespace sparsebf;

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: " << argv[0] << " SCENARIO.yaml\n";
        return 2;
    }
    try {
        const NamedScenario ns = load_scenario(argv[1]);
        const Scenario& sc = ns.scenario;
        std::cout << ns.name << ": " << sc.budget << " of " << sc.n() << " sensors, " << sc.taps << " taps\n";

        const DesignInput in = DesignInput::from_scenario(sc, Model::Tdl);
        const SensorSelection ula = ula_selection(sc.n(), sc.budget);
        std::cout << "  ula  " << ula.to_bitmask() << "  " << sinr_tdl(in.tdl, ula, sc.taps) << " dB\n";
        for (const DesignResult& r : {run_sdr(in), run_sca(in)}) {
            std::cout << "  " << r.method << "  " << r.selection.to_bitmask() << "  " << r.optimal_sinr_db << " dB\n";
            for (const auto& w : r.warnings) std::cout << "       note: " << w << "\n";
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
