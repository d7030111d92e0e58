#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "v2i/runner.hpp"

namespace {

v2i::Mode parse_mode(const std::string& s) { return v2i::mode_from_name(s); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"v2isim — microscopic traffic simulator with V2I signal preemption and "
                 "intersection-pool gating"};
    app.require_subcommand(1);

    // run -------------------------------------------------------------
    auto* run_cmd = app.add_subcommand("run", "run a scenario (single mode or paired comparison)");
    std::string scenario, mode_str, compare_str, out_dir = "out";
    std::uint64_t seed = 1;
    int reps = 50;
    double dt = -1, duration = -1;
    bool emit_trace = false, emit_envelopes = false;
    run_cmd->add_option("--scenario", scenario, "scenario file")->required();
    run_cmd->add_option("--mode", mode_str, "baseline|scenario-a|scenario-b");
    run_cmd->add_option("--compare", compare_str, "pair of modes, e.g. baseline,scenario-b");
    run_cmd->add_option("--reps", reps, "repetitions (seeds seed..seed+reps-1)");
    run_cmd->add_option("--seed", seed, "base seed");
    run_cmd->add_option("--dt", dt, "override simulation step (s)");
    run_cmd->add_option("--duration", duration, "override simulated duration (s)");
    run_cmd->add_option("--out", out_dir, "output directory");
    run_cmd->add_flag("--emit-trace", emit_trace, "write per-repetition trajectory traces");
    run_cmd->add_flag("--emit-envelopes", emit_envelopes, "write per-repetition envelope logs");

    // replay ----------------------------------------------------------
    auto* replay_cmd = app.add_subcommand("replay", "recompute reports from a trace file");
    std::string trace_path, replay_scenario, replay_out = "out";
    replay_cmd->add_option("trace", trace_path, "trace file")->required();
    replay_cmd->add_option("--scenario", replay_scenario, "scenario file the trace came from")
        ->required();
    replay_cmd->add_option("--out", replay_out, "output directory");

    // regression --------------------------------------------------------
    app.add_subcommand("regression", "run the built-in reference-table checks");

    CLI11_PARSE(app, argc, argv);

    if (run_cmd->parsed()) {
        v2i::RunRequest req;
        req.scenario_path = scenario;
        req.seed = seed;
        req.reps = reps;
        req.out_dir = out_dir;
        req.emit_trace = emit_trace;
        req.emit_envelopes = emit_envelopes;
        if (dt > 0) req.dt = dt;
        if (duration > 0) req.duration = duration;
        try {
            if (!mode_str.empty()) req.mode = parse_mode(mode_str);
            if (!compare_str.empty()) {
                const auto comma = compare_str.find(',');
                if (comma == std::string::npos) {
                    std::cerr << "error: --compare expects two modes separated by a comma\n";
                    return 1;
                }
                req.compare_modes = {parse_mode(compare_str.substr(0, comma)),
                                     parse_mode(compare_str.substr(comma + 1))};
            }
        } catch (const v2i::Error& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
        if (reps < 1) {
            std::cerr << "error: --reps must be >= 1\n";
            return 1;
        }
        return v2i::run(req);
    }
    if (replay_cmd->parsed()) return v2i::replay(trace_path, replay_scenario, replay_out);
    return v2i::regression(std::cout);
}
