// mechemu: emulator-based calibration of rainfall-runoff simulators.

#include "mechemu/commands.hpp"
#include "mechemu/errors.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Mechanistic emulator calibration toolkit"};
    app.require_subcommand(1);

    mechemu::CommandOptions opts;
    std::uint64_t seed = 0;
    std::string out;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opts.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--seed", seed, "Override the config seed");
        cmd->add_option("--out", out, "Override the output directory");
    };

    auto* design = app.add_subcommand("design", "Halton design and simulator runs");
    add_common(design);
    design->add_option("--stage", opts.stage, "initial (n/2 points) or full (n points)")
        ->check(CLI::IsMember({"initial", "full"}));

    auto* infer = app.add_subcommand("infer", "Posterior sampling with the emulator or the simulator");
    add_common(infer);
    infer->add_option("--mode", opts.mode, "emulator or direct")->check(CLI::IsMember({"emulator", "direct"}));

    auto* refine = app.add_subcommand("refine", "Iterative design refinement");
    add_common(refine);

    auto* bench = app.add_subcommand("bench", "Conditioning, emulation and likelihood timings");
    add_common(bench);

    std::string sample_a, sample_b;
    std::size_t size = 0;
    auto* compare = app.add_subcommand("compare", "Cross-match distance between two sample files");
    compare->add_option("sample_a", sample_a, "First sample CSV")->required();
    compare->add_option("sample_b", sample_b, "Second sample CSV")->required();
    compare->add_option("--seed", seed, "Subsampling seed");
    compare->add_option("--size", size, "Points per sample (default: the smaller row count)");
    compare->add_option("--out", out, "Directory for compare.json");

    std::string run_dir;
    auto* report = app.add_subcommand("report", "Summary tables and SVG plots for a run directory");
    report->add_option("run_dir", run_dir, "Run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        for (auto* cmd : {design, infer, refine, bench, compare}) {
            if (cmd->count("--seed") > 0) opts.seed = seed;
            if (cmd->count("--out") > 0) opts.out = out;
        }
        if (*design) return mechemu::cmd_design(opts, std::cout);
        if (*infer) return mechemu::cmd_infer(opts, std::cout);
        if (*refine) return mechemu::cmd_refine(opts, std::cout);
        if (*bench) return mechemu::cmd_bench(opts, std::cout);
        if (*compare) return mechemu::cmd_compare(sample_a, sample_b, seed, size, opts.out, std::cout);
        if (*report) return mechemu::cmd_report(run_dir, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        if (const auto* f = dynamic_cast<const mechemu::SimulatorFailure*>(&e); f && !f->captured_output().empty()) {
            std::cerr << "--- simulator output ---\n" << f->captured_output() << "\n";
        }
        return mechemu::exit_code(e);
    }
    return 2;
}
