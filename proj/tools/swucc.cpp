// swucc: compiler driver for the SWUC single-source heterogeneous toolchain.
#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "swuc/driver.hpp"

#ifdef _WIN32
#include <io.h>
#define ISATTY _isatty
#define FILENO _fileno
#else
#include <unistd.h>
#define ISATTY isatty
#define FILENO fileno
#endif

int main(int argc, char** argv) {
    CLI::App app{"swucc - single-source MPE/CPE compiler and simulator"};
    app.require_subcommand(1);

    swuc::DriverConfig cfg;
    std::string color = "auto";

    auto add_color = [&](CLI::App* sub) {
        sub->add_option("--color", color, "diagnostic coloring: auto|always|never")
            ->check(CLI::IsMember({"auto", "always", "never"}));
    };
    auto add_sim_flags = [&](CLI::App* sub) {
        sub->add_option("--cpes", cfg.cpes, "number of CPEs in the array")
            ->check(CLI::Range(1, 64));
        sub->add_option("--mode", cfg.mode, "execution mode: seq|interleave")
            ->check(CLI::IsMember({"seq", "interleave"}));
        sub->add_option("--seed", cfg.seed, "scheduler seed (interleave mode)");
        sub->add_flag("--trace", cfg.trace, "emit launch trace lines to stderr");
    };

    auto* check = app.add_subcommand("check", "parse and analyze a source file");
    check->add_option("input", cfg.input_paths, "source file")->required();
    check->add_flag("--emit-targets", cfg.emit_targets,
                    "print the resolved target table");
    add_color(check);

    auto* build = app.add_subcommand("build", "compile and link to an image");
    build->add_option("input", cfg.input_paths, "source file")->required();
    build->add_option("-o,--output", cfg.output_path, "image output path");
    build->add_flag("--no-collab", cfg.no_collab,
                    "disable collaborative host/slave instantiation");
    build->add_flag("--emit-targets", cfg.emit_targets,
                    "print the resolved target table");
    build->add_flag("--emit-modules", cfg.emit_modules,
                    "also write the pre-link .host.mod/.slave.mod files");
    add_color(build);

    auto* emit_split = app.add_subcommand("emit-split",
                                          "write per-target module listings");
    emit_split->add_option("input", cfg.input_paths, "source file")->required();
    emit_split->add_flag("--no-collab", cfg.no_collab,
                         "disable collaborative host/slave instantiation");
    add_color(emit_split);

    auto* link = app.add_subcommand("link", "link a HOST and a SLAVE module");
    link->add_option("inputs", cfg.input_paths, "two module files")
        ->required()
        ->expected(2);
    link->add_option("-o,--output", cfg.output_path, "image output path");
    add_color(link);

    auto* run = app.add_subcommand("run", "compile, link, and run in one step");
    run->add_option("input", cfg.input_paths, "source file")->required();
    run->add_flag("--no-collab", cfg.no_collab,
                  "disable collaborative host/slave instantiation");
    add_sim_flags(run);
    add_color(run);
    run->add_option("args", cfg.program_args, "arguments passed to the program");

    auto* exec = app.add_subcommand("exec", "run a linked image");
    exec->add_option("input", cfg.input_paths, "image file")->required();
    add_sim_flags(exec);
    add_color(exec);
    exec->add_option("args", cfg.program_args, "arguments passed to the program");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    cfg.command = app.get_subcommands().front()->get_name();

    if (const char* env = std::getenv("SWUCC_COLOR")) color = env;
    if (color == "auto") color = ISATTY(FILENO(stderr)) ? "always" : "never";
    cfg.color = color;

    return swuc::drive(cfg, std::cout, std::cerr);
}
